#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "twa/error.hpp"
#include "twa/tree.hpp"

namespace twa {

using BigInt = boost::multiprecision::cpp_int;

/// A tree over {a, b, *} with port 0 at the root and ports 1..k at the
/// *-leaves in left-to-right order.
class ExplicitPattern {
 public:
  ExplicitPattern() = default;
  explicit ExplicitPattern(Tree t) : tree_(std::move(t)) {
    ports_.push_back(0);
    for (std::size_t v = 0; v < tree_.size(); ++v)
      if (tree_.label(v) == Label::star) ports_.push_back(v);
  }

  const Tree& tree() const noexcept { return tree_; }
  std::size_t size() const noexcept { return tree_.size(); }
  std::size_t rank() const noexcept { return ports_.size() - 1; }
  std::size_t port_node(std::size_t i) const { return ports_.at(i); }
  const std::vector<std::size_t>& ports() const noexcept { return ports_; }

  std::size_t count(Label l) const {
    std::size_t c = 0;
    for (std::size_t v = 0; v < tree_.size(); ++v) c += tree_.label(v) == l;
    return c;
  }

  friend bool operator==(const ExplicitPattern& x, const ExplicitPattern& y) {
    return x.tree_ == y.tree_;
  }

 private:
  Tree tree_;
  std::vector<std::size_t> ports_;
};

inline std::vector<std::string> validate_pattern(const ExplicitPattern& p) {
  std::vector<std::string> report;
  const Tree& t = p.tree();
  if (t.size() < 2) report.push_back("pattern must have at least two nodes");
  if (t.size() > 0 && t.label(0) != Label::b)
    report.push_back("root port must be labelled b");
  for (std::size_t v = 0; v < t.size(); ++v) {
    const Label l = t.label(v);
    if ((l == Label::a || l == Label::star) && !t.is_leaf(v))
      report.push_back("internal node " + t.address(v).str() + " labelled " +
                       label_char(l));
    if (l == Label::star && t.node(v).position != ChildPos::left)
      report.push_back("*-leaf " + t.address(v).str() + " is not a left child");
  }
  return report;
}

/// Right comb whose left leaves spell `word` (over b, *, a) and whose last
/// right child is a b-leaf. comb("b") = base0, comb("*") = base1, comb("**") = base2.
inline ExplicitPattern comb(std::string_view word) {
  TreeBuilder b;
  std::int32_t parent = -1;
  ChildPos pos = ChildPos::root;
  for (char c : word) {
    const std::int32_t node = b.add(Label::b, parent, pos);
    const Label l = c == '*' ? Label::star : c == 'a' ? Label::a : Label::b;
    b.add(l, node, ChildPos::left);
    parent = node;
    pos = ChildPos::right;
  }
  b.add(Label::b, parent, pos);
  return ExplicitPattern(b.finish());
}

inline ExplicitPattern base0() { return comb("b"); }
inline ExplicitPattern base1() { return comb("*"); }
inline ExplicitPattern base2() { return comb("**"); }
inline ExplicitPattern prime_a() { return comb("a"); }

// ---------------------------------------------------------------------------
// Expressions

enum class AtomKind { base0, base1, base2, prime_a, d0, d1, d2, da, named, comb };

struct ExprNode;

/// Immutable, shared composition expression.
class PatternExpr {
 public:
  static PatternExpr atom(AtomKind kind);
  static PatternExpr named(std::string name, std::size_t rank);
  static PatternExpr comb_atom(std::string word);
  static PatternExpr compose(PatternExpr head,
                             std::vector<std::optional<PatternExpr>> items);
  static PatternExpr chain(BigInt count, PatternExpr body);

  const ExprNode& node() const { return *n_; }
  const ExprNode* id() const { return n_.get(); }
  std::size_t rank() const;

 private:
  explicit PatternExpr(std::shared_ptr<const ExprNode> n) : n_(std::move(n)) {}
  std::shared_ptr<const ExprNode> n_;
};

struct ExprNode {
  enum class Kind { atom, compose, chain };
  Kind kind = Kind::atom;
  AtomKind atom = AtomKind::base0;
  std::string name;                           // named atoms, comb words
  std::optional<PatternExpr> head;            // compose head / chain body
  std::vector<std::optional<PatternExpr>> items;
  BigInt count;                               // chain length
  std::size_t rank = 0;
};

inline std::size_t PatternExpr::rank() const { return n_->rank; }

inline std::size_t atom_rank(AtomKind k) {
  switch (k) {
    case AtomKind::base1:
    case AtomKind::d1: return 1;
    case AtomKind::base2:
    case AtomKind::d2: return 2;
    default: return 0;
  }
}

inline PatternExpr PatternExpr::atom(AtomKind kind) {
  auto n = std::make_shared<ExprNode>();
  n->atom = kind;
  n->rank = atom_rank(kind);
  return PatternExpr(std::move(n));
}

inline PatternExpr PatternExpr::named(std::string name, std::size_t rank) {
  auto n = std::make_shared<ExprNode>();
  n->atom = AtomKind::named;
  n->name = std::move(name);
  n->rank = rank;
  return PatternExpr(std::move(n));
}

inline PatternExpr PatternExpr::comb_atom(std::string word) {
  for (char c : word)
    if (c != 'b' && c != '*') throw UsageError("comb word must be over {b,*}");
  if (word.empty()) throw UsageError("empty comb word");
  auto n = std::make_shared<ExprNode>();
  n->atom = AtomKind::comb;
  n->rank = static_cast<std::size_t>(std::count(word.begin(), word.end(), '*'));
  n->name = std::move(word);
  return PatternExpr(std::move(n));
}

inline PatternExpr PatternExpr::compose(
    PatternExpr head, std::vector<std::optional<PatternExpr>> items) {
  if (items.size() != head.rank())
    throw RankError("composition supplies " + std::to_string(items.size()) +
                    " items to a pattern of rank " + std::to_string(head.rank()));
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::compose;
  std::size_t r = 0;
  for (const auto& it : items) r += it ? it->rank() : 1;
  n->rank = r;
  n->head = std::move(head);
  n->items = std::move(items);
  return PatternExpr(std::move(n));
}

inline PatternExpr PatternExpr::chain(BigInt count, PatternExpr body) {
  if (body.rank() != 1) throw RankError("chain body must have rank 1");
  if (count < 1) throw UsageError("chain count must be at least 1");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::chain;
  n->rank = 1;
  n->count = std::move(count);
  n->head = std::move(body);
  return PatternExpr(std::move(n));
}

/// Explicit patterns for `@name` atoms and the expressions behind D0/D1/D2.
struct PatternLibrary {
  std::map<std::string, ExplicitPattern> named;
  std::optional<std::array<PatternExpr, 3>> elements;

  const PatternExpr& element(std::size_t r) const {
    if (!elements) throw UsageError("D0/D1/D2 used without an element file");
    return (*elements)[r];
  }
};

/// Da := D1[primeA].
inline PatternExpr delta_a_expr() {
  return PatternExpr::compose(PatternExpr::atom(AtomKind::d1),
                              {PatternExpr::atom(AtomKind::prime_a)});
}

// ---------------------------------------------------------------------------
// Printing and parsing

inline std::string atom_name(const ExprNode& n) {
  switch (n.atom) {
    case AtomKind::base0: return "base0";
    case AtomKind::base1: return "base1";
    case AtomKind::base2: return "base2";
    case AtomKind::prime_a: return "primeA";
    case AtomKind::d0: return "D0";
    case AtomKind::d1: return "D1";
    case AtomKind::d2: return "D2";
    case AtomKind::da: return "Da";
    case AtomKind::named: return "@" + n.name;
    case AtomKind::comb: return "comb(" + n.name + ")";
  }
  return "?";
}

inline void print_pattern_to(const PatternExpr& e, std::string& out) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprNode::Kind::atom:
      out += atom_name(n);
      break;
    case ExprNode::Kind::chain:
      out += "chain(";
      out += n.count.str();
      out += ", ";
      print_pattern_to(*n.head, out);
      out += ")";
      break;
    case ExprNode::Kind::compose:
      print_pattern_to(*n.head, out);
      out += "[";
      for (std::size_t i = 0; i < n.items.size(); ++i) {
        if (i) out += ", ";
        if (n.items[i]) print_pattern_to(*n.items[i], out);
        else out += "*";
      }
      out += "]";
      break;
  }
}

inline std::string print_pattern(const PatternExpr& e) {
  std::string out;
  print_pattern_to(e, out);
  return out;
}

namespace detail {

class PatternParser {
 public:
  PatternParser(std::string_view text, std::string source, const PatternLibrary* lib)
      : cur_(text, source), lib_(lib), source_(std::move(source)) {}

  PatternExpr parse_all() {
    PatternExpr e = expr();
    cur_.skip_space();
    if (!cur_.done()) cur_.fail("unexpected trailing input");
    return e;
  }

 private:
  std::string ident() {
    std::string s;
    while (!cur_.done() && (std::isalnum(static_cast<unsigned char>(cur_.peek())) ||
                            cur_.peek() == '_' || cur_.peek() == '-' ||
                            cur_.peek() == '.'))
      s.push_back(cur_.get());
    return s;
  }

  void expect(char c) {
    cur_.skip_space();
    if (cur_.peek() != c) cur_.fail(std::string("expected '") + c + "'");
    cur_.get();
  }

  PatternExpr primary() {
    cur_.skip_space();
    const std::size_t line = cur_.line(), col = cur_.column();
    auto fail_here = [&](const std::string& msg) -> PatternExpr {
      throw ParseError(source_name(), line, col, msg);
    };
    if (cur_.peek() == '@') {
      cur_.get();
      const std::string name = ident();
      if (name.empty()) return fail_here("expected pattern name after '@'");
      if (!lib_ || !lib_->named.count(name))
        return fail_here("unknown pattern '@" + name + "'");
      return PatternExpr::named(name, lib_->named.at(name).rank());
    }
    const std::string word = ident();
    if (word == "chain") {
      expect('(');
      cur_.skip_space();
      std::string digits;
      while (!cur_.done() && std::isdigit(static_cast<unsigned char>(cur_.peek())))
        digits.push_back(cur_.get());
      if (digits.empty()) cur_.fail("expected chain count");
      BigInt count(digits);
      expect(',');
      const std::size_t bl = cur_.line(), bc = cur_.column();
      PatternExpr body = expr();
      expect(')');
      if (count < 1) throw ParseError(source_name(), line, col, "chain count must be at least 1");
      if (body.rank() != 1)
        throw ParseError(source_name(), bl, bc, "chain body must have rank 1");
      return PatternExpr::chain(std::move(count), std::move(body));
    }
    if (word == "comb") {
      expect('(');
      cur_.skip_space();
      std::string w;
      while (!cur_.done() && (cur_.peek() == 'b' || cur_.peek() == '*'))
        w.push_back(cur_.get());
      if (w.empty()) cur_.fail("expected comb word over {b,*}");
      expect(')');
      return PatternExpr::comb_atom(w);
    }
    static const std::map<std::string, AtomKind> atoms{
        {"base0", AtomKind::base0}, {"base1", AtomKind::base1},
        {"base2", AtomKind::base2}, {"primeA", AtomKind::prime_a},
        {"D0", AtomKind::d0},       {"D1", AtomKind::d1},
        {"D2", AtomKind::d2},       {"Da", AtomKind::da}};
    auto it = atoms.find(word);
    if (it == atoms.end())
      return fail_here(word.empty() ? "expected a pattern" : "unknown atom '" + word + "'");
    return PatternExpr::atom(it->second);
  }

  PatternExpr expr() {
    PatternExpr e = primary();
    for (;;) {
      cur_.skip_space();
      if (cur_.peek() != '[') return e;
      const std::size_t line = cur_.line(), col = cur_.column();
      cur_.get();
      std::vector<std::optional<PatternExpr>> items;
      for (;;) {
        cur_.skip_space();
        if (cur_.peek() == '*') {
          cur_.get();
          items.push_back(std::nullopt);
        } else {
          items.push_back(expr());
        }
        cur_.skip_space();
        if (cur_.peek() == ',') {
          cur_.get();
          continue;
        }
        expect(']');
        break;
      }
      if (items.size() != e.rank())
        throw ParseError(source_name(), line, col,
                         "arity mismatch: pattern of rank " + std::to_string(e.rank()) +
                             " given " + std::to_string(items.size()) + " items");
      e = PatternExpr::compose(e, std::move(items));
    }
  }

  std::string source_name() const { return source_; }

  Cursor cur_;
  const PatternLibrary* lib_;
  std::string source_;
};

}  // namespace detail

inline PatternExpr parse_pattern(std::string_view text,
                                 const PatternLibrary* lib = nullptr,
                                 const std::string& source = "<pattern>") {
  return detail::PatternParser(text, source, lib).parse_all();
}

// ---------------------------------------------------------------------------
// Structural measures

/// Number of nodes of the expansion, without expanding.
inline BigInt node_count(const PatternExpr& e, const PatternLibrary& lib) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprNode::Kind::atom:
      switch (n.atom) {
        case AtomKind::base0:
        case AtomKind::base1:
        case AtomKind::prime_a: return 3;
        case AtomKind::base2: return 5;
        case AtomKind::d0:
        case AtomKind::d1:
        case AtomKind::d2:
          return node_count(lib.element(atom_rank(n.atom)), lib);
        case AtomKind::da: return node_count(lib.element(1), lib) + 2;
        case AtomKind::named: return lib.named.at(n.name).size();
        case AtomKind::comb: return 2 * n.name.size() + 1;
      }
      return 0;
    case ExprNode::Kind::compose: {
      BigInt c = node_count(*n.head, lib);
      for (const auto& it : n.items)
        if (it) c += node_count(*it, lib) - 1;
      return c;
    }
    case ExprNode::Kind::chain:
      return n.count * (node_count(*n.head, lib) - 1) + 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Expansion

/// Where an atom's root ended up in an expansion (preorder node index).
struct AtomPlacement {
  AtomKind kind;
  std::size_t root;
};

namespace detail {

/// Mutable pointer-style tree used while plugging; linearized at the end.
class Assembly {
 public:
  struct Node {
    Label label;
    std::int32_t left = -1, right = -1;
  };
  struct Piece {
    std::int32_t root;
    std::vector<std::int32_t> holes;
  };

  Assembly(const PatternLibrary& lib, bool record) : lib_(lib), record_(record) {}

  Piece emit(const PatternExpr& e) {
    const ExprNode& n = e.node();
    switch (n.kind) {
      case ExprNode::Kind::atom: return emit_atom(n);
      case ExprNode::Kind::compose: {
        Piece head = emit(*n.head);
        Piece out{head.root, {}};
        for (std::size_t i = 0; i < n.items.size(); ++i) {
          if (!n.items[i]) {
            out.holes.push_back(head.holes[i]);
            continue;
          }
          Piece sub = emit(*n.items[i]);
          plug(head.holes[i], sub.root);
          out.holes.insert(out.holes.end(), sub.holes.begin(), sub.holes.end());
        }
        return out;
      }
      case ExprNode::Kind::chain: {
        Piece first = emit(*n.head);
        std::int32_t hole = first.holes[0];
        for (BigInt k = 1; k < n.count; ++k) {
          Piece next = emit(*n.head);
          plug(hole, next.root);
          hole = next.holes[0];
        }
        return {first.root, {hole}};
      }
    }
    return {};
  }

  std::pair<Tree, std::vector<AtomPlacement>> finish(std::int32_t root) {
    std::vector<std::int32_t> order_of(nodes_.size(), -1);
    TreeBuilder b;
    std::vector<std::pair<std::int32_t, std::pair<std::int32_t, ChildPos>>> stack{
        {root, {-1, ChildPos::root}}};
    while (!stack.empty()) {
      auto [v, where] = stack.back();
      stack.pop_back();
      const Node& nd = nodes_[static_cast<std::size_t>(v)];
      order_of[static_cast<std::size_t>(v)] = b.add(nd.label, where.first, where.second);
      const std::int32_t id = order_of[static_cast<std::size_t>(v)];
      if (nd.left >= 0) {
        stack.push_back({nd.right, {id, ChildPos::right}});
        stack.push_back({nd.left, {id, ChildPos::left}});
      }
    }
    std::vector<AtomPlacement> placed;
    for (auto [kind, v] : placements_) {
      while (forward_[static_cast<std::size_t>(v)] >= 0) v = forward_[static_cast<std::size_t>(v)];
      placed.push_back({kind, static_cast<std::size_t>(order_of[static_cast<std::size_t>(v)])});
    }
    std::sort(placed.begin(), placed.end(),
              [](const AtomPlacement& x, const AtomPlacement& y) { return x.root < y.root; });
    return {b.finish(), std::move(placed)};
  }

 private:
  Piece emit_atom(const ExprNode& n) {
    switch (n.atom) {
      case AtomKind::d0:
      case AtomKind::d1:
      case AtomKind::d2: {
        Piece p = emit(lib_.element(atom_rank(n.atom)));
        note(n.atom, p.root);
        return p;
      }
      case AtomKind::da: {
        Piece p = emit(delta_a_expr());
        note(n.atom, p.root);
        return p;
      }
      default: break;
    }
    ExplicitPattern pat;
    switch (n.atom) {
      case AtomKind::base0: pat = base0(); break;
      case AtomKind::base1: pat = base1(); break;
      case AtomKind::base2: pat = base2(); break;
      case AtomKind::prime_a: pat = prime_a(); break;
      case AtomKind::named: pat = lib_.named.at(n.name); break;
      case AtomKind::comb: pat = comb(n.name); break;
      default: break;
    }
    const Tree& t = pat.tree();
    const auto base = static_cast<std::int32_t>(nodes_.size());
    Piece p{base, {}};
    for (std::size_t v = 0; v < t.size(); ++v) {
      Node nd{t.label(v)};
      if (!t.is_leaf(v)) {
        nd.left = base + t.left(v);
        nd.right = base + t.right(v);
      }
      nodes_.push_back(nd);
      forward_.push_back(-1);
      if (t.label(v) == Label::star) p.holes.push_back(base + static_cast<std::int32_t>(v));
    }
    note(n.atom, base);
    return p;
  }

  // Only element atoms are recorded; base atoms inside them would be noise.
  void note(AtomKind k, std::int32_t root) {
    const bool element = k == AtomKind::d0 || k == AtomKind::d1 ||
                         k == AtomKind::d2 || k == AtomKind::da;
    if (record_ && element) placements_.push_back({k, root});
  }

  /// Identifies the *-leaf `hole` with the root of a plugged piece.
  void plug(std::int32_t hole, std::int32_t root) {
    nodes_[static_cast<std::size_t>(hole)] = nodes_[static_cast<std::size_t>(root)];
    forward_[static_cast<std::size_t>(root)] = hole;
  }

  const PatternLibrary& lib_;
  bool record_;
  std::vector<Node> nodes_;
  std::vector<std::int32_t> forward_;
  std::vector<std::pair<AtomKind, std::int32_t>> placements_;
};

}  // namespace detail

inline constexpr std::size_t kDefaultNodeBudget = 2'000'000;

struct Expansion {
  ExplicitPattern pattern;
  std::vector<AtomPlacement> placements;  ///< sorted by root index
};

inline Expansion expand_traced(const PatternExpr& e, const PatternLibrary& lib = {},
                               std::size_t node_budget = kDefaultNodeBudget,
                               bool record = true) {
  const BigInt nodes = node_count(e, lib);
  if (nodes > node_budget)
    throw BudgetExceeded("expansion needs " + nodes.str() + " nodes, budget is " +
                         std::to_string(node_budget));
  detail::Assembly as(lib, record);
  auto piece = as.emit(e);
  auto [tree, placed] = as.finish(piece.root);
  return {ExplicitPattern(std::move(tree)), std::move(placed)};
}

inline ExplicitPattern expand(const PatternExpr& e, const PatternLibrary& lib = {},
                              std::size_t node_budget = kDefaultNodeBudget) {
  return expand_traced(e, lib, node_budget, false).pattern;
}

}  // namespace twa
