#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twa/error.hpp"

namespace twa {

/// Node labels. `star` only occurs in patterns, never in plain trees.
enum class Label : std::uint8_t { a = 0, b = 1, star = 2 };

inline char label_char(Label l) {
  switch (l) {
    case Label::a: return 'a';
    case Label::b: return 'b';
    case Label::star: return '*';
  }
  return '?';
}

enum class ChildPos : std::uint8_t { root = 0, left = 1, right = 2 };
enum class Arity : std::uint8_t { internal = 0, leaf = 1 };

/// Position among siblings plus internal/leaf. Six values in total.
struct NodeType {
  ChildPos position = ChildPos::root;
  Arity arity = Arity::leaf;

  static constexpr std::size_t kCount = 6;

  constexpr std::size_t index() const {
    return static_cast<std::size_t>(position) * 2 +
           static_cast<std::size_t>(arity);
  }
  static constexpr NodeType from_index(std::size_t i) {
    return {static_cast<ChildPos>(i / 2), static_cast<Arity>(i % 2)};
  }
  bool is_leaf() const { return arity == Arity::leaf; }

  std::string str() const {
    static constexpr std::array<const char*, 3> pos{"root", "1", "2"};
    return std::string(pos[static_cast<std::size_t>(position)]) +
           (arity == Arity::leaf ? ".leaf" : ".int");
  }
  static std::optional<NodeType> parse(std::string_view s) {
    for (std::size_t i = 0; i < kCount; ++i)
      if (from_index(i).str() == s) return from_index(i);
    return std::nullopt;
  }

  friend constexpr bool operator==(NodeType, NodeType) = default;
  friend constexpr auto operator<=>(NodeType, NodeType) = default;
};

/// Move direction: +i goes to the i-th child, -i goes from an i-th child up.
enum class Direction : std::uint8_t {
  down_left = 0,   // +1
  down_right = 1,  // +2
  up_left = 2,     // -1
  up_right = 3,    // -2
};

inline constexpr std::array<Direction, 4> kDirections{
    Direction::down_left, Direction::down_right, Direction::up_left,
    Direction::up_right};

inline std::string direction_str(Direction d) {
  static constexpr std::array<const char*, 4> names{"+1", "+2", "-1", "-2"};
  return names[static_cast<std::size_t>(d)];
}

inline std::optional<Direction> parse_direction(std::string_view s) {
  for (Direction d : kDirections)
    if (direction_str(d) == s) return d;
  return std::nullopt;
}

inline Direction reverse(Direction d) {
  switch (d) {
    case Direction::down_left: return Direction::up_left;
    case Direction::down_right: return Direction::up_right;
    case Direction::up_left: return Direction::down_left;
    case Direction::up_right: return Direction::down_right;
  }
  return d;
}

/// Address of a node: a word over {1,2}; the empty word is the root.
class NodeAddr {
 public:
  NodeAddr() = default;
  explicit NodeAddr(std::string path) : path_(std::move(path)) {
    for (char c : path_)
      if (c != '1' && c != '2')
        throw AddressError("address must be a word over {1,2}: '" + path_ +
                           "'");
  }

  const std::string& path() const noexcept { return path_; }
  std::size_t depth() const noexcept { return path_.size(); }
  bool is_root() const noexcept { return path_.empty(); }
  NodeAddr child(int i) const {
    NodeAddr c = *this;
    c.path_.push_back(i == 1 ? '1' : '2');
    return c;
  }
  bool is_ancestor_of(const NodeAddr& other) const {
    return other.path_.size() > path_.size() &&
           other.path_.compare(0, path_.size(), path_) == 0;
  }
  /// Human-readable form; the root prints as "ε".
  std::string str() const { return path_.empty() ? "ε" : path_; }

  friend bool operator==(const NodeAddr&, const NodeAddr&) = default;
  friend auto operator<=>(const NodeAddr&, const NodeAddr&) = default;

 private:
  std::string path_;
};

/**
 * Finite binary tree stored as a node array in preorder (index 0 is the
 * root). Preorder coincides with the lexicographic order of addresses.
 */
class Tree {
 public:
  struct Node {
    Label label = Label::b;
    std::int32_t parent = -1;
    std::array<std::int32_t, 2> child{-1, -1};
    ChildPos position = ChildPos::root;
  };

  Tree() = default;

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  Label label(std::size_t i) const { return nodes_[i].label; }
  bool is_leaf(std::size_t i) const { return nodes_[i].child[0] < 0; }
  std::int32_t parent(std::size_t i) const { return nodes_[i].parent; }
  std::int32_t left(std::size_t i) const { return nodes_[i].child[0]; }
  std::int32_t right(std::size_t i) const { return nodes_[i].child[1]; }

  NodeType node_type(std::size_t i) const {
    return {nodes_[i].position, is_leaf(i) ? Arity::leaf : Arity::internal};
  }

  NodeAddr address(std::size_t i) const {
    std::string path;
    for (auto v = static_cast<std::int32_t>(i); nodes_[v].parent >= 0;
         v = nodes_[v].parent)
      path.push_back(nodes_[v].position == ChildPos::left ? '1' : '2');
    std::reverse(path.begin(), path.end());
    return NodeAddr(std::move(path));
  }

  std::optional<std::size_t> find(const NodeAddr& addr) const {
    if (nodes_.empty()) return std::nullopt;
    std::int32_t v = 0;
    for (char c : addr.path()) {
      v = nodes_[v].child[c == '1' ? 0 : 1];
      if (v < 0) return std::nullopt;
    }
    return static_cast<std::size_t>(v);
  }

  std::size_t index_of(const NodeAddr& addr) const {
    auto i = find(addr);
    if (!i) throw AddressError("no node at address " + addr.str());
    return *i;
  }

  std::vector<std::size_t> depths() const {
    std::vector<std::size_t> d(nodes_.size(), 0);
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      d[i] = d[static_cast<std::size_t>(nodes_[i].parent)] + 1;
    return d;
  }

  bool contains_label(Label l) const {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [l](const Node& n) { return n.label == l; });
  }

  friend bool operator==(const Tree& x, const Tree& y) {
    if (x.nodes_.size() != y.nodes_.size()) return false;
    for (std::size_t i = 0; i < x.nodes_.size(); ++i) {
      const Node& a = x.nodes_[i];
      const Node& b = y.nodes_[i];
      if (a.label != b.label || a.parent != b.parent || a.child != b.child)
        return false;
    }
    return true;
  }

 private:
  friend class TreeBuilder;
  std::vector<Node> nodes_;
};

/// Appends nodes in preorder. finish() checks the both-children rule.
class TreeBuilder {
 public:
  void reserve(std::size_t n) { tree_.nodes_.reserve(n); }

  std::int32_t add(Label label, std::int32_t parent = -1,
                   ChildPos pos = ChildPos::root) {
    const auto id = static_cast<std::int32_t>(tree_.nodes_.size());
    Tree::Node n;
    n.label = label;
    n.parent = parent;
    n.position = parent < 0 ? ChildPos::root : pos;
    tree_.nodes_.push_back(n);
    if (parent >= 0)
      tree_.nodes_[static_cast<std::size_t>(parent)]
          .child[pos == ChildPos::left ? 0 : 1] = id;
    return id;
  }

  std::size_t size() const { return tree_.nodes_.size(); }
  void relabel(std::int32_t id, Label l) {
    tree_.nodes_[static_cast<std::size_t>(id)].label = l;
  }

  Tree finish() {
    if (tree_.nodes_.empty()) throw UsageError("empty tree");
    for (const auto& n : tree_.nodes_)
      if ((n.child[0] < 0) != (n.child[1] < 0))
        throw UsageError("node with exactly one child");
    return std::move(tree_);
  }

 private:
  Tree tree_;
};

inline Tree make_leaf(Label l) {
  TreeBuilder b;
  b.add(l);
  return b.finish();
}

/// Copies `src` below `parent` in `b` (or as the root when parent < 0).
inline std::int32_t copy_subtree(TreeBuilder& b, const Tree& src,
                                 std::size_t root, std::int32_t parent,
                                 ChildPos pos) {
  // Preorder of the source subtree is a contiguous index range, so a linear
  // scan with an index map preserves preorder in the destination.
  std::vector<std::int32_t> map;
  std::int32_t first = -1;
  std::vector<std::pair<std::size_t, std::pair<std::int32_t, ChildPos>>> stack{
      {root, {parent, pos}}};
  while (!stack.empty()) {
    auto [v, where] = stack.back();
    stack.pop_back();
    const std::int32_t id = b.add(src.label(v), where.first, where.second);
    if (first < 0) first = id;
    if (!src.is_leaf(v)) {
      stack.push_back({static_cast<std::size_t>(src.right(v)),
                       {id, ChildPos::right}});
      stack.push_back({static_cast<std::size_t>(src.left(v)),
                       {id, ChildPos::left}});
    }
  }
  return first;
}

inline Tree make_node(Label l, const Tree& left, const Tree& right) {
  TreeBuilder b;
  b.reserve(1 + left.size() + right.size());
  const auto r = b.add(l);
  copy_subtree(b, left, 0, r, ChildPos::left);
  copy_subtree(b, right, 0, r, ChildPos::right);
  return b.finish();
}

// ---------------------------------------------------------------------------
// Text format

namespace detail {

/// Character cursor with 1-based line/column tracking.
class Cursor {
 public:
  Cursor(std::string_view text, std::string source)
      : text_(text), source_(std::move(source)) {}

  void skip_space() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r'))
      advance();
  }
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }
  char get() {
    char c = peek();
    advance();
    return c;
  }
  std::size_t pos() const { return pos_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return col_; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(source_, line_, col_, msg);
  }

 private:
  void advance() {
    if (pos_ >= text_.size()) return;
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace detail

/**
 * Parses `tree := '(' label ')' | '(' label tree tree ')'`.
 * With allow_star the label `*` is accepted as well (pattern files).
 */
inline Tree parse_tree(std::string_view text, const std::string& source = "<input>",
                       bool allow_star = false) {
  detail::Cursor cur(text, source);
  TreeBuilder b;
  struct Open {
    std::int32_t id;
    int children;
    std::size_t line, col;
  };
  std::vector<Open> stack;
  cur.skip_space();
  if (cur.peek() != '(') cur.fail("expected '('");
  bool finished = false;
  while (!finished) {
    cur.skip_space();
    const std::size_t line = cur.line(), col = cur.column();
    const char c = cur.get();
    if (c == '(') {
      cur.skip_space();
      const char lc = cur.peek();
      Label l;
      if (lc == 'a') l = Label::a;
      else if (lc == 'b') l = Label::b;
      else if (lc == '*' && allow_star) l = Label::star;
      else cur.fail(std::string("unexpected label '") + (lc ? lc : ' ') + "'");
      cur.get();
      std::int32_t parent = -1;
      ChildPos pos = ChildPos::root;
      if (!stack.empty()) {
        Open& top = stack.back();
        if (top.children == 2) {
          throw ParseError(source, line, col, "node has more than two children");
        }
        parent = top.id;
        pos = top.children == 0 ? ChildPos::left : ChildPos::right;
        ++top.children;
      }
      stack.push_back({b.add(l, parent, pos), 0, line, col});
    } else if (c == ')') {
      if (stack.empty()) throw ParseError(source, line, col, "unbalanced ')'");
      if (stack.back().children == 1)
        throw ParseError(source, stack.back().line, stack.back().col,
                         "node with exactly one child");
      stack.pop_back();
      if (stack.empty()) finished = true;
    } else if (c == '\0') {
      cur.fail("unexpected end of input");
    } else {
      throw ParseError(source, line, col,
                       std::string("unexpected character '") + c + "'");
    }
  }
  cur.skip_space();
  if (!cur.done()) cur.fail("trailing characters after tree");
  return b.finish();
}

/// Canonical single-line form, e.g. "(b (a) (b (a) (a)))".
inline std::string serialize_tree(const Tree& t) {
  std::string out;
  out.reserve(t.size() * 5);
  std::vector<std::pair<std::size_t, bool>> stack{{0, false}};
  while (!stack.empty()) {
    auto [v, closing] = stack.back();
    stack.pop_back();
    if (closing) {
      out.push_back(')');
      continue;
    }
    if (v != 0) out.push_back(' ');
    out.push_back('(');
    out.push_back(label_char(t.label(v)));
    stack.push_back({v, true});
    if (!t.is_leaf(v)) {
      stack.push_back({static_cast<std::size_t>(t.right(v)), false});
      stack.push_back({static_cast<std::size_t>(t.left(v)), false});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Leaves, lca, and the language L

/// Indices of a-labelled leaves, left to right.
inline std::vector<std::size_t> a_leaf_indices(const Tree& t) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t.is_leaf(i) && t.label(i) == Label::a) out.push_back(i);
  return out;
}

inline std::vector<NodeAddr> a_leaves(const Tree& t) {
  std::vector<NodeAddr> out;
  for (auto i : a_leaf_indices(t)) out.push_back(t.address(i));
  return out;
}

inline NodeAddr node_lca(const Tree& t, std::span<const NodeAddr> addrs) {
  if (addrs.empty()) throw UsageError("lca of an empty set");
  for (const auto& a : addrs) (void)t.index_of(a);
  std::string prefix = addrs.front().path();
  for (const auto& a : addrs.subspan(1)) {
    std::size_t k = 0;
    while (k < prefix.size() && k < a.path().size() && prefix[k] == a.path()[k])
      ++k;
    prefix.resize(k);
  }
  return NodeAddr(prefix);
}

inline NodeType node_type(const Tree& t, const NodeAddr& addr) {
  return t.node_type(t.index_of(addr));
}

/// Membership in L: some consecutive a-leaf triple has
/// lca(u_i, u_{i+1}, u_{i+2}) = lca(u_i, u_{i+1}).
inline bool in_language_L(const Tree& t) {
  const auto leaves = a_leaf_indices(t);
  if (leaves.size() < 3) return false;
  const auto depth = t.depths();
  auto lca = [&](std::size_t x, std::size_t y) {
    while (depth[x] > depth[y]) x = static_cast<std::size_t>(t.parent(x));
    while (depth[y] > depth[x]) y = static_cast<std::size_t>(t.parent(y));
    while (x != y) {
      x = static_cast<std::size_t>(t.parent(x));
      y = static_cast<std::size_t>(t.parent(y));
    }
    return x;
  };
  for (std::size_t i = 0; i + 2 < leaves.size(); ++i) {
    const std::size_t two = lca(leaves[i], leaves[i + 1]);
    if (lca(two, leaves[i + 2]) == two) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Enumeration

namespace detail {

/// Preorder shape words (1 = internal, 0 = leaf) with k internal nodes,
/// lexicographically sorted.
inline const std::vector<std::string>& shapes(std::size_t k) {
  static std::map<std::size_t, std::vector<std::string>> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  for (std::size_t m = cache.size(); m <= k; ++m) {
    std::vector<std::string> out;
    if (m == 0) {
      out.push_back("0");
    } else {
      for (std::size_t i = 0; i < m; ++i)
        for (const auto& l : cache[i])
          for (const auto& r : cache[m - 1 - i]) out.push_back("1" + l + r);
      std::sort(out.begin(), out.end());
    }
    cache[m] = std::move(out);
  }
  return cache[k];
}

/// Builds a tree from a shape word; label of the j-th preorder node is bit
/// (n-1-j) of `labels` (0 = a, 1 = b), so the label string is the counter
/// written most-significant first.
inline Tree tree_from_shape(const std::string& shape, std::uint64_t labels) {
  const std::size_t n = shape.size();
  TreeBuilder b;
  b.reserve(n);
  std::vector<std::pair<std::int32_t, int>> open;  // (id, children seen)
  for (std::size_t j = 0; j < n; ++j) {
    const Label l = ((labels >> (n - 1 - j)) & 1u) ? Label::b : Label::a;
    std::int32_t parent = -1;
    ChildPos pos = ChildPos::root;
    if (!open.empty()) {
      parent = open.back().first;
      pos = open.back().second == 0 ? ChildPos::left : ChildPos::right;
      if (++open.back().second == 2) open.pop_back();
    }
    const auto id = b.add(l, parent, pos);
    if (shape[j] == '1') open.push_back({id, 0});
  }
  return b.finish();
}

}  // namespace detail

/**
 * Deterministic stream of every {a,b}-tree with at most max_nodes nodes:
 * by node count, then shape word, then preorder label word (a < b).
 */
class TreeEnumerator {
 public:
  explicit TreeEnumerator(std::size_t max_nodes)
      : max_internal_(max_nodes == 0 ? 0 : (max_nodes - 1) / 2),
        empty_(max_nodes == 0) {}

  std::optional<Tree> next() {
    if (empty_ || k_ > max_internal_) return std::nullopt;
    const auto& sh = detail::shapes(k_);
    Tree t = detail::tree_from_shape(sh[shape_], labels_);
    const std::size_t n = 2 * k_ + 1;
    if (++labels_ == (std::uint64_t{1} << n)) {
      labels_ = 0;
      if (++shape_ == sh.size()) {
        shape_ = 0;
        ++k_;
      }
    }
    return t;
  }

 private:
  std::size_t max_internal_;
  bool empty_;
  std::size_t k_ = 0;
  std::size_t shape_ = 0;
  std::uint64_t labels_ = 0;
};

inline std::vector<Tree> enumerate_trees(std::size_t max_nodes) {
  std::vector<Tree> out;
  TreeEnumerator e(max_nodes);
  while (auto t = e.next()) out.push_back(std::move(*t));
  return out;
}

/// Random {a,b}-tree with at most max_nodes nodes. Not uniform over shapes.
template <typename Rng>
Tree random_tree(Rng& rng, std::size_t max_nodes) {
  const std::size_t max_internal = max_nodes == 0 ? 0 : (max_nodes - 1) / 2;
  std::uniform_int_distribution<std::size_t> kdist(0, max_internal);
  std::bernoulli_distribution coin(0.5);
  TreeBuilder b;
  struct Job {
    std::size_t internal;
    std::int32_t parent;
    ChildPos pos;
  };
  std::vector<Job> stack{{kdist(rng), -1, ChildPos::root}};
  while (!stack.empty()) {
    Job j = stack.back();
    stack.pop_back();
    const Label l = coin(rng) ? Label::a : Label::b;
    const auto id = b.add(l, j.parent, j.pos);
    if (j.internal > 0) {
      std::uniform_int_distribution<std::size_t> split(0, j.internal - 1);
      const std::size_t left = split(rng);
      stack.push_back({j.internal - 1 - left, id, ChildPos::right});
      stack.push_back({left, id, ChildPos::left});
    }
  }
  return b.finish();
}

}  // namespace twa
