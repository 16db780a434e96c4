#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "twa/automaton.hpp"
#include "twa/bitmatrix.hpp"
#include "twa/error.hpp"
#include "twa/pattern.hpp"

namespace twa {

/**
 * Run relation of an automaton over a rank-k pattern: a set of quadruples
 * (p, i, q, j) stored as a bit matrix over the index i*Q + p.
 */
struct PortRelation {
  std::size_t states = 0;
  std::size_t rank = 0;
  BitMatrix m;

  PortRelation() = default;
  PortRelation(std::size_t q, std::size_t k)
      : states(q), rank(k), m(BitMatrix::identity(q * (k + 1))) {}

  std::size_t index(StateId p, std::size_t port) const { return port * states + p; }
  bool test(StateId p, std::size_t i, StateId q, std::size_t j) const {
    return m.test(index(p, i), index(q, j));
  }
  void set(StateId p, std::size_t i, StateId q, std::size_t j) {
    m.set(index(p, i), index(q, j));
  }

  /// The Q x Q slice {(p, q) : (p, i, q, j) in the relation}.
  BitMatrix slice(std::size_t i, std::size_t j) const {
    BitMatrix out(states);
    for (StateId p = 0; p < states; ++p)
      for (StateId q = 0; q < states; ++q)
        if (test(p, i, q, j)) out.set(p, q);
    return out;
  }

  friend bool operator==(const PortRelation&, const PortRelation&) = default;
};

/// Terrain of a pattern: every port looks like a left internal b-node.
inline Terrain pattern_terrain(const ExplicitPattern& p) {
  Terrain g = Terrain::of_tree(p.tree());
  for (std::size_t v : p.ports()) {
    g.label[v] = Label::b;
    g.type[v] = NodeType{ChildPos::left, Arity::internal};
  }
  return g;
}

inline PortRelation relation_direct(const TransitionIndex& idx, const ExplicitPattern& pat) {
  if (auto report = validate_pattern(pat); !report.empty())
    throw UsageError("invalid pattern: " + report.front());
  const std::size_t q = idx.states();
  const std::size_t k = pat.rank();
  const Terrain g = pattern_terrain(pat);
  std::vector<std::int32_t> port_of(g.size(), -1);
  for (std::size_t i = 0; i <= k; ++i) port_of[pat.port_node(i)] = static_cast<std::int32_t>(i);

  PortRelation r(q, k);
  std::vector<std::uint32_t> seen(g.size() * q, 0);
  std::uint32_t stamp = 0;
  std::vector<std::uint32_t> stack;
  for (std::size_t i = 0; i <= k; ++i) {
    for (StateId p = 0; p < q; ++p) {
      ++stamp;
      stack.assign(1, static_cast<std::uint32_t>(pat.port_node(i) * q + p));
      while (!stack.empty()) {
        const std::uint32_t c = stack.back();
        stack.pop_back();
        idx.for_each_successor(g, c / q, static_cast<StateId>(c % q),
                               [&](StateId s, std::size_t w) {
                                 if (port_of[w] >= 0) {
                                   r.set(p, i, s, static_cast<std::size_t>(port_of[w]));
                                   return;
                                 }
                                 const std::size_t id = w * q + s;
                                 if (seen[id] == stamp) return;
                                 seen[id] = stamp;
                                 stack.push_back(static_cast<std::uint32_t>(id));
                               });
      }
    }
  }
  return r;
}

inline PortRelation relation_direct(const Automaton& a, const ExplicitPattern& p) {
  return relation_direct(TransitionIndex(a), p);
}

/**
 * Relation of outer[inners...] without expanding. Landmarks are the
 * composite ports (numbered first, so the result is a prefix block) and the
 * junctions where an inner root meets an outer leaf port. A composite run
 * is a path of constituent runs whose inner landmarks are all junctions.
 */
inline PortRelation relation_compose(const PortRelation& outer,
                                     const std::vector<std::optional<PortRelation>>& inners) {
  if (inners.size() != outer.rank)
    throw RankError("composition supplies " + std::to_string(inners.size()) +
                    " relations to a relation of rank " + std::to_string(outer.rank));
  const std::size_t q = outer.states;
  for (const auto& in : inners)
    if (in && in->states != q) throw RankError("state count mismatch in composition");

  // Landmark ids for outer ports and for each inner's ports.
  std::vector<std::size_t> outer_lm(outer.rank + 1);
  std::vector<std::vector<std::size_t>> inner_lm(inners.size());
  std::size_t composite = 1;
  outer_lm[0] = 0;
  for (std::size_t i = 0; i < inners.size(); ++i) {
    if (!inners[i]) {
      outer_lm[i + 1] = composite++;
      continue;
    }
    inner_lm[i].resize(inners[i]->rank + 1);
    for (std::size_t b = 1; b <= inners[i]->rank; ++b) inner_lm[i][b] = composite++;
  }
  std::size_t landmarks = composite;
  for (std::size_t i = 0; i < inners.size(); ++i)
    if (inners[i]) outer_lm[i + 1] = inner_lm[i][0] = landmarks++;

  if (landmarks == composite) {
    PortRelation r = outer;
    r.rank = composite - 1;
    return r;
  }

  const std::size_t v = q * landmarks;
  const std::size_t cut = q * composite;  // vertices below cut are composite ports
  BitMatrix edges(v);
  auto add_edges = [&](const PortRelation& r, const std::vector<std::size_t>& lm) {
    for (std::size_t x = 0; x <= r.rank; ++x)
      for (StateId p = 0; p < q; ++p)
        r.m.for_each_in_row(r.index(p, x), [&](std::size_t col) {
          edges.set(lm[x] * q + p, lm[col / q] * q + col % q);
        });
  };
  add_edges(outer, outer_lm);
  for (std::size_t i = 0; i < inners.size(); ++i)
    if (inners[i]) add_edges(*inners[i], inner_lm[i]);

  BitMatrix jj(v), cj(v), jc(v);
  for (std::size_t x = 0; x < v; ++x)
    edges.for_each_in_row(x, [&](std::size_t y) {
      if (x >= cut && y >= cut) jj.set(x, y);
      else if (x < cut && y >= cut) cj.set(x, y);
      else if (x >= cut && y < cut) jc.set(x, y);
    });
  const BitMatrix through = cj * jj.star() * jc;

  PortRelation r(q, composite - 1);
  for (std::size_t x = 0; x < cut; ++x) {
    edges.for_each_in_row(x, [&](std::size_t y) {
      if (y < cut) r.m.set(x, y);
    });
    through.for_each_in_row(x, [&](std::size_t y) { r.m.set(x, y); });
  }
  return r;
}

/// Relation of chain(n, p) given r = relation of p, by repeated squaring.
inline PortRelation chain_power(const PortRelation& r, const BigInt& n) {
  if (r.rank != 1) throw RankError("chain_power needs a rank-1 relation");
  if (n < 1) throw UsageError("chain length must be at least 1");
  std::optional<PortRelation> acc;
  PortRelation base = r;
  BigInt e = n;
  for (;;) {
    if (bit_test(e, 0)) acc = acc ? relation_compose(*acc, {base}) : base;
    e >>= 1;
    if (e == 0) break;
    base = relation_compose(base, {base});
  }
  return *acc;
}

/// Inner loops at the junction of D1[D1[*]]: closure of the root-side and
/// leaf-side returns of the D1 relation.
inline BitMatrix inner_loops(const PortRelation& d1) {
  if (d1.rank != 1) throw RankError("inner loops need a rank-1 relation");
  return (d1.slice(1, 1) | d1.slice(0, 0)).star();
}

/// gamma = loops ; delta ; loops, with the loops applied at every port.
inline PortRelation transfers(const PortRelation& delta, const BitMatrix& loops) {
  const std::size_t q = delta.states;
  BitMatrix big(q * (delta.rank + 1));
  for (std::size_t i = 0; i <= delta.rank; ++i)
    for (StateId p = 0; p < q; ++p)
      loops.for_each_in_row(p, [&](std::size_t s) { big.set(i * q + p, i * q + s); });
  PortRelation g = delta;
  g.m = big * delta.m * big;
  return g;
}

/// Arrow relations over the elements; names follow the compass direction of
/// the arrow when the root port is drawn on top.
struct TransferTable {
  BitMatrix loops;   // inner loops
  BitMatrix loop0;   // D0, 0 -> 0
  BitMatrix loop_a;  // Da, 0 -> 0
  BitMatrix down;    // D1, 0 -> 1
  BitMatrix up;      // D1, 1 -> 0
  BitMatrix ne;      // D2, 1 -> 0
  BitMatrix nw;      // D2, 2 -> 0
  BitMatrix sw;      // D2, 0 -> 1
  BitMatrix se;      // D2, 0 -> 2
  BitMatrix ccw;     // D2, 2 -> 1
  BitMatrix cw;      // D2, 1 -> 2
};

inline TransferTable transfer_table(const PortRelation& d0, const PortRelation& d1,
                                    const PortRelation& d2, const PortRelation& da) {
  TransferTable t;
  t.loops = inner_loops(d1);
  const PortRelation g0 = transfers(d0, t.loops);
  const PortRelation g1 = transfers(d1, t.loops);
  const PortRelation g2 = transfers(d2, t.loops);
  const PortRelation ga = transfers(da, t.loops);
  t.loop0 = g0.slice(0, 0);
  t.loop_a = ga.slice(0, 0);
  t.down = g1.slice(0, 1);
  t.up = g1.slice(1, 0);
  t.ne = g2.slice(1, 0);
  t.nw = g2.slice(2, 0);
  t.sw = g2.slice(0, 1);
  t.se = g2.slice(0, 2);
  t.ccw = g2.slice(2, 1);
  t.cw = g2.slice(1, 2);
  return t;
}

// ---------------------------------------------------------------------------
// Expression evaluation

/**
 * Evaluates pattern expressions to relations compositionally, never
 * expanding chains. Element atoms use `elements` when given, otherwise the
 * library's expressions. Not thread-safe; use one evaluator per thread.
 */
class RelationEvaluator {
 public:
  RelationEvaluator(const Automaton& a, const PatternLibrary& lib = empty_library())
      : index_(a), lib_(lib) {}

  void set_elements(PortRelation d0, PortRelation d1, PortRelation d2) {
    elements_ = {std::move(d0), std::move(d1), std::move(d2)};
  }

  std::size_t states() const { return index_.states(); }
  const TransitionIndex& index() const { return index_; }

  PortRelation direct(const ExplicitPattern& p) const { return relation_direct(index_, p); }

  const PortRelation& eval(const PatternExpr& e) {
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second.second;
    PortRelation r = compute(e);
    return memo_.emplace(e.id(), std::make_pair(e, std::move(r))).first->second.second;
  }

  const PortRelation& element(std::size_t rank) {
    if (elements_) return (*elements_)[rank];
    return eval(lib_.element(rank));
  }

  PortRelation delta_a() {
    return relation_compose(element(1), {primitive(AtomKind::prime_a)});
  }

 private:
  static const PatternLibrary& empty_library() {
    static const PatternLibrary lib;
    return lib;
  }

  const PortRelation& primitive(AtomKind k) {
    auto it = primitives_.find(k);
    if (it != primitives_.end()) return it->second;
    ExplicitPattern p;
    switch (k) {
      case AtomKind::base0: p = base0(); break;
      case AtomKind::base1: p = base1(); break;
      case AtomKind::base2: p = base2(); break;
      default: p = prime_a(); break;
    }
    return primitives_.emplace(k, direct(p)).first->second;
  }

  PortRelation compute(const PatternExpr& e) {
    const ExprNode& n = e.node();
    switch (n.kind) {
      case ExprNode::Kind::atom:
        switch (n.atom) {
          case AtomKind::base0:
          case AtomKind::base1:
          case AtomKind::base2:
          case AtomKind::prime_a: return primitive(n.atom);
          case AtomKind::d0: return element(0);
          case AtomKind::d1: return element(1);
          case AtomKind::d2: return element(2);
          case AtomKind::da: return delta_a();
          case AtomKind::named: return direct(lib_.named.at(n.name));
          case AtomKind::comb: return direct(comb(n.name));
        }
        break;
      case ExprNode::Kind::compose: {
        const PortRelation head = eval(*n.head);
        std::vector<std::optional<PortRelation>> items;
        items.reserve(n.items.size());
        for (const auto& it : n.items)
          items.push_back(it ? std::optional<PortRelation>(eval(*it)) : std::nullopt);
        return relation_compose(head, items);
      }
      case ExprNode::Kind::chain:
        return chain_power(eval(*n.head), n.count);
    }
    throw Error("unreachable expression kind");
  }

  TransitionIndex index_;
  PatternLibrary lib_;
  std::optional<std::array<PortRelation, 3>> elements_;
  std::map<AtomKind, PortRelation> primitives_;
  std::map<const ExprNode*, std::pair<PatternExpr, PortRelation>> memo_;
};

/// Equal rank and equal run relation. On rank mismatch returns false and
/// writes a diagnostic when `why` is given.
inline bool equivalent(RelationEvaluator& ev, const PatternExpr& x, const PatternExpr& y,
                       std::string* why = nullptr) {
  if (x.rank() != y.rank()) {
    if (why)
      *why = "rank mismatch: " + std::to_string(x.rank()) + " vs " + std::to_string(y.rank());
    return false;
  }
  return ev.eval(x) == ev.eval(y);
}

/// `rank k` followed by one sorted `p i -> q j` line per quadruple.
inline std::string dump_relation(const PortRelation& r, const Automaton& a) {
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> rows;
  for (std::size_t x = 0; x < r.m.size(); ++x)
    r.m.for_each_in_row(x, [&](std::size_t y) {
      rows.emplace_back(x % r.states, x / r.states, y % r.states, y / r.states);
    });
  std::sort(rows.begin(), rows.end());
  std::string out = "rank " + std::to_string(r.rank) + "\n";
  for (auto [p, i, q, j] : rows)
    out += a.states[p] + " " + std::to_string(i) + " -> " + a.states[q] + " " +
           std::to_string(j) + "\n";
  return out;
}

}  // namespace twa
