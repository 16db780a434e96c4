#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "twa/automaton.hpp"
#include "twa/elements.hpp"
#include "twa/pattern.hpp"
#include "twa/relation.hpp"
#include "twa/tree.hpp"

namespace twa {

// ---------------------------------------------------------------------------
// M arithmetic

inline BigInt factorial(std::size_t n) {
  BigInt f = 1;
  for (std::size_t k = 2; k <= n; ++k) f *= k;
  return f;
}

/// Smallest M with M = n/2 (mod n!) and M > n^2 + 10n.
inline BigInt choose_M(std::size_t n) {
  if (n < 4 || n % 2 != 0) throw UsageError("n must be even and at least 4");
  const BigInt fact = factorial(n);
  const BigInt base = n / 2;
  const BigInt bound = BigInt(n) * n + 10 * n;
  if (base > bound) return base;
  const BigInt k = (bound - base) / fact + 1;
  return base + k * fact;
}

// ---------------------------------------------------------------------------
// The chains, over element atoms

/// D2[*, Da]
inline PatternExpr unit_expr() { return parse_pattern("D2[*, Da]"); }

/// D2[*, D2[Da, Da]]
inline PatternExpr fault_expr() { return parse_pattern("D2[*, D2[Da, Da]]"); }

/// chain(n, D2[*, Da])
inline PatternExpr small_correct(const BigInt& n) {
  if (n < 1) throw UsageError("chain length must be positive");
  return PatternExpr::chain(n, unit_expr());
}

/// chain(2M, D2[*, Da])
inline PatternExpr correct_2M(const BigInt& M) { return small_correct(2 * M); }

/// Fault with M-1 units above it and M-1 below it.
inline PatternExpr faulty(const BigInt& M) {
  if (M < 1) throw UsageError("M must be positive");
  if (M == 1) return fault_expr();
  const PatternExpr side = PatternExpr::chain(M - 1, unit_expr());
  return PatternExpr::compose(side, {PatternExpr::compose(fault_expr(), {side})});
}

/// Evaluator whose element atoms are bound to the triple's relations.
inline RelationEvaluator element_evaluator(const Automaton& a, const ElementTriple& t) {
  RelationEvaluator ev(a, t.library());
  ev.set_elements(t.rel[0], t.rel[1], t.rel[2]);
  return ev;
}

// ---------------------------------------------------------------------------
// Trees

/// b-labelled root with the pattern D1[p[D0]] on the left and a b-leaf on
/// the right.
inline Tree complete_to_tree(const PatternExpr& p, const ElementTriple& t,
                             std::size_t node_budget = kDefaultNodeBudget) {
  if (p.rank() != 1) throw RankError("complete_to_tree needs a rank-1 pattern");
  const PatternExpr closed = PatternExpr::compose(
      PatternExpr::atom(AtomKind::d1),
      {PatternExpr::compose(p, {PatternExpr::atom(AtomKind::d0)})});
  const ExplicitPattern x = expand(closed, t.library(), node_budget);
  return make_node(Label::b, x.tree(), make_leaf(Label::b));
}

/// T00, T01, T10, T11: two rank-1 blocks stacked under D1, each block being
/// the small correct chain (0) or the faulty chain at scale M (1). The first
/// index is the upper block.
inline std::array<Tree, 4> build_T_trees(const ElementTriple& t, std::size_t n, const BigInt& M,
                                         std::size_t node_budget = kDefaultNodeBudget) {
  const PatternExpr blocks[2] = {small_correct(n), faulty(M)};
  std::array<Tree, 4> out;
  for (int upper = 0; upper < 2; ++upper)
    for (int lower = 0; lower < 2; ++lower)
      out[upper * 2 + lower] = complete_to_tree(
          PatternExpr::compose(blocks[upper], {blocks[lower]}), t, node_budget);
  return out;
}

// ---------------------------------------------------------------------------
// Main Lemma

enum class LemmaVerdict { holds, fails, elements_exhausted };

inline const char* verdict_str(LemmaVerdict v) {
  switch (v) {
    case LemmaVerdict::holds: return "holds";
    case LemmaVerdict::fails: return "fails";
    case LemmaVerdict::elements_exhausted: return "elements_exhausted";
  }
  return "?";
}

using Quadruple = std::tuple<StateId, std::size_t, StateId, std::size_t>;

struct SeparationInstance {
  SymmetrizedAutomaton sym;
  std::size_t n = 0;  ///< number of states after symmetrization and padding
  BigInt M;
  ElementTriple triple;
  std::string stage;  ///< element search stage that produced the triple
};

struct MainLemmaReport {
  LemmaVerdict verdict = LemmaVerdict::elements_exhausted;
  std::size_t n = 0;
  BigInt M;
  std::optional<SeparationInstance> instance;
  ElementStats element_stats;
  std::optional<Quadruple> witness;  ///< first quadruple of the small chain missing in the faulty one
  std::size_t small_size = 0;        ///< quadruples in the small chain's relation
  bool remark = false;               ///< faulty(M) = small[faulty(M-n)[small]] as relations
};

/// Symmetrizes `a`, pads to at least four states and searches for elements.
inline std::optional<SeparationInstance> make_instance(const Automaton& a,
                                                       const ElementOptions& opt,
                                                       ElementStats* stats = nullptr) {
  SeparationInstance inst;
  inst.sym = symmetrize(a);
  pad_states(inst.sym, 4);
  inst.n = inst.sym.automaton.size();
  inst.M = choose_M(inst.n);
  auto found = find_elements(inst.sym.automaton, opt);
  if (stats) *stats = found.stats;
  if (!found.triple) return std::nullopt;
  inst.triple = std::move(*found.triple);
  inst.stage = found.stage;
  return inst;
}

/**
 * Checks that every run type of the small correct chain also occurs on the
 * faulty chain with M = choose_M(n). Works on relations only; the chains of
 * length M-1 go through chain_power.
 */
inline MainLemmaReport verify_main_lemma(const Automaton& a, const ElementOptions& opt = {}) {
  MainLemmaReport rep;
  auto inst = make_instance(a, opt, &rep.element_stats);
  {
    SymmetrizedAutomaton s = symmetrize(a);
    pad_states(s, 4);
    rep.n = s.automaton.size();
    rep.M = choose_M(rep.n);
  }
  if (!inst) return rep;
  RelationEvaluator ev = element_evaluator(inst->sym.automaton, inst->triple);
  const PortRelation small = ev.eval(small_correct(rep.n));
  const PortRelation big = ev.eval(faulty(rep.M));
  rep.small_size = small.m.count();
  rep.verdict = LemmaVerdict::holds;
  const std::size_t q = small.states;
  for (StateId p = 0; p < q && !rep.witness; ++p)
    for (std::size_t i = 0; i <= 1 && !rep.witness; ++i)
      for (StateId r = 0; r < q && !rep.witness; ++r)
        for (std::size_t j = 0; j <= 1; ++j)
          if (small.test(p, i, r, j) && !big.test(p, i, r, j)) {
            rep.witness = Quadruple{p, i, r, j};
            rep.verdict = LemmaVerdict::fails;
            break;
          }
  const PatternExpr rest = faulty(rep.M - rep.n);
  const PatternExpr s = small_correct(rep.n);
  rep.remark = ev.eval(PatternExpr::compose(s, {PatternExpr::compose(rest, {s})})) == big;
  rep.instance = std::move(inst);
  return rep;
}

// ---------------------------------------------------------------------------
// Proper steps

/// Existence of a proper step of pace i from p to q.
inline bool proper_step_exists(const TransferTable& t, int i, StateId p, StateId q) {
  if (i == 0) return t.loop_a.test(p, q);
  const std::size_t k = static_cast<std::size_t>(i > 0 ? i : -i);
  // Row vector {p} pushed through the arrows.
  BitMatrix row(t.nw.size());
  row.set(0, p);
  auto push = [&](const BitMatrix& arrow) {
    BitMatrix next(arrow.size());
    for (std::size_t x = 0; x < arrow.size(); ++x)
      if (row.test(0, x)) next.or_row(0, arrow, x);
    row = std::move(next);
  };
  push(i > 0 ? t.nw : t.ccw);
  for (std::size_t s = 1; s < k; ++s) push(i > 0 ? t.ne : t.sw);
  push(i > 0 ? t.cw : t.se);
  return row.test(0, q);
}

/// All (p, q) with a proper step of pace i, as a matrix.
inline BitMatrix proper_steps(const TransferTable& t, int i) {
  if (i == 0) return t.loop_a;
  const std::size_t k = static_cast<std::size_t>(i > 0 ? i : -i);
  BitMatrix m = i > 0 ? t.nw : t.ccw;
  for (std::size_t s = 1; s < k; ++s) m = m * (i > 0 ? t.ne : t.sw);
  return m * (i > 0 ? t.cw : t.se);
}

// ---------------------------------------------------------------------------
// Surrogate chains
//
// The landmarks of a chain of 2M units are w_0 (leaf port), w_k (root of
// the k-th unit from the bottom) and v_k (root of its Da). In the faulty
// chain, w_M is the root of the inner D2 of the fault, w_{M+1} the root of
// the fault, and v_M, v_{M+1} its two Da roots. Each constituent element
// contributes its run relation as edges between landmarks, so reachability
// in this graph is exactly reachability on the expanded pattern restricted
// to landmark visits.

/// Landmark-graph vertices allowed for a surrogate chain. The reachability
/// cache grows with the square of this.
inline constexpr std::size_t kSurrogateVertexBudget = 16000;

class SurrogateChain {
 public:
  SurrogateChain(const ElementTriple& t, const PortRelation& da, std::size_t M, bool with_fault)
      : q_(t.rel[2].states), M_(M), landmarks_(4 * M + 1), adj_(landmarks_ * q_) {
    if (M < 1) throw UsageError("surrogate M must be positive");
    if (landmarks_ * q_ > kSurrogateVertexBudget)
      throw BudgetExceeded("surrogate chain needs " + std::to_string(landmarks_ * q_) +
                           " landmark vertices, budget is " +
                           std::to_string(kSurrogateVertexBudget));
    auto element2 = [&](std::size_t root, std::size_t port1, std::size_t port2) {
      add(t.rel[2], {root, port1, port2});
    };
    for (std::size_t x = 1; x <= 2 * M; ++x) add(da, {v(x)});
    for (std::size_t k = 1; k <= 2 * M; ++k) {
      if (with_fault && k == M) {
        element2(w(M), v(M), v(M + 1));
        continue;
      }
      if (with_fault && k == M + 1) {
        element2(w(M + 1), w(M - 1), w(M));
        continue;
      }
      element2(w(k), w(k - 1), v(k));
    }
    for (auto& row : adj_) {
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
    }
  }

  std::size_t M() const { return M_; }
  std::size_t states() const { return q_; }
  std::size_t w(std::size_t k) const { return k; }
  std::size_t v(std::size_t x) const { return 2 * M_ + x; }

  /// Reachability from (p, v_x) to (q, v_y).
  bool can_move(StateId p, std::size_t x, StateId q, std::size_t y) const {
    check(x);
    check(y);
    return reach(vertex(v(x), p))[vertex(v(y), q)];
  }

  /// Reachability between arbitrary landmarks.
  bool can_move_landmark(StateId p, std::size_t from, StateId q, std::size_t to) const {
    return reach(vertex(from, p))[vertex(to, q)];
  }

 private:
  std::size_t vertex(std::size_t landmark, StateId p) const { return landmark * q_ + p; }
  void check(std::size_t x) const {
    if (x < 1 || x > 2 * M_) throw UsageError("v index out of range");
  }

  void add(const PortRelation& r, std::vector<std::size_t> ports) {
    for (std::size_t i = 0; i <= r.rank; ++i)
      for (std::size_t j = 0; j <= r.rank; ++j)
        for (StateId p = 0; p < q_; ++p)
          for (StateId q = 0; q < q_; ++q)
            if (r.test(p, i, q, j))
              adj_[vertex(ports[i], p)].push_back(static_cast<std::uint32_t>(vertex(ports[j], q)));
  }

  const std::vector<bool>& reach(std::size_t src) const {
    if (cache_.size() != adj_.size()) cache_.resize(adj_.size());
    auto& slot = cache_[src];
    if (!slot.empty()) return slot;
    slot.assign(adj_.size(), false);
    std::vector<std::uint32_t> stack{static_cast<std::uint32_t>(src)};
    slot[src] = true;
    while (!stack.empty()) {
      const auto x = stack.back();
      stack.pop_back();
      for (auto y : adj_[x])
        if (!slot[y]) {
          slot[y] = true;
          stack.push_back(y);
        }
    }
    return slot;
  }

  std::size_t q_;
  std::size_t M_;
  std::size_t landmarks_;
  std::vector<std::vector<std::uint32_t>> adj_;
  mutable std::vector<std::vector<bool>> cache_;
};

/// Default surrogate scale: max(40, n^2 + 10n + 1), lowered so the landmark
/// graph of an n-state automaton stays within `vertex_budget`.
inline std::size_t default_surrogate_M(std::size_t n,
                                       std::size_t vertex_budget = kSurrogateVertexBudget) {
  const std::size_t want = std::max<std::size_t>(40, n * n + 10 * n + 1);
  const std::size_t cap = (vertex_budget / std::max<std::size_t>(n, 1) - 1) / 4;
  return std::max<std::size_t>(1, std::min(want, cap));
}

struct ClaimViolation {
  std::string claim;  ///< "shrink" or "stretch"
  int pace = 0;
  StateId p = 0, q = 0;
  std::size_t x = 0;  ///< first failing position (stretch)
};

struct ClaimReport {
  std::size_t shrink_cases = 0;   ///< (i, p, q) with a proper step
  std::size_t stretch_cases = 0;  ///< (i, p, q, x) examined
  std::vector<ClaimViolation> violations;
};

/**
 * Shrink and stretch properties on a faulty surrogate chain. For every
 * proper step (i, p, q) with 0 < |i| < 2n:
 *   shrink:  the move by i works from every admissible v_x, or a proper
 *            step of pace i-1 (i > 0) / i+1 (i < 0) exists;
 *   stretch (i > 0, each admissible x): the move by i, or by i+1, works
 *            from v_x, or every v_y below the fault reaches every v_z
 *            above it.
 */
inline ClaimReport check_shrink_stretch(const TransferTable& table, const SurrogateChain& chain,
                                        std::size_t n) {
  ClaimReport rep;
  const std::size_t q = chain.states();
  const std::size_t top = 2 * chain.M();
  const int limit = static_cast<int>(2 * n);
  std::vector<BitMatrix> steps(2 * limit + 1);
  for (int i = -limit + 1; i < limit; ++i) steps[i + limit] = proper_steps(table, i);
  auto step = [&](int i) -> const BitMatrix& { return steps[i + limit]; };

  std::optional<BitMatrix> across;  // (p, q): every v_y below reaches every v_z above
  auto across_fault = [&]() -> const BitMatrix& {
    if (across) return *across;
    across = BitMatrix(q);
    const std::size_t M = chain.M();
    for (StateId p = 0; p < q; ++p)
      for (StateId r = 0; r < q; ++r) {
        bool all = true;
        for (std::size_t y = 1; y < M && all; ++y)
          for (std::size_t z = M + 2; z <= top && all; ++z) all = chain.can_move(p, y, r, z);
        if (all) across->set(p, r);
      }
    return *across;
  };

  for (int i = -limit + 1; i < limit; ++i) {
    if (i == 0) continue;
    for (StateId p = 0; p < q; ++p)
      for (StateId r = 0; r < q; ++r) {
        if (!step(i).test(p, r)) continue;
        ++rep.shrink_cases;
        bool everywhere = true;
        for (std::size_t x = 1; x <= top && everywhere; ++x) {
          const long y = static_cast<long>(x) + i;
          if (y < 1 || y > static_cast<long>(top)) continue;
          everywhere = chain.can_move(p, x, r, static_cast<std::size_t>(y));
        }
        const int smaller = i > 0 ? i - 1 : i + 1;
        if (!everywhere && !step(smaller).test(p, r))
          rep.violations.push_back({"shrink", i, p, r, 0});

        if (i < 0) continue;
        for (std::size_t x = 1; x + static_cast<std::size_t>(i) <= top; ++x) {
          ++rep.stretch_cases;
          const std::size_t y = x + static_cast<std::size_t>(i);
          if (chain.can_move(p, x, r, y)) continue;
          if (y + 1 <= top && chain.can_move(p, x, r, y + 1)) continue;
          if (across_fault().test(p, r)) continue;
          rep.violations.push_back({"stretch", i, p, r, x});
          break;
        }
      }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Ambiguity

struct AmbiguityWitness {
  Tree tree;
  Multiplicity multiplicity = Multiplicity::many;
  std::array<Computation, 2> computations;
  std::size_t trees_examined = 0;
};

/// First tree in enumeration order with two or more accepting computations.
inline std::optional<AmbiguityWitness> ambiguity_witness(const Automaton& a,
                                                         std::size_t max_nodes) {
  TreeEnumerator e(max_nodes);
  std::size_t seen = 0;
  while (auto t = e.next()) {
    ++seen;
    auto acc = accepting_computations(a, *t);
    if (acc.multiplicity != Multiplicity::many && acc.multiplicity != Multiplicity::infinite)
      continue;
    if (acc.examples.size() < 2) continue;
    AmbiguityWitness w;
    w.tree = std::move(*t);
    w.multiplicity = acc.multiplicity;
    w.computations = {std::move(acc.examples[0]), std::move(acc.examples[1])};
    w.trees_examined = seen;
    return w;
  }
  return std::nullopt;
}

}  // namespace twa
