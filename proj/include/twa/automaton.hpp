#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "twa/error.hpp"
#include "twa/tree.hpp"

namespace twa {

using StateId = std::uint32_t;

/// One element of the transition relation. The automaton sees the label and
/// type of both endpoints of the move.
struct Transition {
  StateId src = 0;
  Label src_label = Label::b;
  NodeType src_type;
  StateId dst = 0;
  Label dst_label = Label::b;
  NodeType dst_type;
  Direction dir = Direction::down_left;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Nondeterministic tree-walking automaton over the alphabet {a, b}.
struct Automaton {
  std::vector<Label> alphabet{Label::a, Label::b};
  std::vector<std::string> states;
  std::vector<StateId> initial;
  std::vector<StateId> accepting;
  std::vector<Transition> transitions;

  std::size_t size() const { return states.size(); }

  StateId add_state(std::string name) {
    states.push_back(std::move(name));
    return static_cast<StateId>(states.size() - 1);
  }
  std::optional<StateId> state_id(std::string_view name) const {
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i] == name) return static_cast<StateId>(i);
    return std::nullopt;
  }
  bool is_initial(StateId q) const {
    return std::find(initial.begin(), initial.end(), q) != initial.end();
  }
  bool is_accepting(StateId q) const {
    return std::find(accepting.begin(), accepting.end(), q) != accepting.end();
  }
  bool has_label(Label l) const {
    return std::find(alphabet.begin(), alphabet.end(), l) != alphabet.end();
  }
};

struct Configuration {
  StateId state = 0;
  NodeAddr node;
  friend bool operator==(const Configuration&, const Configuration&) = default;
};

using Computation = std::vector<Configuration>;

enum class Multiplicity { zero, one, many, infinite };

inline const char* multiplicity_name(Multiplicity m) {
  switch (m) {
    case Multiplicity::zero: return "ZERO";
    case Multiplicity::one: return "ONE";
    case Multiplicity::many: return "MANY";
    case Multiplicity::infinite: return "INFINITE";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline bool direction_fits(Direction d, NodeType src, NodeType dst) {
  switch (d) {
    case Direction::down_left:
      return src.arity == Arity::internal && dst.position == ChildPos::left;
    case Direction::down_right:
      return src.arity == Arity::internal && dst.position == ChildPos::right;
    case Direction::up_left:
      return src.position == ChildPos::left && dst.arity == Arity::internal;
    case Direction::up_right:
      return src.position == ChildPos::right && dst.arity == Arity::internal;
  }
  return false;
}

inline std::string describe(const Automaton& a, const Transition& t) {
  auto name = [&](StateId q) {
    return q < a.size() ? a.states[q] : "#" + std::to_string(q);
  };
  return "trans " + name(t.src) + " " + label_char(t.src_label) + " " +
         t.src_type.str() + " -> " + name(t.dst) + " " +
         label_char(t.dst_label) + " " + t.dst_type.str() + " " +
         direction_str(t.dir);
}

}  // namespace detail

/// Lists every invariant violation; an empty list means the automaton is valid.
inline std::vector<std::string> validate(const Automaton& a) {
  std::vector<std::string> report;
  for (Label l : a.alphabet)
    if (l == Label::star) report.push_back("alphabet contains '*'");
  for (StateId q : a.initial)
    if (q >= a.size()) report.push_back("initial state out of range");
  for (StateId q : a.accepting)
    if (q >= a.size()) report.push_back("accepting state out of range");
  for (const auto& t : a.transitions) {
    const std::string where = detail::describe(a, t);
    if (t.src >= a.size() || t.dst >= a.size())
      report.push_back(where + ": unknown state");
    if (!a.has_label(t.src_label) || !a.has_label(t.dst_label))
      report.push_back(where + ": label outside the alphabet");
    if (!detail::direction_fits(t.dir, t.src_type, t.dst_type))
      report.push_back(where + ": direction inconsistent with node types");
  }
  return report;
}

/**
 * Conservative determinism check: two transitions leaving the same
 * (state, label, type) conflict unless they move the same way and expect a
 * different neighbour observation.
 */
inline bool is_deterministic(const Automaton& a) {
  const auto& ts = a.transitions;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!detail::direction_fits(ts[i].dir, ts[i].src_type, ts[i].dst_type))
      continue;
    for (std::size_t j = i + 1; j < ts.size(); ++j) {
      const auto& x = ts[i];
      const auto& y = ts[j];
      if (!detail::direction_fits(y.dir, y.src_type, y.dst_type)) continue;
      if (x.src != y.src || x.src_label != y.src_label ||
          x.src_type != y.src_type)
        continue;
      if (x.dir != y.dir) return false;
      if (x.dst_label == y.dst_label && x.dst_type == y.dst_type &&
          x.dst != y.dst)
        return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Walking structures

/**
 * What the automaton sees of a node set: a label and a type per node and
 * the neighbour reached by each direction (-1 when the move is unavailable).
 * Trees use their real labels/types; patterns override the ports.
 */
struct Terrain {
  std::vector<Label> label;
  std::vector<NodeType> type;
  std::vector<std::array<std::int32_t, 4>> next;

  std::size_t size() const { return label.size(); }

  static Terrain of_tree(const Tree& t) {
    Terrain g;
    const std::size_t n = t.size();
    g.label.resize(n);
    g.type.resize(n);
    g.next.assign(n, {-1, -1, -1, -1});
    for (std::size_t v = 0; v < n; ++v) {
      g.label[v] = t.label(v);
      g.type[v] = t.node_type(v);
      g.next[v][0] = t.left(v);
      g.next[v][1] = t.right(v);
      const ChildPos pos = t.node(v).position;
      if (pos == ChildPos::left) g.next[v][2] = t.parent(v);
      if (pos == ChildPos::right) g.next[v][3] = t.parent(v);
    }
    return g;
  }
};

/// Transitions bucketed by the full observation, giving p -> {q} lists.
class TransitionIndex {
 public:
  static constexpr std::size_t kKeys = 2 * NodeType::kCount * 4 * 2 * NodeType::kCount;

  explicit TransitionIndex(const Automaton& a) : q_(a.size()) {
    std::vector<std::vector<StateId>> buckets(kKeys * q_);
    for (const auto& t : a.transitions) {
      if (t.src >= q_ || t.dst >= q_) continue;
      if (t.src_label == Label::star || t.dst_label == Label::star) continue;
      if (!detail::direction_fits(t.dir, t.src_type, t.dst_type)) continue;
      buckets[key(t.src_label, t.src_type, t.dir, t.dst_label, t.dst_type) *
                  q_ +
              t.src]
          .push_back(t.dst);
    }
    offsets_.assign(buckets.size() + 1, 0);
    for (std::size_t k = 0; k < buckets.size(); ++k) {
      auto& b = buckets[k];
      std::sort(b.begin(), b.end());
      b.erase(std::unique(b.begin(), b.end()), b.end());
      offsets_[k + 1] = offsets_[k] + static_cast<std::uint32_t>(b.size());
    }
    targets_.reserve(offsets_.back());
    for (auto& b : buckets) targets_.insert(targets_.end(), b.begin(), b.end());
  }

  std::size_t states() const { return q_; }

  static constexpr std::size_t key(Label sl, NodeType st, Direction d, Label dl,
                                   NodeType dt) {
    return (((static_cast<std::size_t>(sl) * NodeType::kCount + st.index()) * 4 +
             static_cast<std::size_t>(d)) *
                2 +
            static_cast<std::size_t>(dl)) *
               NodeType::kCount +
           dt.index();
  }

  std::span<const StateId> successors(std::size_t k, StateId p) const {
    const std::size_t slot = k * q_ + p;
    return {targets_.data() + offsets_[slot], offsets_[slot + 1] - offsets_[slot]};
  }

  /// Calls fn(q, w) for each configuration (q, w) one step after (p, v).
  template <typename F>
  void for_each_successor(const Terrain& g, std::size_t v, StateId p,
                          F&& fn) const {
    for (std::size_t d = 0; d < 4; ++d) {
      const std::int32_t w = g.next[v][d];
      if (w < 0) continue;
      const auto k = key(g.label[v], g.type[v], static_cast<Direction>(d),
                         g.label[static_cast<std::size_t>(w)],
                         g.type[static_cast<std::size_t>(w)]);
      for (StateId q : successors(k, p)) fn(q, static_cast<std::size_t>(w));
    }
  }

 private:
  std::size_t q_;
  std::vector<std::uint32_t> offsets_;
  std::vector<StateId> targets_;
};

namespace detail {

inline void check_alphabet(const Automaton& a, const Tree& t) {
  for (std::size_t v = 0; v < t.size(); ++v)
    if (!a.has_label(t.label(v)))
      throw UsageError(std::string("tree label '") + label_char(t.label(v)) +
                       "' is outside the automaton alphabet");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Acceptance

/// Reachability from (q0, root) to (f, root) in the configuration graph.
inline bool accepts(const TransitionIndex& idx, const Automaton& a,
                    const Terrain& g) {
  const std::size_t q = a.size();
  for (StateId s : a.initial)
    if (a.is_accepting(s)) return true;
  std::vector<std::uint8_t> accepting(q, 0);
  for (StateId f : a.accepting) accepting[f] = 1;
  std::vector<std::uint8_t> seen(g.size() * q, 0);
  std::vector<std::uint32_t> stack;
  for (StateId s : a.initial) {
    seen[s] = 1;
    stack.push_back(s);
  }
  while (!stack.empty()) {
    const std::uint32_t c = stack.back();
    stack.pop_back();
    const std::size_t v = c / q;
    const StateId p = static_cast<StateId>(c % q);
    bool hit = false;
    idx.for_each_successor(g, v, p, [&](StateId r, std::size_t w) {
      const std::size_t id = w * q + r;
      if (seen[id]) return;
      seen[id] = 1;
      if (w == 0 && accepting[r]) hit = true;
      stack.push_back(static_cast<std::uint32_t>(id));
    });
    if (hit) return true;
  }
  return false;
}

inline bool accepts(const Automaton& a, const Tree& t) {
  detail::check_alphabet(a, t);
  return accepts(TransitionIndex(a), a, Terrain::of_tree(t));
}

namespace detail {

inline Computation to_computation(const Tree& t, std::size_t q,
                                  const std::vector<std::uint32_t>& path) {
  Computation out;
  out.reserve(path.size());
  for (auto c : path)
    out.push_back({static_cast<StateId>(c % q), t.address(c / q)});
  return out;
}

/// Successors of configuration c ordered by (state, node preorder index).
inline std::vector<std::uint32_t> ordered_successors(const TransitionIndex& idx,
                                                     const Terrain& g,
                                                     std::size_t q,
                                                     std::uint32_t c) {
  std::vector<std::pair<StateId, std::size_t>> next;
  idx.for_each_successor(g, c / q, static_cast<StateId>(c % q),
                         [&](StateId r, std::size_t w) { next.push_back({r, w}); });
  std::sort(next.begin(), next.end());
  next.erase(std::unique(next.begin(), next.end()), next.end());
  std::vector<std::uint32_t> out;
  out.reserve(next.size());
  for (auto [r, w] : next) out.push_back(static_cast<std::uint32_t>(w * q + r));
  return out;
}

}  // namespace detail

/// Shortest accepting computation, breadth-first with (state, address)
/// tie-breaking.
inline std::optional<Computation> accepting_witness(const Automaton& a,
                                                    const Tree& t) {
  detail::check_alphabet(a, t);
  const TransitionIndex idx(a);
  const Terrain g = Terrain::of_tree(t);
  const std::size_t q = a.size();
  constexpr std::uint32_t kNone = ~std::uint32_t{0};
  std::vector<std::uint32_t> pred(g.size() * q, kNone);
  std::vector<std::uint8_t> seen(g.size() * q, 0);
  std::deque<std::uint32_t> queue;
  std::vector<StateId> init = a.initial;
  std::sort(init.begin(), init.end());
  init.erase(std::unique(init.begin(), init.end()), init.end());
  for (StateId s : init) {
    seen[s] = 1;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const std::uint32_t c = queue.front();
    queue.pop_front();
    if (c / q == 0 && a.is_accepting(static_cast<StateId>(c % q))) {
      std::vector<std::uint32_t> path;
      for (std::uint32_t x = c; x != kNone; x = pred[x]) path.push_back(x);
      std::reverse(path.begin(), path.end());
      return detail::to_computation(t, q, path);
    }
    for (std::uint32_t d : detail::ordered_successors(idx, g, q, c)) {
      if (seen[d]) continue;
      seen[d] = 1;
      pred[d] = c;
      queue.push_back(d);
    }
  }
  return std::nullopt;
}

/// Replays a computation against the transition list (not the index).
inline bool is_accepting_computation(const Automaton& a, const Tree& t,
                                     const Computation& comp) {
  if (comp.empty()) return false;
  if (!comp.front().node.is_root() || !comp.back().node.is_root()) return false;
  if (!a.is_initial(comp.front().state) || !a.is_accepting(comp.back().state))
    return false;
  for (std::size_t k = 0; k + 1 < comp.size(); ++k) {
    const auto from = t.find(comp[k].node);
    const auto to = t.find(comp[k + 1].node);
    if (!from || !to) return false;
    std::optional<Direction> dir;
    if (t.left(*from) == static_cast<std::int32_t>(*to)) dir = Direction::down_left;
    if (t.right(*from) == static_cast<std::int32_t>(*to)) dir = Direction::down_right;
    if (t.parent(*from) == static_cast<std::int32_t>(*to))
      dir = t.node(*from).position == ChildPos::left ? Direction::up_left
                                                       : Direction::up_right;
    if (!dir) return false;
    const bool ok = std::any_of(
        a.transitions.begin(), a.transitions.end(), [&](const Transition& tr) {
          return tr.src == comp[k].state && tr.dst == comp[k + 1].state &&
                 tr.dir == *dir && tr.src_label == t.label(*from) &&
                 tr.src_type == t.node_type(*from) &&
                 tr.dst_label == t.label(*to) && tr.dst_type == t.node_type(*to);
        });
    if (!ok) return false;
  }
  return true;
}

/// Multiplicity class plus up to two distinct accepting computations.
struct AcceptingComputations {
  Multiplicity multiplicity = Multiplicity::zero;
  std::vector<Computation> examples;
};

/**
 * Classifies accepting computations on the configuration graph restricted
 * to configurations that are reachable and co-reachable. A cycle there
 * gives infinitely many; otherwise paths are counted saturating at 2.
 */
inline AcceptingComputations accepting_computations(const Automaton& a,
                                                    const Tree& t) {
  detail::check_alphabet(a, t);
  const TransitionIndex idx(a);
  const Terrain g = Terrain::of_tree(t);
  const std::size_t q = a.size();
  const std::size_t n = g.size() * q;

  std::vector<StateId> init = a.initial;
  std::sort(init.begin(), init.end());
  init.erase(std::unique(init.begin(), init.end()), init.end());

  // Forward exploration, keeping the explored edges.
  std::vector<std::uint8_t> reach(n, 0);
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> succ;
  std::vector<std::uint32_t> stack;
  for (StateId s : init) {
    reach[s] = 1;
    stack.push_back(s);
  }
  while (!stack.empty()) {
    const std::uint32_t c = stack.back();
    stack.pop_back();
    auto next = detail::ordered_successors(idx, g, q, c);
    for (auto d : next)
      if (!reach[d]) {
        reach[d] = 1;
        stack.push_back(d);
      }
    succ[c] = std::move(next);
  }
  auto is_sink = [&](std::uint32_t c) {
    return c / q == 0 && a.is_accepting(static_cast<StateId>(c % q));
  };

  // Backward from accepting configurations.
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> pred;
  for (const auto& [c, next] : succ)
    for (auto d : next) pred[d].push_back(c);
  std::vector<std::uint8_t> useful(n, 0);
  for (std::uint32_t c = 0; c < q; ++c)
    if (reach[c] && is_sink(c)) {
      useful[c] = 1;
      stack.push_back(c);
    }
  while (!stack.empty()) {
    const std::uint32_t c = stack.back();
    stack.pop_back();
    for (auto d : pred[c])
      if (!useful[d]) {
        useful[d] = 1;
        stack.push_back(d);
      }
  }

  AcceptingComputations out;
  std::vector<std::uint32_t> nodes;
  for (std::uint32_t c = 0; c < n; ++c)
    if (useful[c]) nodes.push_back(c);
  if (nodes.empty()) return out;

  auto useful_succ = [&](std::uint32_t c) {
    std::vector<std::uint32_t> r;
    for (auto d : succ[c])
      if (useful[d]) r.push_back(d);
    return r;
  };

  // Kahn's algorithm; leftover nodes lie on cycles.
  std::unordered_map<std::uint32_t, std::size_t> indeg;
  for (auto c : nodes) indeg[c];
  for (auto c : nodes)
    for (auto d : useful_succ(c)) ++indeg[d];
  std::vector<std::uint32_t> order;
  for (auto c : nodes)
    if (indeg[c] == 0) order.push_back(c);
  for (std::size_t k = 0; k < order.size(); ++k)
    for (auto d : useful_succ(order[k]))
      if (--indeg[d] == 0) order.push_back(d);

  if (order.size() < nodes.size()) {
    out.multiplicity = Multiplicity::infinite;
    std::uint32_t cyc = 0;
    for (auto c : nodes)
      if (indeg[c] > 0) {
        cyc = c;
        break;
      }
    // A cycle vertex with positive in-degree after Kahn lies on a cycle or
    // downstream of one; walk predecessors with positive in-degree to land
    // on the cycle itself.
    {
      std::unordered_map<std::uint32_t, std::size_t> visit;
      std::uint32_t x = cyc;
      for (std::size_t step = 0; !visit.count(x); ++step) {
        visit[x] = step;
        for (auto p : pred[x])
          if (useful[p] && indeg[p] > 0) {
            x = p;
            break;
          }
      }
      cyc = x;
    }
    auto bfs_path = [&](const std::vector<std::uint32_t>& from,
                        auto&& target) -> std::vector<std::uint32_t> {
      std::unordered_map<std::uint32_t, std::uint32_t> parent;
      std::deque<std::uint32_t> dq;
      for (auto s : from) {
        if (parent.count(s)) continue;
        parent[s] = s;
        dq.push_back(s);
      }
      while (!dq.empty()) {
        auto c = dq.front();
        dq.pop_front();
        if (target(c)) {
          std::vector<std::uint32_t> p{c};
          while (parent[p.back()] != p.back()) p.push_back(parent[p.back()]);
          std::reverse(p.begin(), p.end());
          return p;
        }
        for (auto d : useful_succ(c))
          if (!parent.count(d)) {
            parent[d] = c;
            dq.push_back(d);
          }
      }
      return {};
    };
    std::vector<std::uint32_t> sources;
    for (StateId s : init)
      if (useful[s]) sources.push_back(s);
    auto head = bfs_path(sources, [&](std::uint32_t c) { return c == cyc; });
    auto loop = bfs_path(useful_succ(cyc), [&](std::uint32_t c) { return c == cyc; });
    auto tail = bfs_path({cyc}, is_sink);
    std::vector<std::uint32_t> first = head;
    first.insert(first.end(), tail.begin() + 1, tail.end());
    std::vector<std::uint32_t> second = head;
    second.insert(second.end(), loop.begin(), loop.end());
    second.insert(second.end(), tail.begin() + 1, tail.end());
    out.examples.push_back(detail::to_computation(t, q, first));
    out.examples.push_back(detail::to_computation(t, q, second));
    return out;
  }

  // Paths to any sink, counted in reverse topological order, saturated at 2.
  std::unordered_map<std::uint32_t, int> count;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int c = is_sink(*it) ? 1 : 0;
    for (auto d : useful_succ(*it)) c = std::min(2, c + count[d]);
    count[*it] = c;
  }
  int total = 0;
  for (StateId s : init)
    if (useful[s]) total = std::min(2, total + count[s]);
  out.multiplicity = total == 0   ? Multiplicity::zero
                     : total == 1 ? Multiplicity::one
                                  : Multiplicity::many;

  // Unrank the first min(total, 2) computations.
  for (int rank = 0; rank < total; ++rank) {
    int k = rank;
    std::vector<std::uint32_t> path;
    std::optional<std::uint32_t> cur;
    for (StateId s : init) {
      if (!useful[s]) continue;
      if (k < count[s]) {
        cur = s;
        break;
      }
      k -= count[s];
    }
    while (cur) {
      path.push_back(*cur);
      const std::uint32_t c = *cur;
      cur.reset();
      if (is_sink(c)) {
        if (k == 0) break;
        --k;
      }
      for (auto d : useful_succ(c)) {
        if (k < count[d]) {
          cur = d;
          break;
        }
        k -= count[d];
      }
    }
    out.examples.push_back(detail::to_computation(t, q, path));
  }
  return out;
}

inline Multiplicity multiplicity(const Automaton& a, const Tree& t) {
  return accepting_computations(a, t).multiplicity;
}

// ---------------------------------------------------------------------------
// Time symmetrization

struct SymmetrizedAutomaton {
  Automaton automaton;
  std::vector<StateId> tau;  ///< involution pairing q with q'
};

/// Adds a primed copy q' of each state and, for every transition
/// (p,a,t1,q,b,t2,d), the reversed transition (q',b,t2,p',a,t1,-d).
inline SymmetrizedAutomaton symmetrize(const Automaton& a) {
  SymmetrizedAutomaton s;
  Automaton& out = s.automaton;
  const auto n = static_cast<StateId>(a.size());
  out.alphabet = a.alphabet;
  out.states = a.states;
  for (const auto& name : a.states) out.states.push_back(name + "'");
  out.initial = a.initial;
  out.accepting = a.accepting;
  out.transitions = a.transitions;
  for (const auto& t : a.transitions)
    out.transitions.push_back({t.dst + n, t.dst_label, t.dst_type, t.src + n,
                               t.src_label, t.src_type, reverse(t.dir)});
  s.tau.resize(2 * n);
  for (StateId q = 0; q < n; ++q) {
    s.tau[q] = q + n;
    s.tau[q + n] = q;
  }
  return s;
}

/// Adds unused state pairs until there are at least `min_states` states.
inline void pad_states(SymmetrizedAutomaton& s, std::size_t min_states) {
  for (std::size_t k = 0; s.automaton.size() < min_states; ++k) {
    const StateId p = s.automaton.add_state("pad" + std::to_string(k));
    const StateId pp = s.automaton.add_state("pad" + std::to_string(k) + "'");
    s.tau.push_back(pp);
    s.tau.push_back(p);
  }
}

// ---------------------------------------------------------------------------
// Text format

namespace detail {

struct Token {
  std::string text;
  std::size_t column;
};

inline std::vector<Token> tokenize_line(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' &&
           line[i] != '\r' && line[i] != '#')
      ++i;
    out.push_back({std::string(line.substr(start, i - start)), start + 1});
  }
  return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i)
    if (i == text.size() || text[i] == '\n') {
      lines.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  return lines;
}

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "a") return Label::a;
  if (s == "b") return Label::b;
  return std::nullopt;
}

}  // namespace detail

/// Parses the line-oriented automaton format. States may be declared on
/// several `states` lines, anywhere in the file.
inline Automaton parse_automaton(std::string_view text,
                                 const std::string& source = "<input>") {
  Automaton a;
  a.alphabet.clear();
  const auto lines = detail::split_lines(text);
  auto fail = [&](std::size_t line, std::size_t col, const std::string& msg) {
    throw ParseError(source, line + 1, col, msg);
  };
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    auto toks = detail::tokenize_line(lines[ln]);
    if (toks.empty() || toks[0].text != "states") continue;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      if (a.state_id(toks[k].text))
        fail(ln, toks[k].column, "duplicate state '" + toks[k].text + "'");
      a.add_state(toks[k].text);
    }
  }
  bool have_alphabet = false;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    auto toks = detail::tokenize_line(lines[ln]);
    if (toks.empty()) continue;
    const std::string& kw = toks[0].text;
    auto state = [&](const detail::Token& tk) {
      auto q = a.state_id(tk.text);
      if (!q) fail(ln, tk.column, "unknown state '" + tk.text + "'");
      return *q;
    };
    auto label = [&](const detail::Token& tk) {
      auto l = detail::parse_label(tk.text);
      if (!l) fail(ln, tk.column, "bad label '" + tk.text + "'");
      return *l;
    };
    auto type = [&](const detail::Token& tk) {
      auto t = NodeType::parse(tk.text);
      if (!t) fail(ln, tk.column, "bad node type '" + tk.text + "'");
      return *t;
    };
    if (kw == "states") continue;
    if (kw == "alphabet") {
      have_alphabet = true;
      for (std::size_t k = 1; k < toks.size(); ++k) {
        const Label l = label(toks[k]);
        if (!a.has_label(l)) a.alphabet.push_back(l);
      }
    } else if (kw == "initial") {
      for (std::size_t k = 1; k < toks.size(); ++k)
        a.initial.push_back(state(toks[k]));
    } else if (kw == "accepting") {
      for (std::size_t k = 1; k < toks.size(); ++k)
        a.accepting.push_back(state(toks[k]));
    } else if (kw == "trans") {
      if (toks.size() != 9)
        fail(ln, toks[0].column,
             "expected 'trans p label type -> q label type dir'");
      if (toks[4].text != "->") fail(ln, toks[4].column, "expected '->'");
      Transition t;
      t.src = state(toks[1]);
      t.src_label = label(toks[2]);
      t.src_type = type(toks[3]);
      t.dst = state(toks[5]);
      t.dst_label = label(toks[6]);
      t.dst_type = type(toks[7]);
      auto d = parse_direction(toks[8].text);
      if (!d) fail(ln, toks[8].column, "bad direction '" + toks[8].text + "'");
      t.dir = *d;
      if (!detail::direction_fits(t.dir, t.src_type, t.dst_type))
        fail(ln, toks[8].column, "direction inconsistent with node types");
      a.transitions.push_back(t);
    } else {
      fail(ln, toks[0].column, "unknown keyword '" + kw + "'");
    }
  }
  if (!have_alphabet) a.alphabet = {Label::a, Label::b};
  return a;
}

inline std::string serialize_automaton(const Automaton& a) {
  std::ostringstream os;
  os << "alphabet";
  for (Label l : a.alphabet) os << ' ' << label_char(l);
  os << "\nstates";
  for (const auto& s : a.states) os << ' ' << s;
  os << "\ninitial";
  for (StateId q : a.initial) os << ' ' << a.states[q];
  os << "\naccepting";
  for (StateId q : a.accepting) os << ' ' << a.states[q];
  os << '\n';
  for (const auto& t : a.transitions) os << detail::describe(a, t) << '\n';
  return os.str();
}

/// Random automaton over {a,b}; every well-formed transition is included
/// independently with probability `density`.
template <typename Rng>
Automaton random_automaton(Rng& rng, std::size_t states, double density) {
  Automaton a;
  for (std::size_t i = 0; i < states; ++i) a.add_state("s" + std::to_string(i));
  std::bernoulli_distribution coin(density);
  std::uniform_int_distribution<std::size_t> pick(0, states - 1);
  a.initial.push_back(static_cast<StateId>(pick(rng)));
  a.accepting.push_back(static_cast<StateId>(pick(rng)));
  for (StateId p = 0; p < states; ++p)
    for (Label sl : {Label::a, Label::b})
      for (std::size_t st = 0; st < NodeType::kCount; ++st)
        for (Direction d : kDirections)
          for (Label dl : {Label::a, Label::b})
            for (std::size_t dt = 0; dt < NodeType::kCount; ++dt) {
              const NodeType s = NodeType::from_index(st);
              const NodeType t = NodeType::from_index(dt);
              if (!detail::direction_fits(d, s, t)) continue;
              for (StateId q = 0; q < states; ++q)
                if (coin(rng)) a.transitions.push_back({p, sl, s, q, dl, t, d});
            }
  return a;
}

}  // namespace twa
