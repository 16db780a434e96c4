#pragma once

// Deterministic tree-walking automata with one weak pebble: the pebble can
// be placed at the current node when it is not on the tree, lifted only at
// its own node, and the head senses only whether it sits on the pebble.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "twa/automaton.hpp"
#include "twa/error.hpp"
#include "twa/tree.hpp"

namespace twa {

struct PebbleAction {
  enum class Kind : std::uint8_t { move, place, lift, accept, reject };
  Kind kind = Kind::reject;
  Direction dir = Direction::down_left;  // move only
  StateId next = 0;                      // move, place, lift

  friend bool operator==(const PebbleAction&, const PebbleAction&) = default;
};

class PebbleMachine {
 public:
  std::vector<std::string> states;
  StateId initial = 0;

  StateId add_state(std::string name) {
    states.push_back(std::move(name));
    table_.resize(states.size() * kPerState);
    return static_cast<StateId>(states.size() - 1);
  }
  std::size_t size() const { return states.size(); }
  std::optional<StateId> state_id(std::string_view name) const {
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i] == name) return static_cast<StateId>(i);
    return std::nullopt;
  }

  /// Sets the action for an observation; a second definition is an error.
  void set(StateId q, Label l, NodeType t, bool pebble, PebbleAction act) {
    auto& slot = table_.at(key(q, l, t, pebble));
    if (slot) throw UsageError("observation defined twice for state " + states[q]);
    slot = act;
  }
  const std::optional<PebbleAction>& action(StateId q, Label l, NodeType t, bool pebble) const {
    return table_[key(q, l, t, pebble)];
  }

 private:
  static constexpr std::size_t kPerState = 2 * NodeType::kCount * 2;
  static std::size_t key(StateId q, Label l, NodeType t, bool pebble) {
    return ((q * 2 + (l == Label::b ? 1 : 0)) * NodeType::kCount + t.index()) * 2 + pebble;
  }
  std::vector<std::optional<PebbleAction>> table_;
};

/// Static problems: moves that can never apply to the observed node type,
/// lifting without the pebble, placing on top of it, bad target states.
inline std::vector<std::string> validate_pebble_machine(const PebbleMachine& m) {
  std::vector<std::string> out;
  if (m.initial >= m.size()) out.push_back("initial state out of range");
  for (StateId q = 0; q < m.size(); ++q)
    for (Label l : {Label::a, Label::b})
      for (std::size_t ti = 0; ti < NodeType::kCount; ++ti)
        for (bool peb : {false, true}) {
          const NodeType t = NodeType::from_index(ti);
          const auto& act = m.action(q, l, t, peb);
          if (!act) continue;
          const std::string where = m.states[q] + " " + label_char(l) + " " + t.str() + " " +
                                    (peb ? "1" : "0");
          using K = PebbleAction::Kind;
          if ((act->kind == K::move || act->kind == K::place || act->kind == K::lift) &&
              act->next >= m.size())
            out.push_back(where + ": target state out of range");
          if (act->kind == K::lift && !peb) out.push_back(where + ": lift without pebble");
          if (act->kind == K::place && peb) out.push_back(where + ": place on pebble");
        }
  return out;
}

struct PebbleConfiguration {
  StateId state = 0;
  std::size_t head = 0;                 ///< preorder index
  std::optional<std::size_t> pebble;    ///< preorder index

  friend bool operator==(const PebbleConfiguration&, const PebbleConfiguration&) = default;
};

enum class PebbleVerdict { accept, reject, fuel_exhausted };

inline const char* verdict_str(PebbleVerdict v) {
  switch (v) {
    case PebbleVerdict::accept: return "accept";
    case PebbleVerdict::reject: return "reject";
    case PebbleVerdict::fuel_exhausted: return "fuel_exhausted";
  }
  return "?";
}

struct PebbleRun {
  PebbleVerdict verdict = PebbleVerdict::reject;
  std::uint64_t steps = 0;
  bool implicit_reject = false;  ///< halted on a missing or inapplicable action
  std::vector<PebbleConfiguration> trace;  ///< filled when requested
};

inline std::uint64_t default_pebble_fuel(const Tree& t) {
  const std::uint64_t n = t.size();
  return 64 * n * n * n;
}

/// Runs from (initial, root, no pebble). Each executed action costs one step.
inline PebbleRun pebble_run(const PebbleMachine& m, const Tree& t, std::uint64_t fuel,
                            bool record_trace = false) {
  if (fuel == 0) throw UsageError("fuel must be positive");
  PebbleRun run;
  PebbleConfiguration c{m.initial, 0, std::nullopt};
  auto stop = [&](PebbleVerdict v, bool implicit) {
    run.verdict = v;
    run.implicit_reject = implicit;
    return run;
  };
  using K = PebbleAction::Kind;
  while (true) {
    if (record_trace) run.trace.push_back(c);
    if (run.steps == fuel) return stop(PebbleVerdict::fuel_exhausted, false);
    const bool here = c.pebble.value_or(c.head + 1) == c.head;
    const auto& act = m.action(c.state, t.label(c.head), t.node_type(c.head), here);
    if (!act) return stop(PebbleVerdict::reject, true);
    ++run.steps;
    switch (act->kind) {
      case K::accept: return stop(PebbleVerdict::accept, false);
      case K::reject: return stop(PebbleVerdict::reject, false);
      case K::place:
        if (c.pebble) return stop(PebbleVerdict::reject, true);
        c.pebble = c.head;
        break;
      case K::lift:
        if (!here) return stop(PebbleVerdict::reject, true);
        c.pebble.reset();
        break;
      case K::move: {
        std::int32_t to = -1;
        const auto pos = t.node(c.head).position;
        switch (act->dir) {
          case Direction::down_left: to = t.left(c.head); break;
          case Direction::down_right: to = t.right(c.head); break;
          case Direction::up_left: to = pos == ChildPos::left ? t.parent(c.head) : -1; break;
          case Direction::up_right: to = pos == ChildPos::right ? t.parent(c.head) : -1; break;
        }
        if (to < 0) return stop(PebbleVerdict::reject, true);
        c.head = static_cast<std::size_t>(to);
        break;
      }
    }
    c.state = act->next;
  }
}

inline PebbleRun pebble_run(const PebbleMachine& m, const Tree& t) {
  return pebble_run(m, t, default_pebble_fuel(t));
}

// ---------------------------------------------------------------------------
// The machine for L
//
// The pebble visits nodes in preorder. At an internal pebbled node v the
// head scans the left subtree of v counting a-leaves up to 1, returns to v,
// and if the count is 1 scans the right subtree counting up to 2. Each scan
// is a stackless depth-first walk; it is over when the head climbs back onto
// the pebble. Acceptance happens on the first v where both counts saturate.

namespace detail {

class PebbleLBuilder {
 public:
  PebbleMachine build() {
    start_ = m_.add_state("start");
    check_ = m_.add_state("check");
    place_ = m_.add_state("place");
    next_int_ = m_.add_state("next_int");
    next_up_ = m_.add_state("next_up");
    next_over_ = m_.add_state("next_over");
    for (int c = 0; c <= 1; ++c) {
      l_down_[c] = m_.add_state("l_down" + std::to_string(c));
      l_from1_[c] = m_.add_state("l_from1_" + std::to_string(c));
      l_from2_[c] = m_.add_state("l_from2_" + std::to_string(c));
    }
    for (int c = 0; c <= 2; ++c) {
      r_down_[c] = m_.add_state("r_down" + std::to_string(c));
      r_from1_[c] = m_.add_state("r_from1_" + std::to_string(c));
      r_from2_[c] = m_.add_state("r_from2_" + std::to_string(c));
    }
    m_.initial = start_;

    for (StateId q = 0; q < m_.size(); ++q)
      for (Label l : {Label::a, Label::b})
        for (std::size_t ti = 0; ti < NodeType::kCount; ++ti)
          for (bool peb : {false, true})
            m_.set(q, l, NodeType::from_index(ti), peb,
                   decide(q, l, NodeType::from_index(ti), peb));
    return std::move(m_);
  }

 private:
  using K = PebbleAction::Kind;
  static PebbleAction move(Direction d, StateId q) { return {K::move, d, q}; }
  static PebbleAction act(K k, StateId q = 0) { return {k, Direction::down_left, q}; }

  // Leaving a node upwards during a scan or the preorder advance.
  static PebbleAction climb(NodeType t, StateId from1, StateId from2) {
    if (t.position == ChildPos::left) return move(Direction::up_left, from1);
    if (t.position == ChildPos::right) return move(Direction::up_right, from2);
    return act(K::reject);
  }

  PebbleAction decide(StateId q, Label l, NodeType t, bool peb) const {
    const bool leaf = t.is_leaf();
    if (q == start_) return peb ? act(K::reject) : act(K::place, check_);
    if (q == place_) return peb ? act(K::reject) : act(K::place, check_);
    if (q == check_) {
      if (!peb) return act(K::reject);
      return leaf ? act(K::lift, next_up_) : move(Direction::down_left, l_down_[0]);
    }
    // Preorder successor of the node just unpebbled.
    if (q == next_int_) return leaf ? act(K::reject) : move(Direction::down_left, place_);
    if (q == next_up_) {
      if (t.position == ChildPos::root) return act(K::reject);  // tour complete
      return climb(t, next_over_, next_up_);
    }
    if (q == next_over_) return move(Direction::down_right, place_);

    for (int c = 0; c <= 1; ++c) {
      if (q == l_down_[c]) {
        if (!leaf) return move(Direction::down_left, q);
        const int k = std::min(1, c + (l == Label::a ? 1 : 0));
        return climb(t, l_from1_[k], l_from2_[k]);
      }
      if (q == l_from1_[c]) {
        if (!peb) return move(Direction::down_right, l_down_[c]);
        // Back on v: the left subtree is done.
        return c == 0 ? act(K::lift, next_int_) : move(Direction::down_right, r_down_[0]);
      }
      if (q == l_from2_[c]) return peb ? act(K::reject) : climb(t, l_from1_[c], l_from2_[c]);
    }
    for (int c = 0; c <= 2; ++c) {
      if (q == r_down_[c]) {
        if (!leaf) return move(Direction::down_left, q);
        const int k = std::min(2, c + (l == Label::a ? 1 : 0));
        return climb(t, r_from1_[k], r_from2_[k]);
      }
      if (q == r_from1_[c])
        return peb ? act(K::reject) : move(Direction::down_right, r_down_[c]);
      if (q == r_from2_[c]) {
        if (!peb) return climb(t, r_from1_[c], r_from2_[c]);
        return c == 2 ? act(K::accept) : act(K::lift, next_int_);
      }
    }
    return act(K::reject);
  }

  PebbleMachine m_;
  StateId start_{}, check_{}, place_{}, next_int_{}, next_up_{}, next_over_{};
  StateId l_down_[2]{}, l_from1_[2]{}, l_from2_[2]{};
  StateId r_down_[3]{}, r_from1_[3]{}, r_from2_[3]{};
};

}  // namespace detail

inline PebbleMachine build_pebble_L() { return detail::PebbleLBuilder().build(); }

// ---------------------------------------------------------------------------
// Text format
//
//   states q0 q1 ...
//   initial q0
//   paction <state> <label> <type> <0|1> -> <action> [goto <state>]
//
// <action> is move(+1|+2|-1|-2), place, lift, accept or reject. Without
// `goto` a move/place/lift keeps the current state.

inline std::string serialize_pebble_machine(const PebbleMachine& m) {
  std::ostringstream os;
  os << "states";
  for (const auto& s : m.states) os << ' ' << s;
  os << "\ninitial " << m.states.at(m.initial) << '\n';
  using K = PebbleAction::Kind;
  for (StateId q = 0; q < m.size(); ++q)
    for (Label l : {Label::a, Label::b})
      for (std::size_t ti = 0; ti < NodeType::kCount; ++ti)
        for (bool peb : {false, true}) {
          const NodeType t = NodeType::from_index(ti);
          const auto& a = m.action(q, l, t, peb);
          if (!a) continue;
          os << "paction " << m.states[q] << ' ' << label_char(l) << ' ' << t.str() << ' '
             << (peb ? 1 : 0) << " -> ";
          switch (a->kind) {
            case K::move: os << "move(" << direction_str(a->dir) << ")"; break;
            case K::place: os << "place"; break;
            case K::lift: os << "lift"; break;
            case K::accept: os << "accept"; break;
            case K::reject: os << "reject"; break;
          }
          if (a->kind != K::accept && a->kind != K::reject && a->next != q)
            os << " goto " << m.states[a->next];
          os << '\n';
        }
  return os.str();
}

inline PebbleMachine parse_pebble_machine(std::string_view text,
                                          const std::string& source = "<input>") {
  PebbleMachine m;
  const auto lines = detail::split_lines(text);
  auto fail = [&](std::size_t ln, std::size_t col, const std::string& msg) {
    throw ParseError(source, ln + 1, col, msg);
  };
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto toks = detail::tokenize_line(lines[ln]);
    if (toks.empty() || toks[0].text != "states") continue;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      if (m.state_id(toks[k].text)) fail(ln, toks[k].column, "duplicate state '" + toks[k].text + "'");
      m.add_state(toks[k].text);
    }
  }
  bool have_initial = false;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto toks = detail::tokenize_line(lines[ln]);
    if (toks.empty() || toks[0].text == "states") continue;
    auto state = [&](const detail::Token& tk) {
      auto q = m.state_id(tk.text);
      if (!q) fail(ln, tk.column, "unknown state '" + tk.text + "'");
      return *q;
    };
    if (toks[0].text == "initial") {
      if (toks.size() != 2) fail(ln, toks[0].column, "expected 'initial <state>'");
      m.initial = state(toks[1]);
      have_initial = true;
      continue;
    }
    if (toks[0].text != "paction") fail(ln, toks[0].column, "unknown keyword '" + toks[0].text + "'");
    if (toks.size() != 7 && toks.size() != 9)
      fail(ln, toks[0].column, "expected 'paction q label type pebble -> action [goto q]'");
    const StateId q = state(toks[1]);
    const auto l = detail::parse_label(toks[2].text);
    if (!l) fail(ln, toks[2].column, "bad label '" + toks[2].text + "'");
    const auto t = NodeType::parse(toks[3].text);
    if (!t) fail(ln, toks[3].column, "bad node type '" + toks[3].text + "'");
    if (toks[4].text != "0" && toks[4].text != "1")
      fail(ln, toks[4].column, "pebble flag must be 0 or 1");
    if (toks[5].text != "->") fail(ln, toks[5].column, "expected '->'");
    PebbleAction a;
    a.next = q;
    const std::string& w = toks[6].text;
    using K = PebbleAction::Kind;
    if (w == "place") a.kind = K::place;
    else if (w == "lift") a.kind = K::lift;
    else if (w == "accept") a.kind = K::accept;
    else if (w == "reject") a.kind = K::reject;
    else if (w.size() > 6 && w.compare(0, 5, "move(") == 0 && w.back() == ')') {
      const auto d = parse_direction(std::string_view(w).substr(5, w.size() - 6));
      if (!d) fail(ln, toks[6].column, "bad direction in '" + w + "'");
      a.kind = K::move;
      a.dir = *d;
    } else {
      fail(ln, toks[6].column, "unknown action '" + w + "'");
    }
    if (toks.size() == 9) {
      if (toks[7].text != "goto") fail(ln, toks[7].column, "expected 'goto'");
      if (a.kind == K::accept || a.kind == K::reject)
        fail(ln, toks[7].column, "accept/reject take no goto");
      a.next = state(toks[8]);
    }
    try {
      m.set(q, *l, *t, toks[4].text == "1", a);
    } catch (const UsageError&) {
      fail(ln, toks[0].column, "observation already defined");
    }
  }
  if (m.size() == 0) fail(0, 1, "no states declared");
  if (!have_initial) fail(0, 1, "missing 'initial' line");
  return m;
}

}  // namespace twa
