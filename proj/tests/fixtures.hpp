#pragma once

// Small hand-built automata shared by several test files.

#include <random>
#include <vector>

#include "twa/automaton.hpp"

namespace fixture {

using namespace twa;

/// One state, no transitions.
inline Automaton trivial(bool accept_at_start) {
  Automaton a;
  a.add_state("s");
  a.initial = {0};
  if (accept_at_start) a.accepting = {0};
  return a;
}

/// One state that may step between any two adjacent nodes.
inline Automaton roamer() {
  Automaton a = trivial(true);
  for (Label sl : {Label::a, Label::b})
    for (Label dl : {Label::a, Label::b})
      for (std::size_t st = 0; st < NodeType::kCount; ++st)
        for (std::size_t dt = 0; dt < NodeType::kCount; ++dt)
          for (Direction d : kDirections) {
            auto s = NodeType::from_index(st);
            auto t = NodeType::from_index(dt);
            if (detail::direction_fits(d, s, t))
              a.transitions.push_back({0, sl, s, 0, dl, t, d});
          }
  return a;
}

/// `count` random automata with 1..max_states states, cycling through sizes.
inline std::vector<Automaton> random_automata(std::uint64_t seed, std::size_t count,
                                              std::size_t max_states, double density) {
  std::mt19937_64 rng(seed);
  std::vector<Automaton> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(random_automaton(rng, 1 + k % max_states, density));
  return out;
}

}  // namespace fixture
