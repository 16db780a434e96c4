#pragma once

#include <array>
#include <string>

#include "twa/automaton.hpp"

namespace twa {

/**
 * Nondeterministic tree-walking automaton for L.
 *
 * Phase 1 walks the tree depth-first from left to right and counts a-leaves
 * modulo 3 (with an extra "none yet" value z). On returning to a node from its
 * left child it may guess that this node is lca(u_i, u_{i+1}), where u_i is the
 * last a-leaf seen, provided one was seen. Phase 2 walks down the right
 * subtree to some a-leaf u_j. Phase 3 walks depth-first from right to left
 * starting at u_j, with counter i+1 decremented on every a-leaf strictly
 * before u_j; it accepts back at the root iff the counter is 0, i.e. iff
 * j = i+2 (mod 3).
 *
 * States (24):
 *   dn.k   descending, k in {z,0,1,2}
 *   ul.k   just returned from a left child
 *   ur.k   just returned from a right child
 *   g.c    guessed descent, c in {0,1,2}
 *   rd.c   right-to-left descent
 *   rl.c   right-to-left, returned from a left child  (rl.0 accepts)
 *   rr.c   right-to-left, returned from a right child
 */
inline Automaton build_A_L() {
  Automaton a;
  constexpr int Z = 3;  // counter value "no a-leaf yet"
  auto cname = [](int k) { return k == Z ? std::string("z") : std::to_string(k); };

  std::array<StateId, 4> dn{}, ul{}, ur{};
  std::array<StateId, 3> g{}, rd{}, rl{}, rr{};
  for (int k : {Z, 0, 1, 2}) dn[k] = a.add_state("dn." + cname(k));
  for (int k : {Z, 0, 1, 2}) ul[k] = a.add_state("ul." + cname(k));
  for (int k : {Z, 0, 1, 2}) ur[k] = a.add_state("ur." + cname(k));
  for (int c = 0; c < 3; ++c) g[c] = a.add_state("g." + cname(c));
  for (int c = 0; c < 3; ++c) rd[c] = a.add_state("rd." + cname(c));
  for (int c = 0; c < 3; ++c) rl[c] = a.add_state("rl." + cname(c));
  for (int c = 0; c < 3; ++c) rr[c] = a.add_state("rr." + cname(c));
  a.initial = {dn[Z]};
  a.accepting = {rl[0]};

  const std::array<Label, 2> labels{Label::a, Label::b};
  const std::array<ChildPos, 3> positions{ChildPos::root, ChildPos::left,
                                          ChildPos::right};
  const std::array<Arity, 2> arities{Arity::internal, Arity::leaf};

  // Adds every transition p --dir--> q from a node of the given position and
  // arity, for all labels of source and destination and all destination
  // types compatible with the direction.
  auto add = [&](StateId p, std::optional<Label> src_label, ChildPos pos,
                 Arity arity, Direction dir, StateId q) {
    const NodeType st{pos, arity};
    for (Label sl : labels) {
      if (src_label && *src_label != sl) continue;
      for (Label dl : labels)
        for (ChildPos dp : positions)
          for (Arity da : arities) {
            const NodeType dt{dp, da};
            if (detail::direction_fits(dir, st, dt))
              a.transitions.push_back({p, sl, st, q, dl, dt, dir});
          }
    }
  };
  auto up = [](ChildPos pos) {
    return pos == ChildPos::left ? Direction::up_left : Direction::up_right;
  };

  for (int k : {Z, 0, 1, 2}) {
    const int after_a = k == Z ? 1 : (k + 1) % 3;
    for (ChildPos pos : positions) {
      add(dn[k], std::nullopt, pos, Arity::internal, Direction::down_left, dn[k]);
      add(ul[k], std::nullopt, pos, Arity::internal, Direction::down_right, dn[k]);
      if (k != Z)
        add(ul[k], std::nullopt, pos, Arity::internal, Direction::down_right, g[k]);
      if (pos == ChildPos::root) continue;
      const auto& back = pos == ChildPos::left ? ul : ur;
      add(dn[k], Label::b, pos, Arity::leaf, up(pos), back[k]);
      add(dn[k], Label::a, pos, Arity::leaf, up(pos), back[after_a]);
      add(ur[k], std::nullopt, pos, Arity::internal, up(pos), back[k]);
    }
  }
  for (int c = 0; c < 3; ++c) {
    const int start = (c + 1) % 3;
    const int after_a = (c + 2) % 3;
    for (ChildPos pos : positions) {
      add(g[c], std::nullopt, pos, Arity::internal, Direction::down_left, g[c]);
      add(g[c], std::nullopt, pos, Arity::internal, Direction::down_right, g[c]);
      add(rr[c], std::nullopt, pos, Arity::internal, Direction::down_left, rd[c]);
      add(rd[c], std::nullopt, pos, Arity::internal, Direction::down_right, rd[c]);
      if (pos == ChildPos::root) continue;
      const auto& back = pos == ChildPos::left ? rl : rr;
      add(g[c], Label::a, pos, Arity::leaf, up(pos), back[start]);
      add(rl[c], std::nullopt, pos, Arity::internal, up(pos), back[c]);
      add(rd[c], Label::b, pos, Arity::leaf, up(pos), back[c]);
      add(rd[c], Label::a, pos, Arity::leaf, up(pos), back[after_a]);
    }
  }
  return a;
}

}  // namespace twa
