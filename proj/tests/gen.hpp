#pragma once

// Expression generators shared by the unit tests and the acceptance binary.

#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "twa/pattern.hpp"

namespace gen {

using twa::AtomKind;
using twa::PatternExpr;

inline const std::vector<AtomKind>& base_atoms() {
  static const std::vector<AtomKind> atoms{AtomKind::base0, AtomKind::base1,
                                           AtomKind::base2};
  return atoms;
}

/// Every expression `atom[item, ...]` with exactly `atoms` atoms over the
/// given atom kinds, items being `*` or nested expressions.
inline void for_each_expr(const std::vector<AtomKind>& kinds, std::size_t atoms,
                          const std::function<void(const PatternExpr&)>& f) {
  if (atoms == 0) return;
  for (AtomKind k : kinds) {
    const PatternExpr head = PatternExpr::atom(k);
    const std::size_t r = head.rank();
    if (r == 0) {
      if (atoms == 1) f(head);
      continue;
    }
    // Distribute atoms-1 over r slots; a slot with 0 atoms is an open port.
    std::vector<std::optional<PatternExpr>> items(r);
    std::function<void(std::size_t, std::size_t)> fill = [&](std::size_t slot,
                                                             std::size_t left) {
      if (slot == r) {
        if (left != 0) return;
        bool all_open = true;
        for (const auto& it : items) all_open &= !it.has_value();
        f(all_open ? head : PatternExpr::compose(head, items));
        return;
      }
      items[slot].reset();
      fill(slot + 1, left);
      for (std::size_t use = 1; use <= left; ++use)
        for_each_expr(kinds, use, [&](const PatternExpr& sub) {
          items[slot] = sub;
          fill(slot + 1, left - use);
        });
      items[slot].reset();
    };
    fill(0, atoms - 1);
  }
}

/// Random composition over `kinds` with at most `max_atoms` atoms. Chains of
/// rank-1 subexpressions appear with small counts when allow_chain is set.
template <typename Rng>
PatternExpr random_expr(Rng& rng, const std::vector<AtomKind>& kinds,
                        std::size_t max_atoms, bool allow_chain = false) {
  std::uniform_int_distribution<std::size_t> pick(0, kinds.size() - 1);
  std::size_t budget = max_atoms;
  std::function<PatternExpr()> go = [&]() -> PatternExpr {
    --budget;
    PatternExpr head = PatternExpr::atom(kinds[pick(rng)]);
    if (head.rank() == 0 || budget == 0) return head;
    std::vector<std::optional<PatternExpr>> items(head.rank());
    bool any = false;
    for (auto& it : items) {
      if (budget > 0 && std::bernoulli_distribution(0.5)(rng)) {
        it = go();
        any = true;
      }
    }
    PatternExpr e = any ? PatternExpr::compose(head, items) : head;
    if (allow_chain && e.rank() == 1 && std::bernoulli_distribution(0.2)(rng))
      e = PatternExpr::chain(std::uniform_int_distribution<int>(2, 4)(rng), e);
    return e;
  };
  return go();
}

}  // namespace gen
