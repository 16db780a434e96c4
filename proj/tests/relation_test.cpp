#include "twa/relation.hpp"

#include <random>
#include <set>
#include <tuple>

#include "fixtures.hpp"
#include "gen.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"

using namespace twa;

namespace {

using Quad = std::tuple<StateId, std::size_t, StateId, std::size_t>;

std::set<Quad> quads(const PortRelation& r) {
  std::set<Quad> out;
  for (std::size_t i = 0; i <= r.rank; ++i)
    for (std::size_t j = 0; j <= r.rank; ++j)
      for (StateId p = 0; p < r.states; ++p)
        for (StateId q = 0; q < r.states; ++q)
          if (r.test(p, i, q, j)) out.emplace(p, i, q, j);
  return out;
}

PatternExpr P(const char* s) { return parse_pattern(s); }

using fixture::random_automata;

}  // namespace

TEST(Direct, EmptyAutomatonIsReflexiveOnly) {
  const Automaton a = fixture::trivial(false);
  for (const char* s : {"base0", "base1", "base2", "base2[base1, *]"}) {
    const PortRelation r = relation_direct(a, expand(P(s)));
    EXPECT_EQ(r.m, BitMatrix::identity(r.rank + 1));
  }
}

TEST(Direct, RoamerCrossesBase1) {
  const PortRelation r = relation_direct(fixture::roamer(), base1());
  EXPECT_TRUE(r.test(0, 0, 0, 1));
  EXPECT_TRUE(r.test(0, 1, 0, 0));
}

TEST(Direct, PortToPortAdjacency) {
  // Only the single move from the root port down to the leaf port.
  Automaton a = fixture::trivial(true);
  a.transitions.push_back({0, Label::b, {ChildPos::left, Arity::internal}, 0, Label::b,
                           {ChildPos::left, Arity::internal}, Direction::down_left});
  const PortRelation r = relation_direct(a, base1());
  EXPECT_EQ(quads(r), (std::set<Quad>{{0, 0, 0, 0}, {0, 1, 0, 1}, {0, 0, 0, 1}}));
}

TEST(Direct, RejectsInvalidPattern) {
  EXPECT_THROW(relation_direct(fixture::roamer(),
                               ExplicitPattern(parse_tree("(b (b) (*))", "p", true))),
               UsageError);
}

TEST(Direct, MatchesTransitionListOracle) {
  const auto autos = random_automata(21, 12, 3, 0.25);
  std::vector<ExplicitPattern> pats{prime_a(), comb("*b*"), comb("a*")};
  for (std::size_t atoms = 1; atoms <= 4; ++atoms)
    gen::for_each_expr(gen::base_atoms(), atoms,
                       [&](const PatternExpr& e) { pats.push_back(expand(e)); });
  for (const auto& a : autos) {
    const TransitionIndex idx(a);
    for (const auto& p : pats)
      ASSERT_EQ(quads(relation_direct(idx, p)), oracle::runs(a, p))
          << serialize_tree(p.tree());
  }
}

TEST(Compose, MatchesDirectOnAllSmallExpressions) {
  const auto autos = random_automata(22, 10, 4, 0.25);
  std::size_t checked = 0;
  for (const auto& a : autos) {
    RelationEvaluator ev(a);
    for (std::size_t atoms = 1; atoms <= 5; ++atoms)
      gen::for_each_expr(gen::base_atoms(), atoms, [&](const PatternExpr& e) {
        ASSERT_EQ(ev.eval(e), ev.direct(expand(e))) << print_pattern(e);
        ++checked;
      });
  }
  EXPECT_GT(checked, 1000u);
}

TEST(Compose, IdentityAndRankArithmetic) {
  const Automaton a = random_automata(23, 1, 2, 0.25)[0];
  const PortRelation r2 = relation_direct(a, base2());
  EXPECT_EQ(relation_compose(r2, {std::nullopt, std::nullopt}), r2);
  const PortRelation r0 = relation_direct(a, base0());
  EXPECT_EQ(relation_compose(r2, {r0, std::nullopt}).rank, 1u);
  EXPECT_EQ(relation_compose(r2, {r0, r0}).rank, 0u);
  EXPECT_EQ(relation_compose(r2, {r2, std::nullopt}).rank, 3u);
  EXPECT_THROW(relation_compose(r2, {r0}), RankError);
  const PortRelation r1 = relation_direct(a, base1());
  EXPECT_EQ(relation_compose(r1, {r1}), relation_direct(a, expand(P("chain(2, base1)"))));
}

TEST(ChainPower, SmallExponentsAndAdditivity) {
  const auto autos = random_automata(24, 8, 3, 0.25);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> d(1, 64);
  for (const auto& a : autos) {
    const PortRelation r = relation_direct(a, base1());
    EXPECT_EQ(chain_power(r, 1), r);
    EXPECT_EQ(chain_power(r, 5), relation_direct(a, expand(P("chain(5, base1)"))));
    const PortRelation u = relation_direct(a, expand(P("base2[*, base1[primeA]]")));
    EXPECT_EQ(chain_power(u, 7), relation_direct(a, expand(P(
        "chain(7, base2[*, base1[primeA]])"))));
    for (int k = 0; k < 5; ++k) {
      const int x = d(rng), y = d(rng);
      EXPECT_EQ(chain_power(r, x + y),
                relation_compose(chain_power(r, x), {chain_power(r, y)}));
    }
    EXPECT_THROW(chain_power(r, 0), UsageError);
    EXPECT_THROW(chain_power(relation_direct(a, base2()), 3), RankError);
  }
}

TEST(ChainPower, HugeExponentIsCheap) {
  const Automaton a = random_automata(25, 1, 3, 0.25)[0];
  const PortRelation r = relation_direct(a, base1());
  BigInt big = 1;
  for (int k = 0; k < 300; ++k) big *= 3;
  const PortRelation x = chain_power(r, big);
  EXPECT_EQ(x.rank, 1u);
  // Additivity at a 476-bit exponent.
  EXPECT_EQ(relation_compose(x, {x}), chain_power(r, big * 2));
}

TEST(InnerLoops, EmptyIsIdentity) {
  const Automaton a = fixture::trivial(false);
  EXPECT_EQ(inner_loops(relation_direct(a, base1())), BitMatrix::identity(1));
  EXPECT_THROW(inner_loops(relation_direct(a, base2())), RankError);
}

TEST(InnerLoops, MatchesJunctionOracleAndIsTransitive) {
  const auto autos = random_automata(26, 12, 3, 0.25);
  for (const char* d1s : {"base1", "chain(2, base1)", "base2[*, base0]"}) {
    PatternLibrary lib;
    lib.elements = std::array<PatternExpr, 3>{P("base0"), P(d1s), P("base2")};
    const auto x = expand_traced(P("D1[D1]"), lib);
    std::size_t junction = 0;
    for (const auto& pl : x.placements)
      if (pl.kind == AtomKind::d1 && pl.root != 0) junction = pl.root;
    ASSERT_NE(junction, 0u);
    const std::set<std::size_t> ports(x.pattern.ports().begin(), x.pattern.ports().end());
    for (const auto& a : autos) {
      RelationEvaluator ev(a, lib);
      const BitMatrix loops = inner_loops(ev.eval(P("D1")));
      EXPECT_EQ(loops * loops, loops);
      for (StateId p = 0; p < a.size(); ++p) {
        const auto seen = oracle::reachable(a, x.pattern.tree(), ports, ports, p, junction);
        for (StateId q = 0; q < a.size(); ++q)
          ASSERT_EQ(loops.test(p, q), seen.count({q, junction}) > 0) << d1s;
      }
    }
  }
}

TEST(Transfers, IdentityLoopsAndMonotonicity) {
  const auto autos = random_automata(27, 6, 3, 0.25);
  for (const auto& a : autos) {
    const PortRelation d = relation_direct(a, base2());
    EXPECT_EQ(transfers(d, BitMatrix::identity(a.size())), d);
    const BitMatrix loops = inner_loops(relation_direct(a, expand(P("chain(2, base1)"))));
    EXPECT_TRUE(d.m.subset_of(transfers(d, loops).m));
  }
}

TEST(Symmetry, RunsAndTransfersAreTimeReversible) {
  std::mt19937_64 rng(28);
  for (int k = 0; k < 8; ++k) {
    const auto s = symmetrize(random_automaton(rng, 1 + k % 3, 0.25));
    RelationEvaluator ev(s.automaton);
    const BitMatrix loops = inner_loops(ev.eval(P("chain(2, base1)")));
    for (int e = 0; e < 25; ++e) {
      const PatternExpr x = gen::random_expr(rng, gen::base_atoms(), 5);
      const PortRelation d = ev.eval(x);
      const PortRelation g = transfers(d, loops);
      for (auto [p, i, q, j] : quads(d)) ASSERT_TRUE(d.test(s.tau[q], j, s.tau[p], i));
      for (auto [p, i, q, j] : quads(g)) ASSERT_TRUE(g.test(s.tau[q], j, s.tau[p], i));
    }
  }
}

TEST(Evaluator, EquivalenceAndElements) {
  const Automaton a = random_automata(29, 1, 2, 0.25)[0];
  PatternLibrary lib;
  lib.elements = std::array<PatternExpr, 3>{P("base1[base0]"), P("chain(3, base1)"),
                                            P("base2")};
  RelationEvaluator ev(a, lib);
  EXPECT_TRUE(equivalent(ev, P("base1"), P("base1")));
  EXPECT_EQ(equivalent(ev, P("base1"), P("chain(2, base1)")),
            equivalent(ev, P("chain(2, base1)"), P("base1")));
  std::string why;
  EXPECT_FALSE(equivalent(ev, P("base1"), P("base2"), &why));
  EXPECT_NE(why.find("rank"), std::string::npos);
  // Element atoms agree with the explicit expansion through the library.
  for (const char* s : {"D2[*, Da]", "D1[D0]", "D2[Da, D1]", "chain(4, D2[*, Da])"}) {
    const PatternExpr e = P(s);
    EXPECT_EQ(ev.eval(e), ev.direct(expand(e, lib))) << s;
  }
}

TEST(Dump, Format) {
  const PortRelation r = relation_direct(fixture::roamer(), base1());
  const std::string d = dump_relation(r, fixture::roamer());
  EXPECT_EQ(d, "rank 1\ns 0 -> s 0\ns 0 -> s 1\ns 1 -> s 0\ns 1 -> s 1\n");
}
