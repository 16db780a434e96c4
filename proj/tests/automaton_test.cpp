#include "twa/automaton.hpp"

#include <random>

#include "fixtures.hpp"
#include "gtest/gtest.h"
#include "twa/a_l.hpp"

using namespace twa;

using fixture::roamer;
using fixture::trivial;

namespace {

Tree T(const char* s) { return parse_tree(s); }

}  // namespace

TEST(Accepts, ZeroLengthComputation) {
  for (const auto& t : enumerate_trees(5)) {
    EXPECT_TRUE(accepts(trivial(true), t));
    EXPECT_FALSE(accepts(trivial(false), t));
  }
}

TEST(Accepts, ALExamples) {
  const Automaton al = build_A_L();
  EXPECT_TRUE(accepts(al, T("(b (a) (b (a) (a)))")));
  EXPECT_FALSE(accepts(al, T("(b (b (a) (b (a) (b))) (a))")));
}

TEST(Accepts, AlphabetMismatch) {
  Automaton a = trivial(true);
  a.alphabet = {Label::b};
  EXPECT_THROW(accepts(a, T("(a)")), UsageError);
}

TEST(AL, Valid) {
  EXPECT_TRUE(validate(build_A_L()).empty());
  EXPECT_EQ(build_A_L().size(), 24u);
}

TEST(AL, MatchesOracleOnCorpus9) {
  const Automaton al = build_A_L();
  const TransitionIndex idx(al);
  TreeEnumerator e(9);
  while (auto t = e.next())
    ASSERT_EQ(accepts(idx, al, Terrain::of_tree(*t)), in_language_L(*t))
        << serialize_tree(*t);
}

TEST(AL, MatchesOracleOnRandomTrees) {
  const Automaton al = build_A_L();
  const TransitionIndex idx(al);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 3000; ++k) {
    Tree t = random_tree(rng, 101);
    ASSERT_EQ(accepts(idx, al, Terrain::of_tree(t)), in_language_L(t))
        << serialize_tree(t);
  }
}

TEST(AL, RejectsFewerThanThreeALeaves) {
  const Automaton al = build_A_L();
  for (const auto& t : enumerate_trees(9)) {
    if (a_leaf_indices(t).size() < 3) {
      EXPECT_FALSE(accepts(al, t));
    }
  }
}

TEST(Witness, Examples) {
  auto w = accepting_witness(trivial(true), T("(b (a) (b))"));
  ASSERT_TRUE(w);
  ASSERT_EQ(w->size(), 1u);
  EXPECT_EQ((*w)[0].node.path(), "");
  EXPECT_FALSE(accepting_witness(trivial(false), T("(b (a) (b))")));

  const Automaton al = build_A_L();
  const Tree t = T("(b (a) (b (a) (a)))");
  auto c = accepting_witness(al, t);
  ASSERT_TRUE(c);
  EXPECT_TRUE(is_accepting_computation(al, t, *c));
  auto broken = *c;
  broken.erase(broken.begin() + 2);
  EXPECT_FALSE(is_accepting_computation(al, t, broken));
}

TEST(Witness, IsShortest) {
  // Roamer accepts at length 0; with initial != accepting, shortest is 2.
  Automaton a = roamer();
  a.add_state("f");
  a.accepting = {1};
  for (auto& tr : a.transitions)
    if (tr.dir == Direction::up_left) tr.dst = 1;
  auto w = accepting_witness(a, T("(b (a) (b))"));
  ASSERT_TRUE(w);
  EXPECT_EQ(w->size(), 3u);
  EXPECT_TRUE(is_accepting_computation(a, T("(b (a) (b))"), *w));
}

TEST(Multiplicity, Examples) {
  EXPECT_EQ(multiplicity(trivial(true), T("(b (a) (b))")), Multiplicity::one);
  EXPECT_EQ(multiplicity(trivial(false), T("(b (a) (b))")), Multiplicity::zero);
  EXPECT_EQ(multiplicity(roamer(), T("(b (a) (b))")), Multiplicity::infinite);
  auto ex = accepting_computations(roamer(), T("(b (a) (b))"));
  ASSERT_EQ(ex.examples.size(), 2u);
  EXPECT_NE(ex.examples[0], ex.examples[1]);
  for (const auto& c : ex.examples)
    EXPECT_TRUE(is_accepting_computation(roamer(), T("(b (a) (b))"), c));
}

TEST(Multiplicity, TwoInitialStatesBothAcceptingCountTwice) {
  Automaton a;
  a.add_state("x");
  a.add_state("y");
  a.initial = {0, 1};
  a.accepting = {0, 1};
  EXPECT_EQ(multiplicity(a, T("(a)")), Multiplicity::many);
}

TEST(Multiplicity, ConsistentWithAcceptanceOnCorpus) {
  const Automaton al = build_A_L();
  bool ambiguous = false;
  for (const auto& t : enumerate_trees(7)) {
    auto res = accepting_computations(al, t);
    EXPECT_EQ(res.multiplicity == Multiplicity::zero, !accepts(al, t));
    for (const auto& c : res.examples) EXPECT_TRUE(is_accepting_computation(al, t, c));
    if (res.examples.size() == 2) {
      EXPECT_NE(res.examples[0], res.examples[1]);
    }
    ambiguous |= res.multiplicity == Multiplicity::many;
  }
  EXPECT_TRUE(ambiguous);
}

TEST(Multiplicity, DeterministicAutomataAreUnambiguous) {
  // The DFS part of A_L alone is deterministic.
  Automaton a = build_A_L();
  std::erase_if(a.transitions, [&](const Transition& t) {
    return a.states[t.dst].rfind("g.", 0) == 0 || a.states[t.src].rfind("g.", 0) == 0;
  });
  a.accepting = {*a.state_id("ur.0"), *a.state_id("ur.z")};
  ASSERT_TRUE(is_deterministic(a));
  EXPECT_FALSE(is_deterministic(build_A_L()));
  for (const auto& t : enumerate_trees(7)) {
    auto m = multiplicity(a, t);
    EXPECT_NE(m, Multiplicity::many);
    EXPECT_NE(m, Multiplicity::infinite);
    EXPECT_EQ(m == Multiplicity::one, accepting_witness(a, t).has_value());
  }
}

TEST(Symmetrize, SingleTransition) {
  Automaton a;
  a.add_state("p");
  a.add_state("q");
  a.initial = {0};
  a.transitions.push_back({0, Label::b, {ChildPos::root, Arity::internal}, 1,
                           Label::a, {ChildPos::left, Arity::leaf},
                           Direction::down_left});
  auto s = symmetrize(a);
  ASSERT_EQ(s.automaton.transitions.size(), 2u);
  const Transition& r = s.automaton.transitions[1];
  EXPECT_EQ(s.automaton.states[r.src], "q'");
  EXPECT_EQ(s.automaton.states[r.dst], "p'");
  EXPECT_EQ(r.src_label, Label::a);
  EXPECT_EQ(r.src_type, (NodeType{ChildPos::left, Arity::leaf}));
  EXPECT_EQ(r.dst_type, (NodeType{ChildPos::root, Arity::internal}));
  EXPECT_EQ(r.dir, Direction::up_left);
  for (StateId q = 0; q < s.automaton.size(); ++q) EXPECT_EQ(s.tau[s.tau[q]], q);
}

TEST(Symmetrize, PreservesAcceptanceOnCorpus) {
  std::mt19937_64 rng(3);
  std::vector<Automaton> autos{build_A_L()};
  for (int k = 0; k < 4; ++k) autos.push_back(random_automaton(rng, 2, 0.08));
  for (const auto& a : autos) {
    auto s = symmetrize(a);
    EXPECT_EQ(s.automaton.size(), 2 * a.size());
    const TransitionIndex ia(a), is(s.automaton);
    for (const auto& t : enumerate_trees(9)) {
      const Terrain g = Terrain::of_tree(t);
      ASSERT_EQ(accepts(ia, a, g), accepts(is, s.automaton, g));
    }
    const std::size_t n = a.size();
    for (const auto& t : s.automaton.transitions)
      EXPECT_EQ(t.src < n, t.dst < n);
  }
}

TEST(Validate, Violations) {
  Automaton a = trivial(true);
  a.transitions.push_back({0, Label::b, {ChildPos::root, Arity::leaf}, 0,
                           Label::b, {ChildPos::left, Arity::leaf},
                           Direction::down_left});
  EXPECT_EQ(validate(a).size(), 1u);
  Automaton b = trivial(true);
  b.transitions.push_back({0, Label::b, {ChildPos::root, Arity::internal}, 5,
                           Label::b, {ChildPos::left, Arity::leaf},
                           Direction::down_left});
  ASSERT_EQ(validate(b).size(), 1u);
  EXPECT_NE(validate(b)[0].find("unknown state"), std::string::npos);
}

TEST(Format, RoundTrip) {
  const Automaton al = build_A_L();
  const std::string text = serialize_automaton(al);
  const Automaton back = parse_automaton(text);
  EXPECT_EQ(back.states, al.states);
  EXPECT_EQ(back.initial, al.initial);
  EXPECT_EQ(back.accepting, al.accepting);
  EXPECT_EQ(back.transitions, al.transitions);
  EXPECT_EQ(serialize_automaton(back), text);
}

TEST(Format, Errors) {
  EXPECT_THROW(parse_automaton("states p\ntrans p b root.int -> r a 1.leaf +1\n"),
               ParseError);
  EXPECT_THROW(parse_automaton("states p\ntrans p b root.leaf -> p a 1.leaf +1\n"),
               ParseError);
  try {
    parse_automaton("states p\n# comment\ninitial p\naccepting  q\n", "f.twa");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_EQ(e.column(), 12u);
  }
  auto a = parse_automaton("alphabet a b\nstates p q # two\ninitial p\n");
  EXPECT_EQ(a.size(), 2u);
}
