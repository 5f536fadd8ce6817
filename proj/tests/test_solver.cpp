#include <gtest/gtest.h>

#include <teamdp/problems.hpp>
#include <teamdp/solver.hpp>

#include "fixtures.hpp"

using namespace teamdp;

TEST(Belief, FrozenWindowOneBelief) {
  auto m = tiny_team<Rational>();
  auto s = window_scheme(m, 1);
  auto b = sib_belief(m, s, constant_policy(m), {0, 0});
  ASSERT_EQ(b.prob.size(), 8u);
  for (int k = 0; k < 8; ++k) EXPECT_EQ(b.prob[k], fixtures::kTinyBeliefWindow1[k]) << k;
}

TEST(Belief, FrozenIdentityBelief) {
  auto m = tiny_team<Rational>();
  auto s = identity_scheme(m);
  auto b = sib_belief(m, s, constant_policy(m), {0, 0});
  ASSERT_EQ(b.prob.size(), 32u);
  for (int k = 0; k < 32; ++k) EXPECT_EQ(b.prob[k], fixtures::kTinyBeliefIdentity[k]) << k;
}

TEST(Belief, RecursiveUpdateMatchesForwardConditioning) {
  auto m = tiny_team<Rational>();
  for (const auto& s : {identity_scheme(m), window_scheme(m, 1)}) {
    SchemeTables tab(m, s);
    auto root = sib_belief(m, s, constant_policy(m), {0});
    auto alpha = Prescription<Rational>::deterministic({2, 2}, {std::vector<int>(s.counts()[0][0], 0),
                                                               std::vector<int>(s.counts()[0][1], 0)});
    auto up = sib_update(m, tab, root, alpha, 0);
    auto direct = sib_belief(m, s, constant_policy(m), {0, 0});
    EXPECT_EQ(up.belief.prob, direct.prob);
    EXPECT_THROW(sib_update(m, tab, root, alpha, 3), InconsistentObservation);
  }
}

TEST(Belief, DoubleBeliefAgreesWithRational) {
  auto m = tiny_team<double>();
  auto b = sib_belief(m, identity_scheme(m), constant_policy(m), {0, 0});
  for (int k = 0; k < 32; ++k)
    EXPECT_NEAR(b.prob[k], scalar_traits<Rational>::to_double(fixtures::kTinyBeliefIdentity[k]), 1e-12);
}

TEST(Belief, ZeroProbabilityCommonHistoryThrows) {
  auto m = tiny_team<double>();
  EXPECT_THROW(sib_belief(m, identity_scheme(m), constant_policy(m), {0, 3}), ZeroProbabilityConditioning);
}

TEST(BeliefGraph, TinyTeamNodeCounts) {
  auto m = tiny_team<Rational>();
  auto g = expand_belief_graph(m, identity_scheme(m));
  EXPECT_EQ(g.stages[0].size(), 1u);
  EXPECT_EQ(static_cast<int>(g.stages[1].size()), fixtures::kTinyStage2BeliefsIdentity);
  auto g1 = expand_belief_graph(m, window_scheme(m, 1));
  EXPECT_EQ(static_cast<int>(g1.stages[1].size()), fixtures::kTinyStage2BeliefsWindow1);
}

TEST(BeliefGraph, EdgeProbabilitiesSumToOne) {
  auto m = tiny_team<Rational>();
  auto g = expand_belief_graph(m, identity_scheme(m));
  for (const auto& node : g.stages[0])
    for (const auto& edges : node.edges) {
      Rational total(0);
      for (const auto& e : edges) total += e.prob;
      EXPECT_EQ(total, Rational(1));
    }
}

TEST(BeliefGraph, PrescriptionCapIsEnforced) {
  auto m = tiny_team<double>();
  EXPECT_THROW(expand_belief_graph(m, identity_scheme(m), 100), SizeGuardError);
}

TEST(Solver, TinyTeamOptimalValueIsExact) {
  auto m = tiny_team<Rational>();
  auto sol = solve_team_dp(m, identity_scheme(m));
  EXPECT_EQ(sol.optimal, fixtures::kTinyOptimalValue);
}

TEST(Solver, LiftedPolicyAchievesTheDPValue) {
  auto m = tiny_team<Rational>();
  auto s = identity_scheme(m);
  auto sol = solve_team_dp(m, s);
  auto g = lift_to_history_policy(m, s, sol.graph, sol.policy);
  EXPECT_EQ(expected_utility(m, g).total, sol.optimal);
}

TEST(Solver, DoubleAgreesWithRational) {
  auto m = tiny_team<double>();
  auto sol = solve_team_dp(m, identity_scheme(m));
  EXPECT_NEAR(sol.optimal, scalar_traits<Rational>::to_double(fixtures::kTinyOptimalValue), 1e-12);
}

TEST(Solver, BellmanResidualIsZeroAtTheChosenPrescriptions) {
  auto m = tiny_team<Rational>();
  auto sol = solve_team_dp(m, identity_scheme(m));
  for (int t = 0; t < m.horizon; ++t)
    for (int n = 0; n < static_cast<int>(sol.graph.stages[t].size()); ++n) {
      const auto& node = sol.graph.stages[t][n];
      const Rational chosen = bellman_rhs(m, sol.graph, sol.value, t, n, sol.policy.choice[t][n]);
      EXPECT_EQ(chosen, sol.value[t][n]);
      for (std::uint64_t p = 0; p < node.prescriptions; ++p)
        EXPECT_LE(bellman_rhs(m, sol.graph, sol.value, t, n, p), chosen);
    }
}

TEST(Solver, NonTeamUtilityIsRejected) {
  auto m = tiny_team<double>();
  m.utility[0][1][0] += 1.0;
  EXPECT_THROW(solve_team_dp(m, identity_scheme(m)), NonTeamUtility);
}
