#include <gtest/gtest.h>

#include <teamdp/oracle.hpp>
#include <teamdp/problems.hpp>

#include <random>

#include "fixtures.hpp"

using namespace teamdp;

TEST(BruteForce, TinyTeamOptimum) {
  auto m = tiny_team<Rational>();
  auto r = brute_force_optimal(m);
  EXPECT_EQ(r.value, fixtures::kTinyOptimalValue);
  EXPECT_EQ(expected_utility(m, r.policy).total, r.value);
  EXPECT_GT(r.profiles, 0u);
}

TEST(BruteForce, PrivateVariantMatchesDP) {
  auto m = tiny_team<Rational>(false);
  auto r = brute_force_optimal(m);
  auto sol = solve_team_dp(m, identity_scheme(m));
  EXPECT_EQ(r.value, sol.optimal);
}

TEST(BruteForce, SIBOptimumMatchesDP) {
  auto m = tiny_team<Rational>();
  for (const auto& s : {identity_scheme(m), window_scheme(m, 1)}) {
    auto r = brute_force_sib_optimal(m, s);
    auto sol = solve_team_dp(m, s);
    EXPECT_EQ(r.value, sol.optimal) << s.name();
    EXPECT_EQ(expected_utility(m, r.policy).total, r.value);
  }
}

TEST(BruteForce, ProfileCapIsEnforced) {
  auto m = tiny_team<double>();
  EXPECT_THROW(brute_force_optimal(m, 3), SizeGuardError);
}

TEST(ResidualCode, CellsMatchTrajectoryLaw) {
  auto m = tiny_team<double>();
  auto s = identity_scheme(m);
  std::mt19937_64 rng(11);
  auto g = random_policy(m, rng, false);
  auto code = build_residual_code(m, s, g);
  HistoryIndex idx(m);
  // Direct computation: P(h^i, pi, s^i) from complete trajectories.
  for (int t = 0; t < m.horizon; ++t)
    for (int i = 0; i < m.num_agents; ++i) {
      std::map<std::pair<int, int>, std::map<std::uint64_t, double>> mass;
      for (const auto& [tr, p] : trajectory_distribution(m, g)) {
        std::uint64_t c = idx.common_first(tr.z[0]), q = idx.private_first(i, tr.y[0][i]);
        for (int k = 1; k <= t; ++k) {
          c = idx.common_next(k, c, tr.z[k]);
          q = idx.private_next(k, i, q, m.agent_action(k - 1, tr.a[k - 1], i), tr.y[k][i]);
        }
        const std::uint64_t h = idx.compose(t, i, c, q);
        mass[{code.pi_of_common[t].at(c), s.value_of(m, idx.decode(t, i, h))}][h] += p;
      }
      ASSERT_EQ(mass.size(), code.cells[t][i].size());
      for (const auto& [key, hs] : mass) {
        const auto& cell = code.cell(t, i, key.first, key.second);
        double total = 0;
        for (const auto& [h, p] : hs) total += p;
        ASSERT_EQ(cell.histories.size(), hs.size());
        std::size_t k = 0;
        for (const auto& [h, p] : hs) {
          EXPECT_EQ(cell.histories[k], h);
          EXPECT_NEAR(cell.prob[k], p / total, 1e-12);
          ++k;
        }
        EXPECT_NEAR(cell.cum.back(), 1.0, 1e-12);
      }
    }
}

TEST(ResidualCode, InverseCdfIsRightClosed) {
  ResidualCell<double> c;
  c.histories = {4, 7, 9};
  c.prob = {0.25, 0.5, 0.25};
  c.cum = {0.25, 0.75, 1.0};
  EXPECT_EQ(c.inverse(0.0), 4u);
  EXPECT_EQ(c.inverse(0.25), 4u);
  EXPECT_EQ(c.inverse(0.2500001), 7u);
  EXPECT_EQ(c.inverse(0.75), 7u);
  EXPECT_EQ(c.inverse(0.99), 9u);
}

TEST(ResidualCode, DeterministicModelHasSingletonCells) {
  auto m = tiny_team<double>();
  for (auto& t : m.private_kernel)
    for (auto& k : t)
      for (std::size_t j = 0; j < k.size(); j += 2) {
        k[j] = 1.0;
        k[j + 1] = 0.0;
      }
  auto s = identity_scheme(m);
  auto g = deterministic_policy(m, [](int, int, const AgentHistory&) { return 1; });
  auto code = build_residual_code(m, s, g);
  for (const auto& stage : code.cells)
    for (const auto& agent : stage)
      for (const auto& [key, cell] : agent) {
        ASSERT_EQ(cell.histories.size(), 1u);
        EXPECT_EQ(cell.prob[0], 1.0);
      }
}

TEST(Transfer, RandomProfilesOnTinyTeam) {
  auto m = tiny_team<double>();
  auto s = identity_scheme(m);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 4; ++k) {
    auto g = random_policy(m, rng, k % 2 == 0);
    auto rep = transfer_to_sib(m, s, g, 100'000, 17 + k);
    EXPECT_TRUE(rep.exact_match()) << rep.failure;
    for (const auto& st : rep.stages) {
      EXPECT_LE(st.pi_s_deviation, 1e-9);
      EXPECT_NEAR(st.flow_sigma, st.flow_g, 1e-9);
      EXPECT_TRUE(st.within_3sigma) << st.mc_mean << " vs " << st.flow_g << " +- " << st.mc_stderr;
    }
  }
}

TEST(Transfer, SibFormProfileIsReproducedExactly) {
  auto m = tiny_team<double>(false);
  auto s = window_scheme(m, 1);
  // Plays the current observation: already a function of s^i.
  auto g = deterministic_policy(m, [](int t, int, const AgentHistory& h) { return h.y[t]; });
  auto rep = transfer_to_sib(m, s, g, 1000, 3);
  EXPECT_TRUE(rep.exact_match());
  for (const auto& st : rep.stages) EXPECT_NEAR(st.flow_sigma, st.flow_g, 1e-15);
}

TEST(Transfer, ExactOnlyWithoutSamples) {
  auto m = tiny_team<double>();
  auto rep = transfer_to_sib(m, identity_scheme(m), uniform_policy(m), 0, 1);
  EXPECT_TRUE(rep.exact_match());
  EXPECT_EQ(rep.stages[0].mc_stderr, 0.0);
}
