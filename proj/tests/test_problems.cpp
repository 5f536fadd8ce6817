#include <gtest/gtest.h>

#include <teamdp/checks.hpp>
#include <teamdp/oracle.hpp>
#include <teamdp/problems.hpp>

using namespace teamdp;

namespace {

std::string failure(const CheckReport& rep) {
  const auto* cx = rep.counterexample();
  return cx ? cx->realization : std::string();
}

}  // namespace

TEST(SourceCoding, BinaryChannelCarriesTheBit) {
  auto pr = build_source_coding(iid_source_coding<Rational>({Rational(3, 10), Rational(7, 10)}, 2, 3));
  EXPECT_TRUE(validate_model(pr.model).empty());
  EXPECT_EQ(solve_team_dp(pr.model, pr.scheme).optimal, Rational(0));
  EXPECT_EQ(brute_force_optimal(pr.model).value, Rational(0));
}

TEST(SourceCoding, UselessChannelGuessesTheMode) {
  auto pr = build_source_coding(iid_source_coding<Rational>({Rational(3, 10), Rational(7, 10)}, 1, 3));
  const Rational expected = -Rational(2) * Rational(3, 10);
  EXPECT_EQ(solve_team_dp(pr.model, pr.scheme).optimal, expected);
  EXPECT_EQ(brute_force_optimal(pr.model).value, expected);
}

TEST(SourceCoding, SchemePassesPrivateCheck) {
  auto pr = build_source_coding(iid_source_coding<double>({0.3, 0.7}, 2, 3));
  auto rep = check_sufficient_private(pr.model, pr.scheme);
  EXPECT_TRUE(rep.holds()) << failure(rep);
}

TEST(SourceCoding, DelayAndMarkovSourceMatchOracle) {
  SourceCodingParams<double> p;
  p.order = 1;
  p.delay = 1;
  p.horizon = 3;
  p.symbols = 1;
  p.kernel = {{{0.5, 0.5}}, {{0.9, 0.1}, {0.2, 0.8}}};
  p.distortion = {{0, 1}, {1, 0}};
  auto pr = build_source_coding(p);
  EXPECT_TRUE(validate_model(pr.model).empty());
  // Only stage 3 is scored: guess X_1 with no information.
  EXPECT_NEAR(solve_team_dp(pr.model, pr.scheme).optimal, -0.5, 1e-12);
  EXPECT_NEAR(brute_force_optimal(pr.model).value, -0.5, 1e-12);
}

TEST(SourceCoding, RejectsBadParameters) {
  auto p = iid_source_coding<double>({0.5, 0.5}, 2, 3);
  p.order = 0;
  EXPECT_THROW(build_source_coding(p), SpecError);
  p = iid_source_coding<double>({0.5, 0.5}, 2, 3);
  p.distortion.pop_back();
  EXPECT_THROW(build_source_coding(p), SpecError);
}

TEST(DelayedSharing, OneStepDelayOnTinyTeam) {
  auto pr = build_delayed_sharing(1, tiny_team<double>(false));
  EXPECT_TRUE(validate_model(pr.model).empty());
  auto rep = check_sufficient_private(pr.model, pr.scheme);
  EXPECT_TRUE(rep.holds()) << failure(rep);
  const double dp = solve_team_dp(pr.model, pr.scheme).optimal;
  EXPECT_NEAR(dp, brute_force_optimal(pr.model).value, 1e-9);
  // Sharing can only help.
  auto base = tiny_team<double>(false);
  EXPECT_GE(dp, brute_force_optimal(base).value - 1e-12);
}

TEST(DelayedSharing, AugmentationPreservesUtilityFlows) {
  auto base = tiny_team<Rational>(false);
  auto pr = build_delayed_sharing(1, base);
  auto flat = expected_utility(base, uniform_policy(base));
  auto aug = expected_utility(pr.model, uniform_policy(pr.model));
  EXPECT_EQ(flat.flow, aug.flow);
  // Copying the current observation reads only y_t in both models.
  auto copy = [](int t, int, const AgentHistory& h) { return h.y[t]; };
  EXPECT_EQ(expected_utility(base, deterministic_policy(base, copy)).total,
            expected_utility(pr.model, deterministic_policy(pr.model, copy)).total);
}

TEST(DelayedSharing, DelayMustBeBelowHorizon) {
  EXPECT_THROW(build_delayed_sharing(2, tiny_team<double>(false)), SpecError);
  EXPECT_THROW(build_delayed_sharing(0, tiny_team<double>(false)), SpecError);
}

TEST(RemoteLocal, HalfReliableChannelMatchesOracle) {
  auto pr = build_remote_local(0.5, two_state_plant<double>(), 2);
  EXPECT_TRUE(validate_model(pr.model).empty());
  EXPECT_EQ(pr.scheme.kind(), SchemeKind::General);
  auto rep = check_sufficient_general(pr.model, pr.scheme);
  EXPECT_TRUE(rep.holds()) << failure(rep);
  EXPECT_NEAR(solve_team_dp(pr.model, pr.scheme).optimal, brute_force_optimal(pr.model).value, 1e-9);
}

TEST(RemoteLocal, PerfectChannelIsCentralizedMdp) {
  auto plant = two_state_plant<Rational>();
  const int T = 3;
  auto pr = build_remote_local(Rational(1), plant, T);
  // Backward induction with both actions chosen on the known state.
  std::vector<Rational> v(2, Rational(0));
  for (int t = T - 1; t >= 0; --t) {
    std::vector<Rational> w(2);
    for (int x = 0; x < 2; ++x) {
      bool first = true;
      for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2) {
          const int k = (x * 2 + a1) * 2 + a2;
          Rational q = plant.utility[k];
          if (t + 1 < T)
            for (int x2 = 0; x2 < 2; ++x2) q += plant.transition[k * 2 + x2] * v[x2];
          if (first || q > w[x]) w[x] = q;
          first = false;
        }
    }
    v = w;
  }
  const Rational mdp = plant.init[0] * v[0] + plant.init[1] * v[1];
  EXPECT_EQ(solve_team_dp(pr.model, pr.scheme).optimal, mdp);
  // Point-mass beliefs: one label per delivered state.
  for (int t = 0; t < T; ++t) EXPECT_EQ(pr.scheme.count(t, 1), 2);
}

TEST(RemoteLocal, SymbolicLabelsGrowWithLosses) {
  auto pr = build_remote_local(0.5, two_state_plant<double>(), 3);
  // Stage 1: x0, x1, start. Stage 2: 2 + 3*2. Stage 3: 2 + 8*2.
  EXPECT_EQ(pr.scheme.count(0, 1), 3);
  EXPECT_EQ(pr.scheme.count(1, 1), 8);
  EXPECT_EQ(pr.scheme.count(2, 1), 18);
  EXPECT_EQ(pr.scheme.count(2, 0), 36);
  EXPECT_THROW(build_remote_local(0.0, two_state_plant<double>(), 2), SpecError);
}
