#include <gtest/gtest.h>

#include <teamdp/forest.hpp>
#include <teamdp/problems.hpp>

#include <random>

#include "fixtures.hpp"

using namespace teamdp;

TEST(Validate, TinyTeamIsValid) {
  EXPECT_TRUE(validate_model(tiny_team<double>()).empty());
  EXPECT_TRUE(validate_model(tiny_team<Rational>()).empty());
  EXPECT_TRUE(validate_model(tiny_team<double>(false)).empty());
}

TEST(Validate, TransitionRowNotStochastic) {
  auto m = tiny_team<double>();
  m.trans_ref(0, 0, 0, 0) = 0.7;  // row (0.7, 0.2)
  auto d = validate_model(m);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].message, "kernel row not stochastic at t=1, x=0, a=(0,0)");
}

TEST(Validate, InitialDistributionWithoutFullSupport) {
  auto m = tiny_team<double>();
  m.init = {1.0, 0.0};
  auto d = validate_model(m);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].message, "initial distribution lacks full support");
}

TEST(Validate, RevealedActionMustMatchCommonKernel) {
  auto m = tiny_team<double>();
  m.revealed[0][0][1] = 1;  // z = (0,1) does not reveal agent 1 playing 1
  auto d = validate_model(m);
  ASSERT_FALSE(d.empty());
  EXPECT_EQ(d[0].invariant, "revealed");
}

TEST(Histories, TinyTeamCounts) {
  auto m = tiny_team<double>();
  EXPECT_EQ(enumerate_histories(m, 0, 0).histories.size(), 2u);
  // z_{1:2} has 1 * 4 values, y_{1:2} has 4, a_1 is common.
  EXPECT_EQ(enumerate_histories(m, 1, 0).histories.size(), 16u);
  auto mp = tiny_team<double>(false);
  // Without action sharing a_1 is private: 1 * 1 * 2 * 2 * 2.
  EXPECT_EQ(enumerate_histories(mp, 1, 0).histories.size(), 8u);
}

TEST(Histories, FirstStageCountIsCommonTimesPrivate) {
  auto m = tiny_team<double>();
  m.common_obs[0] = {"a", "b", "c"};
  m.allocate();
  EXPECT_EQ(HistoryIndex(m).count(0, 1), 3u * 2u);
}

TEST(Histories, LexicographicOrderAndRoundTrip) {
  auto m = tiny_team<double>(false);
  HistoryIndex idx(m);
  auto e = enumerate_histories(m, 1, 1);
  for (std::uint64_t h = 0; h < e.histories.size(); ++h) {
    EXPECT_EQ(idx.encode(e.histories[h]), h);
    if (h > 0) {
      const auto& a = e.histories[h - 1];
      const auto& b = e.histories[h];
      auto flat = [](const AgentHistory& x) {
        std::vector<int> v = x.z;
        for (int k = 0; k <= x.stage; ++k) {
          v.push_back(x.y[k]);
          if (k < x.stage) v.push_back(x.a[k]);
        }
        return v;
      };
      EXPECT_LT(flat(a), flat(b));
    }
  }
}

TEST(Histories, ReachabilityFlags) {
  auto m = tiny_team<double>();
  auto g = constant_policy(m);
  auto e = enumerate_histories(m, 1, 0, &g);
  int reachable = 0;
  for (std::size_t h = 0; h < e.histories.size(); ++h)
    if (e.reachable[h]) {
      ++reachable;
      EXPECT_EQ(e.histories[h].z[1], 0);  // both played 0
    }
  EXPECT_EQ(reachable, 4);
}

TEST(Histories, SizeGuard) {
  auto m = tiny_team<double>();
  EXPECT_THROW(enumerate_histories(m, 1, 0, nullptr, 15), SizeGuardError);
  EXPECT_NO_THROW(enumerate_histories(m, 1, 0, nullptr, 16));
}

TEST(Trajectories, MarginalAtStageOneIsInit) {
  auto m = tiny_team<Rational>();
  auto dist = trajectory_distribution(m, constant_policy(m));
  Rational total(0), x0(0);
  for (const auto& [tr, p] : dist) {
    total += p;
    if (tr.x[0] == 0) x0 += p;
  }
  EXPECT_EQ(total, Rational(1));
  EXPECT_EQ(x0, Rational(1, 2));
}

TEST(Trajectories, DeterministicModelGivesOneTrajectory) {
  BasicTeamModel<double> m;
  m.horizon = 3;
  m.num_agents = 2;
  m.states.assign(3, {"a", "b"});
  m.actions.assign(3, {{"0", "1"}, {"0"}});
  m.private_obs.assign(3, {{"o"}, {"o"}});
  m.common_obs.assign(3, {"a", "b"});
  m.allocate();
  m.init = {1.0, 0.0};
  for (int t = 0; t < 3; ++t)
    for (int x = 0; x < 2; ++x)
      for (int jp = 0; jp < m.num_prev_joint(t); ++jp) {
        m.common_ref(t, x, jp, x) = 1;
        for (int i = 0; i < 2; ++i) m.priv_ref(t, i, x, jp, 0) = 1;
      }
  for (int t = 0; t < 2; ++t)
    for (int x = 0; x < 2; ++x)
      for (int ja = 0; ja < 2; ++ja) m.trans_ref(t, x, ja, ja) = 1;
  // Full support is violated on purpose; the forward pass does not need it.
  auto g = deterministic_policy(m, [](int t, int i, const AgentHistory&) { return i == 0 ? t % 2 : 0; });
  auto dist = trajectory_distribution(m, g);
  ASSERT_EQ(dist.size(), 1u);
  EXPECT_EQ(dist[0].second, 1.0);
  EXPECT_EQ(dist[0].first.x, (std::vector<int>{0, 0, 1}));
}

namespace {

/// Straight simulator, independent of the forest code.
std::vector<double> simulate_uniform_flows(const TeamModel& m, int samples, std::uint64_t seed,
                                           std::map<std::vector<int>, int>& counts) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](auto&& prob, int n) {
    double r = unif(rng), acc = 0;
    for (int k = 0; k < n; ++k) {
      acc += prob(k);
      if (r < acc) return k;
    }
    return n - 1;
  };
  std::vector<double> flow(m.horizon, 0.0);
  for (int s = 0; s < samples; ++s) {
    std::vector<int> key;
    int x = draw([&](int k) { return m.init[k]; }, m.num_states(0));
    int jp = 0;
    for (int t = 0; t < m.horizon; ++t) {
      if (t > 0) {
        int prev = x;
        x = draw([&](int k) { return m.trans(t - 1, prev, jp, k); }, m.num_states(t));
      }
      int z = draw([&](int k) { return m.common(t, x, jp, k); }, m.num_common(t));
      key.push_back(x);
      key.push_back(z);
      for (int i = 0; i < m.num_agents; ++i)
        key.push_back(draw([&](int k) { return m.priv(t, i, x, jp, k); }, m.num_private(t, i)));
      int ja = draw([&](int) { return 1.0 / m.num_joint_actions(t); }, m.num_joint_actions(t));
      key.push_back(ja);
      flow[t] += m.util(t, 0, x, ja);
      jp = ja;
    }
    ++counts[key];
  }
  for (auto& f : flow) f /= samples;
  return flow;
}

}  // namespace

TEST(Trajectories, UniformProfileMatchesMonteCarlo) {
  auto m = tiny_team<double>();
  auto g = uniform_policy(m);
  auto dist = trajectory_distribution(m, g);
  double total = 0;
  for (const auto& [tr, p] : dist) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
  std::map<std::vector<int>, int> counts;
  const int n = 1'000'000;
  simulate_uniform_flows(m, n, 7, counts);
  // Uniform actions and full-support noise: every trajectory is possible.
  EXPECT_EQ(dist.size(), 2u * 4u * 4u * 2u * 4u * 4u);
  // Pearson statistic over all cells must lie within 3 sigma of its mean.
  double chi2 = 0;
  for (const auto& [tr, p] : dist) {
    std::vector<int> key;
    for (int t = 0; t < m.horizon; ++t) {
      key.push_back(tr.x[t]);
      key.push_back(tr.z[t]);
      for (int i = 0; i < 2; ++i) key.push_back(tr.y[t][i]);
      key.push_back(tr.a[t]);
    }
    const double expected = p * n;
    const double observed = counts[key];
    chi2 += (observed - expected) * (observed - expected) / expected;
  }
  const double df = static_cast<double>(dist.size()) - 1;
  EXPECT_LE(std::abs(chi2 - df), 3 * std::sqrt(2 * df)) << "chi2 " << chi2;
}

TEST(Utility, ZeroUtilityGivesZero) {
  auto m = tiny_team<double>();
  for (auto& t : m.utility)
    for (auto& u : t) std::fill(u.begin(), u.end(), 0.0);
  auto v = expected_utility(m, uniform_policy(m));
  EXPECT_EQ(v.total, 0.0);
  for (double f : v.flow) EXPECT_EQ(f, 0.0);
}

TEST(Utility, CopyOwnObservationProfile) {
  auto m = tiny_team<Rational>();
  auto g = deterministic_policy(m, [](int t, int, const AgentHistory& h) { return h.y[t]; });
  auto v = expected_utility(m, g);
  EXPECT_EQ(v.total, fixtures::kTinyCopyValue);
  EXPECT_EQ(v.total, v.flow[0] + v.flow[1]);
}

TEST(Utility, FlowAdditivityIsExactInFloatingPoint) {
  auto m = tiny_team<double>();
  auto v = expected_utility(m, uniform_policy(m));
  double sum = 0;
  for (double f : v.flow) sum += f;
  EXPECT_EQ(v.total, sum);
}

TEST(Scalars, DecimalAndFractionParsing) {
  EXPECT_EQ(scalar_traits<Rational>::parse("0.125"), Rational(1, 8));
  EXPECT_EQ(scalar_traits<Rational>::parse("-3/6"), Rational(-1, 2));
  EXPECT_EQ(scalar_traits<Rational>::parse("2.5e-1"), Rational(1, 4));
  EXPECT_EQ(scalar_traits<Rational>::to_string(Rational(1, 8)), "0.125");
  EXPECT_EQ(scalar_traits<Rational>::to_string(Rational(1, 3)), "1/3");
  EXPECT_EQ(scalar_traits<Rational>::to_string(Rational(-7, 2)), "-3.5");
  EXPECT_THROW(scalar_traits<double>::parse("abc"), std::invalid_argument);
}
