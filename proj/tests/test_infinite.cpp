#include <gtest/gtest.h>

#include <teamdp/infinite.hpp>
#include <teamdp/problems.hpp>

using namespace teamdp;

namespace {

/// Optimal values of the two-state MDP behind common_state_team, by solving
/// V = r + delta P V for each of the 16 stationary deterministic policies.
std::array<double, 2> tabular_optimum(const StationaryModel<double>& sm) {
  const auto& m = sm.stages;
  const double d = sm.discount;
  std::array<double, 2> best{-1e300, -1e300};
  for (int pol = 0; pol < 16; ++pol) {
    int a[2] = {pol / 4, pol % 4};
    double r[2], P[2][2];
    for (int x = 0; x < 2; ++x) {
      r[x] = m.util(0, 0, x, a[x]);
      for (int x2 = 0; x2 < 2; ++x2) P[x][x2] = m.trans(0, x, a[x], x2);
    }
    // (I - dP) V = r
    const double A = 1 - d * P[0][0], B = -d * P[0][1], C = -d * P[1][0], D = 1 - d * P[1][1];
    const double det = A * D - B * C;
    const double v0 = (r[0] * D - B * r[1]) / det, v1 = (A * r[1] - C * r[0]) / det;
    if (v0 + v1 > best[0] + best[1]) best = {v0, v1};
  }
  return best;
}

int point_of_state(const BeliefPointSet<double>& B, int x) {
  for (std::size_t k = 0; k < B.points.size(); ++k)
    if (B.points[k].state_marginal(x) == 1.0) return static_cast<int>(k);
  return -1;
}

}  // namespace

TEST(TruncationBound, Examples) {
  EXPECT_EQ(truncation_bound(0.5, 1, 0.25), 4);
  EXPECT_EQ(truncation_bound(0.9, 1, 0.2), 44);
  EXPECT_EQ(truncation_bound(0.9, 0, 0.2), 1);
  EXPECT_THROW(truncation_bound(1.0, 1, 0.2), std::invalid_argument);
}

TEST(Stationary, UnrollDiscountsUtility) {
  auto sm = common_state_team<Rational>(Rational(1, 2));
  EXPECT_TRUE(validate_stationary(sm).empty());
  auto m = unroll(sm, 3);
  EXPECT_TRUE(validate_model(m).empty());
  EXPECT_EQ(m.util(2, 0, 0, 0), Rational(1, 4));
  sm.discount = Rational(1);
  EXPECT_FALSE(validate_stationary(sm).empty());
}

TEST(Infinite, MdpDegenerationMatchesTabularValues) {
  auto sm = common_state_team<double>(0.9);
  auto s = constant_scheme(sm.stages);
  auto B = reachable_points(sm, s, 10);
  EXPECT_TRUE(B.closed);
  ASSERT_EQ(B.points.size(), 2u);
  const double tol = 1e-10;
  auto r = value_iteration(sm, s, B, tol);
  ASSERT_TRUE(r.converged) << r.diagnostic;
  EXPECT_TRUE(r.closed);
  EXPECT_LE(r.residual, tol);
  auto v = tabular_optimum(sm);
  for (int x = 0; x < 2; ++x) EXPECT_NEAR(r.value[point_of_state(B, x)], v[x], 1e-8);
}

TEST(Infinite, ConstantUtilityIsGeometricSeries) {
  auto sm = common_state_team<double>(0.8);
  for (auto& u : sm.stages.utility)
    for (auto& row : u) std::fill(row.begin(), row.end(), 2.0);
  auto s = constant_scheme(sm.stages);
  auto B = reachable_points(sm, s, 10);
  auto r = value_iteration(sm, s, B, 1e-9);
  for (double v : r.value) EXPECT_NEAR(v, 2.0 / 0.2, 1e-9);
}

TEST(Infinite, ZeroDiscountIsMyopic) {
  auto sm = common_state_team<double>(0.0);
  auto s = constant_scheme(sm.stages);
  auto beliefs = initial_beliefs(sm, s);
  BeliefPointSet<double> B;
  for (auto& [p, b] : beliefs) B.points.push_back(b);
  std::vector<double> V(B.points.size(), 100.0);
  auto r = bellman_apply(sm, s, B, V, B.points[0]);
  EXPECT_DOUBLE_EQ(r.value, 1.0);  // both name the known state
}

TEST(Infinite, ZeroUtilityGivesZero) {
  auto sm = common_state_team<double>(0.9);
  for (auto& u : sm.stages.utility)
    for (auto& row : u) std::fill(row.begin(), row.end(), 0.0);
  auto s = constant_scheme(sm.stages);
  auto B = reachable_points(sm, s, 4);
  std::vector<double> V(B.points.size(), 0.0);
  for (const auto& pi : B.points) EXPECT_EQ(bellman_apply(sm, s, B, V, pi).value, 0.0);
}

TEST(Infinite, ContractionOnClosedSet) {
  auto sm = common_state_team<double>(0.9);
  auto s = constant_scheme(sm.stages);
  auto B = reachable_points(sm, s, 10);
  BellmanTable<double> table(sm, s, B);
  auto rep = contraction_check(table, 100, 3, 10.0);
  EXPECT_TRUE(rep.holds);
  EXPECT_LE(rep.worst_ratio, 0.9 + 1e-12);
}

TEST(Infinite, TruncatedHorizonIsWithinEpsilon) {
  const double delta = 0.5, eps = 0.25;
  auto sm = common_state_team<double>(delta);
  const int T = truncation_bound(delta, sm.stages.utility_bound(), eps);
  EXPECT_EQ(T, 4);
  auto s = constant_scheme(sm.stages);
  auto B = reachable_points(sm, s, 10);
  ASSERT_TRUE(B.closed);
  auto r = value_iteration(sm, s, B, 1e-12);
  const double v_inf = initial_value(sm, s, B, r.value);
  const double v_T = solve_team_dp(unroll(sm, T), unroll_scheme(s, T)).optimal;
  EXPECT_LE(std::abs(v_inf - v_T), eps);
  EXPECT_LE(v_T, v_inf + 1e-12);  // nonnegative rewards: truncation only loses
}

TEST(Infinite, PartiallyObservedTeamReportsProjection) {
  StationaryModel<double> sm{tiny_team<double>(false), 0.9};
  ASSERT_TRUE(validate_stationary(sm).empty());
  auto s = window_scheme(sm.stages, 1);
  auto B = reachable_points(sm, s, 2);
  auto r = value_iteration(sm, s, B, 1e-6);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.closed, r.max_projection == 0);
  EXPECT_LE(r.residual, 1e-6);
  // Rewards are nonnegative and someone can always score.
  EXPECT_GT(initial_value(sm, s, B, r.value), 0.0);
}

TEST(Infinite, SimplexGridSize) {
  auto sm = common_state_team<double>(0.9);
  auto s = constant_scheme(sm.stages);
  // Two entries, resolution 4: five points.
  auto B = simplex_grid(sm, s, 4);
  EXPECT_EQ(B.points.size(), 5u);
  BeliefPointSet<double> empty;
  EXPECT_THROW(BellmanTable<double>(sm, s, empty), EmptyPointSet);
}
