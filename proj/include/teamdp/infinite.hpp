#pragma once

#include "solver.hpp"

#include <random>

namespace teamdp {

/**
 * Time-invariant discounted team. `stages` is a two-stage model: stage 1
 * carries the first-stage observation law (previous action "null"), stage 2
 * the stationary kernels; both stages share label sets and the utility, and
 * transition[0] is the stationary transition kernel. revealed[0] is the
 * stationary revealed-action map.
 */
template <class S>
struct StationaryModel {
  BasicTeamModel<S> stages;
  S discount = S(0);
};

class EmptyPointSet : public std::invalid_argument {
 public:
  EmptyPointSet() : std::invalid_argument("belief point set is empty") {}
};

template <class S>
std::vector<Diagnostic> validate_stationary(const StationaryModel<S>& sm) {
  auto d = validate_model(sm.stages);
  const auto& m = sm.stages;
  auto bad = [&](std::string msg) { d.push_back({"stationary", std::move(msg), {}}); };
  if (m.horizon != 2) {
    bad("stationary model must be given as two stages");
    return d;
  }
  if (m.states[0] != m.states[1] || m.actions[0] != m.actions[1] || m.private_obs[0] != m.private_obs[1] ||
      m.common_obs[0] != m.common_obs[1])
    bad("label sets differ between stages");
  for (int i = 0; i < m.num_agents; ++i)
    if (m.utility[0][i] != m.utility[1][i]) bad("utility differs between stages");
  const double delta = scalar_traits<S>::to_double(sm.discount);
  if (!(delta > 0 && delta < 1)) bad("discount must lie strictly between 0 and 1");
  return d;
}

template <class S>
void require_stationary(const StationaryModel<S>& sm) {
  auto d = validate_stationary(sm);
  if (!d.empty()) throw SpecError("invalid stationary model: " + d.front().message);
}

/// Finite-horizon model with utilities delta^(t-1) u.
template <class S>
BasicTeamModel<S> unroll(const StationaryModel<S>& sm, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  const auto& b = sm.stages;
  BasicTeamModel<S> m;
  m.name = b.name + "-T" + std::to_string(horizon);
  m.horizon = horizon;
  m.num_agents = b.num_agents;
  m.states.assign(horizon, b.states[0]);
  m.actions.assign(horizon, b.actions[0]);
  m.private_obs.assign(horizon, b.private_obs[0]);
  m.common_obs.assign(horizon, b.common_obs[0]);
  m.allocate();
  m.init = b.init;
  S w(1);
  for (int t = 0; t < horizon; ++t) {
    const int k = t == 0 ? 0 : 1;
    m.private_kernel[t] = b.private_kernel[k];
    m.common_kernel[t] = b.common_kernel[k];
    for (int i = 0; i < m.num_agents; ++i) {
      m.utility[t][i] = b.utility[0][i];
      for (auto& u : m.utility[t][i]) u *= w;
    }
    if (t + 1 < horizon) {
      m.transition[t] = b.transition[0];
      m.revealed[t] = b.revealed[0];
    }
    w *= sm.discount;
  }
  return m;
}

/// Repeats the stage-2 update of a two-stage scheme over `horizon` stages.
inline CompressionScheme unroll_scheme(const CompressionScheme& s, int horizon) {
  if (s.horizon() != 2 || s.counts()[0] != s.counts()[1])
    throw std::invalid_argument("scheme '" + s.name() + "' is not time-invariant");
  std::vector<std::vector<int>> counts(horizon, s.counts()[0]);
  return CompressionScheme(
      s.name(), s.kind(), counts, [s](int i, int y, int z) { return s.initial(i, y, z); },
      [s](int, int i, int prev, int y, int z, int a) { return s.update(1, i, prev, y, z, a); },
      [s](int, int i, int v) { return s.describe(1, i, v); });
}

/// Finite support for value iteration; `closed` is set once every update has been matched exactly.
template <class S>
struct BeliefPointSet {
  std::vector<Belief<S>> points;
  bool closed = false;
  double max_projection = 0;
};

namespace detail {

/// Deterministic prescriptions at a belief: actions[i][s] for supported s, 0 elsewhere.
template <class S>
struct PointPrescriptions {
  std::vector<std::vector<int>> support;
  std::uint64_t total = 1;
};

template <class S>
PointPrescriptions<S> point_prescriptions(const BasicTeamModel<S>& m, const Belief<S>& b) {
  PointPrescriptions<S> pp;
  for (int i = 0; i < m.num_agents; ++i) {
    pp.support.push_back(b.support(i));
    for (std::size_t k = 0; k < pp.support[i].size(); ++k) pp.total = sat_mul(pp.total, m.num_actions(0, i));
  }
  return pp;
}

template <class S>
std::vector<std::vector<int>> decode_prescription(const BasicTeamModel<S>& m, const Belief<S>& b,
                                                  const PointPrescriptions<S>& pp, std::uint64_t p) {
  const int N = m.num_agents;
  std::vector<std::vector<int>> actions(N);
  for (int i = 0; i < N; ++i) actions[i].assign(b.counts[i], 0);
  for (int i = N - 1; i >= 0; --i)
    for (int k = static_cast<int>(pp.support[i].size()) - 1; k >= 0; --k) {
      actions[i][pp.support[i][k]] = static_cast<int>(p % m.num_actions(0, i));
      p /= m.num_actions(0, i);
    }
  return actions;
}

struct Successor {
  double prob = 0;
  int target = 0;
  double distance = 0;
};

struct Choice {
  double reward = 0;
  std::vector<Successor> next;
};

/// Nearest point in sup-norm, exact matches first.
template <class S>
class PointLocator {
 public:
  explicit PointLocator(const std::vector<Belief<S>>& pts) : pts_(pts) {
    for (std::size_t k = 0; k < pts.size(); ++k) exact_.emplace(belief_key(pts[k]), static_cast<int>(k));
  }
  std::pair<int, double> operator()(const Belief<S>& b) const {
    auto it = exact_.find(belief_key(b));
    if (it != exact_.end()) return {it->second, 0.0};
    int best = -1;
    double dist = 0;
    for (std::size_t k = 0; k < pts_.size(); ++k) {
      double d = b.distance(pts_[k]);
      if (best < 0 || d < dist) {
        best = static_cast<int>(k);
        dist = d;
      }
    }
    return {best, dist};
  }

 private:
  const std::vector<Belief<S>>& pts_;
  typename scalar_traits<S>::template key_map<int> exact_;
};

/// Reward and projected successors of every deterministic prescription at one belief.
template <class S>
std::vector<Choice> expand_point(const BasicTeamModel<S>& m, const SchemeTables& tab, const Belief<S>& pi,
                                 const PointLocator<S>& locate) {
  auto pp = point_prescriptions(m, pi);
  std::vector<Choice> out(pp.total);
  const auto e = entries(pi);
  for (std::uint64_t p = 0; p < pp.total; ++p) {
    auto actions = decode_prescription(m, pi, pp, p);
    auto ja_of = [&](const std::vector<int>& s) {
      int ja = 0;
      for (int i = 0; i < m.num_agents; ++i) ja = ja * m.num_actions(0, i) + actions[i][s[i]];
      return ja;
    };
    S r(0);
    for (std::size_t k = 0; k < e.p.size(); ++k) r += e.p[k] * m.util(0, 0, e.x[k], ja_of(e.s[k]));
    out[p].reward = scalar_traits<S>::to_double(r);
    auto joint = [&](int, const std::vector<int>& s) {
      return std::array<std::pair<int, S>, 1>{std::pair<int, S>{ja_of(s), S(1)}};
    };
    auto mass = propagate(m, tab, pi, joint);
    for (int z = 0; z < static_cast<int>(mass.size()); ++z) {
      if (mass[z].empty()) continue;
      auto up = finish_update(m, tab, 0, z, std::move(mass[z]));
      if (!(up.normalizer > S(0))) continue;
      up.belief.stage = 0;
      auto [target, dist] = locate(up.belief);
      out[p].next.push_back({scalar_traits<S>::to_double(up.normalizer), target, dist});
    }
  }
  return out;
}

}  // namespace detail

/// Initial beliefs gamma_1(z_1) with P{z_1}, in z order.
template <class S>
std::vector<std::pair<S, Belief<S>>> initial_beliefs(const StationaryModel<S>& sm, const CompressionScheme& s) {
  Forest<S> f(sm.stages, &s);
  auto roots = sib_beliefs(f, s.counts(), 0);
  std::map<std::uint64_t, S> pz;
  for (std::size_t n = 0; n < f.stage(0).size(); ++n) pz[f.stage(0).common[n]] += f.stage(0).prob[n];
  std::vector<std::pair<S, Belief<S>>> out;
  for (auto& [c, b] : roots) out.emplace_back(pz[c], std::move(b));
  return out;
}

/**
 * Bellman operator on a fixed point set: per point and deterministic
 * prescription, the immediate reward and the projected successors.
 */
template <class S>
class BellmanTable {
 public:
  BellmanTable(const StationaryModel<S>& sm, const CompressionScheme& s, BeliefPointSet<S>& B,
               std::uint64_t cap = kDefaultPrescriptionCap)
      : m_(sm.stages), discount_(scalar_traits<S>::to_double(sm.discount)) {
    require_valid(sm.stages);
    if (!m_.is_team()) throw NonTeamUtility();
    if (B.points.empty()) throw EmptyPointSet();
    SchemeTables tab(m_, s);
    detail::PointLocator<S> locate(B.points);
    std::uint64_t total = 0;
    B.max_projection = 0;
    for (const auto& pi : B.points) {
      total = sat_add(total, detail::point_prescriptions(m_, pi).total);
      guard("belief points x prescriptions", total, cap);
      choices_.push_back(detail::expand_point(m_, tab, pi, locate));
      for (const auto& c : choices_.back())
        for (const auto& n : c.next) B.max_projection = std::max(B.max_projection, n.distance);
    }
    B.closed = B.max_projection == 0;
    max_projection_ = B.max_projection;
    points_ = &B.points;
  }

  std::size_t size() const { return choices_.size(); }
  double discount() const { return discount_; }
  double max_projection() const { return max_projection_; }
  std::uint64_t prescriptions(std::size_t k) const { return choices_[k].size(); }

  /// (T V)(k) and its lowest-index maximizer, with continuation weight `delta`.
  std::pair<double, std::uint64_t> apply(std::size_t k, const std::vector<double>& V, double delta) const {
    double best = 0;
    std::uint64_t arg = 0;
    for (std::uint64_t p = 0; p < choices_[k].size(); ++p) {
      const auto& c = choices_[k][p];
      double q = c.reward;
      double cont = 0;
      for (const auto& n : c.next) cont += n.prob * V[n.target];
      q += delta * cont;
      if (p == 0 || q > best) {
        best = q;
        arg = p;
      }
    }
    return {best, arg};
  }

  std::vector<double> apply_all(const std::vector<double>& V, std::vector<std::uint64_t>* arg = nullptr) const {
    std::vector<double> out(size());
    if (arg) arg->resize(size());
    for (std::size_t k = 0; k < size(); ++k) {
      auto [v, a] = apply(k, V, discount_);
      out[k] = v;
      if (arg) (*arg)[k] = a;
    }
    return out;
  }

  /// actions[i][s] of prescription p at point k.
  std::vector<std::vector<int>> decode(std::size_t k, std::uint64_t p) const {
    const auto& pi = (*points_)[k];
    return detail::decode_prescription(m_, pi, detail::point_prescriptions(m_, pi), p);
  }

 private:
  const BasicTeamModel<S>& m_;
  double discount_;
  double max_projection_ = 0;
  const std::vector<Belief<S>>* points_ = nullptr;
  std::vector<std::vector<detail::Choice>> choices_;
};

template <class S>
struct BellmanResult {
  double value = 0;
  std::vector<std::vector<int>> prescription;  ///< actions[i][s]
  double max_projection = 0;
};

/**
 * One application of the Bellman operator at belief pi, with V given on the
 * point set. The continuation is discounted by the model's discount, which
 * may be 0 here (myopic decision).
 */
template <class S>
BellmanResult<S> bellman_apply(const StationaryModel<S>& sm, const CompressionScheme& s,
                               const BeliefPointSet<S>& B, const std::vector<double>& V, const Belief<S>& pi) {
  if (B.points.empty()) throw EmptyPointSet();
  if (V.size() != B.points.size()) throw std::invalid_argument("value table does not match the point set");
  const double delta = scalar_traits<S>::to_double(sm.discount);
  if (!(delta >= 0 && delta < 1)) throw std::invalid_argument("discount must lie in [0, 1)");
  const auto& m = sm.stages;
  if (!m.is_team()) throw NonTeamUtility();
  SchemeTables tab(m, s);
  detail::PointLocator<S> locate(B.points);
  auto choices = detail::expand_point(m, tab, pi, locate);
  BellmanResult<S> r;
  std::uint64_t arg = 0;
  for (std::uint64_t p = 0; p < choices.size(); ++p) {
    double cont = 0;
    for (const auto& n : choices[p].next) {
      cont += n.prob * V[n.target];
      r.max_projection = std::max(r.max_projection, n.distance);
    }
    const double q = choices[p].reward + delta * cont;
    if (p == 0 || q > r.value) {
      r.value = q;
      arg = p;
    }
  }
  r.prescription = detail::decode_prescription(m, pi, detail::point_prescriptions(m, pi), arg);
  return r;
}

struct StationaryPolicy {
  std::vector<std::uint64_t> choice;                    ///< prescription index per point
  std::vector<std::vector<std::vector<int>>> actions;   ///< [point][i][s]
};

struct ValueIterationResult {
  std::vector<double> value;
  StationaryPolicy policy;
  std::uint64_t iterations = 0;
  double residual = 0;  ///< sup-norm of T V - V at the returned V
  double max_projection = 0;
  bool closed = false;
  bool converged = false;
  std::string diagnostic;
};

inline constexpr std::uint64_t kDefaultIterationCap = 1'000'000;

/**
 * V <- T V from V = 0 until successive iterates differ by at most
 * tol (1 - delta) / (2 delta) in sup-norm.
 */
template <class S>
ValueIterationResult value_iteration(const BellmanTable<S>& table, double tol,
                                     std::uint64_t max_iterations = kDefaultIterationCap) {
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  const double delta = table.discount();
  const double stop = tol * (1 - delta) / (2 * delta);
  ValueIterationResult r;
  r.max_projection = table.max_projection();
  r.closed = r.max_projection == 0;
  std::vector<double> V(table.size(), 0.0);
  double diff = 0;
  while (r.iterations < max_iterations) {
    auto next = table.apply_all(V);
    ++r.iterations;
    diff = 0;
    for (std::size_t k = 0; k < V.size(); ++k) diff = std::max(diff, std::abs(next[k] - V[k]));
    V = std::move(next);
    if (diff <= stop) {
      r.converged = true;
      break;
    }
  }
  if (!r.converged)
    r.diagnostic = "iteration cap " + std::to_string(max_iterations) + " reached, last change " + std::to_string(diff);
  auto TV = table.apply_all(V, &r.policy.choice);
  for (std::size_t k = 0; k < V.size(); ++k) {
    r.residual = std::max(r.residual, std::abs(TV[k] - V[k]));
    r.policy.actions.push_back(table.decode(k, r.policy.choice[k]));
  }
  r.value = std::move(V);
  return r;
}

template <class S>
ValueIterationResult value_iteration(const StationaryModel<S>& sm, const CompressionScheme& s, BeliefPointSet<S>& B,
                                     double tol, std::uint64_t max_iterations = kDefaultIterationCap) {
  require_stationary(sm);
  BellmanTable<S> table(sm, s, B);
  return value_iteration(table, tol, max_iterations);
}

/// E over z_1 of V at the (projected) initial belief.
template <class S>
double initial_value(const StationaryModel<S>& sm, const CompressionScheme& s, const BeliefPointSet<S>& B,
                     const std::vector<double>& V, double* projection = nullptr) {
  detail::PointLocator<S> locate(B.points);
  double v = 0;
  for (const auto& [p, b] : initial_beliefs(sm, s)) {
    auto [k, d] = locate(b);
    if (projection) *projection = std::max(*projection, d);
    v += scalar_traits<S>::to_double(p) * V[k];
  }
  return v;
}

struct ContractionReport {
  int draws = 0;
  double worst_ratio = 0;  ///< max ||T V1 - T V2|| / ||V1 - V2||
  double max_projection = 0;
  bool holds = true;       ///< every draw within delta ||V1 - V2|| (+1e-12)
};

/// Empirical contraction of the operator on random value pairs in [-bound, bound].
template <class S>
ContractionReport contraction_check(const BellmanTable<S>& table, int draws, std::uint64_t seed, double bound) {
  ContractionReport rep;
  rep.draws = draws;
  rep.max_projection = table.max_projection();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  const double delta = table.discount();
  for (int d = 0; d < draws; ++d) {
    std::vector<double> V1(table.size()), V2(table.size());
    for (auto& v : V1) v = u(rng);
    for (auto& v : V2) v = u(rng);
    auto T1 = table.apply_all(V1), T2 = table.apply_all(V2);
    double lhs = 0, rhs = 0;
    for (std::size_t k = 0; k < V1.size(); ++k) {
      lhs = std::max(lhs, std::abs(T1[k] - T2[k]));
      rhs = std::max(rhs, std::abs(V1[k] - V2[k]));
    }
    if (rhs > 0) rep.worst_ratio = std::max(rep.worst_ratio, lhs / rhs);
    if (lhs > delta * rhs + 1e-12) rep.holds = false;
  }
  return rep;
}

/// Smallest T >= 1 with delta^T M / (1 - delta) <= eps / 2.
inline int truncation_bound(double delta, double M, double eps) {
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("discount must lie strictly between 0 and 1");
  if (!(M >= 0)) throw std::invalid_argument("utility bound must be non-negative");
  if (!(eps > 0)) throw std::invalid_argument("target accuracy must be positive");
  int T = 1;
  double tail = delta * M / (1 - delta);
  while (tail > eps / 2 * (1 + 1e-12)) {
    tail *= delta;
    ++T;
  }
  return T;
}

/**
 * Beliefs reachable from the initial beliefs in at most `depth` updates under
 * every deterministic prescription. The set is marked closed when the last
 * round added nothing.
 */
template <class S>
BeliefPointSet<S> reachable_points(const StationaryModel<S>& sm, const CompressionScheme& s, int depth,
                                   std::uint64_t cap = 100'000) {
  const auto& m = sm.stages;
  SchemeTables tab(m, s);
  std::vector<int> na(m.num_agents);
  for (int i = 0; i < m.num_agents; ++i) na[i] = m.num_actions(0, i);
  BeliefPointSet<S> B;
  typename scalar_traits<S>::template key_map<int> seen;
  std::vector<int> frontier;
  auto add = [&](Belief<S> b) {
    b.stage = 0;
    auto [it, fresh] = seen.emplace(belief_key(b), static_cast<int>(B.points.size()));
    if (!fresh) return;
    B.points.push_back(std::move(b));
    guard("belief points", B.points.size(), cap);
    frontier.push_back(it->second);
  };
  for (auto& [p, b] : initial_beliefs(sm, s)) add(std::move(b));
  for (int d = 0; d < depth && !frontier.empty(); ++d) {
    auto current = std::move(frontier);
    frontier.clear();
    for (int k : current) {
      auto pp = detail::point_prescriptions(m, B.points[k]);
      for (std::uint64_t p = 0; p < pp.total; ++p) {
        auto alpha = Prescription<S>::deterministic(na,
                                                    detail::decode_prescription(m, B.points[k], pp, p));
        for (auto& up : sib_update_all(m, tab, B.points[k], alpha)) add(std::move(up.belief));
      }
    }
  }
  B.closed = frontier.empty();
  return B;
}

/// Every belief over (x, s) whose entries are multiples of 1/resolution.
template <class S>
BeliefPointSet<S> simplex_grid(const StationaryModel<S>& sm, const CompressionScheme& s, int resolution,
                               std::uint64_t cap = 100'000) {
  if (resolution < 1) throw std::invalid_argument("grid resolution must be positive");
  auto proto = empty_belief(sm.stages, s.counts(), 0);
  const std::size_t n = proto.prob.size();
  BeliefPointSet<S> B;
  std::vector<int> c(n, 0);
  // Compositions of `resolution` into n parts, lexicographic.
  std::function<void(std::size_t, int)> rec = [&](std::size_t k, int left) {
    if (k + 1 == n) {
      c[k] = left;
      auto b = proto;
      for (std::size_t j = 0; j < n; ++j) b.prob[j] = scalar_traits<S>::ratio(c[j], resolution);
      B.points.push_back(std::move(b));
      guard("belief points", B.points.size(), cap);
      return;
    }
    for (int v = left; v >= 0; --v) {
      c[k] = v;
      rec(k + 1, left - v);
    }
  };
  rec(0, resolution);
  return B;
}

/**
 * Two agents jointly steering a two-state chain whose state is common
 * knowledge each stage (z_t = x_t, no private information). Reward 1 when
 * both pick the state, 1/2 when only one does; (1,1) flips the state with
 * probability 9/10, every other joint action keeps it with probability 3/4.
 */
template <class S>
StationaryModel<S> common_state_team(const S& discount) {
  using tr = scalar_traits<S>;
  StationaryModel<S> sm;
  sm.discount = discount;
  auto& m = sm.stages;
  m.name = "CommonStateTeam";
  m.horizon = 2;
  m.num_agents = 2;
  m.states.assign(2, {"0", "1"});
  m.actions.assign(2, {{"0", "1"}, {"0", "1"}});
  m.private_obs.assign(2, {{"null"}, {"null"}});
  m.common_obs.assign(2, {"0", "1"});
  m.allocate();
  m.init = {tr::ratio(2, 5), tr::ratio(3, 5)};
  for (int t = 0; t < 2; ++t)
    for (int x = 0; x < 2; ++x) {
      for (int jp = 0; jp < m.num_prev_joint(t); ++jp) {
        m.common_ref(t, x, jp, x) = S(1);
        for (int i = 0; i < 2; ++i) m.priv_ref(t, i, x, jp, 0) = S(1);
      }
      for (int ja = 0; ja < 4; ++ja) {
        auto a = m.decode_joint(t, ja);
        const int hits = (a[0] == x) + (a[1] == x);
        m.set_team_utility(t, x, ja, hits == 2 ? S(1) : hits == 1 ? tr::ratio(1, 2) : S(0));
      }
    }
  for (int x = 0; x < 2; ++x)
    for (int ja = 0; ja < 4; ++ja) {
      const S keep = ja == 3 ? tr::ratio(1, 10) : tr::ratio(3, 4);
      m.trans_ref(0, x, ja, x) = keep;
      m.trans_ref(0, x, ja, 1 - x) = S(1) - keep;
    }
  return sm;
}

}  // namespace teamdp
