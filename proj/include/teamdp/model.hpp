#pragma once

#include "scalar.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace teamdp {

/// Sup-norm tolerance for distribution equality.
inline constexpr double kEqualityTolerance = 1e-9;
/// Row-sum tolerance for stochastic tables.
inline constexpr double kNormalizationTolerance = 1e-12;
/// Default cap on enumerated histories, trajectories and forest nodes.
inline constexpr std::uint64_t kDefaultSizeCap = 10'000'000;

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Diagnostic {
  std::string invariant;
  std::string message;
  std::string path;  ///< JSON pointer into the teamspec "model" object, when known
};

/**
 * Finite dynamic team. Stages are 0-based in code (stage t here is stage t+1
 * in messages). Joint actions are mixed-radix indices with agent 0 most
 * significant. Stage 0 observation kernels take a single "null" previous
 * joint action (index 0).
 *
 * Table layouts:
 *   transition[t]        [x][ja][x']      t < T-1
 *   private_kernel[t][i] [x][jprev][y]
 *   common_kernel[t]     [x][jprev][z]
 *   utility[t][i]        [x][ja]
 *
 * revealed[t][i] (t < T-1), when non-empty, maps z_{t+1} to agent i's action
 * a_t. The action then belongs to the common history and is dropped from the
 * agent's private history.
 */
template <class S>
struct BasicTeamModel {
  using scalar_type = S;

  std::string name;
  int horizon = 0;
  int num_agents = 0;
  std::vector<std::vector<std::string>> states;
  std::vector<std::vector<std::vector<std::string>>> actions;
  std::vector<std::vector<std::vector<std::string>>> private_obs;
  std::vector<std::vector<std::string>> common_obs;
  std::vector<S> init;
  std::vector<std::vector<S>> transition;
  std::vector<std::vector<std::vector<S>>> private_kernel;
  std::vector<std::vector<S>> common_kernel;
  std::vector<std::vector<std::vector<S>>> utility;
  std::vector<std::vector<std::vector<int>>> revealed;

  int num_states(int t) const { return static_cast<int>(states[t].size()); }
  int num_actions(int t, int i) const { return static_cast<int>(actions[t][i].size()); }
  int num_private(int t, int i) const { return static_cast<int>(private_obs[t][i].size()); }
  int num_common(int t) const { return static_cast<int>(common_obs[t].size()); }

  int num_joint_actions(int t) const {
    int n = 1;
    for (int i = 0; i < num_agents; ++i) n *= num_actions(t, i);
    return n;
  }
  /// Size of the previous-joint-action axis of stage-t observation kernels.
  int num_prev_joint(int t) const { return t == 0 ? 1 : num_joint_actions(t - 1); }

  int agent_action(int t, int ja, int i) const {
    for (int j = num_agents - 1; j > i; --j) ja /= num_actions(t, j);
    return ja % num_actions(t, i);
  }
  std::vector<int> decode_joint(int t, int ja) const {
    std::vector<int> a(num_agents);
    for (int j = num_agents - 1; j >= 0; --j) {
      a[j] = ja % num_actions(t, j);
      ja /= num_actions(t, j);
    }
    return a;
  }
  int encode_joint(int t, std::span<const int> a) const {
    int ja = 0;
    for (int j = 0; j < num_agents; ++j) ja = ja * num_actions(t, j) + a[j];
    return ja;
  }

  const S& trans(int t, int x, int ja, int x2) const {
    return transition[t][(static_cast<std::size_t>(x) * num_joint_actions(t) + ja) * num_states(t + 1) + x2];
  }
  const S& priv(int t, int i, int x, int jp, int y) const {
    return private_kernel[t][i][(static_cast<std::size_t>(x) * num_prev_joint(t) + jp) * num_private(t, i) + y];
  }
  const S& common(int t, int x, int jp, int z) const {
    return common_kernel[t][(static_cast<std::size_t>(x) * num_prev_joint(t) + jp) * num_common(t) + z];
  }
  const S& util(int t, int i, int x, int ja) const {
    return utility[t][i][static_cast<std::size_t>(x) * num_joint_actions(t) + ja];
  }

  bool is_revealed(int t, int i) const {
    return t < horizon - 1 && t < static_cast<int>(revealed.size()) && !revealed[t][i].empty();
  }

  /// True iff every agent's utility table equals agent 0's.
  bool is_team() const {
    for (int t = 0; t < horizon; ++t)
      for (int i = 1; i < num_agents; ++i)
        for (std::size_t k = 0; k < utility[t][0].size(); ++k)
          if (abs_diff(utility[t][i][k], utility[t][0][k]) > kNormalizationTolerance) return false;
    return true;
  }

  /// Largest |u_t(x,a)| over the team utility.
  double utility_bound() const {
    double m = 0;
    for (int t = 0; t < horizon; ++t)
      for (const auto& v : utility[t][0]) m = std::max(m, std::abs(scalar_traits<S>::to_double(v)));
    return m;
  }

  /// Allocates correctly-shaped zero tables for the current label sets.
  void allocate() {
    init.assign(states[0].size(), S(0));
    transition.assign(std::max(0, horizon - 1), {});
    for (int t = 0; t + 1 < horizon; ++t)
      transition[t].assign(static_cast<std::size_t>(num_states(t)) * num_joint_actions(t) * num_states(t + 1), S(0));
    private_kernel.assign(horizon, std::vector<std::vector<S>>(num_agents));
    common_kernel.assign(horizon, {});
    utility.assign(horizon, std::vector<std::vector<S>>(num_agents));
    for (int t = 0; t < horizon; ++t) {
      for (int i = 0; i < num_agents; ++i) {
        private_kernel[t][i].assign(static_cast<std::size_t>(num_states(t)) * num_prev_joint(t) * num_private(t, i), S(0));
        utility[t][i].assign(static_cast<std::size_t>(num_states(t)) * num_joint_actions(t), S(0));
      }
      common_kernel[t].assign(static_cast<std::size_t>(num_states(t)) * num_prev_joint(t) * num_common(t), S(0));
    }
    revealed.assign(std::max(0, horizon - 1), std::vector<std::vector<int>>(num_agents));
  }

  S& trans_ref(int t, int x, int ja, int x2) { return const_cast<S&>(trans(t, x, ja, x2)); }
  S& priv_ref(int t, int i, int x, int jp, int y) { return const_cast<S&>(priv(t, i, x, jp, y)); }
  S& common_ref(int t, int x, int jp, int z) { return const_cast<S&>(common(t, x, jp, z)); }
  /// Sets u_t^i(x, ja) for every agent i.
  void set_team_utility(int t, int x, int ja, const S& v) {
    for (int i = 0; i < num_agents; ++i)
      utility[t][i][static_cast<std::size_t>(x) * num_joint_actions(t) + ja] = v;
  }
};

using TeamModel = BasicTeamModel<double>;
using RationalTeamModel = BasicTeamModel<Rational>;

/// Same model in another scalar type.
template <class To, class From>
BasicTeamModel<To> model_cast(const BasicTeamModel<From>& m) {
  BasicTeamModel<To> out;
  out.name = m.name;
  out.horizon = m.horizon;
  out.num_agents = m.num_agents;
  out.states = m.states;
  out.actions = m.actions;
  out.private_obs = m.private_obs;
  out.common_obs = m.common_obs;
  out.revealed = m.revealed;
  auto conv = [](const std::vector<From>& v) {
    std::vector<To> r;
    r.reserve(v.size());
    for (const auto& e : v) r.push_back(scalar_cast<To>(e));
    return r;
  };
  out.init = conv(m.init);
  for (const auto& t : m.transition) out.transition.push_back(conv(t));
  for (const auto& t : m.common_kernel) out.common_kernel.push_back(conv(t));
  for (const auto& t : m.private_kernel) {
    out.private_kernel.emplace_back();
    for (const auto& k : t) out.private_kernel.back().push_back(conv(k));
  }
  for (const auto& t : m.utility) {
    out.utility.emplace_back();
    for (const auto& k : t) out.utility.back().push_back(conv(k));
  }
  return out;
}

namespace detail {

inline std::string tuple_string(std::span<const int> v) {
  std::string s = "(";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s + ")";
}

}  // namespace detail

/// Empty iff every model invariant holds.
template <class S>
std::vector<Diagnostic> validate_model(const BasicTeamModel<S>& m) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string inv, std::string msg, std::string path = {}) {
    out.push_back({std::move(inv), std::move(msg), std::move(path)});
  };
  auto ptr = [](std::initializer_list<std::string_view> parts) {
    std::string s = "/model";
    for (auto p : parts) (s += '/') += p;
    return s;
  };
  auto num = [](int v) { return std::to_string(v); };
  if (m.horizon < 1) {
    add("horizon", "horizon must be a positive integer");
    return out;
  }
  if (m.num_agents < 1) {
    add("agents", "number of agents must be a positive integer");
    return out;
  }
  auto sized = [&](std::size_t have, std::size_t want, const std::string& what) {
    if (have != want) {
      add("shape", what + " has " + std::to_string(have) + " entries, expected " + std::to_string(want));
      return false;
    }
    return true;
  };
  bool shapes = sized(m.states.size(), m.horizon, "states") && sized(m.actions.size(), m.horizon, "actions") &&
                sized(m.private_obs.size(), m.horizon, "private observations") &&
                sized(m.common_obs.size(), m.horizon, "common observations");
  if (!shapes) return out;
  for (int t = 0; t < m.horizon; ++t) {
    std::string at = " at t=" + std::to_string(t + 1);
    if (m.states[t].empty()) add("nonempty", "empty state set" + at);
    if (m.common_obs[t].empty()) add("nonempty", "empty common observation set" + at);
    if (!sized(m.actions[t].size(), m.num_agents, "actions" + at) ||
        !sized(m.private_obs[t].size(), m.num_agents, "private observations" + at))
      return out;
    for (int i = 0; i < m.num_agents; ++i) {
      if (m.actions[t][i].empty()) add("nonempty", "empty action set" + at + ", i=" + std::to_string(i + 1));
      if (m.private_obs[t][i].empty())
        add("nonempty", "empty private observation set" + at + ", i=" + std::to_string(i + 1));
    }
  }
  if (!out.empty()) return out;

  shapes = sized(m.init.size(), m.states[0].size(), "initial distribution") &&
           sized(m.transition.size(), m.horizon - 1, "transition") &&
           sized(m.private_kernel.size(), m.horizon, "private observation kernel") &&
           sized(m.common_kernel.size(), m.horizon, "common observation kernel") &&
           sized(m.utility.size(), m.horizon, "utility");
  if (!shapes) return out;
  for (int t = 0; t < m.horizon; ++t) {
    std::string at = " at t=" + std::to_string(t + 1);
    std::size_t obs_rows = static_cast<std::size_t>(m.num_states(t)) * m.num_prev_joint(t);
    shapes &= sized(m.common_kernel[t].size(), obs_rows * m.num_common(t), "common observation kernel" + at);
    if (!sized(m.private_kernel[t].size(), m.num_agents, "private observation kernel" + at) ||
        !sized(m.utility[t].size(), m.num_agents, "utility" + at))
      return out;
    for (int i = 0; i < m.num_agents; ++i) {
      shapes &= sized(m.private_kernel[t][i].size(), obs_rows * m.num_private(t, i),
                      "private observation kernel" + at + ", i=" + std::to_string(i + 1));
      shapes &= sized(m.utility[t][i].size(), static_cast<std::size_t>(m.num_states(t)) * m.num_joint_actions(t),
                      "utility" + at + ", i=" + std::to_string(i + 1));
    }
    if (t + 1 < m.horizon)
      shapes &= sized(m.transition[t].size(),
                      static_cast<std::size_t>(m.num_states(t)) * m.num_joint_actions(t) * m.num_states(t + 1),
                      "transition" + at);
  }
  if (!shapes) return out;

  auto check_row = [&](auto&& entry, int n, const std::string& what, const std::string& where, const std::string& path) {
    S sum(0);
    bool negative = false;
    for (int k = 0; k < n; ++k) {
      if (entry(k) < S(0)) negative = true;
      sum += entry(k);
    }
    if (negative) add("nonnegative", what + " has a negative entry at " + where, path);
    if (abs_diff(sum, S(1)) > kNormalizationTolerance) add("stochastic", what + " row not stochastic at " + where, path);
  };

  check_row([&](int k) { return m.init[k]; }, m.num_states(0), "initial distribution", "t=1", ptr({"init"}));
  for (const auto& p : m.init)
    if (!(p > S(0))) {
      add("full support", "initial distribution lacks full support", ptr({"init"}));
      break;
    }
  for (int t = 0; t < m.horizon; ++t) {
    for (int x = 0; x < m.num_states(t); ++x) {
      for (int jp = 0; jp < m.num_prev_joint(t); ++jp) {
        std::string where = "t=" + std::to_string(t + 1) + ", x=" + std::to_string(x) +
                            (t == 0 ? std::string(", a=null") : ", a=" + detail::tuple_string(m.decode_joint(t - 1, jp)));
        check_row([&](int z) { return m.common(t, x, jp, z); }, m.num_common(t), "common observation kernel", where,
                  ptr({"common_kernel", num(t), num(x), num(jp)}));
        for (int i = 0; i < m.num_agents; ++i)
          check_row([&](int y) { return m.priv(t, i, x, jp, y); }, m.num_private(t, i),
                    "private observation kernel", where + ", i=" + std::to_string(i + 1),
                    ptr({"private_kernel", num(t), num(i), num(x), num(jp)}));
      }
      if (t + 1 < m.horizon) {
        for (int ja = 0; ja < m.num_joint_actions(t); ++ja) {
          std::string where = "t=" + std::to_string(t + 1) + ", x=" + std::to_string(x) +
                              ", a=" + detail::tuple_string(m.decode_joint(t, ja));
          // Transition rows keep the historical wording "kernel row".
          S sum(0);
          bool negative = false;
          for (int x2 = 0; x2 < m.num_states(t + 1); ++x2) {
            if (m.trans(t, x, ja, x2) < S(0)) negative = true;
            sum += m.trans(t, x, ja, x2);
          }
          const auto path = ptr({"transition", num(t), num(x), num(ja)});
          if (negative) add("nonnegative", "transition kernel has a negative entry at " + where, path);
          if (abs_diff(sum, S(1)) > kNormalizationTolerance) add("stochastic", "kernel row not stochastic at " + where, path);
        }
      }
    }
  }

  if (!m.revealed.empty() && m.revealed.size() != static_cast<std::size_t>(m.horizon - 1)) {
    add("shape", "revealed-action table must have one entry per stage 1..T-1");
    return out;
  }
  for (int t = 0; t < static_cast<int>(m.revealed.size()); ++t) {
    if (m.revealed[t].size() != static_cast<std::size_t>(m.num_agents)) {
      add("shape", "revealed-action table at t=" + std::to_string(t + 1) + " must list every agent");
      continue;
    }
    for (int i = 0; i < m.num_agents; ++i) {
      const auto& map = m.revealed[t][i];
      if (map.empty()) continue;
      std::string where = "t=" + std::to_string(t + 1) + ", i=" + std::to_string(i + 1);
      const auto path = ptr({"revealed", num(t), num(i)});
      if (map.size() != static_cast<std::size_t>(m.num_common(t + 1))) {
        add("revealed", "revealed-action map at " + where + " must cover every next common observation", path);
        continue;
      }
      bool consistent = true;
      for (int z = 0; z < m.num_common(t + 1) && consistent; ++z) {
        if (map[z] < 0 || map[z] >= m.num_actions(t, i)) {
          add("revealed", "revealed-action map at " + where + " names an unknown action", path);
          consistent = false;
          break;
        }
        for (int x2 = 0; x2 < m.num_states(t + 1) && consistent; ++x2)
          for (int ja = 0; ja < m.num_joint_actions(t) && consistent; ++ja)
            if (m.common(t + 1, x2, ja, z) > S(0) && m.agent_action(t, ja, i) != map[z]) {
              add("revealed", "common observation z=" + std::to_string(z) + " at t=" + std::to_string(t + 2) +
                                  " does not reveal agent " + std::to_string(i + 1) + "'s action at " + where,
                  path);
              consistent = false;
            }
      }
    }
  }
  return out;
}

template <class S>
void require_valid(const BasicTeamModel<S>& m) {
  auto d = validate_model(m);
  if (!d.empty()) throw SpecError("invalid model: " + d.front().message);
}

/// One agent's history split into its common and private parts.
struct AgentHistory {
  int agent = 0;
  int stage = 0;
  std::vector<int> z;  ///< z_{1:t}
  std::vector<int> y;  ///< y_{1:t}^i
  std::vector<int> a;  ///< a_{1:t-1}^i; -1 where the action is part of the common history

  bool operator==(const AgentHistory&) const = default;
};

/**
 * Mixed-radix indexing of agent histories. The common index is z_{1:t} with
 * z_1 most significant; the private index interleaves (y_1, a_1, y_2, ...)
 * chronologically, skipping revealed actions. history = c * |P_t^i| + p, so
 * index order is lexicographic order over (z_{1:t}, y_1, a_1, ..., y_t).
 */
class HistoryIndex {
 public:
  template <class S>
  explicit HistoryIndex(const BasicTeamModel<S>& m)
      : horizon_(m.horizon), agents_(m.num_agents) {
    common_.resize(horizon_);
    private_.assign(horizon_, std::vector<std::uint64_t>(agents_));
    z_.resize(horizon_);
    y_.assign(horizon_, std::vector<int>(agents_));
    a_.assign(horizon_, std::vector<int>(agents_));
    hidden_.assign(horizon_, std::vector<char>(agents_, 0));
    for (int t = 0; t < horizon_; ++t) {
      z_[t] = m.num_common(t);
      common_[t] = sat_mul(t ? common_[t - 1] : 1, z_[t]);
      for (int i = 0; i < agents_; ++i) {
        y_[t][i] = m.num_private(t, i);
        a_[t][i] = m.num_actions(t, i);
        hidden_[t][i] = !m.is_revealed(t, i);
        std::uint64_t prev = t ? sat_mul(private_[t - 1][i], hidden_[t - 1][i] ? a_[t - 1][i] : 1) : 1;
        private_[t][i] = sat_mul(prev, y_[t][i]);
      }
    }
  }

  int horizon() const { return horizon_; }
  int agents() const { return agents_; }
  std::uint64_t common_count(int t) const { return common_[t]; }
  std::uint64_t private_count(int t, int i) const { return private_[t][i]; }
  std::uint64_t count(int t, int i) const { return sat_mul(common_[t], private_[t][i]); }
  /// Whether agent i's stage-t action stays private.
  bool action_private(int t, int i) const { return hidden_[t][i]; }

  std::uint64_t common_first(int z) const { return static_cast<std::uint64_t>(z); }
  std::uint64_t common_next(int t, std::uint64_t c_prev, int z) const { return c_prev * z_[t] + z; }
  std::uint64_t private_first(int, int y) const { return static_cast<std::uint64_t>(y); }
  /// Private index at stage t from the stage t-1 index, a_{t-1}^i and y_t^i.
  std::uint64_t private_next(int t, int i, std::uint64_t p_prev, int a_prev, int y) const {
    std::uint64_t p = hidden_[t - 1][i] ? p_prev * a_[t - 1][i] + a_prev : p_prev;
    return p * y_[t][i] + y;
  }
  std::uint64_t compose(int t, int i, std::uint64_t c, std::uint64_t p) const { return c * private_[t][i] + p; }

  AgentHistory decode(int t, int i, std::uint64_t h) const {
    AgentHistory out;
    out.agent = i;
    out.stage = t;
    std::uint64_t c = h / private_[t][i];
    std::uint64_t p = h % private_[t][i];
    out.z.assign(t + 1, 0);
    for (int k = t; k >= 0; --k) {
      out.z[k] = static_cast<int>(c % z_[k]);
      c /= z_[k];
    }
    out.y.assign(t + 1, 0);
    out.a.assign(t, -1);
    for (int k = t; k >= 0; --k) {
      out.y[k] = static_cast<int>(p % y_[k][i]);
      p /= y_[k][i];
      if (k > 0 && hidden_[k - 1][i]) {
        out.a[k - 1] = static_cast<int>(p % a_[k - 1][i]);
        p /= a_[k - 1][i];
      }
    }
    return out;
  }

  std::uint64_t encode(const AgentHistory& h) const {
    const int t = h.stage, i = h.agent;
    std::uint64_t c = common_first(h.z[0]);
    std::uint64_t p = private_first(i, h.y[0]);
    for (int k = 1; k <= t; ++k) {
      c = common_next(k, c, h.z[k]);
      p = private_next(k, i, p, std::max(h.a[k - 1], 0), h.y[k]);
    }
    return compose(t, i, c, p);
  }

 private:
  int horizon_;
  int agents_;
  std::vector<std::uint64_t> common_;
  std::vector<std::vector<std::uint64_t>> private_;
  std::vector<int> z_;
  std::vector<std::vector<int>> y_, a_;
  std::vector<std::vector<char>> hidden_;
};

/**
 * Full-history strategy profile: for every (t, i) a row-major table
 * [history][action] over all syntactic histories.
 */
template <class S>
struct BasicHistoryPolicy {
  std::vector<std::vector<std::vector<S>>> table;  ///< [t][i]
  std::vector<std::vector<int>> num_actions;       ///< [t][i]

  std::span<const S> row(int t, int i, std::uint64_t h) const {
    const std::size_t n = static_cast<std::size_t>(num_actions[t][i]);
    return {table[t][i].data() + h * n, n};
  }
  std::span<S> row(int t, int i, std::uint64_t h) {
    const std::size_t n = static_cast<std::size_t>(num_actions[t][i]);
    return {table[t][i].data() + h * n, n};
  }
  void set_action(int t, int i, std::uint64_t h, int a) {
    auto r = row(t, i, h);
    std::fill(r.begin(), r.end(), S(0));
    r[a] = S(1);
  }
  /// Action of a deterministic row (first action with positive mass).
  int action(int t, int i, std::uint64_t h) const {
    auto r = row(t, i, h);
    for (std::size_t a = 0; a < r.size(); ++a)
      if (r[a] > S(0)) return static_cast<int>(a);
    return 0;
  }
  std::uint64_t histories(int t, int i) const { return table[t][i].size() / num_actions[t][i]; }
};

using HistoryPolicy = BasicHistoryPolicy<double>;

/// Every agent plays action 0 at every history.
template <class S>
BasicHistoryPolicy<S> constant_policy(const BasicTeamModel<S>& m, std::uint64_t cap = kDefaultSizeCap) {
  HistoryIndex idx(m);
  BasicHistoryPolicy<S> g;
  g.table.assign(m.horizon, std::vector<std::vector<S>>(m.num_agents));
  g.num_actions.assign(m.horizon, std::vector<int>(m.num_agents));
  for (int t = 0; t < m.horizon; ++t)
    for (int i = 0; i < m.num_agents; ++i) {
      guard("histories", idx.count(t, i), cap);
      const int na = m.num_actions(t, i);
      g.num_actions[t][i] = na;
      g.table[t][i].assign(idx.count(t, i) * na, S(0));
      for (std::uint64_t h = 0; h < idx.count(t, i); ++h) g.table[t][i][h * na] = S(1);
    }
  return g;
}

template <class S>
BasicHistoryPolicy<S> uniform_policy(const BasicTeamModel<S>& m, std::uint64_t cap = kDefaultSizeCap) {
  auto g = constant_policy(m, cap);
  for (int t = 0; t < m.horizon; ++t)
    for (int i = 0; i < m.num_agents; ++i)
      std::fill(g.table[t][i].begin(), g.table[t][i].end(), S(1) / S(m.num_actions(t, i)));
  return g;
}

/// Random profile: one-hot rows, or integer weights 1..20 per action, normalized.
template <class S, class Rng>
BasicHistoryPolicy<S> random_policy(const BasicTeamModel<S>& m, Rng& rng, bool deterministic,
                                    std::uint64_t cap = kDefaultSizeCap) {
  auto g = constant_policy(m, cap);
  for (int t = 0; t < m.horizon; ++t)
    for (int i = 0; i < m.num_agents; ++i) {
      const int na = m.num_actions(t, i);
      for (std::uint64_t h = 0; h < g.histories(t, i); ++h) {
        auto r = g.row(t, i, h);
        if (deterministic) {
          g.set_action(t, i, h, static_cast<int>(rng() % static_cast<std::uint64_t>(na)));
          continue;
        }
        S total(0);
        for (int a = 0; a < na; ++a) {
          r[a] = S(static_cast<int>(1 + rng() % 20));
          total += r[a];
        }
        for (int a = 0; a < na; ++a) r[a] /= total;
      }
    }
  return g;
}

/// Deterministic profile from a rule fn(t, i, history) -> action.
template <class S, class Fn>
BasicHistoryPolicy<S> deterministic_policy(const BasicTeamModel<S>& m, Fn&& fn,
                                           std::uint64_t cap = kDefaultSizeCap) {
  HistoryIndex idx(m);
  auto g = constant_policy(m, cap);
  for (int t = 0; t < m.horizon; ++t)
    for (int i = 0; i < m.num_agents; ++i)
      for (std::uint64_t h = 0; h < idx.count(t, i); ++h) g.set_action(t, i, h, fn(t, i, idx.decode(t, i, h)));
  return g;
}

template <class To, class From>
BasicHistoryPolicy<To> policy_cast(const BasicHistoryPolicy<From>& g) {
  BasicHistoryPolicy<To> out;
  out.num_actions = g.num_actions;
  out.table.resize(g.table.size());
  for (std::size_t t = 0; t < g.table.size(); ++t)
    for (const auto& tab : g.table[t]) {
      out.table[t].emplace_back();
      out.table[t].back().reserve(tab.size());
      for (const auto& v : tab) out.table[t].back().push_back(scalar_cast<To>(v));
    }
  return out;
}

}  // namespace teamdp
