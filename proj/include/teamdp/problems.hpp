#pragma once

#include "compression.hpp"

#include <map>
#include <memory>

namespace teamdp {

/**
 * Two agents, two stages, binary state and actions. Each agent sees the
 * state through a binary symmetric channel (flip 0.1 and 0.2); the joint
 * first-stage action is common at stage 2. Action (0,0) keeps the state
 * with probability 0.8, (1,1) flips it with probability 0.8, mixed actions
 * give a fair coin. Payoff 1 iff both actions equal the state.
 */
template <class S>
BasicTeamModel<S> tiny_team(bool share_actions = true) {
  using tr = scalar_traits<S>;
  BasicTeamModel<S> m;
  m.name = share_actions ? "TinyTeam" : "TinyTeam-private";
  m.horizon = 2;
  m.num_agents = 2;
  m.states.assign(2, {"0", "1"});
  m.actions.assign(2, {{"0", "1"}, {"0", "1"}});
  m.private_obs.assign(2, {{"0", "1"}, {"0", "1"}});
  m.common_obs = {{"null"}, share_actions ? std::vector<std::string>{"00", "01", "10", "11"} : std::vector<std::string>{"null"}};
  m.allocate();
  m.init = {tr::ratio(1, 2), tr::ratio(1, 2)};
  const S eps[2] = {tr::ratio(1, 10), tr::ratio(2, 10)};
  for (int t = 0; t < 2; ++t)
    for (int x = 0; x < 2; ++x)
      for (int jp = 0; jp < m.num_prev_joint(t); ++jp) {
        for (int i = 0; i < 2; ++i)
          for (int y = 0; y < 2; ++y) m.priv_ref(t, i, x, jp, y) = y == x ? S(1) - eps[i] : eps[i];
        m.common_ref(t, x, jp, share_actions && t > 0 ? jp : 0) = S(1);
      }
  for (int x = 0; x < 2; ++x)
    for (int ja = 0; ja < 4; ++ja) {
      S keep = ja == 0 ? tr::ratio(8, 10) : ja == 3 ? tr::ratio(2, 10) : tr::ratio(1, 2);
      m.trans_ref(0, x, ja, x) = keep;
      m.trans_ref(0, x, ja, 1 - x) = S(1) - keep;
    }
  for (int t = 0; t < 2; ++t)
    for (int x = 0; x < 2; ++x)
      for (int ja = 0; ja < 4; ++ja) {
        auto a = m.decode_joint(t, ja);
        m.set_team_utility(t, x, ja, a[0] == x && a[1] == x ? S(1) : S(0));
      }
  if (share_actions)
    for (int i = 0; i < 2; ++i) {
      m.revealed[0][i].resize(4);
      for (int z = 0; z < 4; ++z) m.revealed[0][i][z] = m.agent_action(0, z, i);
    }
  return m;
}

struct RandomTeamOptions {
  int agents = 2;
  int horizon = 2;
  int max_states = 3;
  int max_actions = 3;
  int max_private = 3;
  int max_common = 3;
  bool reveal_first_action = false;  ///< z_{t+1} is agent 1's action a_t^1
};

/**
 * Random team with exact rational tables. Kernel rows take integer weights
 * 0..3 (at least one positive), the initial law weights 1..3, utilities
 * integers 0..4 shared by the team.
 */
template <class S, class Rng>
BasicTeamModel<S> random_team(Rng& rng, const RandomTeamOptions& opt) {
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  auto labels = [](int n) {
    std::vector<std::string> v;
    for (int k = 0; k < n; ++k) v.push_back(std::to_string(k));
    return v;
  };
  auto fill_row = [&](auto&& at, int n, int lo) {
    std::vector<int> w(n);
    int total = 0;
    while (total == 0) {
      total = 0;
      for (auto& v : w) total += v = pick(lo, 3);
    }
    for (int k = 0; k < n; ++k) at(k) = S(w[k]) / S(total);
  };
  const int T = opt.horizon, N = opt.agents;
  BasicTeamModel<S> m;
  m.name = "random";
  m.horizon = T;
  m.num_agents = N;
  const int X = pick(2, opt.max_states);
  std::vector<int> A(N), Y(N);
  for (int i = 0; i < N; ++i) {
    A[i] = pick(2, opt.max_actions);
    Y[i] = pick(1, opt.max_private);
  }
  const int Z = pick(1, opt.max_common);
  m.states.assign(T, labels(X));
  m.actions.assign(T, {});
  m.private_obs.assign(T, {});
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < N; ++i) {
      m.actions[t].push_back(labels(A[i]));
      m.private_obs[t].push_back(labels(Y[i]));
    }
  for (int t = 0; t < T; ++t) m.common_obs.push_back(labels(t > 0 && opt.reveal_first_action ? A[0] : Z));
  m.allocate();
  fill_row([&](int k) -> S& { return m.init[k]; }, X, 1);
  for (int t = 0; t + 1 < T; ++t)
    for (int x = 0; x < X; ++x)
      for (int ja = 0; ja < m.num_joint_actions(t); ++ja) fill_row([&](int k) -> S& { return m.trans_ref(t, x, ja, k); }, X, 0);
  for (int t = 0; t < T; ++t)
    for (int x = 0; x < X; ++x)
      for (int jp = 0; jp < m.num_prev_joint(t); ++jp) {
        for (int i = 0; i < N; ++i) fill_row([&](int k) -> S& { return m.priv_ref(t, i, x, jp, k); }, Y[i], 0);
        if (t > 0 && opt.reveal_first_action)
          m.common_ref(t, x, jp, m.agent_action(t - 1, jp, 0)) = S(1);
        else
          fill_row([&](int k) -> S& { return m.common_ref(t, x, jp, k); }, Z, 0);
      }
  for (int t = 0; t < T; ++t)
    for (int x = 0; x < X; ++x)
      for (int ja = 0; ja < m.num_joint_actions(t); ++ja) m.set_team_utility(t, x, ja, S(pick(0, 4)));
  if (opt.reveal_first_action)
    for (int t = 0; t + 1 < T; ++t) {
      m.revealed[t][0].resize(A[0]);
      for (int z = 0; z < A[0]; ++z) m.revealed[t][0][z] = z;
    }
  return m;
}

/// A built model together with the compression that comes with it.
template <class S>
struct ProblemInstance {
  BasicTeamModel<S> model;
  CompressionScheme scheme;
};

namespace detail {

inline int ipow(int b, int e) {
  int r = 1;
  while (e-- > 0) r *= b;
  return r;
}

inline std::string join_labels(const std::vector<std::string>& parts, const char* sep) {
  std::string s;
  for (std::size_t k = 0; k < parts.size(); ++k) s += (k ? sep : "") + parts[k];
  return s;
}

}  // namespace detail

/**
 * Markov source of order k over `alphabet` symbols. kernel[l][ctx] is the
 * distribution of the next symbol given the last l symbols (mixed radix,
 * oldest first) for l = 0..k; row 0 is the first-symbol distribution.
 */
template <class S>
struct SourceCodingParams {
  int order = 1;
  int delay = 0;
  int horizon = 3;
  int alphabet = 2;
  int symbols = 2;  ///< channel alphabet size
  std::vector<std::vector<std::vector<S>>> kernel;
  std::vector<std::vector<S>> distortion;  ///< [x][estimate]
};

/// I.i.d. source with the given symbol distribution and Hamming distortion.
template <class S>
SourceCodingParams<S> iid_source_coding(std::vector<S> dist, int symbols, int horizon, int delay = 0) {
  SourceCodingParams<S> p;
  p.delay = delay;
  p.horizon = horizon;
  p.alphabet = static_cast<int>(dist.size());
  p.symbols = symbols;
  p.kernel = {{dist}, std::vector<std::vector<S>>(dist.size(), dist)};
  p.distortion.assign(dist.size(), std::vector<S>(dist.size(), S(1)));
  for (std::size_t x = 0; x < dist.size(); ++x) p.distortion[x][x] = S(0);
  return p;
}

/**
 * Real-time encoder (agent 1) and decoder (agent 2). The state is the window
 * of the last max(k, delay+2) source symbols, so the symbol being estimated
 * is still in it. The encoder sees X_t; its symbol M_t is its action and
 * arrives as the next common observation. The decoder's action at stage t
 * estimates X_{t-1-delay} (a single dummy action before that). Scheme: the
 * encoder keeps the state window, the decoder keeps nothing.
 */
template <class S>
ProblemInstance<S> build_source_coding(const SourceCodingParams<S>& p, std::uint64_t cap = kDefaultSizeCap) {
  const int k = p.order, d = p.delay, T = p.horizon, X = p.alphabet, M = p.symbols;
  if (k < 1) throw SpecError("source coding: Markov order must be at least 1");
  if (d < 0) throw SpecError("source coding: delay must be non-negative");
  if (T < 1) throw SpecError("source coding: horizon must be positive");
  if (X < 1 || M < 1) throw SpecError("source coding: alphabets must be non-empty");
  if (static_cast<int>(p.kernel.size()) != k + 1) throw SpecError("source coding: kernel must list context lengths 0..k");
  for (int l = 0; l <= k; ++l) {
    if (static_cast<int>(p.kernel[l].size()) != detail::ipow(X, l))
      throw SpecError("source coding: kernel for context length " + std::to_string(l) + " has the wrong size");
    for (const auto& row : p.kernel[l])
      if (static_cast<int>(row.size()) != X) throw SpecError("source coding: kernel row has the wrong size");
  }
  if (static_cast<int>(p.distortion.size()) != X) throw SpecError("source coding: distortion must be |X| x |X|");
  for (const auto& row : p.distortion)
    if (static_cast<int>(row.size()) != X) throw SpecError("source coding: distortion must be |X| x |X|");

  const int W = std::max(k, d + 2);
  std::vector<int> len(T);
  for (int t = 0; t < T; ++t) {
    len[t] = std::min(t + 1, W);
    guard("augmented states", static_cast<std::uint64_t>(std::pow(static_cast<double>(X), len[t])), cap);
  }
  BasicTeamModel<S> m;
  m.name = "SourceCoding";
  m.horizon = T;
  m.num_agents = 2;
  m.states.resize(T);
  m.actions.resize(T);
  m.private_obs.resize(T);
  m.common_obs.resize(T);
  std::vector<std::string> sym, msg;
  for (int x = 0; x < X; ++x) sym.push_back(std::to_string(x));
  for (int c = 0; c < M; ++c) msg.push_back("m" + std::to_string(c));
  for (int t = 0; t < T; ++t) {
    for (int v = 0; v < detail::ipow(X, len[t]); ++v) {
      std::string s;
      for (int digit : detail::mixed_decode(v, std::vector<int>(len[t], X))) s += (s.empty() ? "" : ".") + sym[digit];
      m.states[t].push_back(s);
    }
    m.actions[t] = {msg, t >= 1 + d ? sym : std::vector<std::string>{"-"}};
    m.private_obs[t] = {sym, {"null"}};
    m.common_obs[t] = t == 0 ? std::vector<std::string>{"null"} : msg;
  }
  m.allocate();
  for (int x = 0; x < X; ++x) m.init[x] = p.kernel[0][0][x];
  for (int t = 0; t < T; ++t) {
    const int n = m.num_states(t);
    for (int v = 0; v < n; ++v) {
      for (int jp = 0; jp < m.num_prev_joint(t); ++jp) {
        m.priv_ref(t, 0, v, jp, v % X) = S(1);
        m.priv_ref(t, 1, v, jp, 0) = S(1);
        m.common_ref(t, v, jp, t == 0 ? 0 : m.agent_action(t - 1, jp, 0)) = S(1);
      }
      if (t + 1 < T) {
        const int ctx_len = std::min(t + 1, k);
        const auto& row = p.kernel[ctx_len][v % detail::ipow(X, ctx_len)];
        const int kept = len[t] == W ? v % detail::ipow(X, W - 1) : v;
        for (int ja = 0; ja < m.num_joint_actions(t); ++ja)
          for (int x = 0; x < X; ++x) m.trans_ref(t, v, ja, kept * X + x) += row[x];
      }
      if (t >= 1 + d) {
        const int target = (v / detail::ipow(X, 1 + d)) % X;
        for (int ja = 0; ja < m.num_joint_actions(t); ++ja)
          m.set_team_utility(t, v, ja, -p.distortion[target][m.agent_action(t, ja, 1)]);
      }
    }
  }
  for (int t = 0; t + 1 < T; ++t) {
    m.revealed[t][0].resize(M);
    std::iota(m.revealed[t][0].begin(), m.revealed[t][0].end(), 0);
  }

  std::vector<std::vector<int>> counts(T, std::vector<int>(2, 1));
  for (int t = 0; t < T; ++t) counts[t][0] = m.num_states(t);
  auto init = [](int i, int y, int) { return i == 0 ? y : 0; };
  auto update = [len, W, X](int t, int i, int prev, int y, int, int) {
    if (i != 0) return 0;
    return (len[t - 1] == W ? prev % detail::ipow(X, W - 1) : prev) * X + y;
  };
  auto states = m.states;
  auto describe = [states](int t, int i, int v) { return i == 0 ? states[t][v] : std::string("-"); };
  return {std::move(m), CompressionScheme("source-window", SchemeKind::Private, counts, init, update, describe)};
}

/**
 * Delayed sharing on top of a base team: at stage t every agent also receives
 * the joint observation and joint action of stage t-d. The augmented state
 * is (x_t, y_t, (y_{t-1}, a_{t-1}), ..., (y_{t-d}, a_{t-d})), truncated at the
 * first stage; private observations read y_t^i off it and the common
 * observation pairs the base common observation with the oldest memory.
 * Scheme: window of the last d private observations and private actions.
 */
template <class S>
ProblemInstance<S> build_delayed_sharing(int d, const BasicTeamModel<S>& base, std::uint64_t cap = kDefaultSizeCap) {
  require_valid(base);
  const int T = base.horizon, N = base.num_agents;
  if (d < 1 || d >= T) throw SpecError("delayed sharing: delay must satisfy 1 <= d < T");
  auto joint_y = [&](int t) {
    std::vector<int> r(N);
    for (int i = 0; i < N; ++i) r[i] = base.num_private(t, i);
    return r;
  };
  // Radices of the augmented state at stage t: x, y_t, then (y, a) pairs newest first.
  std::vector<std::vector<int>> radix(T);
  std::vector<int> depth(T);
  for (int t = 0; t < T; ++t) {
    depth[t] = std::min(t, d);
    radix[t].push_back(base.num_states(t));
    for (int r : joint_y(t)) radix[t].push_back(r);
    for (int k = 1; k <= depth[t]; ++k) {
      for (int r : joint_y(t - k)) radix[t].push_back(r);
      radix[t].push_back(base.num_joint_actions(t - k));
    }
    std::uint64_t n = 1;
    for (int r : radix[t]) n = sat_mul(n, r);
    guard("augmented states", n, cap);
  }
  BasicTeamModel<S> m;
  m.name = base.name + "-delay" + std::to_string(d);
  m.horizon = T;
  m.num_agents = N;
  m.actions = base.actions;
  m.private_obs = base.private_obs;
  m.states.resize(T);
  m.common_obs.resize(T);
  auto joint_action_label = [&](int t, int ja) {
    std::vector<std::string> parts;
    for (int i = 0; i < N; ++i) parts.push_back(base.actions[t][i][base.agent_action(t, ja, i)]);
    return detail::join_labels(parts, ",");
  };
  auto joint_y_label = [&](int t, const std::vector<int>& digits, std::size_t at) {
    std::vector<std::string> parts;
    for (int i = 0; i < N; ++i) parts.push_back(base.private_obs[t][i][digits[at + i]]);
    return detail::join_labels(parts, ",");
  };
  for (int t = 0; t < T; ++t) {
    int n = 1;
    for (int r : radix[t]) n *= r;
    for (int v = 0; v < n; ++v) {
      auto dg = detail::mixed_decode(v, radix[t]);
      std::vector<std::string> parts{base.states[t][dg[0]], joint_y_label(t, dg, 1)};
      std::size_t at = 1 + N;
      for (int k = 1; k <= depth[t]; ++k) {
        parts.push_back(joint_y_label(t - k, dg, at) + "/" + joint_action_label(t - k, dg[at + N]));
        at += N + 1;
      }
      m.states[t].push_back(detail::join_labels(parts, "|"));
    }
    for (int zb = 0; zb < base.num_common(t); ++zb) {
      if (t < d) {
        m.common_obs[t].push_back(base.common_obs[t][zb]);
        continue;
      }
      int nm = base.num_joint_actions(t - d);
      for (int r : joint_y(t - d)) nm *= r;
      std::vector<int> mr = joint_y(t - d);
      mr.push_back(base.num_joint_actions(t - d));
      for (int mv = 0; mv < nm; ++mv) {
        auto dg = detail::mixed_decode(mv, mr);
        m.common_obs[t].push_back(base.common_obs[t][zb] + "|" + joint_y_label(t - d, dg, 0) + "/" +
                                  joint_action_label(t - d, dg[N]));
      }
    }
  }
  m.allocate();

  // Memory block of the oldest pair, as an index into its own radix.
  auto oldest_memory = [&](int t, const std::vector<int>& dg) {
    std::size_t at = 1 + N + static_cast<std::size_t>(d - 1) * (N + 1);
    int v = 0;
    for (int i = 0; i < N; ++i) v = v * base.num_private(t - d, i) + dg[at + i];
    return v * base.num_joint_actions(t - d) + dg[at + N];
  };
  auto obs_prob = [&](int t, int x, int jp, const std::vector<int>& y) {
    S p(1);
    for (int i = 0; i < N; ++i) p *= base.priv(t, i, x, jp, y[i]);
    return p;
  };
  {
    std::vector<int> y(N);
    for (int v = 0; v < m.num_states(0); ++v) {
      auto dg = detail::mixed_decode(v, radix[0]);
      std::copy(dg.begin() + 1, dg.begin() + 1 + N, y.begin());
      m.init[v] = base.init[dg[0]] * obs_prob(0, dg[0], 0, y);
    }
  }
  for (int t = 0; t < T; ++t) {
    const int nm = t >= d ? m.num_common(t) / base.num_common(t) : 1;
    for (int v = 0; v < m.num_states(t); ++v) {
      auto dg = detail::mixed_decode(v, radix[t]);
      const int x = dg[0];
      for (int jp = 0; jp < m.num_prev_joint(t); ++jp) {
        for (int i = 0; i < N; ++i) m.priv_ref(t, i, v, jp, dg[1 + i]) = S(1);
        int mem = t >= d ? oldest_memory(t, dg) : 0;
        // With d = 1 the remembered action is a_{t-1} itself; reading it from jp keeps
        // unreachable states consistent with the revealed-action maps.
        if (t >= d && d == 1) mem += jp - dg[1 + 2 * N];
        for (int zb = 0; zb < base.num_common(t); ++zb) m.common_ref(t, v, jp, zb * nm + mem) = base.common(t, x, jp, zb);
      }
      for (int ja = 0; ja < m.num_joint_actions(t); ++ja) {
        for (int i = 0; i < N; ++i) m.utility[t][i][static_cast<std::size_t>(v) * m.num_joint_actions(t) + ja] = base.util(t, i, x, ja);
        if (t + 1 >= T) continue;
        // Next memories: (y_t, a_t) in front, the rest shifted, the oldest dropped past depth d.
        std::vector<int> next{0};
        std::vector<int> ynext(N, 0);
        next.insert(next.end(), ynext.begin(), ynext.end());
        next.insert(next.end(), dg.begin() + 1, dg.begin() + 1 + N);
        next.push_back(ja);
        const std::size_t keep = static_cast<std::size_t>(depth[t + 1] - 1) * (N + 1);
        next.insert(next.end(), dg.begin() + 1 + N, dg.begin() + 1 + N + keep);
        std::vector<int> yr = joint_y(t + 1);
        int ny = 1;
        for (int r : yr) ny *= r;
        for (int x2 = 0; x2 < base.num_states(t + 1); ++x2) {
          const S px = base.trans(t, x, ja, x2);
          if (px == S(0)) continue;
          for (int yv = 0; yv < ny; ++yv) {
            auto yd = detail::mixed_decode(yv, yr);
            next[0] = x2;
            std::copy(yd.begin(), yd.end(), next.begin() + 1);
            m.trans_ref(t, v, ja, detail::mixed_encode(next, radix[t + 1])) += px * obs_prob(t + 1, x2, ja, yd);
          }
        }
      }
    }
  }
  for (int t = 0; t + 1 < T; ++t)
    for (int i = 0; i < N; ++i) {
      const int nz = m.num_common(t + 1);
      if (d == 1) {
        // z_{t+1} ends with a_t.
        const int na = base.num_joint_actions(t);
        m.revealed[t][i].resize(nz);
        for (int z = 0; z < nz; ++z) m.revealed[t][i][z] = base.agent_action(t, z % na, i);
      } else if (base.is_revealed(t, i)) {
        const int nm = t + 1 >= d ? nz / base.num_common(t + 1) : 1;
        m.revealed[t][i].resize(nz);
        for (int z = 0; z < nz; ++z) m.revealed[t][i][z] = base.revealed[t][i][z / nm];
      }
    }
  auto scheme = window_scheme(m, d, false, cap);
  return {std::move(m), std::move(scheme)};
}

/**
 * Plant shared by the local controller (agent 1, action a1) and the remote
 * controller (agent 2, action a2). transition[((x * A1 + a1) * A2 + a2) * X + x']
 * and utility[(x * A1 + a1) * A2 + a2].
 */
template <class S>
struct RemoteLocalPlant {
  int states = 2;
  int local_actions = 2;
  int remote_actions = 2;
  std::vector<S> init;
  std::vector<S> transition;
  std::vector<S> utility;
};

/**
 * Two-state plant: the remote is paid for naming the state, the local may pay
 * 1/5 to push the state to 0 (probability 9/10); otherwise the state flips
 * with probability 1/5.
 */
template <class S>
RemoteLocalPlant<S> two_state_plant() {
  using tr = scalar_traits<S>;
  RemoteLocalPlant<S> p;
  p.init = {tr::ratio(1, 2), tr::ratio(1, 2)};
  p.transition.assign(16, S(0));
  p.utility.assign(8, S(0));
  for (int x = 0; x < 2; ++x)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2) {
        const int k = (x * 2 + a1) * 2 + a2;
        S to0 = a1 == 1 ? tr::ratio(9, 10) : x == 0 ? tr::ratio(4, 5) : tr::ratio(1, 5);
        p.transition[k * 2] = to0;
        p.transition[k * 2 + 1] = S(1) - to0;
        p.utility[k] = (a2 == x ? S(1) : S(0)) - (a1 == 1 ? tr::ratio(1, 5) : S(0));
      }
  return p;
}

/**
 * Local controller (agent 1) sees the state; the remote controller (agent 2)
 * sees nothing privately. Each stage the channel delivers x_t to the common
 * observation with probability p (else "none"); from stage 2 on the common
 * observation also carries the remote's previous action. GENERAL scheme: the
 * remote keeps (last delivered state or start, remote actions since), the
 * local keeps the same plus x_t. These symbolic values refine the belief on
 * X_t given the last delivery.
 */
template <class S>
ProblemInstance<S> build_remote_local(const S& p, const RemoteLocalPlant<S>& plant, int horizon,
                                      std::uint64_t cap = kDefaultSizeCap) {
  const int X = plant.states, A1 = plant.local_actions, A2 = plant.remote_actions, T = horizon;
  if (!(p > S(0)) || p > S(1)) throw SpecError("remote/local: success probability must lie in (0, 1]");
  if (T < 1) throw SpecError("remote/local: horizon must be positive");
  if (X < 1 || A1 < 1 || A2 < 1) throw SpecError("remote/local: sets must be non-empty");
  if (static_cast<int>(plant.init.size()) != X ||
      plant.transition.size() != static_cast<std::size_t>(X) * A1 * A2 * X ||
      plant.utility.size() != static_cast<std::size_t>(X) * A1 * A2)
    throw SpecError("remote/local: plant tables have the wrong size");
  const bool lossy = p < S(1);

  BasicTeamModel<S> m;
  m.name = "RemoteLocal";
  m.horizon = T;
  m.num_agents = 2;
  std::vector<std::string> xs, a1s, a2s, outs;
  for (int x = 0; x < X; ++x) xs.push_back("x" + std::to_string(x));
  for (int a = 0; a < A1; ++a) a1s.push_back("l" + std::to_string(a));
  for (int a = 0; a < A2; ++a) a2s.push_back("r" + std::to_string(a));
  outs = xs;
  outs.push_back("none");
  m.states.assign(T, xs);
  m.actions.assign(T, {a1s, a2s});
  m.private_obs.assign(T, {xs, {"null"}});
  m.common_obs.resize(T);
  for (int t = 0; t < T; ++t)
    for (const auto& o : outs) {
      if (t == 0) {
        m.common_obs[t].push_back(o);
        continue;
      }
      for (const auto& a : a2s) m.common_obs[t].push_back(o + "/" + a);
    }
  m.allocate();
  m.init = plant.init;
  for (int t = 0; t < T; ++t)
    for (int x = 0; x < X; ++x) {
      for (int jp = 0; jp < m.num_prev_joint(t); ++jp) {
        m.priv_ref(t, 0, x, jp, x) = S(1);
        m.priv_ref(t, 1, x, jp, 0) = S(1);
        const int a2 = t == 0 ? 0 : m.agent_action(t - 1, jp, 1);
        const int stride = t == 0 ? 1 : A2;
        m.common_ref(t, x, jp, x * stride + a2) = p;
        m.common_ref(t, x, jp, X * stride + a2) = S(1) - p;
      }
      for (int ja = 0; ja < m.num_joint_actions(t); ++ja) {
        const int k = (x * A1 + m.agent_action(t, ja, 0)) * A2 + m.agent_action(t, ja, 1);
        m.set_team_utility(t, x, ja, plant.utility[k]);
        if (t + 1 < T)
          for (int x2 = 0; x2 < X; ++x2) m.trans_ref(t, x, ja, x2) = plant.transition[static_cast<std::size_t>(k) * X + x2];
      }
    }
  for (int t = 0; t + 1 < T; ++t) {
    m.revealed[t][1].resize(m.num_common(t + 1));
    for (int z = 0; z < m.num_common(t + 1); ++z) m.revealed[t][1][z] = z % A2;
  }

  // Symbolic belief labels: (anchor state or -1 for the start, remote actions since).
  using Sym = std::pair<int, std::vector<int>>;
  struct Table {
    std::vector<std::vector<Sym>> values;
    std::vector<std::map<Sym, int>> index;
  };
  auto tab = std::make_shared<Table>();
  tab->values.resize(T);
  tab->index.resize(T);
  auto add = [&](int t, Sym s) {
    auto [it, fresh] = tab->index[t].emplace(s, static_cast<int>(tab->values[t].size()));
    if (fresh) tab->values[t].push_back(std::move(s));
  };
  for (int t = 0; t < T; ++t) {
    for (int x = 0; x < X; ++x) add(t, {x, {}});
    if (!lossy) continue;
    if (t == 0) add(t, {-1, {}});
    else
      for (std::size_t k = 0; k < tab->values[t - 1].size(); ++k)
        for (int a = 0; a < A2; ++a) {
          Sym s = tab->values[t - 1][k];
          s.second.push_back(a);
          add(t, std::move(s));
        }
    guard("belief labels", sat_mul(tab->values[t].size(), static_cast<std::uint64_t>(X)), cap);
  }
  std::vector<std::vector<int>> counts(T, std::vector<int>(2));
  for (int t = 0; t < T; ++t) {
    counts[t][1] = static_cast<int>(tab->values[t].size());
    counts[t][0] = counts[t][1] * X;
  }
  // Observations that cannot occur (e.g. "none" when p = 1) map to label 0.
  auto lookup = [tab](int t, const Sym& s) {
    auto it = tab->index[t].find(s);
    return it == tab->index[t].end() ? 0 : it->second;
  };
  auto init = [lookup, X](int i, int y, int z) {
    const int sym = lookup(0, {z < X ? z : -1, {}});
    return i == 0 ? sym * X + y : sym;
  };
  auto update = [tab, lookup, X, A2](int t, int i, int prev, int y, int z, int) {
    const int out = z / A2, a2 = z % A2;
    Sym s{out, {}};
    if (out == X) {
      s = tab->values[t - 1][i == 0 ? prev / X : prev];
      s.second.push_back(a2);
    }
    const int sym = lookup(t, s);
    return i == 0 ? sym * X + y : sym;
  };
  auto describe = [tab, X, xs, a2s](int t, int i, int v) {
    const auto& [anchor, acts] = tab->values[t][i == 0 ? v / X : v];
    std::string s = "(" + (anchor < 0 ? std::string("start") : xs[anchor]);
    for (int a : acts) s += "," + a2s[a];
    s += ")";
    return i == 0 ? xs[v % X] + s : s;
  };
  return {std::move(m), CompressionScheme("delivery-belief", SchemeKind::General, counts, init, update, describe)};
}

}  // namespace teamdp
