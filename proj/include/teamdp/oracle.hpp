#pragma once

#include "enumeration.hpp"
#include "random.hpp"
#include "solver.hpp"

#include <unordered_map>

namespace teamdp {

/// Default cap on enumerated profiles.
inline constexpr std::uint64_t kDefaultProfileCap = 100'000'000;

template <class S>
struct OracleResult {
  S value = S(0);
  BasicHistoryPolicy<S> policy;
  std::uint64_t profiles = 0;
  std::vector<S> flow;
  /// Agent optimized by exact best response instead of enumeration (-1 if none).
  int responder = -1;
};

namespace detail {

/**
 * Exact best response of agent b against deterministic rules of the other
 * agents, by backward induction over b's histories. The forest must have
 * been built with all-ones rows for b, so node weights do not depend on b's
 * actions.
 */
template <class S>
struct BestResponse {
  S value = S(0);
  std::vector<std::unordered_map<std::uint64_t, int>> action;  ///< [t] history -> action
};

template <class S>
BestResponse<S> best_response(const Forest<S>& f, const RuleSet<S>& rules, int b) {
  const auto& m = f.model();
  const int T = m.horizon, N = m.num_agents;
  BestResponse<S> br;
  br.action.resize(T);
  std::vector<S> v_next;                             // V at stage t+1 slots
  std::vector<std::pair<std::size_t, int>> parent_next;  // (slot at t, action) for each slot at t+1
  for (int t = T - 1; t >= 0; --t) {
    const auto& st = f.stage(t);
    const int A = m.num_actions(t, b);
    std::unordered_map<std::uint64_t, std::size_t> slot;
    std::vector<std::uint64_t> hist;
    std::vector<std::size_t> node_slot(st.size());
    for (int n = 0; n < static_cast<int>(st.size()); ++n) {
      const std::uint64_t h = f.history(t, n, b);
      auto [it, fresh] = slot.emplace(h, hist.size());
      if (fresh) hist.push_back(h);
      node_slot[n] = it->second;
    }
    std::vector<S> q(hist.size() * A, S(0));
    std::vector<int> a(N);
    for (int n = 0; n < static_cast<int>(st.size()); ++n) {
      for (int j = 0; j < N; ++j)
        if (j != b) {
          auto r = rules[t].row(j, f.history(t, n, j));
          a[j] = static_cast<int>(std::find(r.begin(), r.end(), S(1)) - r.begin());
        }
      for (int ab = 0; ab < A; ++ab) {
        a[b] = ab;
        q[node_slot[n] * A + ab] += st.prob[n] * m.util(t, 0, st.x[n], m.encode_joint(t, a));
      }
    }
    for (std::size_t k = 0; k < v_next.size(); ++k) q[parent_next[k].first * A + parent_next[k].second] += v_next[k];
    std::vector<S> v(hist.size());
    for (std::size_t k = 0; k < hist.size(); ++k) {
      int arg = 0;
      for (int ab = 1; ab < A; ++ab)
        if (scalar_traits<S>::better(q[k * A + ab], q[k * A + arg])) arg = ab;
      v[k] = q[k * A + arg];
      br.action[t][hist[k]] = arg;
    }
    if (t > 0) {
      // Each stage-t history of b has a unique parent history and own action.
      parent_next.assign(hist.size(), {0, 0});
      std::vector<char> done(hist.size(), 0);
      const auto& prev = f.stage(t - 1);
      std::unordered_map<std::uint64_t, std::size_t> prev_slot;
      std::size_t next_id = 0;
      for (int n = 0; n < static_cast<int>(prev.size()); ++n) {
        auto [it, fresh] = prev_slot.emplace(f.history(t - 1, n, b), next_id);
        if (fresh) ++next_id;
      }
      for (int n = 0; n < static_cast<int>(st.size()); ++n) {
        const std::size_t k = node_slot[n];
        if (done[k]) continue;
        done[k] = 1;
        parent_next[k] = {prev_slot.at(f.history(t - 1, st.parent[n], b)), m.agent_action(t - 1, st.prev_joint[n], b)};
      }
    }
    v_next = std::move(v);
    if (t == 0)
      for (const auto& val : v_next) br.value += val;
  }
  return br;
}

}  // namespace detail

/**
 * Optimum over all deterministic full-history profiles. The agent with the
 * most histories is optimized by exact best response; the others' rules are
 * enumerated on their positive-probability histories stage by stage.
 */
template <class S>
OracleResult<S> brute_force_optimal(const BasicTeamModel<S>& m, std::uint64_t cap = kDefaultProfileCap) {
  require_valid(m);
  if (!m.is_team()) throw NonTeamUtility();
  HistoryIndex idx(m);
  int b = 0;
  std::uint64_t most = 0;
  for (int i = 0; i < m.num_agents; ++i) {
    std::uint64_t n = 0;
    for (int t = 0; t < m.horizon; ++t) n = sat_add(n, idx.count(t, i));
    if (n > most) {
      most = n;
      b = i;
    }
  }
  std::vector<char> free(m.num_agents, 0);
  free[b] = 1;
  auto key = [](const Forest<S>& f, int t, int n, int i) { return f.history(t, n, i); };

  OracleResult<S> out;
  out.responder = b;
  bool have = false;
  RuleSet<S> best_rules;
  detail::BestResponse<S> best_br;
  Forest<S> f(m);
  auto visit = [&](const Forest<S>& forest, const RuleSet<S>& rules) {
    auto br = detail::best_response(forest, rules, b);
    if (!have || scalar_traits<S>::better(br.value, out.value)) {
      have = true;
      out.value = br.value;
      best_rules = rules;
      best_br = std::move(br);
    }
  };
  auto en = make_enumerator(f, m.horizon, free, key, visit);
  const std::uint64_t count = en.count(cap);
  guard("deterministic profiles", count, cap);
  out.profiles = en.exhaustive(kSaturated);

  out.policy = constant_policy(m);
  for (int t = 0; t < m.horizon; ++t) {
    for (int j = 0; j < m.num_agents; ++j)
      if (j != b)
        for (std::size_t k = 0; k < best_rules[t].keys[j].size(); ++k) {
          const auto& r = best_rules[t].rows[j][k];
          out.policy.set_action(t, j, best_rules[t].keys[j][k],
                                static_cast<int>(std::find(r.begin(), r.end(), S(1)) - r.begin()));
        }
    for (const auto& [h, a] : best_br.action[t]) out.policy.set_action(t, b, h, a);
  }
  out.flow = expected_utility(m, out.policy).flow;
  return out;
}

/**
 * Optimum over deterministic SIB policies on the belief graph: prescriptions
 * at every node reachable under the policy's own earlier choices are
 * enumerated for stages 1..T-1; at the last stage each node takes its best
 * immediate prescription. Every candidate is lifted to a full-history profile
 * and evaluated exactly.
 */
template <class S>
OracleResult<S> brute_force_sib_optimal(const BasicTeamModel<S>& m, const CompressionScheme& s,
                                        std::uint64_t cap = kDefaultProfileCap) {
  if (!m.is_team()) throw NonTeamUtility();
  auto g = expand_belief_graph(m, s);
  const int T = m.horizon;
  // Best last-stage prescription per node.
  std::vector<std::int64_t> last_choice(g.stages[T - 1].size(), 0);
  for (std::size_t n = 0; n < g.stages[T - 1].size(); ++n) {
    S best(0);
    for (std::uint64_t p = 0; p < g.stages[T - 1][n].prescriptions; ++p) {
      S q = immediate_reward(m, g, T - 1, static_cast<int>(n), p);
      if (p == 0 || scalar_traits<S>::better(q, best)) {
        best = q;
        last_choice[n] = static_cast<std::int64_t>(p);
      }
    }
  }
  OracleResult<S> out;
  bool have = false;
  SIBPolicy sigma;
  sigma.choice.resize(T);
  for (int t = 0; t < T; ++t) sigma.choice[t].assign(g.stages[t].size(), -1);
  sigma.choice[T - 1] = last_choice;

  std::function<void(int, const std::vector<int>&)> rec = [&](int t, const std::vector<int>& nodes) {
    if (t == T - 1) {
      if (++out.profiles > cap) throw SizeGuardError("SIB policies", out.profiles, cap);
      auto lifted = lift_to_history_policy(m, s, g, sigma);
      auto v = expected_utility(m, lifted);
      if (!have || scalar_traits<S>::better(v.total, out.value)) {
        have = true;
        out.value = v.total;
        out.policy = std::move(lifted);
        out.flow = v.flow;
      }
      return;
    }
    std::vector<std::uint64_t> digit(nodes.size(), 0);
    while (true) {
      std::vector<int> next;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        sigma.choice[t][nodes[k]] = static_cast<std::int64_t>(digit[k]);
        for (const auto& e : g.stages[t][nodes[k]].edges[digit[k]]) next.push_back(e.child);
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      rec(t + 1, next);
      int k = static_cast<int>(nodes.size()) - 1;
      while (k >= 0 && ++digit[k] == g.stages[t][nodes[k]].prescriptions) digit[k--] = 0;
      if (k < 0) break;
    }
    for (int n : nodes) sigma.choice[t][n] = -1;
  };
  std::vector<int> roots;
  for (const auto& r : g.roots) roots.push_back(r.child);
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  rec(0, roots);
  return out;
}

/// Histories of one (pi, s^i) cell in index order, with conditional and cumulative probabilities.
template <class S>
struct ResidualCell {
  std::vector<std::uint64_t> histories;
  std::vector<S> prob;
  std::vector<S> cum;

  /// h^{i,l} with l = min{k : r <= cum_k}; r = 0 gives the first history.
  std::uint64_t inverse(double r) const {
    for (std::size_t k = 0; k < cum.size(); ++k)
      if (r <= scalar_traits<S>::to_double(cum[k])) return histories[k];
    return histories.back();
  }
};

/**
 * Conditional history laws p(h^i | pi_t, s_t^i) under a profile. Beliefs are
 * numbered per stage in order of first appearance; pi_of_common maps each
 * positive-probability common history to its belief.
 */
template <class S>
struct ResidualCode {
  std::vector<std::map<std::uint64_t, int>> pi_of_common;                    ///< [t]
  std::vector<std::vector<std::map<std::pair<int, int>, ResidualCell<S>>>> cells;  ///< [t][i][(pi, s^i)]
  std::vector<std::string> log;

  const ResidualCell<S>& cell(int t, int i, int pi, int s) const { return cells[t][i].at({pi, s}); }
};

namespace detail {

template <class S>
std::vector<int> stage_beliefs(const Forest<S>& f, const std::vector<std::vector<int>>& counts, int t,
                               std::map<std::uint64_t, int>& pi_of_common) {
  typename scalar_traits<S>::template key_map<int> ids;
  for (const auto& [c, b] : sib_beliefs(f, counts, t)) {
    auto [it, fresh] = ids.emplace(belief_key(b), static_cast<int>(ids.size()));
    pi_of_common[c] = it->second;
  }
  const auto& st = f.stage(t);
  std::vector<int> pi(st.size());
  for (std::size_t n = 0; n < st.size(); ++n) pi[n] = pi_of_common.at(st.common[n]);
  return pi;
}

}  // namespace detail

template <class S>
ResidualCode<S> build_residual_code(const BasicTeamModel<S>& m, const CompressionScheme& s,
                                    const BasicHistoryPolicy<S>& g) {
  const int T = m.horizon, N = m.num_agents;
  auto f = build_forest(m, g, &s);
  ResidualCode<S> code;
  code.pi_of_common.resize(T);
  code.cells.assign(T, std::vector<std::map<std::pair<int, int>, ResidualCell<S>>>(N));
  for (int t = 0; t < T; ++t) {
    const auto& st = f.stage(t);
    auto pi = detail::stage_beliefs(f, s.counts(), t, code.pi_of_common[t]);
    for (int i = 0; i < N; ++i) {
      std::map<std::pair<int, int>, std::map<std::uint64_t, S>> mass;
      for (std::size_t n = 0; n < st.size(); ++n) {
        if (!(st.prob[n] > S(0))) {
          code.log.push_back("zero-probability node skipped at t=" + std::to_string(t + 1));
          continue;
        }
        mass[{pi[n], st.label[n * N + i]}][f.history(t, static_cast<int>(n), i)] += st.prob[n];
      }
      for (auto& [key, hs] : mass) {
        ResidualCell<S> c;
        S total(0);
        for (const auto& [h, p] : hs) total += p;
        S acc(0);
        for (const auto& [h, p] : hs) {
          c.histories.push_back(h);
          c.prob.push_back(p / total);
          acc += p / total;
          c.cum.push_back(acc);
        }
        code.cells[t][i].emplace(key, std::move(c));
      }
    }
  }
  return code;
}

struct TransferStage {
  double pi_s_deviation = 0;  ///< sup-norm between the (pi_t, s_t) laws
  double flow_g = 0;          ///< exact E[u_t] under g
  double flow_sigma = 0;      ///< exact E[u_t] under the construction
  double mc_mean = 0;
  double mc_stderr = 0;
  bool within_3sigma = true;
};

struct TransferReport {
  std::vector<TransferStage> stages;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  double tolerance = 1e-9;
  std::string failure;  ///< empty unless the construction left g's support

  bool exact_match() const {
    if (!failure.empty()) return false;
    for (const auto& s : stages)
      if (s.pi_s_deviation > tolerance || std::abs(s.flow_sigma - s.flow_g) > tolerance) return false;
    return true;
  }
  bool monte_carlo_ok() const {
    for (const auto& s : stages)
      if (!s.within_3sigma) return false;
    return failure.empty();
  }
  bool passes() const { return exact_match() && monte_carlo_ok(); }
};

/**
 * Runs the SIB profile built from g: at each stage the common device draws a
 * tuple of histories from P^g(h^{1:N} | pi_t, s_t) and each agent plays g on
 * its drawn history. Exact laws are propagated over (c_t, x_t, s_t); the
 * Monte-Carlo part uses counter-based uniforms keyed by sample index.
 */
template <class S>
TransferReport transfer_to_sib(const BasicTeamModel<S>& m, const CompressionScheme& s, const BasicHistoryPolicy<S>& g,
                               std::uint64_t samples, std::uint64_t seed, double tol = 1e-9) {
  using tr = scalar_traits<S>;
  require_valid(m);
  const int T = m.horizon, N = m.num_agents;
  SchemeTables tab(m, s);
  auto f = build_forest(m, g, &s);
  const auto& idx = f.index();
  TransferReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.tolerance = tol;
  rep.stages.resize(T);
  {
    auto flows = expected_utility(m, g).flow;
    for (int t = 0; t < T; ++t) rep.stages[t].flow_g = tr::to_double(flows[t]);
  }

  auto joint_s = [&](int t, const int* sv) {
    std::uint64_t j = 0;
    for (int i = 0; i < N; ++i) j = j * tab.counts[t][i] + sv[i];
    return j;
  };
  // Per stage: pi id of each common history, and the joint tuple law per (pi, s) cell.
  struct TupleLaw {
    std::vector<std::vector<std::uint64_t>> tuples;
    std::vector<S> prob;
    std::vector<double> cum;
  };
  std::vector<std::map<std::uint64_t, int>> pi_of_common(T);
  std::vector<std::map<std::pair<int, std::uint64_t>, TupleLaw>> laws(T);
  std::vector<std::map<std::pair<int, std::uint64_t>, S>> law_g(T);
  for (int t = 0; t < T; ++t) {
    const auto& st = f.stage(t);
    auto pi = detail::stage_beliefs(f, s.counts(), t, pi_of_common[t]);
    std::map<std::pair<int, std::uint64_t>, std::map<std::vector<std::uint64_t>, S>> mass;
    for (std::size_t n = 0; n < st.size(); ++n) {
      const std::pair<int, std::uint64_t> key{pi[n], joint_s(t, &st.label[n * N])};
      std::vector<std::uint64_t> h(N);
      for (int i = 0; i < N; ++i) h[i] = f.history(t, static_cast<int>(n), i);
      mass[key][h] += st.prob[n];
      law_g[t][key] += st.prob[n];
    }
    for (auto& [key, hs] : mass) {
      TupleLaw law;
      S total(0);
      for (const auto& [h, p] : hs) total += p;
      double acc = 0;
      for (const auto& [h, p] : hs) {
        law.tuples.push_back(h);
        law.prob.push_back(p / total);
        acc += tr::to_double(p / total);
        law.cum.push_back(acc);
      }
      laws[t].emplace(key, std::move(law));
    }
  }

  // Action law of the construction at a (pi, s) cell: joint action -> probability.
  auto action_law = [&](int t, const TupleLaw& law) {
    std::map<int, S> out;
    for (std::size_t k = 0; k < law.tuples.size(); ++k) {
      std::vector<std::pair<int, S>> acc{{0, law.prob[k]}};
      for (int i = 0; i < N; ++i) {
        std::vector<std::pair<int, S>> next;
        auto r = g.row(t, i, law.tuples[k][i]);
        for (const auto& [ja, w] : acc)
          for (int a = 0; a < m.num_actions(t, i); ++a)
            if (r[a] > S(0)) next.emplace_back(ja * m.num_actions(t, i) + a, w * r[a]);
        acc.swap(next);
      }
      for (const auto& [ja, w] : acc) out[ja] += w;
    }
    return out;
  };

  // Exact propagation over (c, x, s joint, s vector).
  struct Key {
    std::uint64_t c;
    int x;
    std::vector<int> s;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, S> cur;
  for (int x = 0; x < m.num_states(0); ++x)
    for (int z = 0; z < m.num_common(0); ++z) {
      const S pz = m.init[x] * m.common(0, x, 0, z);
      if (!(pz > S(0))) continue;
      std::vector<int> y(N, 0);
      while (true) {
        S p = pz;
        for (int i = 0; i < N; ++i) p *= m.priv(0, i, x, 0, y[i]);
        if (p > S(0)) {
          Key k{idx.common_first(z), x, std::vector<int>(N)};
          for (int i = 0; i < N; ++i) k.s[i] = tab.initial(i, y[i], z);
          cur[k] += p;
        }
        int a = N - 1;
        while (a >= 0 && ++y[a] == m.num_private(0, a)) y[a--] = 0;
        if (a < 0) break;
      }
    }
  for (int t = 0; t < T && rep.failure.empty(); ++t) {
    std::map<std::pair<int, std::uint64_t>, S> law_sigma;
    std::map<Key, S> next;
    S flow(0);
    std::map<std::pair<int, std::uint64_t>, std::map<int, S>> action_cache;
    for (const auto& [k, p] : cur) {
      auto pit = pi_of_common[t].find(k.c);
      if (pit == pi_of_common[t].end()) {
        rep.failure = "common history outside g's support at t=" + std::to_string(t + 1);
        break;
      }
      const std::pair<int, std::uint64_t> cell{pit->second, joint_s(t, k.s.data())};
      auto lit = laws[t].find(cell);
      if (lit == laws[t].end()) {
        rep.failure = "(pi, s) cell outside g's support at t=" + std::to_string(t + 1);
        break;
      }
      law_sigma[cell] += p;
      auto ait = action_cache.find(cell);
      if (ait == action_cache.end()) ait = action_cache.emplace(cell, action_law(t, lit->second)).first;
      for (const auto& [ja, pa] : ait->second) {
        flow += p * pa * m.util(t, 0, k.x, ja);
        if (t + 1 >= T) continue;
        for (int x2 = 0; x2 < m.num_states(t + 1); ++x2) {
          const S ptr = p * pa * m.trans(t, k.x, ja, x2);
          if (!(ptr > S(0))) continue;
          for (int z = 0; z < m.num_common(t + 1); ++z) {
            const S pz = ptr * m.common(t + 1, x2, ja, z);
            if (!(pz > S(0))) continue;
            std::vector<int> y(N, 0);
            while (true) {
              S q = pz;
              for (int i = 0; i < N; ++i) q *= m.priv(t + 1, i, x2, ja, y[i]);
              if (q > S(0)) {
                Key k2{idx.common_next(t + 1, k.c, z), x2, std::vector<int>(N)};
                for (int i = 0; i < N; ++i) k2.s[i] = tab.update(t + 1, i, k.s[i], y[i], z, m.agent_action(t, ja, i));
                next[k2] += q;
              }
              int a = N - 1;
              while (a >= 0 && ++y[a] == m.num_private(t + 1, a)) y[a--] = 0;
              if (a < 0) break;
            }
          }
        }
      }
    }
    double dev = 0;
    for (const auto& [cell, p] : law_g[t]) {
      auto it = law_sigma.find(cell);
      dev = std::max(dev, abs_diff(p, it == law_sigma.end() ? S(0) : it->second));
    }
    for (const auto& [cell, p] : law_sigma)
      if (!law_g[t].count(cell)) dev = std::max(dev, tr::to_double(p));
    rep.stages[t].pi_s_deviation = dev;
    rep.stages[t].flow_sigma = tr::to_double(flow);
    cur = std::move(next);
  }
  if (!rep.failure.empty() || samples == 0) return rep;

  // Monte Carlo.
  const std::uint64_t stream = substream(seed, "transfer");
  std::vector<double> sum(T, 0.0), sum2(T, 0.0);
  auto draw = [](double r, auto&& prob, int n) {
    double acc = 0;
    for (int k = 0; k < n; ++k) {
      acc += prob(k);
      if (r < acc) return k;
    }
    return n - 1;
  };
  // Draws per stage: x, z, y^i, tuple, a^i.
  const std::uint64_t per_stage = 3 + 2 * static_cast<std::uint64_t>(N);
  for (std::uint64_t smp = 0; smp < samples; ++smp) {
    std::uint64_t ctr = smp * per_stage * T;
    auto u = [&]() { return counter_uniform(stream, ctr++); };
    int x = draw(u(), [&](int k) { return tr::to_double(m.init[k]); }, m.num_states(0));
    int jp = 0;
    std::uint64_t c = 0;
    std::vector<int> sv(N), y(N);
    for (int t = 0; t < T; ++t) {
      if (t > 0) {
        const int prev = x;
        x = draw(u(), [&](int k) { return tr::to_double(m.trans(t - 1, prev, jp, k)); }, m.num_states(t));
      } else {
        u();
      }
      const int z = draw(u(), [&](int k) { return tr::to_double(m.common(t, x, jp, k)); }, m.num_common(t));
      for (int i = 0; i < N; ++i)
        y[i] = draw(u(), [&](int k) { return tr::to_double(m.priv(t, i, x, jp, k)); }, m.num_private(t, i));
      c = t == 0 ? idx.common_first(z) : idx.common_next(t, c, z);
      for (int i = 0; i < N; ++i) sv[i] = t == 0 ? tab.initial(i, y[i], z) : tab.update(t, i, sv[i], y[i], z, m.agent_action(t - 1, jp, i));
      const auto& law = laws[t].at({pi_of_common[t].at(c), joint_s(t, sv.data())});
      const double r = u();
      std::size_t k = 0;
      while (k + 1 < law.cum.size() && r > law.cum[k]) ++k;
      int ja = 0;
      for (int i = 0; i < N; ++i) {
        auto row = g.row(t, i, law.tuples[k][i]);
        const int a = draw(u(), [&](int q) { return tr::to_double(row[q]); }, m.num_actions(t, i));
        ja = ja * m.num_actions(t, i) + a;
      }
      const double ut = tr::to_double(m.util(t, 0, x, ja));
      sum[t] += ut;
      sum2[t] += ut * ut;
      jp = ja;
    }
  }
  for (int t = 0; t < T; ++t) {
    auto& st = rep.stages[t];
    const double n = static_cast<double>(samples);
    st.mc_mean = sum[t] / n;
    const double var = std::max(0.0, sum2[t] / n - st.mc_mean * st.mc_mean);
    st.mc_stderr = std::sqrt(var / n);
    st.within_3sigma = std::abs(st.mc_mean - st.flow_g) <= 3 * st.mc_stderr + 1e-12;
  }
  return rep;
}

}  // namespace teamdp
