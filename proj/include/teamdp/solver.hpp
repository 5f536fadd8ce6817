#pragma once

#include "belief.hpp"

#include <array>

namespace teamdp {

class NonTeamUtility : public std::runtime_error {
 public:
  NonTeamUtility() : std::runtime_error("agents have different utilities; the team solver needs a common payoff") {}
};

/// Default cap on the sum over belief nodes of their prescription counts.
inline constexpr std::uint64_t kDefaultPrescriptionCap = 100'000'000;

template <class S>
struct Edge {
  int z = 0;
  int child = -1;
  S prob = S(0);
};

template <class S>
struct BeliefNode {
  Belief<S> belief;
  std::vector<std::vector<int>> support;   ///< [i] values of s^i carrying mass, ascending
  std::uint64_t prescriptions = 1;         ///< prod_i |A^i| ^ |support_i|
  std::vector<std::vector<Edge<S>>> edges; ///< [prescription] -> children; empty at the last stage
};

/**
 * Forward closure of the belief update under every deterministic joint
 * prescription. Prescriptions are numbered mixed-radix over (agent, support
 * value) with agent 1 first, values ascending and the last position fastest;
 * each digit is an action. Values outside a node's support get action 0.
 */
template <class S>
struct BeliefGraph {
  std::vector<std::vector<BeliefNode<S>>> stages;
  std::vector<Edge<S>> roots;  ///< one per z_1, weighted by P{z_1}
  std::vector<std::vector<int>> counts;
  std::vector<std::vector<int>> num_actions;  ///< [t][i]
  std::uint64_t prescription_total = 0;

  std::size_t node_count() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.size();
    return n;
  }

  /// actions[i][s] of prescription p at a node.
  std::vector<std::vector<int>> decode(int t, int n, std::uint64_t p) const {
    const auto& node = stages[t][n];
    const int N = static_cast<int>(node.support.size());
    std::vector<std::vector<int>> actions(N);
    for (int i = 0; i < N; ++i) actions[i].assign(counts[t][i], 0);
    for (int i = N - 1; i >= 0; --i)
      for (int k = static_cast<int>(node.support[i].size()) - 1; k >= 0; --k) {
        actions[i][node.support[i][k]] = static_cast<int>(p % num_actions[t][i]);
        p /= num_actions[t][i];
      }
    return actions;
  }

  Prescription<S> prescription(int t, int n, std::uint64_t p) const {
    return Prescription<S>::deterministic(num_actions[t], decode(t, n, p));
  }
};

namespace detail {

template <class S>
BeliefNode<S> make_node(Belief<S>&& b, const std::vector<int>& num_actions) {
  BeliefNode<S> node;
  node.belief = std::move(b);
  node.support.resize(node.belief.counts.size());
  for (std::size_t i = 0; i < node.support.size(); ++i) {
    node.support[i] = node.belief.support(static_cast<int>(i));
    node.prescriptions = sat_mul(node.prescriptions, sat_pow(num_actions[i], node.support[i].size()));
  }
  return node;
}

/// (x, s) entries of a belief with positive mass.
template <class S>
struct Entries {
  std::vector<int> x;
  std::vector<std::vector<int>> s;
  std::vector<S> p;
};

template <class S>
Entries<S> entries(const Belief<S>& b) {
  Entries<S> e;
  int x;
  std::vector<int> s;
  for (std::size_t k = 0; k < b.prob.size(); ++k)
    if (b.prob[k] > S(0)) {
      b.decode(k, x, s);
      e.x.push_back(x);
      e.s.push_back(s);
      e.p.push_back(b.prob[k]);
    }
  return e;
}

}  // namespace detail

template <class S>
BeliefGraph<S> expand_belief_graph(const BasicTeamModel<S>& m, const CompressionScheme& s,
                                   std::uint64_t cap = kDefaultPrescriptionCap) {
  require_valid(m);
  SchemeTables tab(m, s);
  BeliefGraph<S> g;
  g.counts = s.counts();
  g.num_actions.assign(m.horizon, std::vector<int>(m.num_agents));
  for (int t = 0; t < m.horizon; ++t)
    for (int i = 0; i < m.num_agents; ++i) g.num_actions[t][i] = m.num_actions(t, i);
  g.stages.resize(m.horizon);

  auto add_total = [&](const BeliefNode<S>& node) {
    g.prescription_total = sat_add(g.prescription_total, node.prescriptions);
    guard("belief nodes x prescriptions", g.prescription_total, cap);
  };

  // Roots: gamma_1(z_1) under the empty prefix.
  Forest<S> f(m, &s);
  auto roots = sib_beliefs(f, g.counts, 0);
  std::map<std::uint64_t, S> pz;
  for (std::size_t n = 0; n < f.stage(0).size(); ++n) pz[f.stage(0).common[n]] += f.stage(0).prob[n];
  {
    typename scalar_traits<S>::template key_map<int> seen;
    for (auto& [c, b] : roots) {
      auto key = belief_key(b);
      auto it = seen.find(key);
      if (it == seen.end()) {
        it = seen.emplace(key, static_cast<int>(g.stages[0].size())).first;
        g.stages[0].push_back(detail::make_node(std::move(b), g.num_actions[0]));
        add_total(g.stages[0].back());
      }
      g.roots.push_back({static_cast<int>(c), it->second, pz[c]});
    }
  }

  for (int t = 0; t + 1 < m.horizon; ++t) {
    typename scalar_traits<S>::template key_map<int> seen;
    for (std::size_t n = 0; n < g.stages[t].size(); ++n) {
      const std::uint64_t P = g.stages[t][n].prescriptions;
      g.stages[t][n].edges.resize(P);
      for (std::uint64_t p = 0; p < P; ++p) {
        auto actions = g.decode(t, static_cast<int>(n), p);
        auto joint = [&](int, const std::vector<int>& sv) {
          int ja = 0;
          for (int i = 0; i < m.num_agents; ++i) ja = ja * m.num_actions(t, i) + actions[i][sv[i]];
          return std::array<std::pair<int, S>, 1>{std::pair<int, S>{ja, S(1)}};
        };
        auto mass = detail::propagate(m, tab, g.stages[t][n].belief, joint);
        for (int z = 0; z < static_cast<int>(mass.size()); ++z) {
          if (mass[z].empty()) continue;
          auto up = detail::finish_update(m, tab, t, z, std::move(mass[z]));
          if (!(up.normalizer > S(0))) continue;
          auto key = belief_key(up.belief);
          auto it = seen.find(key);
          if (it == seen.end()) {
            it = seen.emplace(std::move(key), static_cast<int>(g.stages[t + 1].size())).first;
            g.stages[t + 1].push_back(detail::make_node(std::move(up.belief), g.num_actions[t + 1]));
            add_total(g.stages[t + 1].back());
          }
          g.stages[t][n].edges[p].push_back({z, it->second, up.normalizer});
        }
      }
    }
  }
  return g;
}

/// Chosen prescription index per belief node (-1 where unset).
struct SIBPolicy {
  std::vector<std::vector<std::int64_t>> choice;
};

template <class S>
struct DPSolution {
  BeliefGraph<S> graph;
  std::vector<std::vector<S>> value;  ///< V_t at every node
  SIBPolicy policy;
  S optimal = S(0);
};

/// E_pi[u_t(X_t, alpha(S_t))] for prescription p at a node.
template <class S>
S immediate_reward(const BasicTeamModel<S>& m, const BeliefGraph<S>& g, int t, int n, std::uint64_t p) {
  auto actions = g.decode(t, n, p);
  const auto& b = g.stages[t][n].belief;
  S acc(0);
  int x;
  std::vector<int> s;
  for (std::size_t k = 0; k < b.prob.size(); ++k) {
    if (!(b.prob[k] > S(0))) continue;
    b.decode(k, x, s);
    int ja = 0;
    for (int i = 0; i < m.num_agents; ++i) ja = ja * m.num_actions(t, i) + actions[i][s[i]];
    acc += b.prob[k] * m.util(t, 0, x, ja);
  }
  return acc;
}

/// Right-hand side of the Bellman equation at one node and prescription.
template <class S>
S bellman_rhs(const BasicTeamModel<S>& m, const BeliefGraph<S>& g, const std::vector<std::vector<S>>& value, int t,
              int n, std::uint64_t p) {
  S q = immediate_reward(m, g, t, n, p);
  if (t + 1 < m.horizon)
    for (const auto& e : g.stages[t][n].edges[p]) q += e.prob * value[t + 1][e.child];
  return q;
}

/// Backward induction over the belief graph; ties go to the lowest prescription index.
template <class S>
DPSolution<S> solve_team_dp(const BasicTeamModel<S>& m, const CompressionScheme& s,
                            std::uint64_t cap = kDefaultPrescriptionCap) {
  if (!m.is_team()) throw NonTeamUtility();
  DPSolution<S> sol;
  sol.graph = expand_belief_graph(m, s, cap);
  const auto& g = sol.graph;
  sol.value.resize(m.horizon);
  sol.policy.choice.resize(m.horizon);
  for (int t = m.horizon - 1; t >= 0; --t) {
    const int nodes = static_cast<int>(g.stages[t].size());
    sol.value[t].assign(nodes, S(0));
    sol.policy.choice[t].assign(nodes, -1);
    for (int n = 0; n < nodes; ++n) {
      const auto& node = g.stages[t][n];
      const auto e = detail::entries(node.belief);
      std::vector<int> pos;
      S best(0);
      std::int64_t arg = -1;
      for (std::uint64_t p = 0; p < node.prescriptions; ++p) {
        auto actions = g.decode(t, n, p);
        S q(0);
        for (std::size_t k = 0; k < e.p.size(); ++k) {
          int ja = 0;
          for (int i = 0; i < m.num_agents; ++i) ja = ja * m.num_actions(t, i) + actions[i][e.s[k][i]];
          q += e.p[k] * m.util(t, 0, e.x[k], ja);
        }
        if (t + 1 < m.horizon)
          for (const auto& edge : node.edges[p]) q += edge.prob * sol.value[t + 1][edge.child];
        if (arg < 0 || scalar_traits<S>::better(q, best)) {
          best = q;
          arg = static_cast<std::int64_t>(p);
        }
      }
      sol.value[t][n] = best;
      sol.policy.choice[t][n] = arg;
    }
  }
  for (const auto& r : g.roots) sol.optimal += r.prob * sol.value[0][r.child];
  return sol;
}

/**
 * Full-history profile induced by a SIB policy: follow the belief graph along
 * the common history, then apply the node's prescription to the agent's
 * compressed value. Histories off the policy's reachable graph play action 0.
 */
template <class S>
BasicHistoryPolicy<S> lift_to_history_policy(const BasicTeamModel<S>& m, const CompressionScheme& s,
                                             const BeliefGraph<S>& g, const SIBPolicy& sigma,
                                             std::uint64_t cap = kDefaultSizeCap) {
  HistoryIndex idx(m);
  SchemeTables tab(m, s);
  auto out = constant_policy(m, cap);
  std::vector<std::int64_t> node_of(idx.common_count(0), -1);
  for (const auto& r : g.roots) node_of[r.z] = r.child;
  for (int t = 0; t < m.horizon; ++t) {
    // Prescription actions per node, computed once.
    std::vector<std::vector<std::vector<int>>> acts(g.stages[t].size());
    for (std::size_t n = 0; n < g.stages[t].size(); ++n)
      if (sigma.choice[t][n] >= 0) acts[n] = g.decode(t, static_cast<int>(n), static_cast<std::uint64_t>(sigma.choice[t][n]));
    for (int i = 0; i < m.num_agents; ++i) {
      for (std::uint64_t h = 0; h < idx.count(t, i); ++h) {
        const std::uint64_t c = h / idx.private_count(t, i);
        const std::int64_t n = node_of[c];
        if (n < 0 || acts[n].empty()) continue;
        auto hist = idx.decode(t, i, h);
        int v = tab.initial(i, hist.y[0], hist.z[0]);
        for (int k = 1; k <= t; ++k) {
          int a = hist.a[k - 1];
          if (a < 0) a = m.revealed[k - 1][i][hist.z[k]];
          v = tab.update(k, i, v, hist.y[k], hist.z[k], a);
        }
        const auto& sup = g.stages[t][n].support[i];
        if (!std::binary_search(sup.begin(), sup.end(), v)) continue;
        out.set_action(t, i, h, acts[n][i][v]);
      }
    }
    if (t + 1 < m.horizon) {
      guard("common histories", idx.common_count(t + 1), cap);
      std::vector<std::int64_t> next(idx.common_count(t + 1), -1);
      for (std::uint64_t c = 0; c < node_of.size(); ++c) {
        const std::int64_t n = node_of[c];
        if (n < 0 || sigma.choice[t][n] < 0) continue;
        for (const auto& e : g.stages[t][n].edges[sigma.choice[t][n]]) next[idx.common_next(t + 1, c, e.z)] = e.child;
      }
      node_of.swap(next);
    }
  }
  return out;
}

}  // namespace teamdp
