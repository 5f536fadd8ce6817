#pragma once

#include "check_report.hpp"
#include "compression.hpp"

namespace teamdp {

class ZeroProbabilityConditioning : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InconsistentObservation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A recursive scheme flattened into lookup tables.
struct SchemeTables {
  std::vector<std::vector<int>> counts;            ///< [t][i]
  std::vector<std::vector<int>> init;              ///< [i][z * |Y| + y]
  std::vector<std::vector<std::vector<int>>> next; ///< [t-1][i][((prev * |Z| + z) * |Y| + y) * |A| + a]
  std::vector<int> nz;
  std::vector<std::vector<int>> ny, na;

  template <class S>
  SchemeTables(const BasicTeamModel<S>& m, const CompressionScheme& s, std::uint64_t cap = kDefaultSizeCap)
      : counts(s.counts()) {
    std::tie(init, next) = tabulate(m, s, cap);
    nz.resize(m.horizon);
    ny.assign(m.horizon, std::vector<int>(m.num_agents));
    na.assign(m.horizon, std::vector<int>(m.num_agents));
    for (int t = 0; t < m.horizon; ++t) {
      nz[t] = m.num_common(t);
      for (int i = 0; i < m.num_agents; ++i) {
        ny[t][i] = m.num_private(t, i);
        na[t][i] = m.num_actions(t, i);
      }
    }
  }

  int initial(int i, int y, int z) const { return init[i][z * ny[0][i] + y]; }
  int update(int t, int i, int prev, int y, int z, int a) const {
    return next[t - 1][i][((static_cast<std::size_t>(prev) * nz[t] + z) * ny[t][i] + y) * na[t - 1][i] + a];
  }
  std::uint64_t joint_count(int t) const {
    std::uint64_t n = 1;
    for (int c : counts[t]) n = sat_mul(n, c);
    return n;
  }
};

/// Distribution over X_t x S_t^1 x ... x S_t^N, joint s mixed-radix with agent 0 most significant.
template <class S>
struct Belief {
  int stage = 0;
  int num_states = 0;
  std::vector<int> counts;
  std::vector<S> prob;

  std::size_t joint() const {
    std::size_t n = 1;
    for (int c : counts) n *= static_cast<std::size_t>(c);
    return n;
  }
  std::size_t index(int x, std::span<const int> s) const {
    std::size_t j = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) j = j * counts[i] + s[i];
    return static_cast<std::size_t>(x) * joint() + j;
  }
  void decode(std::size_t idx, int& x, std::vector<int>& s) const {
    const std::size_t J = joint();
    x = static_cast<int>(idx / J);
    std::size_t j = idx % J;
    s.resize(counts.size());
    for (int i = static_cast<int>(counts.size()) - 1; i >= 0; --i) {
      s[i] = static_cast<int>(j % counts[i]);
      j /= counts[i];
    }
  }
  S state_marginal(int x) const {
    S acc(0);
    const std::size_t J = joint();
    for (std::size_t j = 0; j < J; ++j) acc += prob[x * J + j];
    return acc;
  }
  /// Values of s^i with positive marginal mass, ascending.
  std::vector<int> support(int i) const {
    std::vector<char> seen(counts[i], 0);
    std::vector<int> s;
    int x;
    for (std::size_t k = 0; k < prob.size(); ++k)
      if (prob[k] > S(0)) {
        decode(k, x, s);
        seen[s[i]] = 1;
      }
    std::vector<int> out;
    for (int v = 0; v < counts[i]; ++v)
      if (seen[v]) out.push_back(v);
    return out;
  }
  double distance(const Belief& o) const {
    double d = 0;
    for (std::size_t k = 0; k < prob.size(); ++k) d = std::max(d, abs_diff(prob[k], o.prob[k]));
    return d;
  }
};

template <class S>
using BeliefKey = std::vector<typename scalar_traits<S>::key_type>;

template <class S>
BeliefKey<S> belief_key(const Belief<S>& b) {
  BeliefKey<S> k;
  k.reserve(b.prob.size());
  for (const auto& p : b.prob) k.push_back(scalar_traits<S>::key(p));
  return k;
}

template <class S>
Belief<S> empty_belief(const BasicTeamModel<S>& m, const std::vector<std::vector<int>>& counts, int t,
                       std::uint64_t cap = kDefaultSizeCap) {
  Belief<S> b;
  b.stage = t;
  b.num_states = m.num_states(t);
  b.counts = counts[t];
  std::uint64_t n = static_cast<std::uint64_t>(b.num_states);
  for (int c : b.counts) n = sat_mul(n, c);
  guard("belief entries", n, cap);
  b.prob.assign(n, S(0));
  return b;
}

/// Divides by the total; in floating point, entries that round to zero become exact zeros.
template <class S>
void normalize(Belief<S>& b) {
  S total(0);
  for (const auto& p : b.prob) total += p;
  if (!(total > S(0))) throw ZeroProbabilityConditioning("belief has zero total mass");
  for (auto& p : b.prob) p /= total;
  if constexpr (!scalar_traits<S>::exact) {
    bool changed = false;
    for (auto& p : b.prob)
      if (p != 0 && scalar_traits<S>::key(p) == 0) {
        p = 0;
        changed = true;
      }
    if (changed) {
      total = 0;
      for (const auto& p : b.prob) total += p;
      for (auto& p : b.prob) p /= total;
    }
  }
}

/// Per-agent decision rule at a belief node: rows[i][s * |A| + a].
template <class S>
struct Prescription {
  std::vector<int> num_actions;
  std::vector<std::vector<S>> rows;

  std::span<const S> row(int i, int s) const {
    return {rows[i].data() + static_cast<std::size_t>(s) * num_actions[i], static_cast<std::size_t>(num_actions[i])};
  }
  /// actions[i][s] is agent i's action at value s.
  static Prescription deterministic(const std::vector<int>& num_actions, const std::vector<std::vector<int>>& actions) {
    Prescription p;
    p.num_actions = num_actions;
    p.rows.resize(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
      p.rows[i].assign(actions[i].size() * num_actions[i], S(0));
      for (std::size_t s = 0; s < actions[i].size(); ++s) p.rows[i][s * num_actions[i] + actions[i][s]] = S(1);
    }
    return p;
  }
};

/// Beliefs gamma_t(c_t) for every positive-probability c_t, from a labelled forest.
template <class S>
std::map<std::uint64_t, Belief<S>> sib_beliefs(const Forest<S>& f, const std::vector<std::vector<int>>& counts, int t) {
  const auto& st = f.stage(t);
  const int N = f.model().num_agents;
  std::map<std::uint64_t, Belief<S>> out;
  std::vector<int> s(N);
  for (int n = 0; n < static_cast<int>(st.size()); ++n) {
    auto it = out.find(st.common[n]);
    if (it == out.end()) it = out.emplace(st.common[n], empty_belief(f.model(), counts, t)).first;
    for (int i = 0; i < N; ++i) s[i] = st.label[static_cast<std::size_t>(n) * N + i];
    it->second.prob[it->second.index(st.x[n], s)] += st.prob[n];
  }
  for (auto& [c, b] : out) normalize(b);
  return out;
}

/// gamma_t(c_t)(x, s) = P^g{X_t = x, S_t = s | c_t}; z holds z_{1:t}.
template <class S>
Belief<S> sib_belief(const BasicTeamModel<S>& m, const CompressionScheme& s, const BasicHistoryPolicy<S>& g_prefix,
                     const std::vector<int>& z) {
  const int t = static_cast<int>(z.size()) - 1;
  auto f = build_forest(m, g_prefix, &s, t + 1);
  std::uint64_t c = f.index().common_first(z[0]);
  for (int k = 1; k <= t; ++k) c = f.index().common_next(k, c, z[k]);
  auto all = sib_beliefs(f, s.counts(), t);
  auto it = all.find(c);
  if (it == all.end()) throw ZeroProbabilityConditioning("common history has zero probability under the profile");
  return it->second;
}

template <class S>
struct BeliefUpdate {
  int z = 0;
  Belief<S> belief;
  S normalizer = S(0);
};

namespace detail {

/**
 * Unnormalized next-stage mass for every z. joint(x, s) returns the joint
 * action law at an entry as a list of (ja, weight).
 */
template <class S, class JointFn>
std::vector<std::vector<S>> propagate(const BasicTeamModel<S>& m, const SchemeTables& tab, const Belief<S>& pi,
                                      JointFn&& joint) {
  const int t = pi.stage;
  const int N = m.num_agents;
  auto proto = empty_belief(m, tab.counts, t + 1);
  const std::size_t J1 = proto.joint();
  std::vector<std::vector<S>> mass(m.num_common(t + 1));
  int x;
  std::vector<int> s(N), y(N), s2(N);
  for (std::size_t k = 0; k < pi.prob.size(); ++k) {
    if (!(pi.prob[k] > S(0))) continue;
    pi.decode(k, x, s);
    for (const auto& [ja, wa] : joint(x, s)) {
      const S pa = pi.prob[k] * wa;
      for (int x2 = 0; x2 < m.num_states(t + 1); ++x2) {
        const S& tr = m.trans(t, x, ja, x2);
        if (!(tr > S(0))) continue;
        for (int z = 0; z < m.num_common(t + 1); ++z) {
          const S& pz = m.common(t + 1, x2, ja, z);
          if (!(pz > S(0))) continue;
          if (mass[z].empty()) mass[z].assign(proto.prob.size(), S(0));
          const S base = pa * tr * pz;
          std::fill(y.begin(), y.end(), 0);
          while (true) {
            S py(1);
            bool zero = false;
            for (int i = 0; i < N && !zero; ++i) {
              const S& q = m.priv(t + 1, i, x2, ja, y[i]);
              if (!(q > S(0))) zero = true;
              else py *= q;
            }
            if (!zero) {
              std::size_t j = 0;
              for (int i = 0; i < N; ++i)
                j = j * tab.counts[t + 1][i] + tab.update(t + 1, i, s[i], y[i], z, m.agent_action(t, ja, i));
              mass[z][x2 * J1 + j] += base * py;
            }
            int a = N - 1;
            while (a >= 0 && ++y[a] == m.num_private(t + 1, a)) y[a--] = 0;
            if (a < 0) break;
          }
        }
      }
    }
  }
  return mass;
}

template <class S>
auto prescription_joint(const BasicTeamModel<S>& m, const Prescription<S>& alpha, int t) {
  return [&m, &alpha, t](int, const std::vector<int>& s) {
    const int N = m.num_agents;
    std::vector<std::pair<int, S>> out{{0, S(1)}};
    for (int i = 0; i < N; ++i) {
      std::vector<std::pair<int, S>> next;
      auto r = alpha.row(i, s[i]);
      for (const auto& [ja, w] : out)
        for (int a = 0; a < m.num_actions(t, i); ++a)
          if (r[a] > S(0)) next.emplace_back(ja * m.num_actions(t, i) + a, w * r[a]);
      out.swap(next);
    }
    return out;
  };
}

template <class S>
BeliefUpdate<S> finish_update(const BasicTeamModel<S>& m, const SchemeTables& tab, int t, int z, std::vector<S>&& mass) {
  BeliefUpdate<S> u;
  u.z = z;
  u.belief = empty_belief(m, tab.counts, t + 1);
  u.belief.prob = std::move(mass);
  for (const auto& p : u.belief.prob) u.normalizer += p;
  normalize(u.belief);
  return u;
}

}  // namespace detail

/// psi(pi, alpha, z): posterior over (x_{t+1}, s_{t+1}) and P{z | pi, alpha}.
template <class S>
BeliefUpdate<S> sib_update(const BasicTeamModel<S>& m, const SchemeTables& tab, const Belief<S>& pi,
                           const Prescription<S>& alpha, int z_next) {
  const int t = pi.stage;
  if (t + 1 >= m.horizon) throw std::logic_error("no update after the last stage");
  auto mass = detail::propagate(m, tab, pi, detail::prescription_joint(m, alpha, t));
  if (mass[z_next].empty()) throw InconsistentObservation("common observation has zero probability under the belief and prescription");
  S total(0);
  for (const auto& p : mass[z_next]) total += p;
  if (!(total > S(0))) throw InconsistentObservation("common observation has zero probability under the belief and prescription");
  return detail::finish_update(m, tab, t, z_next, std::move(mass[z_next]));
}

template <class S>
BeliefUpdate<S> sib_update(const BasicTeamModel<S>& m, const CompressionScheme& s, const Belief<S>& pi,
                           const Prescription<S>& alpha, int z_next) {
  return sib_update(m, SchemeTables(m, s), pi, alpha, z_next);
}

/// psi for every z with positive probability, in z order.
template <class S>
std::vector<BeliefUpdate<S>> sib_update_all(const BasicTeamModel<S>& m, const SchemeTables& tab, const Belief<S>& pi,
                                            const Prescription<S>& alpha) {
  auto mass = detail::propagate(m, tab, pi, detail::prescription_joint(m, alpha, pi.stage));
  std::vector<BeliefUpdate<S>> out;
  for (int z = 0; z < static_cast<int>(mass.size()); ++z) {
    if (mass[z].empty()) continue;
    S total(0);
    for (const auto& p : mass[z]) total += p;
    if (total > S(0)) out.push_back(detail::finish_update(m, tab, pi.stage, z, std::move(mass[z])));
  }
  return out;
}

/**
 * Theorem-1 check: with agents other than `agent` fixed by g_minus_i, the
 * conditional law of (x_t, p_t^{-i}) given agent i's history must not depend
 * on agent i's own strategy. Each variant supplies agent i's tables.
 */
template <class S>
CheckReport check_policy_independence(const BasicTeamModel<S>& m, const BasicHistoryPolicy<S>& g_minus_i,
                                      const std::vector<BasicHistoryPolicy<S>>& variants, int agent, int t,
                                      double tol = 1e-12) {
  CheckReport rep;
  rep.check = "policy-independence";
  rep.tolerance = tol;
  auto& cond = rep.condition("thm1");
  const int N = m.num_agents;
  using Cond = std::map<std::uint64_t, std::map<std::vector<std::uint64_t>, S>>;
  std::vector<Cond> laws;
  std::vector<BasicHistoryPolicy<S>> profiles;
  for (const auto& v : variants) {
    auto g = g_minus_i;
    for (int k = 0; k < m.horizon; ++k) g.table[k][agent] = v.table[k][agent];
    auto f = build_forest(m, g, nullptr, t + 1);
    Cond law;
    const auto& st = f.stage(t);
    for (int n = 0; n < static_cast<int>(st.size()); ++n) {
      std::vector<std::uint64_t> key{static_cast<std::uint64_t>(st.x[n])};
      for (int j = 0; j < N; ++j)
        if (j != agent) key.push_back(st.priv[static_cast<std::size_t>(n) * N + j]);
      law[f.history(t, n, agent)][key] += st.prob[n];
    }
    for (auto& [h, dist] : law) {
      S total(0);
      for (const auto& [k, p] : dist) total += p;
      for (auto& [k, p] : dist) p /= total;
    }
    laws.push_back(std::move(law));
    profiles.push_back(std::move(g));
    ++rep.profiles;
  }
  auto outcome_name = [](const std::vector<std::uint64_t>& k) {
    std::string s = "x=" + std::to_string(k[0]) + " p-i=(";
    for (std::size_t j = 1; j < k.size(); ++j) s += (j > 1 ? "," : "") + std::to_string(k[j]);
    return s + ")";
  };
  for (std::size_t a = 0; a < laws.size(); ++a)
    for (std::size_t b = a + 1; b < laws.size(); ++b)
      for (const auto& [h, da] : laws[a]) {
        auto it = laws[b].find(h);
        if (it == laws[b].end()) continue;
        ++cond.realizations;
        ++rep.realizations;
        const auto& db = it->second;
        double dev = 0;
        for (const auto& [k, p] : da) {
          auto q = db.find(k);
          dev = std::max(dev, abs_diff(p, q == db.end() ? S(0) : q->second));
        }
        for (const auto& [k, p] : db)
          if (!da.count(k)) dev = std::max(dev, abs_diff(p, S(0)));
        if (dev > tol && cond.verdict != Verdict::Fails) {
          cond.verdict = Verdict::Fails;
          Counterexample cx;
          cx.condition = "thm1";
          cx.stage = t;
          cx.agent = agent;
          cx.profile = policy_cast<double>(profiles[b]);
          cx.realization = "agent " + std::to_string(agent + 1) + " history index " + std::to_string(h) +
                           " (variants " + std::to_string(a) + " and " + std::to_string(b) + ")";
          for (const auto& [k, p] : da) cx.lhs_law[outcome_name(k)] = scalar_traits<S>::to_double(p);
          for (const auto& [k, p] : db) cx.rhs_law[outcome_name(k)] = scalar_traits<S>::to_double(p);
          cx.deviation = dev;
          cond.counterexample = std::move(cx);
        }
      }
  return rep;
}

}  // namespace teamdp
