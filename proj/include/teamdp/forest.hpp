#pragma once

#include "model.hpp"

#include <map>

namespace teamdp {

/// Recursive per-agent label map: initial value from (y_1, z_1), then
/// s_t = update(t, i, s_{t-1}, y_t, z_t, a_{t-1}^i).
class InformationUpdate {
 public:
  virtual ~InformationUpdate() = default;
  virtual int initial(int i, int y, int z) const = 0;
  virtual int update(int t, int i, int prev, int y, int z, int a_prev) const = 0;
};

/// Positive-probability world histories of one stage, stored column-wise.
template <class S>
struct ForestStage {
  std::vector<int> parent;
  std::vector<int> x;
  std::vector<int> z;
  std::vector<int> prev_joint;          ///< a_{t-1} (0 at stage 0)
  std::vector<int> y;                   ///< [n * N + i]
  std::vector<std::uint64_t> common;    ///< common history index
  std::vector<std::uint64_t> priv;      ///< [n * N + i] private history index
  std::vector<int> label;               ///< [n * N + i], empty without labels
  std::vector<S> prob;

  std::size_t size() const { return prob.size(); }
};

/**
 * Tree of positive-probability world histories under a profile, built one
 * stage at a time. Action rows are supplied per node by a callable
 * row(node, agent) -> span over the agent's actions; rows need not sum to one
 * (all-ones rows give action-free weights).
 */
template <class S>
class Forest {
 public:
  explicit Forest(const BasicTeamModel<S>& m, const InformationUpdate* labels = nullptr,
                  std::uint64_t node_cap = kDefaultSizeCap)
      : m_(&m), idx_(m), labels_(labels), cap_(node_cap) {
    build_first();
  }

  const BasicTeamModel<S>& model() const { return *m_; }
  const HistoryIndex& index() const { return idx_; }
  int depth() const { return static_cast<int>(stages_.size()); }
  const ForestStage<S>& stage(int t) const { return stages_[t]; }
  bool labelled() const { return labels_ != nullptr; }
  void truncate(int depth) {
    while (static_cast<int>(stages_.size()) > depth) {
      total_ -= stages_.back().size();
      stages_.pop_back();
    }
  }

  std::uint64_t history(int t, int n, int i) const {
    const auto& st = stages_[t];
    const int N = m_->num_agents;
    return idx_.compose(t, i, st.common[n], st.priv[static_cast<std::size_t>(n) * N + i]);
  }

  /// Calls fn(ja, weight) for every joint action with positive row weight at a node.
  template <class RowFn, class Fn>
  void for_each_joint(int n, RowFn&& row, Fn&& fn) const {
    const int t = depth() - 1;
    const int N = m_->num_agents;
    std::vector<std::vector<std::pair<int, S>>> support(N);
    for (int i = 0; i < N; ++i) {
      auto r = row(n, i);
      for (int a = 0; a < m_->num_actions(t, i); ++a)
        if (r[a] > S(0)) support[i].emplace_back(a, r[a]);
      if (support[i].empty()) return;
    }
    std::vector<std::size_t> pos(N, 0);
    while (true) {
      S w(1);
      int ja = 0;
      for (int i = 0; i < N; ++i) {
        ja = ja * m_->num_actions(t, i) + support[i][pos[i]].first;
        w *= support[i][pos[i]].second;
      }
      fn(ja, w);
      int k = N - 1;
      while (k >= 0 && ++pos[k] == support[k].size()) pos[k--] = 0;
      if (k < 0) break;
    }
  }

  /// Appends stage depth() using the action rows of the current last stage.
  template <class RowFn>
  void extend(RowFn&& row) {
    const int t = depth() - 1;
    const auto& m = *m_;
    const int N = m.num_agents;
    if (t + 1 >= m.horizon) throw std::logic_error("forest already spans the horizon");
    ForestStage<S> next;
    const ForestStage<S>& cur = stages_[t];
    std::vector<int> ys(N);
    for (int n = 0; n < static_cast<int>(cur.size()); ++n) {
      for_each_joint(n, row, [&](int ja, const S& wa) {
        const S pa = cur.prob[n] * wa;
        for (int x2 = 0; x2 < m.num_states(t + 1); ++x2) {
          const S& tr = m.trans(t, cur.x[n], ja, x2);
          if (!(tr > S(0))) continue;
          for (int z = 0; z < m.num_common(t + 1); ++z) {
            const S& pz = m.common(t + 1, x2, ja, z);
            if (!(pz > S(0))) continue;
            S base = pa * tr * pz;
            for_each_obs(t + 1, x2, ja, [&](const std::vector<int>& y, const S& py) {
              next.parent.push_back(n);
              next.x.push_back(x2);
              next.z.push_back(z);
              next.prev_joint.push_back(ja);
              next.common.push_back(idx_.common_next(t + 1, cur.common[n], z));
              for (int i = 0; i < N; ++i) {
                const int ai = m.agent_action(t, ja, i);
                next.y.push_back(y[i]);
                next.priv.push_back(idx_.private_next(t + 1, i, cur.priv[static_cast<std::size_t>(n) * N + i], ai, y[i]));
                if (labels_)
                  next.label.push_back(
                      labels_->update(t + 1, i, cur.label[static_cast<std::size_t>(n) * N + i], y[i], z, ai));
              }
              next.prob.push_back(base * py);
            });
          }
        }
      });
    }
    total_ += next.size();
    guard("forest nodes", total_, cap_);
    stages_.push_back(std::move(next));
  }

 private:
  template <class Fn>
  void for_each_obs(int t, int x, int jp, Fn&& fn) const {
    const auto& m = *m_;
    const int N = m.num_agents;
    std::vector<int> y(N, 0);
    while (true) {
      S p(1);
      bool zero = false;
      for (int i = 0; i < N && !zero; ++i) {
        const S& q = m.priv(t, i, x, jp, y[i]);
        if (!(q > S(0))) zero = true;
        else p *= q;
      }
      if (!zero) fn(y, p);
      int k = N - 1;
      while (k >= 0 && ++y[k] == m.num_private(t, k)) y[k--] = 0;
      if (k < 0) break;
    }
  }

  void build_first() {
    const auto& m = *m_;
    const int N = m.num_agents;
    ForestStage<S> st;
    for (int x = 0; x < m.num_states(0); ++x) {
      if (!(m.init[x] > S(0))) continue;
      for (int z = 0; z < m.num_common(0); ++z) {
        const S& pz = m.common(0, x, 0, z);
        if (!(pz > S(0))) continue;
        for_each_obs(0, x, 0, [&](const std::vector<int>& y, const S& py) {
          st.parent.push_back(-1);
          st.x.push_back(x);
          st.z.push_back(z);
          st.prev_joint.push_back(0);
          st.common.push_back(idx_.common_first(z));
          for (int i = 0; i < N; ++i) {
            st.y.push_back(y[i]);
            st.priv.push_back(idx_.private_first(i, y[i]));
            if (labels_) st.label.push_back(labels_->initial(i, y[i], z));
          }
          st.prob.push_back(m.init[x] * pz * py);
        });
      }
    }
    total_ = st.size();
    guard("forest nodes", total_, cap_);
    stages_.push_back(std::move(st));
  }

  const BasicTeamModel<S>* m_;
  HistoryIndex idx_;
  const InformationUpdate* labels_;
  std::uint64_t cap_;
  std::uint64_t total_ = 0;
  std::vector<ForestStage<S>> stages_;
};

/// Row callable reading a full-history profile at forest nodes.
template <class S>
auto policy_rows(const Forest<S>& f, const BasicHistoryPolicy<S>& g) {
  return [&f, &g](int n, int i) {
    const int t = f.depth() - 1;
    return g.row(t, i, f.history(t, n, i));
  };
}

/// Builds the forest of all stages under a full-history profile.
template <class S>
Forest<S> build_forest(const BasicTeamModel<S>& m, const BasicHistoryPolicy<S>& g,
                       const InformationUpdate* labels = nullptr, int stages = -1,
                       std::uint64_t cap = kDefaultSizeCap) {
  Forest<S> f(m, labels, cap);
  const int last = stages < 0 ? m.horizon : stages;
  while (f.depth() < last) f.extend(policy_rows(f, g));
  return f;
}

struct Trajectory {
  std::vector<int> x;
  std::vector<int> a;                  ///< joint action per stage
  std::vector<std::vector<int>> y;     ///< [t][i]
  std::vector<int> z;

  auto operator<=>(const Trajectory&) const = default;
};

/// Exact joint law of complete trajectories under g, in forest order.
template <class S>
std::vector<std::pair<Trajectory, S>> trajectory_distribution(const BasicTeamModel<S>& m,
                                                              const BasicHistoryPolicy<S>& g,
                                                              std::uint64_t cap = kDefaultSizeCap) {
  auto f = build_forest(m, g, nullptr, -1, cap);
  const int T = m.horizon, N = m.num_agents;
  std::vector<std::pair<Trajectory, S>> out;
  const auto& last = f.stage(T - 1);
  auto rows = policy_rows(f, g);
  for (int n = 0; n < static_cast<int>(last.size()); ++n) {
    f.for_each_joint(n, rows, [&](int ja, const S& wa) {
      Trajectory tr;
      tr.x.resize(T);
      tr.a.resize(T);
      tr.z.resize(T);
      tr.y.assign(T, std::vector<int>(N));
      tr.a[T - 1] = ja;
      int k = n;
      for (int t = T - 1; t >= 0; --t) {
        const auto& st = f.stage(t);
        tr.x[t] = st.x[k];
        tr.z[t] = st.z[k];
        for (int i = 0; i < N; ++i) tr.y[t][i] = st.y[static_cast<std::size_t>(k) * N + i];
        if (t > 0) tr.a[t - 1] = st.prev_joint[k];
        k = st.parent[k];
      }
      guard("trajectories", out.size() + 1, cap);
      out.emplace_back(std::move(tr), last.prob[n] * wa);
    });
  }
  return out;
}

template <class S>
struct UtilityFlow {
  S total = S(0);
  std::vector<S> flow;  ///< E[u_t] per stage
};

/// Expected utility of agent `agent` (the team utility by default) on a built forest.
template <class S, class RowFn>
S stage_flow(const Forest<S>& f, int t, RowFn&& rows, int agent = 0) {
  const auto& m = f.model();
  const auto& st = f.stage(t);
  S acc(0);
  for (int n = 0; n < static_cast<int>(st.size()); ++n) {
    S local(0);
    f.for_each_joint(n, rows, [&](int ja, const S& wa) { local += wa * m.util(t, agent, st.x[n], ja); });
    acc += st.prob[n] * local;
  }
  return acc;
}

template <class S>
UtilityFlow<S> expected_utility(const BasicTeamModel<S>& m, const BasicHistoryPolicy<S>& g, int agent = 0,
                                std::uint64_t cap = kDefaultSizeCap) {
  UtilityFlow<S> out;
  Forest<S> f(m, nullptr, cap);
  for (int t = 0; t < m.horizon; ++t) {
    if (t > 0) f.extend(policy_rows(f, g));
    out.flow.push_back(stage_flow(f, t, policy_rows(f, g), agent));
  }
  for (const auto& v : out.flow) out.total += v;
  return out;
}

struct HistoryEnumeration {
  std::vector<AgentHistory> histories;
  std::vector<char> reachable;  ///< filled only when a profile is supplied
};

/// All syntactic histories of agent i at stage t in index order.
template <class S>
HistoryEnumeration enumerate_histories(const BasicTeamModel<S>& m, int t, int i,
                                       std::type_identity_t<const BasicHistoryPolicy<S>*> g = nullptr,
                                       std::uint64_t cap = kDefaultSizeCap) {
  HistoryIndex idx(m);
  const std::uint64_t count = idx.count(t, i);
  guard("histories", count, cap);
  HistoryEnumeration out;
  out.histories.reserve(count);
  for (std::uint64_t h = 0; h < count; ++h) out.histories.push_back(idx.decode(t, i, h));
  if (g) {
    out.reachable.assign(count, 0);
    auto f = build_forest(m, *g, nullptr, t + 1, cap);
    for (int n = 0; n < static_cast<int>(f.stage(t).size()); ++n) out.reachable[f.history(t, n, i)] = 1;
  }
  return out;
}

}  // namespace teamdp
