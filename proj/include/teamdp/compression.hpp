#pragma once

#include "forest.hpp"

#include <functional>

namespace teamdp {

enum class SchemeKind { Private, General };

inline const char* to_string(SchemeKind k) { return k == SchemeKind::Private ? "private" : "general"; }

/**
 * Recursive compression of agent histories into finite value sets.
 * Values are integers 0..count(t, i)-1.
 */
class CompressionScheme : public InformationUpdate {
 public:
  using InitFn = std::function<int(int i, int y, int z)>;
  using UpdateFn = std::function<int(int t, int i, int prev, int y, int z, int a_prev)>;
  using DescribeFn = std::function<std::string(int t, int i, int value)>;

  CompressionScheme() = default;
  CompressionScheme(std::string name, SchemeKind kind, std::vector<std::vector<int>> counts, InitFn init,
                    UpdateFn update, DescribeFn describe = {})
      : name_(std::move(name)),
        kind_(kind),
        counts_(std::move(counts)),
        init_(std::move(init)),
        update_(std::move(update)),
        describe_(std::move(describe)) {}

  const std::string& name() const { return name_; }
  SchemeKind kind() const { return kind_; }
  int horizon() const { return static_cast<int>(counts_.size()); }
  int count(int t, int i) const { return counts_[t][i]; }
  const std::vector<std::vector<int>>& counts() const { return counts_; }

  int initial(int i, int y, int z) const override { return init_(i, y, z); }
  int update(int t, int i, int prev, int y, int z, int a_prev) const override {
    return update_(t, i, prev, y, z, a_prev);
  }
  std::string describe(int t, int i, int v) const {
    return describe_ ? describe_(t, i, v) : std::to_string(v);
  }

  /// Joint value count at stage t (product over agents).
  std::uint64_t joint_count(int t) const {
    std::uint64_t n = 1;
    for (int c : counts_[t]) n = sat_mul(n, static_cast<std::uint64_t>(c));
    return n;
  }

  /// Value chained along an agent history.
  template <class S>
  int value_of(const BasicTeamModel<S>& m, const AgentHistory& h) const {
    int v = initial(h.agent, h.y[0], h.z[0]);
    for (int k = 1; k <= h.stage; ++k) {
      int a = h.a[k - 1];
      if (a < 0) a = m.revealed[k - 1][h.agent][h.z[k]];
      v = update(k, h.agent, v, h.y[k], h.z[k], a);
    }
    return v;
  }

 private:
  std::string name_;
  SchemeKind kind_ = SchemeKind::Private;
  std::vector<std::vector<int>> counts_;
  InitFn init_;
  UpdateFn update_;
  DescribeFn describe_;
};

namespace detail {

/// Component radices of a length-k window (y_s, a_s, y_{s+1}, ..., a_{t-1}, y_t).
struct WindowLayout {
  std::vector<std::vector<std::vector<int>>> radix;  ///< [t][i] component radices, oldest first
  std::vector<std::vector<std::vector<char>>> is_y;  ///< component is an observation
  std::vector<std::vector<int>> counts;
};

template <class S>
WindowLayout window_layout(const BasicTeamModel<S>& m, int k, bool include_revealed, std::uint64_t cap) {
  WindowLayout w;
  w.radix.assign(m.horizon, std::vector<std::vector<int>>(m.num_agents));
  w.is_y.assign(m.horizon, std::vector<std::vector<char>>(m.num_agents));
  w.counts.assign(m.horizon, std::vector<int>(m.num_agents));
  for (int t = 0; t < m.horizon; ++t)
    for (int i = 0; i < m.num_agents; ++i) {
      const int start = std::max(0, t - k + 1);
      std::uint64_t n = 1;
      for (int tau = start; tau <= t; ++tau) {
        if (tau > start && (include_revealed || !m.is_revealed(tau - 1, i))) {
          w.radix[t][i].push_back(m.num_actions(tau - 1, i));
          w.is_y[t][i].push_back(0);
          n = sat_mul(n, m.num_actions(tau - 1, i));
        }
        w.radix[t][i].push_back(m.num_private(tau, i));
        w.is_y[t][i].push_back(1);
        n = sat_mul(n, m.num_private(tau, i));
      }
      guard("compression values", n, cap);
      w.counts[t][i] = static_cast<int>(n);
    }
  return w;
}

inline std::vector<int> mixed_decode(int v, const std::vector<int>& radix) {
  std::vector<int> out(radix.size());
  for (int k = static_cast<int>(radix.size()) - 1; k >= 0; --k) {
    out[k] = v % radix[k];
    v /= radix[k];
  }
  return out;
}

inline int mixed_encode(const std::vector<int>& digits, const std::vector<int>& radix) {
  int v = 0;
  for (std::size_t k = 0; k < radix.size(); ++k) v = v * radix[k] + digits[k];
  return v;
}

}  // namespace detail

/**
 * Last-k-stages window of an agent's private observations and actions.
 * Revealed actions are skipped unless include_revealed is set. With k >= T
 * the value equals the private history index.
 */
template <class S>
CompressionScheme window_scheme(const BasicTeamModel<S>& m, int k, bool include_revealed = false,
                                std::uint64_t cap = kDefaultSizeCap) {
  if (k < 1) throw std::invalid_argument("window length must be at least 1");
  auto layout = std::make_shared<detail::WindowLayout>(detail::window_layout(m, k, include_revealed, cap));
  std::vector<std::vector<char>> keeps_action(m.horizon, std::vector<char>(m.num_agents, 0));
  for (int t = 1; t < m.horizon; ++t)
    for (int i = 0; i < m.num_agents; ++i) keeps_action[t][i] = include_revealed || !m.is_revealed(t - 1, i);
  auto init = [](int, int y, int) { return y; };
  auto update = [layout, keeps_action, k](int t, int i, int prev, int y, int, int a) {
    auto digits = detail::mixed_decode(prev, layout->radix[t - 1][i]);
    if (t - k + 1 > 0) {
      // Drop the oldest observation and the action that followed it.
      std::size_t drop = 1;
      if (digits.size() > 1 && !layout->is_y[t - 1][i][1]) drop = 2;
      digits.erase(digits.begin(), digits.begin() + std::min(drop, digits.size()));
    }
    if (keeps_action[t][i] && t - 1 >= std::max(0, t - k + 1)) digits.push_back(a);
    digits.push_back(y);
    return detail::mixed_encode(digits, layout->radix[t][i]);
  };
  auto describe = [layout](int t, int i, int v) {
    auto digits = detail::mixed_decode(v, layout->radix[t][i]);
    std::string s = "(";
    for (std::size_t c = 0; c < digits.size(); ++c)
      s += (c ? "," : "") + std::string(layout->is_y[t][i][c] ? "y" : "a") + std::to_string(digits[c]);
    return s + ")";
  };
  const std::string name = k >= m.horizon ? "identity" : "window-" + std::to_string(k);
  return CompressionScheme(name, SchemeKind::Private, layout->counts, init, update, describe);
}

/// The trivial compression S_t^i = P_t^i.
template <class S>
CompressionScheme identity_scheme(const BasicTeamModel<S>& m, std::uint64_t cap = kDefaultSizeCap) {
  return window_scheme(m, m.horizon, false, cap);
}

/// Single-valued compression.
template <class S>
CompressionScheme constant_scheme(const BasicTeamModel<S>& m, SchemeKind kind = SchemeKind::Private) {
  return CompressionScheme("constant", kind,
                           std::vector<std::vector<int>>(m.horizon, std::vector<int>(m.num_agents, 1)),
                           [](int, int, int) { return 0; }, [](int, int, int, int, int, int) { return 0; });
}

/// Keeps every private observation but forgets private actions.
template <class S>
CompressionScheme observations_only_scheme(const BasicTeamModel<S>& m, std::uint64_t cap = kDefaultSizeCap) {
  std::vector<std::vector<int>> counts(m.horizon, std::vector<int>(m.num_agents));
  for (int i = 0; i < m.num_agents; ++i) {
    std::uint64_t n = 1;
    for (int t = 0; t < m.horizon; ++t) {
      n = sat_mul(n, m.num_private(t, i));
      guard("compression values", n, cap);
      counts[t][i] = static_cast<int>(n);
    }
  }
  std::vector<std::vector<int>> ny(m.horizon, std::vector<int>(m.num_agents));
  for (int t = 0; t < m.horizon; ++t)
    for (int i = 0; i < m.num_agents; ++i) ny[t][i] = m.num_private(t, i);
  return CompressionScheme(
      "observations-only", SchemeKind::Private, counts, [](int, int y, int) { return y; },
      [ny](int t, int i, int prev, int y, int, int) { return prev * ny[t][i] + y; });
}

/**
 * Scheme given by explicit tables: init[i][z * |Y_1^i| + y] and
 * update[t][i][((prev * |Z_t| + z) * |Y_t^i| + y) * |A_{t-1}^i| + a] for t >= 1.
 */
template <class S>
CompressionScheme tabular_scheme(const BasicTeamModel<S>& m, std::string name, SchemeKind kind,
                                 std::vector<std::vector<int>> counts, std::vector<std::vector<int>> init,
                                 std::vector<std::vector<std::vector<int>>> update) {
  if (counts.size() != static_cast<std::size_t>(m.horizon)) throw SpecError("scheme '" + name + "': value counts must cover every stage");
  for (int t = 0; t < m.horizon; ++t) {
    if (counts[t].size() != static_cast<std::size_t>(m.num_agents))
      throw SpecError("scheme '" + name + "': value counts must list every agent");
    for (int c : counts[t])
      if (c < 1) throw SpecError("scheme '" + name + "': value counts must be positive");
  }
  if (init.size() != static_cast<std::size_t>(m.num_agents)) throw SpecError("scheme '" + name + "': init must list every agent");
  for (int i = 0; i < m.num_agents; ++i) {
    if (init[i].size() != static_cast<std::size_t>(m.num_common(0) * m.num_private(0, i)))
      throw SpecError("scheme '" + name + "': init table for agent " + std::to_string(i + 1) + " has the wrong size");
    for (int v : init[i])
      if (v < 0 || v >= counts[0][i]) throw SpecError("scheme '" + name + "': init value out of range");
  }
  if (update.size() != static_cast<std::size_t>(std::max(0, m.horizon - 1)))
    throw SpecError("scheme '" + name + "': update tables must cover stages 2..T");
  for (int t = 1; t < m.horizon; ++t) {
    if (update[t - 1].size() != static_cast<std::size_t>(m.num_agents))
      throw SpecError("scheme '" + name + "': update tables must list every agent");
    for (int i = 0; i < m.num_agents; ++i) {
      std::size_t want = static_cast<std::size_t>(counts[t - 1][i]) * m.num_common(t) * m.num_private(t, i) *
                         m.num_actions(t - 1, i);
      if (update[t - 1][i].size() != want)
        throw SpecError("scheme '" + name + "': update table at t=" + std::to_string(t + 1) + " for agent " +
                        std::to_string(i + 1) + " has the wrong size");
      for (int v : update[t - 1][i])
        if (v < 0 || v >= counts[t][i]) throw SpecError("scheme '" + name + "': update value out of range");
    }
  }
  std::vector<int> ny0(m.num_agents);
  for (int i = 0; i < m.num_agents; ++i) ny0[i] = m.num_private(0, i);
  std::vector<int> nz(m.horizon);
  std::vector<std::vector<int>> ny(m.horizon, std::vector<int>(m.num_agents)), na(m.horizon, std::vector<int>(m.num_agents));
  for (int t = 0; t < m.horizon; ++t) {
    nz[t] = m.num_common(t);
    for (int i = 0; i < m.num_agents; ++i) {
      ny[t][i] = m.num_private(t, i);
      na[t][i] = m.num_actions(t, i);
    }
  }
  auto init_fn = [init = std::move(init), ny0](int i, int y, int z) { return init[i][z * ny0[i] + y]; };
  auto update_fn = [update = std::move(update), nz, ny, na](int t, int i, int prev, int y, int z, int a) {
    return update[t - 1][i][((static_cast<std::size_t>(prev) * nz[t] + z) * ny[t][i] + y) * na[t - 1][i] + a];
  };
  return CompressionScheme(std::move(name), kind, std::move(counts), init_fn, update_fn);
}

/// Tabulates any recursive scheme into the explicit tables above.
template <class S>
std::pair<std::vector<std::vector<int>>, std::vector<std::vector<std::vector<int>>>> tabulate(
    const BasicTeamModel<S>& m, const CompressionScheme& s, std::uint64_t cap = kDefaultSizeCap) {
  std::vector<std::vector<int>> init(m.num_agents);
  std::vector<std::vector<std::vector<int>>> update(std::max(0, m.horizon - 1), std::vector<std::vector<int>>(m.num_agents));
  for (int i = 0; i < m.num_agents; ++i)
    for (int z = 0; z < m.num_common(0); ++z)
      for (int y = 0; y < m.num_private(0, i); ++y) init[i].push_back(s.initial(i, y, z));
  for (int t = 1; t < m.horizon; ++t)
    for (int i = 0; i < m.num_agents; ++i) {
      guard("scheme table entries",
            sat_mul(sat_mul(s.count(t - 1, i), m.num_common(t)), sat_mul(m.num_private(t, i), m.num_actions(t - 1, i))), cap);
      auto& tab = update[t - 1][i];
      for (int v = 0; v < s.count(t - 1, i); ++v)
        for (int z = 0; z < m.num_common(t); ++z)
          for (int y = 0; y < m.num_private(t, i); ++y)
            for (int a = 0; a < m.num_actions(t - 1, i); ++a) tab.push_back(s.update(t, i, v, y, z, a));
    }
  return {std::move(init), std::move(update)};
}

}  // namespace teamdp
