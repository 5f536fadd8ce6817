#pragma once

#include "check_report.hpp"
#include "forest.hpp"

#include <random>

namespace teamdp {

/// Decision rules of one stage: per agent, sorted decision keys and one action row per key.
template <class S>
struct StageRule {
  std::vector<std::vector<std::uint64_t>> keys;
  std::vector<std::vector<std::vector<S>>> rows;

  std::span<const S> row(int i, std::uint64_t key) const {
    auto it = std::lower_bound(keys[i].begin(), keys[i].end(), key);
    return rows[i][it - keys[i].begin()];
  }
};

template <class S>
using RuleSet = std::vector<StageRule<S>>;

struct EnumerationStats {
  std::uint64_t visits = 0;
  Coverage coverage = Coverage::Exhaustive;
};

namespace detail {
struct BudgetExceeded {};
}  // namespace detail

/**
 * Depth-first enumeration of deterministic decision rules for stages
 * 0..decided-1. An agent's rule at stage t maps the decision key of each
 * positive-probability node, key_of(forest, t, node, agent), to an action.
 * Agents marked free are not enumerated and get all-ones rows. After the
 * last decided stage the forest is extended (when the horizon allows) and
 * visit(forest, rules) is called. A key function with a prepare(forest, t)
 * member gets it called before the keys of stage t are read.
 */
template <class S, class KeyFn, class Visit>
class RuleEnumerator {
 public:
  RuleEnumerator(Forest<S>& f, int decided, std::vector<char> free_agent, KeyFn key_of, Visit visit)
      : f_(f), decided_(decided), free_(std::move(free_agent)), key_of_(std::move(key_of)), visit_(std::move(visit)) {
    ones_.resize(f.model().horizon);
    for (int t = 0; t < f.model().horizon; ++t)
      for (int i = 0; i < f.model().num_agents; ++i) ones_[t].emplace_back(f.model().num_actions(t, i), S(1));
  }

  /// Every rule combination; throws detail::BudgetExceeded past `budget` visits.
  std::uint64_t exhaustive(std::uint64_t budget) {
    budget_ = budget;
    visits_ = 0;
    rules_.clear();
    f_.truncate(1);
    recurse(nullptr);
    return visits_;
  }

  /// `samples` independent uniformly random rule combinations.
  std::uint64_t sampled(std::uint64_t samples, std::uint64_t seed) {
    budget_ = kSaturated;
    visits_ = 0;
    std::mt19937_64 rng(seed);
    for (std::uint64_t k = 0; k < samples; ++k) {
      rules_.clear();
      f_.truncate(1);
      recurse(&rng);
    }
    return visits_;
  }

  /// Number of leaves, stopping once it exceeds `cap`.
  std::uint64_t count(std::uint64_t cap) {
    counting_ = true;
    count_ = 0;
    budget_ = cap;
    rules_.clear();
    f_.truncate(1);
    try {
      recurse(nullptr);
    } catch (const detail::BudgetExceeded&) {
    }
    counting_ = false;
    return count_;
  }

  /// Row callable for the forest at its current last stage under the given rule.
  auto rows_for(const StageRule<S>& rule, const std::vector<std::uint64_t>& keys) {
    const int t = f_.depth() - 1;
    const int N = f_.model().num_agents;
    return [this, &rule, &keys, t, N](int n, int i) -> std::span<const S> {
      if (free_[i]) return ones_[t][i];
      return rule.row(i, keys[static_cast<std::size_t>(n) * N + i]);
    };
  }

 private:
  void recurse(std::mt19937_64* rng) {
    const int t = f_.depth() - 1;
    if (static_cast<int>(rules_.size()) == decided_) {
      if (counting_) {
        if (++count_ > budget_) throw detail::BudgetExceeded{};
        return;
      }
      if (++visits_ > budget_) throw detail::BudgetExceeded{};
      visit_(static_cast<const Forest<S>&>(f_), static_cast<const RuleSet<S>&>(rules_));
      return;
    }
    const auto& m = f_.model();
    const int N = m.num_agents;
    const auto& st = f_.stage(t);
    if constexpr (requires { key_of_.prepare(static_cast<const Forest<S>&>(f_), t); })
      key_of_.prepare(static_cast<const Forest<S>&>(f_), t);
    std::vector<std::uint64_t> keys(st.size() * N);
    StageRule<S> rule;
    rule.keys.resize(N);
    rule.rows.resize(N);
    for (int i = 0; i < N; ++i) {
      if (free_[i]) continue;
      for (int n = 0; n < static_cast<int>(st.size()); ++n) {
        keys[static_cast<std::size_t>(n) * N + i] = key_of_(static_cast<const Forest<S>&>(f_), t, n, i);
        rule.keys[i].push_back(keys[static_cast<std::size_t>(n) * N + i]);
      }
      std::sort(rule.keys[i].begin(), rule.keys[i].end());
      rule.keys[i].erase(std::unique(rule.keys[i].begin(), rule.keys[i].end()), rule.keys[i].end());
      rule.rows[i].assign(rule.keys[i].size(), std::vector<S>(m.num_actions(t, i), S(0)));
    }
    // Digits: (agent, key) positions, agent 0 first, last position fastest.
    std::vector<std::pair<int, std::size_t>> digits;
    for (int i = 0; i < N; ++i)
      for (std::size_t k = 0; k < rule.keys[i].size(); ++k) digits.emplace_back(i, k);
    std::vector<int> value(digits.size(), 0);
    auto set_rows = [&]() {
      for (std::size_t d = 0; d < digits.size(); ++d) {
        auto& r = rule.rows[digits[d].first][digits[d].second];
        std::fill(r.begin(), r.end(), S(0));
        r[value[d]] = S(1);
      }
    };
    const bool last = static_cast<int>(rules_.size()) + 1 == decided_;
    if (counting_ && last) {
      // Leaves of the last decided stage are counted without building anything.
      std::uint64_t n = 1;
      for (const auto& [i, k] : digits) n = sat_mul(n, m.num_actions(t, i));
      count_ = sat_add(count_, n);
      if (count_ > budget_) throw detail::BudgetExceeded{};
      return;
    }
    auto descend = [&]() {
      set_rows();
      rules_.push_back(rule);
      if (t + 1 < m.horizon) {
        f_.extend(rows_for(rules_.back(), keys));
        recurse(rng);
        f_.truncate(t + 1);
      } else {
        recurse(rng);
      }
      rules_.pop_back();
    };
    if (rng) {
      for (std::size_t d = 0; d < digits.size(); ++d)
        value[d] = std::uniform_int_distribution<int>(0, m.num_actions(t, digits[d].first) - 1)(*rng);
      descend();
      return;
    }
    while (true) {
      descend();
      int d = static_cast<int>(digits.size()) - 1;
      while (d >= 0 && ++value[d] == m.num_actions(t, digits[d].first)) value[d--] = 0;
      if (d < 0) break;
    }
  }

  Forest<S>& f_;
  int decided_;
  std::vector<char> free_;
  KeyFn key_of_;
  Visit visit_;
  std::vector<std::vector<std::vector<S>>> ones_;
  RuleSet<S> rules_;
  std::uint64_t budget_ = kSaturated;
  std::uint64_t visits_ = 0;
  bool counting_ = false;
  std::uint64_t count_ = 0;
};

template <class S, class KeyFn, class Visit>
RuleEnumerator<S, KeyFn, Visit> make_enumerator(Forest<S>& f, int decided, std::vector<char> free_agent, KeyFn key_of,
                                                Visit visit) {
  return RuleEnumerator<S, KeyFn, Visit>(f, decided, std::move(free_agent), std::move(key_of), std::move(visit));
}

/**
 * Full-history profile reproducing the given rules on the forest's
 * positive-probability nodes (stages covered by the rules); everything else
 * plays action 0.
 */
template <class S, class KeyFn>
BasicHistoryPolicy<S> rules_to_policy(const BasicTeamModel<S>& m, const Forest<S>& f, const RuleSet<S>& rules,
                                      KeyFn&& key_of, const std::vector<char>& free_agent) {
  auto g = constant_policy(m);
  for (int t = 0; t < static_cast<int>(rules.size()) && t < f.depth(); ++t) {
    if constexpr (requires { key_of.prepare(f, t); }) key_of.prepare(f, t);
    const auto& st = f.stage(t);
    for (int n = 0; n < static_cast<int>(st.size()); ++n)
      for (int i = 0; i < m.num_agents; ++i) {
        if (free_agent[i]) continue;
        auto src = rules[t].row(i, key_of(f, t, n, i));
        auto dst = g.row(t, i, f.history(t, n, i));
        std::copy(src.begin(), src.end(), dst.begin());
      }
  }
  return g;
}

}  // namespace teamdp
