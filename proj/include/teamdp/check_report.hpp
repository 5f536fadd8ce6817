#pragma once

#include "model.hpp"

#include <map>
#include <optional>

namespace teamdp {

enum class Verdict { Holds, Fails, Skipped };
enum class Coverage { Exhaustive, Sampled };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "HOLDS";
    case Verdict::Fails: return "FAILS";
    default: return "SKIPPED";
  }
}
inline const char* to_string(Coverage c) { return c == Coverage::Exhaustive ? "EXHAUSTIVE" : "SAMPLED"; }

/// Quantities a conditioning event or an outcome can be built from, all at the query stage t.
enum class Feature {
  Common,         ///< c_t
  Private,        ///< p_t^i
  AllPrivate,     ///< p_t^{1:N}
  Label,          ///< s_t^i (or l_t^i)
  AllLabels,      ///< s_t^{1:N}
  OtherLabels,    ///< s_t^{-i}
  Action,         ///< joint a_t
  NextLabel,      ///< s_{t+1}^i
  NextAllLabels,  ///< s_{t+1}^{1:N}
  NextCommonObs,  ///< z_{t+1}
  State,          ///< x_t
  OtherPrivate,   ///< p_t^{-i}
};

struct FeatureRef {
  Feature feature;
  int agent = -1;
};

/**
 * A pair of conditional laws to compare: P{outcome | lhs} against
 * P{outcome | rhs}. When utility_agent >= 0 the outcome is x_t and the
 * comparison is between E[u_t^i(x_t, a)] for every joint action a.
 */
struct Query {
  int stage = 0;
  std::vector<FeatureRef> lhs, rhs, outcome;
  int utility_agent = -1;
};

/// Conditional law keyed by a printable outcome.
using Law = std::map<std::string, double>;

struct Counterexample {
  std::string condition;
  int stage = 0;   ///< 0-based
  int agent = -1;  ///< -1 for joint conditions
  HistoryPolicy profile;
  Query query;
  /// Values of the conditioning features, one descriptor per feature.
  std::vector<std::vector<std::int64_t>> lhs_value, rhs_value;
  std::string realization;
  Law lhs_law, rhs_law;
  double deviation = 0;
};

struct ConditionResult {
  std::string condition;
  Verdict verdict = Verdict::Holds;
  std::uint64_t realizations = 0;
  std::string note;
  std::optional<Counterexample> counterexample;
};

struct CheckReport {
  std::string check;
  std::string scheme;
  Coverage coverage = Coverage::Exhaustive;
  std::uint64_t profiles = 0;
  std::uint64_t realizations = 0;
  double tolerance = kEqualityTolerance;
  std::vector<ConditionResult> conditions;

  ConditionResult& condition(const std::string& name) {
    for (auto& c : conditions)
      if (c.condition == name) return c;
    conditions.push_back({name, Verdict::Holds, 0, {}, {}});
    return conditions.back();
  }
  const ConditionResult* find(const std::string& name) const {
    for (const auto& c : conditions)
      if (c.condition == name) return &c;
    return nullptr;
  }
  Verdict verdict() const {
    bool skipped = false;
    for (const auto& c : conditions) {
      if (c.verdict == Verdict::Fails) return Verdict::Fails;
      if (c.verdict == Verdict::Skipped) skipped = true;
    }
    return skipped ? Verdict::Skipped : Verdict::Holds;
  }
  bool holds() const { return verdict() == Verdict::Holds; }
  /// First counterexample in condition order.
  const Counterexample* counterexample() const {
    for (const auto& c : conditions)
      if (c.counterexample) return &*c.counterexample;
    return nullptr;
  }
};

}  // namespace teamdp
