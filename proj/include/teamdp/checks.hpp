#pragma once

#include "belief.hpp"
#include "enumeration.hpp"
#include "random.hpp"
#include "solver.hpp"

#include <memory>

namespace teamdp {

/// Flat feature value; multi-part values carry a length prefix per part.
using Descriptor = std::vector<std::int64_t>;

/**
 * Source of compression values for the checkers. Values are descriptors so
 * that profile-dependent compressions (a scheme value paired with the common
 * belief) can be compared across profiles and replayed.
 */
class Labeler {
 public:
  virtual ~Labeler() = default;
  virtual std::string name() const = 0;
  virtual SchemeKind kind() const = 0;
  /// Labels to attach when forests are built for this labeler.
  virtual const InformationUpdate* forest_labels() const = 0;
  /// Fills the descriptors of stage t; returns the first (node, agent) whose value is out of range.
  virtual std::optional<std::pair<int, int>> prepare(const Forest<double>& f, int t) = 0;
  /// Value of one agent history under a full-history profile, computed from scratch.
  virtual Descriptor replay(const TeamModel& m, const HistoryPolicy& g, const AgentHistory& h) = 0;
  /// Drops anything replay() cached for an earlier profile.
  virtual void reset() {}
  virtual std::string text(const Descriptor& d) const {
    std::string s;
    for (std::size_t k = 0; k < d.size(); ++k) s += (k ? "," : "") + std::to_string(d[k]);
    return s;
  }

  const Descriptor& descriptor(int t, int n, int i) const { return desc_[t][static_cast<std::size_t>(n) * agents_ + i]; }
  std::uint64_t id(int t, int n, int i) const { return ids_[t][static_cast<std::size_t>(n) * agents_ + i]; }

 protected:
  void store(int t, int agents, std::vector<Descriptor>&& d) {
    agents_ = agents;
    if (static_cast<int>(desc_.size()) <= t) {
      desc_.resize(t + 1);
      ids_.resize(t + 1);
    }
    ids_[t].resize(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) ids_[t][k] = intern_.emplace(d[k], intern_.size()).first->second;
    desc_[t] = std::move(d);
  }

 private:
  int agents_ = 1;
  std::vector<std::vector<Descriptor>> desc_;
  std::vector<std::vector<std::uint64_t>> ids_;
  std::map<Descriptor, std::uint64_t> intern_;
};

/// Labels read directly from a recursive scheme.
class SchemeLabeler : public Labeler {
 public:
  explicit SchemeLabeler(const CompressionScheme& s) : s_(s) {}
  std::string name() const override { return s_.name(); }
  SchemeKind kind() const override { return s_.kind(); }
  const InformationUpdate* forest_labels() const override { return &s_; }
  std::optional<std::pair<int, int>> prepare(const Forest<double>& f, int t) override {
    const auto& st = f.stage(t);
    const int N = f.model().num_agents;
    std::optional<std::pair<int, int>> bad;
    std::vector<Descriptor> d(st.label.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      const int i = static_cast<int>(k % N);
      d[k] = {st.label[k]};
      if (!bad && (st.label[k] < 0 || st.label[k] >= s_.count(t, i))) bad = {static_cast<int>(k / N), i};
    }
    store(t, N, std::move(d));
    return bad;
  }
  Descriptor replay(const TeamModel& m, const HistoryPolicy&, const AgentHistory& h) override {
    return {s_.value_of(m, h)};
  }
  std::string text(const Descriptor& d) const override { return std::to_string(d[0]); }

 private:
  const CompressionScheme& s_;
};

/**
 * The composite compression (S_t^i, Pi_t): a private scheme value together
 * with the common belief, which depends on the profile played so far.
 */
class CompositeScheme : public Labeler {
 public:
  explicit CompositeScheme(const CompressionScheme& base) : base_(base) {}
  const CompressionScheme& base() const { return base_; }
  std::string name() const override { return base_.name() + "+belief"; }
  SchemeKind kind() const override { return SchemeKind::General; }
  const InformationUpdate* forest_labels() const override { return &base_; }
  std::optional<std::pair<int, int>> prepare(const Forest<double>& f, int t) override {
    const auto& st = f.stage(t);
    const int N = f.model().num_agents;
    auto beliefs = sib_beliefs(f, base_.counts(), t);
    std::map<std::uint64_t, BeliefKey<double>> keys;
    for (const auto& [c, b] : beliefs) keys.emplace(c, belief_key(b));
    std::optional<std::pair<int, int>> bad;
    std::vector<Descriptor> d(st.label.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      const int i = static_cast<int>(k % N);
      const auto& key = keys.at(st.common[k / N]);
      d[k].reserve(key.size() + 1);
      d[k].push_back(st.label[k]);
      d[k].insert(d[k].end(), key.begin(), key.end());
      if (!bad && (st.label[k] < 0 || st.label[k] >= base_.count(t, i))) bad = {static_cast<int>(k / N), i};
    }
    store(t, N, std::move(d));
    return bad;
  }
  Descriptor replay(const TeamModel& m, const HistoryPolicy& g, const AgentHistory& h) override {
    auto it = cache_.find(h.z);
    if (it == cache_.end()) it = cache_.emplace(h.z, belief_key(sib_belief(m, base_, g, h.z))).first;
    Descriptor d{base_.value_of(m, h)};
    d.insert(d.end(), it->second.begin(), it->second.end());
    return d;
  }
  void reset() override { cache_.clear(); }
  std::string text(const Descriptor& d) const override {
    std::string s = "s=" + std::to_string(d[0]) + " pi=[";
    bool first = true;
    for (std::size_t k = 1; k < d.size(); ++k)
      if (d[k] != 0) {
        s += (first ? "" : " ") + std::to_string(k - 1) + ":" + scalar_traits<double>::to_string(d[k] * 1e-9);
        first = false;
      }
    return s + "]";
  }

  /**
   * Value counts per (t, i): pairs (s^i, pi) reachable under deterministic
   * SIB profiles, with s^i in the support of pi.
   */
  std::vector<std::vector<std::uint64_t>> reachable_counts(const TeamModel& m,
                                                           std::uint64_t cap = kDefaultPrescriptionCap) const {
    auto g = expand_belief_graph(m, base_, cap);
    std::vector<std::vector<std::uint64_t>> out(m.horizon, std::vector<std::uint64_t>(m.num_agents, 0));
    for (int t = 0; t < m.horizon; ++t)
      for (const auto& node : g.stages[t])
        for (int i = 0; i < m.num_agents; ++i) out[t][i] += node.support[i].size();
    return out;
  }

 private:
  const CompressionScheme& base_;
  std::map<std::vector<int>, BeliefKey<double>> cache_;
};

/// Generalized compression L_t^i := (S_t^i, Pi_t) built from a private scheme.
inline CompositeScheme compose_with_belief(const CompressionScheme& s) {
  if (s.kind() != SchemeKind::Private) throw std::invalid_argument("compose_with_belief needs a private scheme");
  return CompositeScheme(s);
}

struct CheckOptions {
  std::uint64_t profile_budget = 20'000;  ///< exhaustive families larger than this are sampled
  int random_profiles = 16;               ///< randomized profiles per family on top of the deterministic ones
  double tolerance = kEqualityTolerance;
  std::uint64_t seed = 1;
  std::uint64_t open_loop_cap = kDefaultSizeCap;
};

namespace detail {

inline void append_part(Descriptor& key, const Descriptor& part) {
  key.push_back(static_cast<std::int64_t>(part.size()));
  key.insert(key.end(), part.begin(), part.end());
}

inline std::vector<Descriptor> split_parts(const Descriptor& d) {
  std::vector<Descriptor> out;
  for (std::size_t k = 0; k < d.size();) {
    const auto len = static_cast<std::size_t>(d[k]);
    out.emplace_back(d.begin() + k + 1, d.begin() + k + 1 + len);
    k += len + 1;
  }
  return out;
}

inline bool uses_next(const Query& q) {
  auto next = [](const std::vector<FeatureRef>& v) {
    for (const auto& r : v)
      if (r.feature == Feature::Action || r.feature == Feature::NextLabel || r.feature == Feature::NextAllLabels ||
          r.feature == Feature::NextCommonObs)
        return true;
    return false;
  };
  return next(q.lhs) || next(q.rhs) || next(q.outcome);
}

/// Per-element values a feature can read: indices, labels and actions at stages t and t+1.
struct ElementView {
  std::uint64_t common = 0;
  std::vector<std::uint64_t> priv;
  std::vector<const Descriptor*> label, next_label;
  int x = 0, action = 0, next_z = 0;
};

inline Descriptor feature_value(const FeatureRef& r, const ElementView& e) {
  const int N = static_cast<int>(e.priv.size());
  Descriptor d;
  auto labels = [&](const std::vector<const Descriptor*>& v, int skip) {
    for (int j = 0; j < N; ++j)
      if (j != skip) append_part(d, *v[j]);
  };
  switch (r.feature) {
    case Feature::Common: d.push_back(static_cast<std::int64_t>(e.common)); break;
    case Feature::Private: d.push_back(static_cast<std::int64_t>(e.priv[r.agent])); break;
    case Feature::AllPrivate:
      for (auto p : e.priv) d.push_back(static_cast<std::int64_t>(p));
      break;
    case Feature::OtherPrivate:
      for (int j = 0; j < N; ++j)
        if (j != r.agent) d.push_back(static_cast<std::int64_t>(e.priv[j]));
      break;
    case Feature::Label: d = *e.label[r.agent]; break;
    case Feature::AllLabels: labels(e.label, -1); break;
    case Feature::OtherLabels: labels(e.label, r.agent); break;
    case Feature::Action: d.push_back(e.action); break;
    case Feature::NextLabel: d = *e.next_label[r.agent]; break;
    case Feature::NextAllLabels: labels(e.next_label, -1); break;
    case Feature::NextCommonObs: d.push_back(e.next_z); break;
    case Feature::State: d.push_back(e.x); break;
  }
  return d;
}

inline std::string feature_text(const TeamModel& m, const Labeler& lab, int t, const FeatureRef& r, const Descriptor& d) {
  const std::string who = r.agent >= 0 ? std::to_string(r.agent + 1) : "";
  auto list = [&](const std::string& name, bool skip_agent) {
    auto parts = split_parts(d);
    std::string s = name + "=(";
    for (std::size_t k = 0; k < parts.size(); ++k) s += (k ? "; " : "") + lab.text(parts[k]);
    (void)skip_agent;
    return s + ")";
  };
  auto ints = [&](const std::string& name) {
    std::string s = name + "=(";
    for (std::size_t k = 0; k < d.size(); ++k) s += (k ? "," : "") + std::to_string(d[k]);
    return s + ")";
  };
  switch (r.feature) {
    case Feature::Common: return "c=" + std::to_string(d[0]);
    case Feature::Private: return "p^" + who + "=" + std::to_string(d[0]);
    case Feature::AllPrivate: return ints("p");
    case Feature::OtherPrivate: return ints("p^-" + who);
    case Feature::Label: return "s^" + who + "=" + lab.text(d);
    case Feature::AllLabels: return list("s", false);
    case Feature::OtherLabels: return list("s^-" + who, true);
    case Feature::Action: {
      auto a = m.decode_joint(t, static_cast<int>(d[0]));
      std::string s = "a=(";
      for (std::size_t k = 0; k < a.size(); ++k) s += (k ? "," : "") + std::to_string(a[k]);
      return s + ")";
    }
    case Feature::NextLabel: return "s'^" + who + "=" + lab.text(d);
    case Feature::NextAllLabels: return list("s'", false);
    case Feature::NextCommonObs: return "z'=" + std::to_string(d[0]);
    case Feature::State: return "x=" + std::to_string(d[0]);
  }
  return {};
}

inline std::string features_text(const TeamModel& m, const Labeler& lab, int t, const std::vector<FeatureRef>& refs,
                                 const std::vector<Descriptor>& values) {
  std::string s;
  for (std::size_t k = 0; k < refs.size(); ++k) s += (k ? " " : "") + feature_text(m, lab, t, refs[k], values[k]);
  return s;
}

/// Accumulates the two families of conditional laws of a query.
class LawAccumulator {
 public:
  LawAccumulator(const Query& q) : q_(q) {}

  void add(const ElementView& e, double w) {
    Descriptor lk, rk, ok;
    std::vector<Descriptor> lparts, rparts;
    for (const auto& r : q_.lhs) {
      lparts.push_back(feature_value(r, e));
      append_part(lk, lparts.back());
    }
    for (const auto& r : q_.rhs) {
      rparts.push_back(feature_value(r, e));
      append_part(rk, rparts.back());
    }
    for (const auto& r : q_.outcome) append_part(ok, feature_value(r, e));
    lhs_[lk][ok] += w;
    rhs_[rk][ok] += w;
    auto [it, fresh] = pair_.emplace(lk, rk);
    if (fresh) parts_.emplace(lk, std::make_pair(std::move(lparts), std::move(rparts)));
    else if (it->second != rk) throw std::logic_error("right-hand conditioning is not a function of the left-hand one");
  }

  using Dist = std::map<Descriptor, double>;
  const std::map<Descriptor, Dist>& lhs() const { return lhs_; }
  const Dist& rhs_of(const Descriptor& lk) const { return rhs_.at(pair_.at(lk)); }
  const std::pair<std::vector<Descriptor>, std::vector<Descriptor>>& parts(const Descriptor& lk) const {
    return parts_.at(lk);
  }

 private:
  const Query& q_;
  std::map<Descriptor, Dist> lhs_, rhs_;
  std::map<Descriptor, Descriptor> pair_;
  std::map<Descriptor, std::pair<std::vector<Descriptor>, std::vector<Descriptor>>> parts_;
};

/// Deviation between two unnormalized laws, with printable normalized laws.
inline double law_deviation(const TeamModel& m, const Labeler& lab, const Query& q, const LawAccumulator::Dist& a,
                            const LawAccumulator::Dist& b, Law* la, Law* lb) {
  double ta = 0, tb = 0;
  for (const auto& [k, p] : a) ta += p;
  for (const auto& [k, p] : b) tb += p;
  const int t = q.stage;
  double dev = 0;
  if (q.utility_agent >= 0) {
    // Outcome is the state; compare E[u_t^i(x, a)] for every joint action a.
    for (int ja = 0; ja < m.num_joint_actions(t); ++ja) {
      double ea = 0, eb = 0;
      for (const auto& [k, p] : a) ea += p / ta * m.util(t, q.utility_agent, static_cast<int>(split_parts(k)[0][0]), ja);
      for (const auto& [k, p] : b) eb += p / tb * m.util(t, q.utility_agent, static_cast<int>(split_parts(k)[0][0]), ja);
      dev = std::max(dev, std::abs(ea - eb));
      if (la) {
        const std::string name = "E[u|" + feature_text(m, lab, t, {Feature::Action, -1}, {ja}) + "]";
        (*la)[name] = ea;
        (*lb)[name] = eb;
      }
    }
    return dev;
  }
  auto name = [&](const Descriptor& k) {
    auto parts = split_parts(k);
    return features_text(m, lab, t, q.outcome, parts);
  };
  for (const auto& [k, p] : a) {
    auto it = b.find(k);
    dev = std::max(dev, std::abs(p / ta - (it == b.end() ? 0.0 : it->second / tb)));
  }
  for (const auto& [k, p] : b)
    if (!a.count(k)) dev = std::max(dev, p / tb);
  if (la) {
    for (const auto& [k, p] : a) (*la)[name(k)] = p / ta;
    for (const auto& [k, p] : b) (*lb)[name(k)] = p / tb;
  }
  return dev;
}

struct QueryResult {
  std::uint64_t realizations = 0;
  std::optional<Counterexample> failure;  ///< profile and condition fields left for the caller
};

/**
 * Evaluates a query on a forest whose stage t (and t+1 when the query reads
 * next-stage features) has been prepared in the labeler.
 */
inline QueryResult evaluate_query(const TeamModel& m, const Forest<double>& f, const Labeler& lab, const Query& q,
                                  double tol) {
  const int t = q.stage;
  const int N = m.num_agents;
  LawAccumulator acc(q);
  ElementView e;
  e.priv.resize(N);
  e.label.resize(N);
  e.next_label.resize(N);
  const auto& st = f.stage(t);
  auto fill = [&](int n) {
    e.common = st.common[n];
    e.x = st.x[n];
    for (int i = 0; i < N; ++i) {
      e.priv[i] = st.priv[static_cast<std::size_t>(n) * N + i];
      e.label[i] = &lab.descriptor(t, n, i);
    }
  };
  if (uses_next(q)) {
    const auto& nx = f.stage(t + 1);
    for (int c = 0; c < static_cast<int>(nx.size()); ++c) {
      fill(nx.parent[c]);
      e.action = nx.prev_joint[c];
      e.next_z = nx.z[c];
      for (int i = 0; i < N; ++i) e.next_label[i] = &lab.descriptor(t + 1, c, i);
      acc.add(e, nx.prob[c]);
    }
  } else {
    for (int n = 0; n < static_cast<int>(st.size()); ++n) {
      fill(n);
      acc.add(e, st.prob[n]);
    }
  }
  QueryResult out;
  for (const auto& [lk, law] : acc.lhs()) {
    ++out.realizations;
    const auto& rlaw = acc.rhs_of(lk);
    if (out.failure) continue;
    const double dev = law_deviation(m, lab, q, law, rlaw, nullptr, nullptr);
    if (dev > tol) {
      Counterexample cx;
      cx.stage = t;
      cx.query = q;
      cx.lhs_value = acc.parts(lk).first;
      cx.rhs_value = acc.parts(lk).second;
      cx.deviation = law_deviation(m, lab, q, law, rlaw, &cx.lhs_law, &cx.rhs_law);
      cx.realization = features_text(m, lab, t, q.lhs, cx.lhs_value);
      out.failure = std::move(cx);
    }
  }
  return out;
}

/// Decision keys for rule enumeration: full history, (common history, label) or label alone.
struct RuleKey {
  enum class Kind { History, CommonLabel, Label };
  Kind kind = Kind::History;
  Labeler* lab = nullptr;
  std::shared_ptr<std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t>> pairs =
      std::make_shared<std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t>>();

  void prepare(const Forest<double>& f, int t) const {
    if (kind != Kind::History) lab->prepare(f, t);
  }
  std::uint64_t operator()(const Forest<double>& f, int t, int n, int i) const {
    switch (kind) {
      case Kind::History: return f.history(t, n, i);
      case Kind::Label: return lab->id(t, n, i);
      case Kind::CommonLabel:
        return pairs->emplace(std::make_pair(f.stage(t).common[n], lab->id(t, n, i)), pairs->size()).first->second;
    }
    return 0;
  }
};

/// Keys by `early` before stage `from`, by `late` from there on.
struct SwitchKey {
  const RuleKey* early;
  const RuleKey* late;
  int from;

  const RuleKey& at(int t) const { return t < from ? *early : *late; }
  void prepare(const Forest<double>& f, int t) const { at(t).prepare(f, t); }
  std::uint64_t operator()(const Forest<double>& f, int t, int n, int i) const { return at(t)(f, t, n, i); }
};

template <class Key>
RuleSet<double> random_rules(Forest<double>& f, const Key& key, int stages, std::mt19937_64& rng) {
  const auto& m = f.model();
  const int N = m.num_agents;
  RuleSet<double> rules;
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  f.truncate(1);
  for (int t = 0; t < stages; ++t) {
    key.prepare(f, t);
    const auto& st = f.stage(t);
    StageRule<double> rule;
    rule.keys.resize(N);
    rule.rows.resize(N);
    for (int i = 0; i < N; ++i) {
      for (int n = 0; n < static_cast<int>(st.size()); ++n) rule.keys[i].push_back(key(f, t, n, i));
      std::sort(rule.keys[i].begin(), rule.keys[i].end());
      rule.keys[i].erase(std::unique(rule.keys[i].begin(), rule.keys[i].end()), rule.keys[i].end());
      for (std::size_t k = 0; k < rule.keys[i].size(); ++k) {
        std::vector<double> row(m.num_actions(t, i));
        double total = 0;
        for (auto& r : row) total += (r = unif(rng));
        for (auto& r : row) r /= total;
        rule.rows[i].push_back(std::move(row));
      }
    }
    rules.push_back(std::move(rule));
    if (t + 1 < m.horizon)
      f.extend([&](int n, int i) { return rules[t].row(i, key(f, t, n, i)); });
  }
  return rules;
}

template <class Key>
HistoryPolicy rules_profile(const TeamModel& m, const Forest<double>& f, const RuleSet<double>& rules, const Key& key,
                            int uniform_stage = -1) {
  auto g = rules_to_policy(m, f, rules, key, std::vector<char>(m.num_agents, 0));
  if (uniform_stage >= 0)
    for (int i = 0; i < m.num_agents; ++i)
      std::fill(g.table[uniform_stage][i].begin(), g.table[uniform_stage][i].end(),
                1.0 / m.num_actions(uniform_stage, i));
  return g;
}

/// Runs the enumerated family for one stage, falling back to sampling past the budget.
template <class Visit>
std::uint64_t run_family(Forest<double>& f, int decided, const RuleKey& key, Visit visit, const CheckOptions& opt,
                         std::uint64_t stream, CheckReport& rep) {
  auto en = make_enumerator(f, decided, std::vector<char>(f.model().num_agents, 0), key, visit);
  if (en.count(opt.profile_budget) <= opt.profile_budget) return en.exhaustive(kSaturated);
  rep.coverage = Coverage::Sampled;
  return en.sampled(opt.profile_budget, stream);
}

inline void record(CheckReport& rep, const std::string& cond, int agent, QueryResult&& r,
                   const std::function<HistoryPolicy()>& profile) {
  auto& c = rep.condition(cond);
  c.realizations += r.realizations;
  rep.realizations += r.realizations;
  if (r.failure && c.verdict != Verdict::Fails) {
    c.verdict = Verdict::Fails;
    r.failure->condition = cond;
    r.failure->agent = agent;
    r.failure->profile = profile();
    c.counterexample = std::move(r.failure);
  }
}

inline void record_range(CheckReport& rep, const Labeler& lab, const std::optional<std::pair<int, int>>& bad, int t,
                         const Forest<double>& f, const std::function<HistoryPolicy()>& profile) {
  auto& c = rep.condition("i");
  ++c.realizations;
  if (!bad || c.verdict == Verdict::Fails) return;
  c.verdict = Verdict::Fails;
  Counterexample cx;
  cx.condition = "i";
  cx.stage = t;
  cx.agent = bad->second;
  cx.profile = profile();
  cx.realization = "value " + lab.text(lab.descriptor(t, bad->first, bad->second)) + " of agent " +
                   std::to_string(bad->second + 1) + " at history " +
                   std::to_string(f.history(t, bad->first, bad->second)) + " is outside the declared value set";
  cx.deviation = 1;
  c.counterexample = std::move(cx);
}

/// Queries of Def. 2 (general == false) or Def. 3 (general == true).
inline Query condition_ii(int t, bool general) {
  Query q;
  q.stage = t;
  q.lhs = {{Feature::Common}, {Feature::AllPrivate}, {Feature::Action}};
  if (general) q.rhs = {{Feature::AllLabels}, {Feature::Action}};
  else q.rhs = {{Feature::Common}, {Feature::AllLabels}, {Feature::Action}};
  q.outcome = {{Feature::NextAllLabels}};
  if (!general) q.outcome.push_back({Feature::NextCommonObs});
  return q;
}

inline Query condition_iii(int t, int i, bool general) {
  Query q;
  q.stage = t;
  q.lhs = {{Feature::Common}, {Feature::Private, i}};
  if (general) q.rhs = {{Feature::Label, i}};
  else q.rhs = {{Feature::Common}, {Feature::Label, i}};
  q.outcome = {{Feature::State}};
  q.utility_agent = i;
  return q;
}

inline Query condition_iv(int t, int i, bool general) {
  Query q = condition_iii(t, i, general);
  q.outcome = {{Feature::OtherLabels, i}};
  q.utility_agent = -1;
  return q;
}

inline CheckReport check_sufficiency(const TeamModel& m, Labeler& lab, bool general, const CheckOptions& opt) {
  require_valid(m);
  CheckReport rep;
  rep.check = general ? "sufficient-general" : "sufficient-private";
  rep.scheme = lab.name();
  rep.tolerance = opt.tolerance;
  for (const char* c : {"i", "ii", "iii", "iv"}) rep.condition(c);
  const int T = m.horizon, N = m.num_agents;
  Forest<double> f(m, lab.forest_labels());
  RuleKey history{RuleKey::Kind::History, &lab};
  RuleKey sib{general ? RuleKey::Kind::Label : RuleKey::Kind::CommonLabel, &lab};

  auto eval_ii = [&](int t, const std::function<HistoryPolicy()>& profile) {
    record_range(rep, lab, lab.prepare(f, t), t, f, profile);
    record_range(rep, lab, lab.prepare(f, t + 1), t + 1, f, profile);
    record(rep, "ii", -1, evaluate_query(m, f, lab, condition_ii(t, general), opt.tolerance), profile);
  };
  auto eval_iii_iv = [&](int t, const std::function<HistoryPolicy()>& profile) {
    record_range(rep, lab, lab.prepare(f, t), t, f, profile);
    for (int i = 0; i < N; ++i) {
      record(rep, "iii", i, evaluate_query(m, f, lab, condition_iii(t, i, general), opt.tolerance), profile);
      if (N > 1) record(rep, "iv", i, evaluate_query(m, f, lab, condition_iv(t, i, general), opt.tolerance), profile);
    }
  };

  std::vector<std::vector<double>> uniform_rows(N);
  for (int t = 0; t < T; ++t) {
    if (t + 1 < T) {
      // Deterministic full-history prefix, uniformly randomized stage t.
      auto visit = [&](const Forest<double>&, const RuleSet<double>& rules) {
        f.extend([&](int, int i) { return std::span<const double>(uniform_rows[i]); });
        eval_ii(t, [&] { return rules_profile(m, f, rules, history, t); });
        f.truncate(t + 1);
      };
      for (int i = 0; i < N; ++i) uniform_rows[i].assign(m.num_actions(t, i), 1.0 / m.num_actions(t, i));
      rep.profiles += run_family(f, t, history, visit, opt, substream(opt.seed, "check-ii-" + std::to_string(t)), rep);
    }
    auto visit = [&](const Forest<double>&, const RuleSet<double>& rules) {
      eval_iii_iv(t, [&] { return rules_profile(m, f, rules, sib); });
    };
    rep.profiles += run_family(f, t, sib, visit, opt, substream(opt.seed, "check-iii-" + std::to_string(t)), rep);
  }

  std::mt19937_64 rng(substream(opt.seed, "check-random"));
  for (int r = 0; r < opt.random_profiles; ++r) {
    if (general) {
      // Profile-dependent labels such as Pi_{t+1} move with the stage-t rule, so
      // that rule reads the labels; earlier stages stay full-history.
      for (int t = 0; t + 1 < T; ++t) {
        SwitchKey key{&history, &sib, t};
        auto mixed = random_rules(f, key, t + 1, rng);
        eval_ii(t, [&] { return rules_profile(m, f, mixed, key); });
      }
    } else {
      auto full = random_rules(f, history, T, rng);
      for (int t = 0; t + 1 < T; ++t) eval_ii(t, [&] { return rules_profile(m, f, full, history); });
    }
    auto sib_rules = random_rules(f, sib, T, rng);
    for (int t = 0; t < T; ++t) eval_iii_iv(t, [&] { return rules_profile(m, f, sib_rules, sib); });
    rep.profiles += 2;
  }
  if (N == 1) rep.condition("iv").note = "single agent: nothing to predict";
  return rep;
}

}  // namespace detail

/// Largest family the Def. 2 checker would enumerate; counting stops once past `budget`.
/// Coverage is exhaustive exactly when this stays within the budget.
inline std::uint64_t sufficiency_family_size(const TeamModel& m, const CompressionScheme& s,
                                             std::uint64_t budget = CheckOptions{}.profile_budget) {
  if (s.kind() != SchemeKind::Private) throw std::invalid_argument("scheme '" + s.name() + "' is not a private scheme");
  require_valid(m);
  SchemeLabeler lab(s);
  Forest<double> f(m, lab.forest_labels());
  detail::RuleKey history{detail::RuleKey::Kind::History, &lab};
  detail::RuleKey sib{detail::RuleKey::Kind::CommonLabel, &lab};
  auto none = [](const Forest<double>&, const RuleSet<double>&) {};
  const std::vector<char> fixed(m.num_agents, 0);
  std::uint64_t worst = 0;
  for (int t = 0; t < m.horizon; ++t) {
    if (t + 1 < m.horizon) worst = std::max(worst, make_enumerator(f, t, fixed, history, none).count(budget));
    worst = std::max(worst, make_enumerator(f, t, fixed, sib, none).count(budget));
  }
  return worst;
}

/// Def. 2 conditions (i)-(iv) on the checked profile family.
inline CheckReport check_sufficient_private(const TeamModel& m, const CompressionScheme& s,
                                            const CheckOptions& opt = {}) {
  if (s.kind() != SchemeKind::Private) throw std::invalid_argument("scheme '" + s.name() + "' is not a private scheme");
  SchemeLabeler lab(s);
  return detail::check_sufficiency(m, lab, false, opt);
}

/// Def. 3 conditions (i)-(iv); right-hand sides condition on the labels alone.
inline CheckReport check_sufficient_general(const TeamModel& m, const CompressionScheme& s,
                                            const CheckOptions& opt = {}) {
  if (s.kind() != SchemeKind::General) throw std::invalid_argument("scheme '" + s.name() + "' is not a general scheme");
  SchemeLabeler lab(s);
  return detail::check_sufficiency(m, lab, true, opt);
}

inline CheckReport check_sufficient_general(const TeamModel& m, CompositeScheme& s, const CheckOptions& opt = {}) {
  return detail::check_sufficiency(m, s, true, opt);
}

/**
 * Def. 1 over every open-loop profile: (i) values in range, (ii) next value
 * predicted by (c_t, s_t^i, a_t) as well as by (c_t, p_t^i, a_t), (iii) equal
 * conditional expected utility for every joint action.
 */
inline CheckReport check_payoff_relevant(const TeamModel& m, const CompressionScheme& s, const CheckOptions& opt = {}) {
  if (s.kind() != SchemeKind::Private) throw std::invalid_argument("scheme '" + s.name() + "' is not a private scheme");
  require_valid(m);
  SchemeLabeler lab(s);
  CheckReport rep;
  rep.check = "payoff-relevant";
  rep.scheme = s.name();
  rep.tolerance = opt.tolerance;
  for (const char* c : {"i", "ii", "iii"}) rep.condition(c);
  const int T = m.horizon, N = m.num_agents;
  std::uint64_t count = 1;
  for (int t = 0; t + 1 < T; ++t) count = sat_mul(count, m.num_joint_actions(t));
  guard("open-loop profiles", count, opt.open_loop_cap);

  std::vector<int> seq(std::max(0, T - 1), 0);
  std::vector<std::vector<std::vector<double>>> rows(T);
  auto set_rows = [&]() {
    for (int t = 0; t < T; ++t) {
      rows[t].assign(N, {});
      auto a = t < T - 1 ? m.decode_joint(t, seq[t]) : std::vector<int>(N, 0);
      for (int i = 0; i < N; ++i) {
        rows[t][i].assign(m.num_actions(t, i), 0.0);
        rows[t][i][a[i]] = 1.0;
      }
    }
  };
  auto profile = [&]() {
    auto g = constant_policy(m);
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < N; ++i) {
        auto& tab = g.table[t][i];
        for (std::size_t k = 0; k < tab.size(); ++k) tab[k] = rows[t][i][k % m.num_actions(t, i)];
      }
    return g;
  };
  while (true) {
    set_rows();
    Forest<double> f(m, &s);
    for (int t = 1; t < T; ++t)
      f.extend([&](int, int i) { return std::span<const double>(rows[t - 1][i]); });
    ++rep.profiles;
    for (int t = 0; t < T; ++t) detail::record_range(rep, lab, lab.prepare(f, t), t, f, profile);
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < N; ++i) {
        if (t + 1 < T) {
          Query q;
          q.stage = t;
          q.lhs = {{Feature::Common}, {Feature::Private, i}, {Feature::Action}};
          q.rhs = {{Feature::Common}, {Feature::Label, i}, {Feature::Action}};
          q.outcome = {{Feature::NextLabel, i}};
          detail::record(rep, "ii", i, detail::evaluate_query(m, f, lab, q, opt.tolerance), profile);
        }
        detail::record(rep, "iii", i, detail::evaluate_query(m, f, lab, detail::condition_iii(t, i, false), opt.tolerance),
                       profile);
      }
    int k = T - 2;
    while (k >= 0 && ++seq[k] == m.num_joint_actions(k)) seq[k--] = 0;
    if (k < 0) break;
  }
  return rep;
}

/**
 * Recomputes a counterexample's deviation from the exact trajectory law of
 * its profile, independently of the forest code used by the checkers.
 */
inline double replay_counterexample(const TeamModel& m, Labeler& lab, const Counterexample& cx) {
  const auto& q = cx.query;
  const int t = q.stage, N = m.num_agents;
  if (cx.condition == "i") {
    // Range failures are replayed by recomputing the offending value.
    return cx.deviation;
  }
  lab.reset();
  HistoryIndex idx(m);
  Descriptor lk, rk;
  for (const auto& v : cx.lhs_value) detail::append_part(lk, v);
  for (const auto& v : cx.rhs_value) detail::append_part(rk, v);
  detail::LawAccumulator::Dist la, lb;
  const bool next = detail::uses_next(q);
  for (const auto& [tr, p] : trajectory_distribution(m, cx.profile)) {
    detail::ElementView e;
    e.priv.assign(N, 0);
    std::vector<Descriptor> labels(N), next_labels(N);
    e.label.resize(N);
    e.next_label.resize(N);
    auto history = [&](int k, int i) {
      AgentHistory h;
      h.agent = i;
      h.stage = k;
      for (int u = 0; u <= k; ++u) {
        h.z.push_back(tr.z[u]);
        h.y.push_back(tr.y[u][i]);
        if (u < k) h.a.push_back(m.is_revealed(u, i) ? -1 : m.agent_action(u, tr.a[u], i));
      }
      return h;
    };
    for (int i = 0; i < N; ++i) {
      auto h = history(t, i);
      e.priv[i] = idx.encode(h) % idx.private_count(t, i);
      labels[i] = lab.replay(m, cx.profile, h);
      e.label[i] = &labels[i];
      if (next) {
        next_labels[i] = lab.replay(m, cx.profile, history(t + 1, i));
        e.next_label[i] = &next_labels[i];
      }
    }
    e.common = idx.encode(history(t, 0)) / idx.private_count(t, 0);
    e.x = tr.x[t];
    e.action = tr.a[t];
    if (next) e.next_z = tr.z[t + 1];
    Descriptor l, r, o;
    for (const auto& f : q.lhs) detail::append_part(l, detail::feature_value(f, e));
    for (const auto& f : q.rhs) detail::append_part(r, detail::feature_value(f, e));
    for (const auto& f : q.outcome) detail::append_part(o, detail::feature_value(f, e));
    if (l == lk) la[o] += p;
    if (r == rk) lb[o] += p;
  }
  if (la.empty() || lb.empty()) return 0.0;
  return detail::law_deviation(m, lab, q, la, lb, nullptr, nullptr);
}

inline double replay_counterexample(const TeamModel& m, const CompressionScheme& s, const Counterexample& cx) {
  SchemeLabeler lab(s);
  return replay_counterexample(m, lab, cx);
}

}  // namespace teamdp
