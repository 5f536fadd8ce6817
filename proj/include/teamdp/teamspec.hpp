#pragma once

// teamspec v1: JSON problem files. Probabilities and utilities are read as
// exact rationals (JSON numbers by their literal text, strings as decimals
// or fractions) and written back as strings. The layout is documented in
// docs/teamspec.md.

#include "checks.hpp"
#include "infinite.hpp"
#include "problems.hpp"

#include <json.hpp>

#include <charconv>
#include <climits>
#include <fstream>

namespace teamdp {

using json = nlohmann::json;

inline constexpr int kTeamspecVersion = 1;

/// A spec error located by a JSON pointer into the file.
class SpecParseError : public SpecError {
 public:
  SpecParseError(std::string path, const std::string& msg)
      : SpecError(path.empty() ? msg : path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct SchemeDecl {
  std::string name;
  json decl;  ///< canonical declaration, including "name" and "type"
};

struct TeamSpec {
  std::string name;
  json metadata = json::object();
  json family;  ///< canonical {tag, params}, null for explicit models
  RationalTeamModel model;
  std::optional<CompressionScheme> problem_scheme;
  std::vector<SchemeDecl> schemes;
  std::optional<Rational> discount;
  json points;  ///< canonical point-set declaration, null if absent
};

namespace detail {

class SpecReader {
 public:
  static const json& at(const json& j, const std::string& path, const char* key) {
    if (!j.is_object()) throw SpecParseError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw SpecParseError(path, std::string("missing \"") + key + "\"");
    return *it;
  }
  static const json& arr(const json& j, const std::string& path, std::size_t n = SIZE_MAX) {
    if (!j.is_array()) throw SpecParseError(path, "expected an array");
    if (n != SIZE_MAX && j.size() != n)
      throw SpecParseError(path, "expected " + std::to_string(n) + " entries, found " + std::to_string(j.size()));
    return j;
  }
  static int integer(const json& j, const std::string& path, int lo = INT_MIN) {
    if (!j.is_number_integer()) throw SpecParseError(path, "expected an integer");
    const auto v = j.get<long long>();
    if (v < lo || v > INT_MAX) throw SpecParseError(path, "integer out of range");
    return static_cast<int>(v);
  }
  static std::string string(const json& j, const std::string& path) {
    if (!j.is_string()) throw SpecParseError(path, "expected a string");
    return j.get<std::string>();
  }
  static Rational number(const json& j, const std::string& path) {
    try {
      if (j.is_string()) return parse_rational(j.get<std::string>());
      if (j.is_number()) return parse_rational(j.dump());
    } catch (const std::invalid_argument& e) {
      throw SpecParseError(path, e.what());
    }
    throw SpecParseError(path, "expected a number or a numeric string");
  }
  static std::vector<Rational> row(const json& j, const std::string& path, std::size_t n) {
    arr(j, path, n);
    std::vector<Rational> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(number(j[k], path + "/" + std::to_string(k)));
    return out;
  }
  static std::vector<std::string> labels(const json& j, const std::string& path) {
    arr(j, path);
    if (j.empty()) throw SpecParseError(path, "label set must be non-empty");
    std::vector<std::string> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(string(j[k], path + "/" + std::to_string(k)));
    return out;
  }
};

inline std::string sub(const std::string& path, std::size_t k) { return path + "/" + std::to_string(k); }
inline std::string sub(const std::string& path, const char* key) { return path + "/" + key; }

inline json number_json(const Rational& r) { return rational_to_string(r); }

template <class It>
std::vector<Rational> slice(It begin, std::size_t from, std::size_t to) {
  return std::vector<Rational>(begin + static_cast<std::ptrdiff_t>(from), begin + static_cast<std::ptrdiff_t>(to));
}

inline json rows_json(const std::vector<Rational>& v, std::size_t width) {
  json out = json::array();
  for (std::size_t k = 0; k < v.size(); k += width) {
    json row = json::array();
    for (std::size_t c = 0; c < width; ++c) row.push_back(number_json(v[k + c]));
    out.push_back(std::move(row));
  }
  return out;
}

/// Per-stage label sets, or one set shared by every stage.
inline std::vector<std::vector<std::string>> stage_labels(const json& j, const std::string& path, int T) {
  using R = SpecReader;
  R::arr(j, path);
  if (!j.empty() && j[0].is_string()) return std::vector<std::vector<std::string>>(T, R::labels(j, path));
  R::arr(j, path, T);
  std::vector<std::vector<std::string>> out;
  for (int t = 0; t < T; ++t) out.push_back(R::labels(j[t], sub(path, t)));
  return out;
}

/// Per-stage, per-agent label sets, or per-agent sets shared by every stage.
inline std::vector<std::vector<std::vector<std::string>>> agent_labels(const json& j, const std::string& path, int T,
                                                                     int N) {
  using R = SpecReader;
  R::arr(j, path);
  auto per_agent = [&](const json& a, const std::string& p) {
    R::arr(a, p, N);
    std::vector<std::vector<std::string>> out;
    for (int i = 0; i < N; ++i) out.push_back(R::labels(a[i], sub(p, i)));
    return out;
  };
  if (!j.empty() && j[0].is_array() && (j[0].empty() || j[0][0].is_string()))
    return std::vector<std::vector<std::vector<std::string>>>(T, per_agent(j, path));
  R::arr(j, path, T);
  std::vector<std::vector<std::vector<std::string>>> out;
  for (int t = 0; t < T; ++t) out.push_back(per_agent(j[t], sub(path, t)));
  return out;
}

inline RationalTeamModel parse_model(const json& j, const std::string& path, const std::string& name) {
  using R = SpecReader;
  RationalTeamModel m;
  m.name = name;
  m.horizon = R::integer(R::at(j, path, "horizon"), sub(path, "horizon"), 1);
  m.num_agents = R::integer(R::at(j, path, "agents"), sub(path, "agents"), 1);
  const int T = m.horizon, N = m.num_agents;
  m.states = stage_labels(R::at(j, path, "states"), sub(path, "states"), T);
  m.actions = agent_labels(R::at(j, path, "actions"), sub(path, "actions"), T, N);
  m.private_obs = agent_labels(R::at(j, path, "private_obs"), sub(path, "private_obs"), T, N);
  m.common_obs = stage_labels(R::at(j, path, "common_obs"), sub(path, "common_obs"), T);
  m.allocate();

  m.init = R::row(R::at(j, path, "init"), sub(path, "init"), m.num_states(0));

  const std::string tp = sub(path, "transition");
  static const json kNone = json::array();
  const json& tr = T > 1 ? R::arr(R::at(j, path, "transition"), tp, T - 1) : kNone;
  for (int t = 0; t + 1 < T; ++t) {
    R::arr(tr[t], sub(tp, t), m.num_states(t));
    for (int x = 0; x < m.num_states(t); ++x) {
      R::arr(tr[t][x], sub(sub(tp, t), x), m.num_joint_actions(t));
      for (int ja = 0; ja < m.num_joint_actions(t); ++ja) {
        auto r = R::row(tr[t][x][ja], sub(sub(sub(tp, t), x), ja), m.num_states(t + 1));
        for (int x2 = 0; x2 < m.num_states(t + 1); ++x2) m.trans_ref(t, x, ja, x2) = r[x2];
      }
    }
  }

  const std::string pp = sub(path, "private_kernel");
  const json& pk = R::arr(R::at(j, path, "private_kernel"), pp, T);
  for (int t = 0; t < T; ++t) {
    R::arr(pk[t], sub(pp, t), N);
    for (int i = 0; i < N; ++i) {
      const std::string pi = sub(sub(pp, t), i);
      R::arr(pk[t][i], pi, m.num_states(t));
      for (int x = 0; x < m.num_states(t); ++x) {
        R::arr(pk[t][i][x], sub(pi, x), m.num_prev_joint(t));
        for (int jp = 0; jp < m.num_prev_joint(t); ++jp) {
          auto r = R::row(pk[t][i][x][jp], sub(sub(pi, x), jp), m.num_private(t, i));
          for (int y = 0; y < m.num_private(t, i); ++y) m.priv_ref(t, i, x, jp, y) = r[y];
        }
      }
    }
  }

  const std::string cp = sub(path, "common_kernel");
  const json& ck = R::arr(R::at(j, path, "common_kernel"), cp, T);
  for (int t = 0; t < T; ++t) {
    R::arr(ck[t], sub(cp, t), m.num_states(t));
    for (int x = 0; x < m.num_states(t); ++x) {
      R::arr(ck[t][x], sub(sub(cp, t), x), m.num_prev_joint(t));
      for (int jp = 0; jp < m.num_prev_joint(t); ++jp) {
        auto r = R::row(ck[t][x][jp], sub(sub(sub(cp, t), x), jp), m.num_common(t));
        for (int z = 0; z < m.num_common(t); ++z) m.common_ref(t, x, jp, z) = r[z];
      }
    }
  }

  const bool team = j.contains("team_utility");
  if (team == j.contains("utility")) throw SpecParseError(path, "give exactly one of \"utility\" and \"team_utility\"");
  const std::string up = sub(path, team ? "team_utility" : "utility");
  const json& ut = R::arr(j[team ? "team_utility" : "utility"], up, T);
  for (int t = 0; t < T; ++t) {
    if (team) {
      R::arr(ut[t], sub(up, t), m.num_states(t));
      for (int x = 0; x < m.num_states(t); ++x) {
        auto r = R::row(ut[t][x], sub(sub(up, t), x), m.num_joint_actions(t));
        for (int ja = 0; ja < m.num_joint_actions(t); ++ja) m.set_team_utility(t, x, ja, r[ja]);
      }
      continue;
    }
    R::arr(ut[t], sub(up, t), N);
    for (int i = 0; i < N; ++i) {
      R::arr(ut[t][i], sub(sub(up, t), i), m.num_states(t));
      for (int x = 0; x < m.num_states(t); ++x) {
        auto r = R::row(ut[t][i][x], sub(sub(sub(up, t), i), x), m.num_joint_actions(t));
        std::copy(r.begin(), r.end(), m.utility[t][i].begin() + static_cast<std::ptrdiff_t>(x) * m.num_joint_actions(t));
      }
    }
  }

  if (j.contains("revealed")) {
    const std::string rp = sub(path, "revealed");
    const json& rv = R::arr(j["revealed"], rp, static_cast<std::size_t>(std::max(0, T - 1)));
    for (int t = 0; t + 1 < T; ++t) {
      R::arr(rv[t], sub(rp, t), N);
      for (int i = 0; i < N; ++i) {
        R::arr(rv[t][i], sub(sub(rp, t), i));
        for (std::size_t k = 0; k < rv[t][i].size(); ++k)
          m.revealed[t][i].push_back(R::integer(rv[t][i][k], sub(sub(sub(rp, t), i), k)));
      }
    }
  }
  return m;
}

inline json serialize_model(const RationalTeamModel& m) {
  const int T = m.horizon, N = m.num_agents;
  json j;
  j["horizon"] = T;
  j["agents"] = N;
  j["states"] = m.states;
  j["actions"] = m.actions;
  j["private_obs"] = m.private_obs;
  j["common_obs"] = m.common_obs;
  json init = json::array();
  for (const auto& p : m.init) init.push_back(number_json(p));
  j["init"] = init;
  j["transition"] = json::array();
  for (int t = 0; t + 1 < T; ++t) {
    json st = json::array();
    const std::size_t per_x = static_cast<std::size_t>(m.num_joint_actions(t)) * m.num_states(t + 1);
    for (int x = 0; x < m.num_states(t); ++x)
      st.push_back(rows_json(slice(m.transition[t].begin(), x * per_x, (x + 1) * per_x),
                             m.num_states(t + 1)));
    j["transition"].push_back(std::move(st));
  }
  j["private_kernel"] = json::array();
  j["common_kernel"] = json::array();
  for (int t = 0; t < T; ++t) {
    json agents = json::array();
    for (int i = 0; i < N; ++i) {
      json st = json::array();
      const std::size_t per_x = static_cast<std::size_t>(m.num_prev_joint(t)) * m.num_private(t, i);
      for (int x = 0; x < m.num_states(t); ++x)
        st.push_back(rows_json(slice(m.private_kernel[t][i].begin(), x * per_x, (x + 1) * per_x),
                               m.num_private(t, i)));
      agents.push_back(std::move(st));
    }
    j["private_kernel"].push_back(std::move(agents));
    json st = json::array();
    const std::size_t per_x = static_cast<std::size_t>(m.num_prev_joint(t)) * m.num_common(t);
    for (int x = 0; x < m.num_states(t); ++x)
      st.push_back(rows_json(slice(m.common_kernel[t].begin(), x * per_x, (x + 1) * per_x),
                             m.num_common(t)));
    j["common_kernel"].push_back(std::move(st));
  }
  bool team = true;
  for (int t = 0; t < T && team; ++t)
    for (int i = 1; i < N; ++i)
      if (m.utility[t][i] != m.utility[t][0]) team = false;
  json ut = json::array();
  for (int t = 0; t < T; ++t) {
    if (team) {
      ut.push_back(rows_json(m.utility[t][0], m.num_joint_actions(t)));
      continue;
    }
    json agents = json::array();
    for (int i = 0; i < N; ++i) agents.push_back(rows_json(m.utility[t][i], m.num_joint_actions(t)));
    ut.push_back(std::move(agents));
  }
  j[team ? "team_utility" : "utility"] = ut;
  j["revealed"] = m.revealed;
  return j;
}

inline std::vector<std::vector<Rational>> rational_rows(const json& j, const std::string& path, std::size_t rows,
                                                        std::size_t width) {
  SpecReader::arr(j, path, rows);
  std::vector<std::vector<Rational>> out;
  for (std::size_t r = 0; r < rows; ++r) out.push_back(SpecReader::row(j[r], sub(path, r), width));
  return out;
}

inline json rows_of(const std::vector<std::vector<Rational>>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json row = json::array();
    for (const auto& v : r) row.push_back(number_json(v));
    out.push_back(std::move(row));
  }
  return out;
}

/// Builds a family instance; `canon` receives the canonical parameters.
inline ProblemInstance<Rational> build_family(const json& fam, const std::string& path, json& canon) {
  using R = SpecReader;
  const std::string tag = R::string(R::at(fam, path, "tag"), sub(path, "tag"));
  const std::string pp = sub(path, "params");
  const json& p = R::at(fam, path, "params");
  if (!p.is_object()) throw SpecParseError(pp, "expected an object");
  canon = json::object();
  canon["tag"] = tag;
  json& cp = canon["params"];
  if (tag == "SOURCE_CODING") {
    SourceCodingParams<Rational> sp;
    sp.horizon = R::integer(R::at(p, pp, "horizon"), sub(pp, "horizon"), 1);
    sp.delay = p.contains("delay") ? R::integer(p["delay"], sub(pp, "delay"), 0) : 0;
    sp.symbols = R::integer(R::at(p, pp, "symbols"), sub(pp, "symbols"), 1);
    if (p.contains("source")) {
      // I.i.d. shorthand with Hamming distortion.
      const json& src = R::arr(p["source"], sub(pp, "source"));
      auto dist = R::row(src, sub(pp, "source"), src.size());
      sp = iid_source_coding<Rational>(dist, sp.symbols, sp.horizon, sp.delay);
    } else {
      sp.order = R::integer(R::at(p, pp, "order"), sub(pp, "order"), 1);
      sp.alphabet = R::integer(R::at(p, pp, "alphabet"), sub(pp, "alphabet"), 1);
      const std::string kp = sub(pp, "kernel");
      const json& k = R::arr(R::at(p, pp, "kernel"), kp, sp.order + 1);
      for (int l = 0; l <= sp.order; ++l)
        sp.kernel.push_back(rational_rows(k[l], sub(kp, l), static_cast<std::size_t>(ipow(sp.alphabet, l)), sp.alphabet));
      sp.distortion = rational_rows(R::at(p, pp, "distortion"), sub(pp, "distortion"), sp.alphabet, sp.alphabet);
    }
    cp = {{"horizon", sp.horizon}, {"delay", sp.delay},     {"symbols", sp.symbols},
          {"order", sp.order},     {"alphabet", sp.alphabet}, {"distortion", rows_of(sp.distortion)}};
    cp["kernel"] = json::array();
    for (const auto& l : sp.kernel) cp["kernel"].push_back(rows_of(l));
    return build_source_coding(sp);
  }
  if (tag == "DELAYED_SHARING") {
    const int d = R::integer(R::at(p, pp, "delay"), sub(pp, "delay"), 1);
    const json& b = R::at(p, pp, "base");
    const std::string bname = b.contains("name") ? R::string(b["name"], sub(sub(pp, "base"), "name")) : "base";
    auto base = parse_model(R::at(b, sub(pp, "base"), "model"), sub(sub(pp, "base"), "model"), bname);
    cp = {{"delay", d}, {"base", {{"name", bname}, {"model", serialize_model(base)}}}};
    return build_delayed_sharing(d, base);
  }
  if (tag == "REMOTE_LOCAL") {
    const Rational succ = R::number(R::at(p, pp, "success"), sub(pp, "success"));
    const int T = R::integer(R::at(p, pp, "horizon"), sub(pp, "horizon"), 1);
    RemoteLocalPlant<Rational> plant;
    const std::string lp = sub(pp, "plant");
    const json& pl = R::at(p, pp, "plant");
    if (pl.is_string()) {
      if (pl.get<std::string>() != "two-state") throw SpecParseError(lp, "unknown plant '" + pl.get<std::string>() + "'");
      plant = two_state_plant<Rational>();
    } else {
      plant.states = R::integer(R::at(pl, lp, "states"), sub(lp, "states"), 1);
      plant.local_actions = R::integer(R::at(pl, lp, "local_actions"), sub(lp, "local_actions"), 1);
      plant.remote_actions = R::integer(R::at(pl, lp, "remote_actions"), sub(lp, "remote_actions"), 1);
      const std::size_t rows = static_cast<std::size_t>(plant.states) * plant.local_actions * plant.remote_actions;
      plant.init = R::row(R::at(pl, lp, "init"), sub(lp, "init"), plant.states);
      for (const auto& r : rational_rows(R::at(pl, lp, "transition"), sub(lp, "transition"), rows, plant.states))
        plant.transition.insert(plant.transition.end(), r.begin(), r.end());
      plant.utility = R::row(R::at(pl, lp, "utility"), sub(lp, "utility"), rows);
    }
    json cpl = {{"states", plant.states}, {"local_actions", plant.local_actions}, {"remote_actions", plant.remote_actions}};
    cpl["init"] = rows_json(plant.init, plant.init.size())[0];
    cpl["transition"] = rows_json(plant.transition, plant.states);
    cpl["utility"] = rows_json(plant.utility, plant.utility.size())[0];
    cp = {{"success", number_json(succ)}, {"horizon", T}, {"plant", cpl}};
    return build_remote_local(succ, plant, T);
  }
  throw SpecParseError(sub(path, "tag"), "unknown family '" + tag + "'");
}

inline SchemeKind parse_kind(const json& d, const std::string& path, SchemeKind fallback) {
  if (!d.contains("kind")) return fallback;
  const auto k = SpecReader::string(d["kind"], sub(path, "kind"));
  if (k == "private") return SchemeKind::Private;
  if (k == "general") return SchemeKind::General;
  throw SpecParseError(sub(path, "kind"), "kind must be \"private\" or \"general\"");
}

inline std::vector<int> int_list(const json& j, const std::string& path) {
  SpecReader::arr(j, path);
  std::vector<int> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(SpecReader::integer(j[k], sub(path, k)));
  return out;
}

/// Canonical scheme declaration; structural checks happen when it is built.
inline json canonical_scheme(const json& d, const std::string& path, bool has_family) {
  using R = SpecReader;
  json c;
  c["name"] = R::string(R::at(d, path, "name"), sub(path, "name"));
  const auto type = R::string(R::at(d, path, "type"), sub(path, "type"));
  c["type"] = type;
  if (type == "identity" || type == "observations-only") return c;
  if (type == "problem") {
    if (!has_family) throw SpecParseError(path, "scheme type \"problem\" needs a family");
    return c;
  }
  if (type == "window") {
    c["k"] = R::integer(R::at(d, path, "k"), sub(path, "k"), 1);
    c["include_revealed"] = d.contains("include_revealed") && d["include_revealed"].is_boolean()
                                ? d["include_revealed"].get<bool>()
                                : false;
    return c;
  }
  if (type == "constant") {
    c["kind"] = to_string(parse_kind(d, path, SchemeKind::Private));
    return c;
  }
  if (type == "composite") {
    c["base"] = R::string(R::at(d, path, "base"), sub(path, "base"));
    return c;
  }
  if (type == "tabular") {
    c["kind"] = to_string(parse_kind(d, path, SchemeKind::Private));
    json counts = json::array(), init = json::array(), update = json::array();
    const json& cn = R::arr(R::at(d, path, "counts"), sub(path, "counts"));
    for (std::size_t t = 0; t < cn.size(); ++t) counts.push_back(int_list(cn[t], sub(sub(path, "counts"), t)));
    const json& in = R::arr(R::at(d, path, "init"), sub(path, "init"));
    for (std::size_t i = 0; i < in.size(); ++i) init.push_back(int_list(in[i], sub(sub(path, "init"), i)));
    const json& up = R::arr(R::at(d, path, "update"), sub(path, "update"));
    for (std::size_t t = 0; t < up.size(); ++t) {
      json agents = json::array();
      R::arr(up[t], sub(sub(path, "update"), t));
      for (std::size_t i = 0; i < up[t].size(); ++i)
        agents.push_back(int_list(up[t][i], sub(sub(sub(path, "update"), t), i)));
      update.push_back(std::move(agents));
    }
    c["counts"] = counts;
    c["init"] = init;
    c["update"] = update;
    return c;
  }
  throw SpecParseError(sub(path, "type"), "unknown scheme type '" + type + "'");
}

inline json canonical_points(const json& p, const std::string& path) {
  using R = SpecReader;
  if (!p.is_object() || p.size() != 1) throw SpecParseError(path, "expected one of \"reachable\", \"grid\", \"explicit\"");
  if (p.contains("reachable")) return {{"reachable", R::integer(p["reachable"], sub(path, "reachable"), 0)}};
  if (p.contains("grid")) return {{"grid", R::integer(p["grid"], sub(path, "grid"), 1)}};
  if (p.contains("explicit")) {
    const std::string ep = sub(path, "explicit");
    const json& e = R::arr(p["explicit"], ep);
    json out = json::array();
    for (std::size_t k = 0; k < e.size(); ++k) {
      const json& row = R::arr(e[k], sub(ep, k));
      json r = json::array();
      for (const auto& v : R::row(row, sub(ep, k), row.size())) r.push_back(number_json(v));
      out.push_back(std::move(r));
    }
    return {{"explicit", out}};
  }
  throw SpecParseError(path, "expected one of \"reachable\", \"grid\", \"explicit\"");
}

}  // namespace detail

inline TeamSpec parse_teamspec(const json& j) {
  using R = detail::SpecReader;
  if (!j.is_object()) throw SpecParseError("", "a teamspec file must hold a JSON object");
  if (!j.contains("teamspec") || !j["teamspec"].is_number_integer() || j["teamspec"].get<long long>() != kTeamspecVersion)
    throw SpecParseError("/teamspec", "unsupported teamspec version");
  TeamSpec spec;
  spec.name = j.contains("name") ? R::string(j["name"], "/name") : "unnamed";
  if (j.contains("metadata")) {
    if (!j["metadata"].is_object()) throw SpecParseError("/metadata", "expected an object");
    spec.metadata = j["metadata"];
  }
  if (j.contains("model") == j.contains("family"))
    throw SpecParseError("", "give exactly one of \"model\" and \"family\"");
  if (j.contains("model")) {
    spec.model = detail::parse_model(j["model"], "/model", spec.name);
  } else {
    auto inst = detail::build_family(j["family"], "/family", spec.family);
    spec.model = std::move(inst.model);
    spec.model.name = spec.name;
    spec.problem_scheme = std::move(inst.scheme);
  }
  if (j.contains("schemes")) {
    const json& ss = R::arr(j["schemes"], "/schemes");
    for (std::size_t k = 0; k < ss.size(); ++k) {
      auto c = detail::canonical_scheme(ss[k], detail::sub("/schemes", k), !spec.family.is_null());
      for (const auto& d : spec.schemes)
        if (d.name == c["name"]) throw SpecParseError(detail::sub("/schemes", k), "duplicate scheme name");
      spec.schemes.push_back({c["name"].get<std::string>(), std::move(c)});
    }
  }
  if (j.contains("stationary")) {
    spec.discount = R::number(R::at(j["stationary"], "/stationary", "discount"), "/stationary/discount");
    if (spec.model.horizon != 2)
      throw SpecParseError("/stationary", "a stationary model has two stages: the first stage and the repeated kernels");
  }
  if (j.contains("points")) spec.points = detail::canonical_points(j["points"], "/points");
  return spec;
}

inline TeamSpec parse_teamspec_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecParseError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_teamspec(j);
}

inline TeamSpec load_teamspec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_teamspec_text(ss.str());
}

/// Canonical form: every number as a string, every default spelled out.
inline json serialize_teamspec(const TeamSpec& spec) {
  json j;
  j["teamspec"] = kTeamspecVersion;
  j["name"] = spec.name;
  j["metadata"] = spec.metadata;
  if (spec.family.is_null())
    j["model"] = detail::serialize_model(spec.model);
  else
    j["family"] = spec.family;
  json ss = json::array();
  for (const auto& d : spec.schemes) ss.push_back(d.decl);
  j["schemes"] = ss;
  if (spec.discount) j["stationary"] = {{"discount", detail::rational_to_string(*spec.discount)}};
  if (!spec.points.is_null()) j["points"] = spec.points;
  return j;
}

/// Fully expanded spec: a family is replaced by its model.
inline json expand_teamspec(const TeamSpec& spec) {
  auto j = serialize_teamspec(spec);
  if (!spec.family.is_null()) {
    j.erase("family");
    j["model"] = detail::serialize_model(spec.model);
    j["metadata"]["family"] = spec.family["tag"];
    // The family's own scheme survives as explicit tables.
    for (auto& d : j["schemes"]) {
      if (d["type"] != "problem") continue;
      const auto& s = *spec.problem_scheme;
      auto [init, update] = tabulate(spec.model, s);
      d = {{"name", d["name"]}, {"type", "tabular"}, {"kind", to_string(s.kind())},
           {"counts", s.counts()}, {"init", init}, {"update", update}};
    }
  }
  return j;
}

/// Stationary view of a spec with a "stationary" block.
template <class S>
StationaryModel<S> stationary_model(const TeamSpec& spec) {
  if (!spec.discount) throw SpecError("spec has no \"stationary\" block");
  StationaryModel<S> sm;
  sm.stages = model_cast<S>(spec.model);
  sm.discount = scalar_cast<S>(*spec.discount);
  return sm;
}

/// A scheme resolved by name; `composite` asks for the scheme paired with the common belief.
struct ResolvedScheme {
  CompressionScheme scheme;
  bool composite = false;
};

/**
 * Declared schemes first, then the built-in names "identity", "window-<k>",
 * "constant", "constant-general", "observations-only" and, for families,
 * "problem".
 */
template <class S>
ResolvedScheme resolve_scheme(const TeamSpec& spec, const BasicTeamModel<S>& m, const std::string& name) {
  for (std::size_t k = 0; k < spec.schemes.size(); ++k) {
    const auto& d = spec.schemes[k].decl;
    if (spec.schemes[k].name != name) continue;
    const std::string type = d["type"];
    const std::string path = "/schemes/" + std::to_string(k);
    if (type == "composite") {
      const std::string base = d["base"];
      if (base == name) throw SpecParseError(path, "composite scheme refers to itself");
      auto r = resolve_scheme(spec, m, base);
      if (r.composite || r.scheme.kind() != SchemeKind::Private)
        throw SpecParseError(path, "composite base '" + base + "' must be a private scheme");
      r.composite = true;
      return r;
    }
    CompressionScheme s;
    if (type == "identity") s = identity_scheme(m);
    else if (type == "observations-only") s = observations_only_scheme(m);
    else if (type == "problem") s = *spec.problem_scheme;
    else if (type == "window") s = window_scheme(m, d["k"].get<int>(), d["include_revealed"].get<bool>());
    else if (type == "constant") s = constant_scheme(m, d["kind"] == "general" ? SchemeKind::General : SchemeKind::Private);
    else {
      try {
        s = tabular_scheme(m, name, d["kind"] == "general" ? SchemeKind::General : SchemeKind::Private,
                           d["counts"].get<std::vector<std::vector<int>>>(), d["init"].get<std::vector<std::vector<int>>>(),
                           d["update"].get<std::vector<std::vector<std::vector<int>>>>());
      } catch (const SpecError& e) {
        throw SpecParseError(path, e.what());
      }
    }
    return {CompressionScheme(name, s.kind(), s.counts(), [s](int i, int y, int z) { return s.initial(i, y, z); },
                              [s](int t, int i, int v, int y, int z, int a) { return s.update(t, i, v, y, z, a); },
                              [s](int t, int i, int v) { return s.describe(t, i, v); }),
            false};
  }
  if (name == "identity") return {identity_scheme(m), false};
  if (name == "constant") return {constant_scheme(m), false};
  if (name == "constant-general") return {constant_scheme(m, SchemeKind::General), false};
  if (name == "observations-only") return {observations_only_scheme(m), false};
  if (name == "problem" && spec.problem_scheme) return {*spec.problem_scheme, false};
  if (name.rfind("window-", 0) == 0) {
    int k = 0;
    auto [ptr, ec] = std::from_chars(name.data() + 7, name.data() + name.size(), k);
    if (ec == std::errc() && ptr == name.data() + name.size() && k >= 1) return {window_scheme(m, k), false};
  }
  throw SpecError("unknown scheme '" + name + "'");
}

/// Belief point set declared in the spec (or given on the command line).
template <class S>
BeliefPointSet<S> point_set(const StationaryModel<S>& sm, const CompressionScheme& s, const json& decl) {
  if (decl.contains("reachable")) return reachable_points(sm, s, decl["reachable"].get<int>());
  if (decl.contains("grid")) return simplex_grid(sm, s, decl["grid"].get<int>());
  BeliefPointSet<S> B;
  auto proto = empty_belief(sm.stages, s.counts(), 0);
  for (std::size_t k = 0; k < decl["explicit"].size(); ++k) {
    const auto& row = decl["explicit"][k];
    const std::string path = "/points/explicit/" + std::to_string(k);
    if (row.size() != proto.prob.size())
      throw SpecParseError(path, "expected " + std::to_string(proto.prob.size()) + " entries over (x, s^1..s^N)");
    auto b = proto;
    Rational total = 0;
    for (std::size_t e = 0; e < row.size(); ++e) {
      const Rational v = detail::parse_rational(row[e].get<std::string>());
      if (v < 0) throw SpecParseError(path, "negative belief entry");
      total += v;
      b.prob[e] = scalar_cast<S>(v);
    }
    if (total != 1) throw SpecParseError(path, "belief entries must sum to 1");
    B.points.push_back(std::move(b));
  }
  return B;
}

}  // namespace teamdp
