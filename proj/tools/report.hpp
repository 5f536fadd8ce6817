#pragma once

// Run reports: versioned JSON, keys sorted, floats with 17 significant
// digits, exact values as decimal or fraction strings. The body is hashed;
// timing sits outside it.

#include <teamdp/checks.hpp>
#include <teamdp/infinite.hpp>
#include <teamdp/oracle.hpp>
#include <teamdp/teamspec.hpp>

#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace teamdp::report {

inline constexpr const char* kSchema = "teamdp-report/1";
inline constexpr const char* kToolVersion = "1.0.0";

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char c : md) {
    out += hex[c >> 4];
    out += hex[c & 15];
  }
  return out;
}

namespace detail {

inline void write_indent(std::string& out, int indent, int depth) {
  if (indent < 0) return;
  out += '\n';
  out.append(static_cast<std::size_t>(indent * depth), ' ');
}

inline void write(std::string& out, const json& j, int indent, int depth) {
  switch (j.type()) {
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      // Keep a float a float when read back.
      if (std::string_view(buf).find_first_of(".en") == std::string_view::npos) out += ".0";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      if (flat) {
        out += '[';
        for (std::size_t k = 0; k < j.size(); ++k) {
          if (k) out += indent < 0 ? "," : ", ";
          write(out, j[k], indent, depth + 1);
        }
        out += ']';
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ',';
        first = false;
        write_indent(out, indent, depth + 1);
        write(out, e, indent, depth + 1);
      }
      write_indent(out, indent, depth);
      out += ']';
      return;
    }
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        write_indent(out, indent, depth + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        write(out, it.value(), indent, depth + 1);
      }
      write_indent(out, indent, depth);
      out += '}';
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// JSON text with %.17g floats; indent < 0 gives the compact form.
inline std::string dump(const json& j, int indent = 2) {
  std::string out;
  detail::write(out, j, indent, 0);
  return out;
}

/// {"report": body, "digest": sha256(compact body), "timing": {...}}.
inline std::string render(const json& body, double wall_seconds) {
  json doc;
  doc["report"] = body;
  doc["digest"] = "sha256:" + sha256_hex(dump(body, -1));
  doc["timing"] = {{"wall_seconds", wall_seconds}};
  return dump(doc) + "\n";
}

template <class S>
json scalar(const S& v) {
  if constexpr (std::is_same_v<S, double>)
    return v;
  else
    return teamdp::detail::rational_to_string(v);
}

inline json diagnostics(const std::vector<Diagnostic>& ds) {
  json out = json::array();
  for (const auto& d : ds) out.push_back({{"invariant", d.invariant}, {"message", d.message}, {"path", d.path}});
  return out;
}

template <class S>
json belief(const Belief<S>& b) {
  json entries = json::array();
  for (std::size_t k = 0; k < b.prob.size(); ++k)
    if (b.prob[k] > S(0)) entries.push_back({k, scalar(b.prob[k])});
  return {{"stage", b.stage + 1}, {"states", b.num_states}, {"counts", b.counts}, {"entries", entries}};
}

inline json law(const Law& l) {
  json out = json::object();
  for (const auto& [k, v] : l) out[k] = v;
  return out;
}

/// Policy tables [t][i][history][action], omitted past `limit` entries.
template <class S>
json policy(const BasicHistoryPolicy<S>& g, std::size_t limit = 100'000) {
  std::size_t n = 0;
  for (const auto& t : g.table)
    for (const auto& tab : t) n += tab.size();
  if (n > limit) return {{"omitted", "policy has " + std::to_string(n) + " entries"}};
  json out = json::array();
  for (std::size_t t = 0; t < g.table.size(); ++t) {
    json agents = json::array();
    for (std::size_t i = 0; i < g.table[t].size(); ++i) {
      json rows = json::array();
      for (std::uint64_t h = 0; h < g.histories(static_cast<int>(t), static_cast<int>(i)); ++h) {
        json row = json::array();
        for (const auto& v : g.row(static_cast<int>(t), static_cast<int>(i), h)) row.push_back(scalar(v));
        rows.push_back(std::move(row));
      }
      agents.push_back(std::move(rows));
    }
    out.push_back(std::move(agents));
  }
  return out;
}

inline json check(const CheckReport& r) {
  json conds = json::array();
  for (const auto& c : r.conditions) {
    json cj = {{"condition", c.condition},
               {"verdict", to_string(c.verdict)},
               {"realizations", c.realizations},
               {"note", c.note}};
    if (c.counterexample) {
      const auto& cx = *c.counterexample;
      cj["counterexample"] = {{"condition", cx.condition},
                              {"stage", cx.stage + 1},
                              {"agent", cx.agent < 0 ? json(nullptr) : json(cx.agent + 1)},
                              {"realization", cx.realization},
                              {"lhs_law", law(cx.lhs_law)},
                              {"rhs_law", law(cx.rhs_law)},
                              {"deviation", cx.deviation},
                              {"profile", policy(cx.profile)}};
    }
    conds.push_back(std::move(cj));
  }
  return {{"check", r.check},
          {"scheme", r.scheme},
          {"verdict", to_string(r.verdict())},
          {"coverage", to_string(r.coverage)},
          {"profiles", r.profiles},
          {"realizations", r.realizations},
          {"tolerance", r.tolerance},
          {"conditions", conds}};
}

template <class S>
json solution(const BasicTeamModel<S>& m, const DPSolution<S>& sol, bool graph) {
  const auto& g = sol.graph;
  json stages = json::array();
  for (int t = 0; t < m.horizon; ++t) {
    std::uint64_t presc = 0;
    json nodes = json::array();
    for (int n = 0; n < static_cast<int>(g.stages[t].size()); ++n) {
      const auto& node = g.stages[t][n];
      presc = sat_add(presc, node.prescriptions);
      json nj = {{"node", n}, {"value", scalar(sol.value[t][n])}, {"belief", belief(node.belief)}};
      if (sol.policy.choice[t][n] >= 0) {
        auto acts = g.decode(t, n, static_cast<std::uint64_t>(sol.policy.choice[t][n]));
        json pj = json::array();
        for (int i = 0; i < m.num_agents; ++i) {
          json row = json::object();
          for (int v : node.support[i]) row[std::to_string(v)] = m.actions[t][i][acts[i][v]];
          pj.push_back(std::move(row));
        }
        nj["prescription"] = pj;
      }
      if (graph && t + 1 < m.horizon) {
        json ej = json::array();
        for (const auto& es : node.edges) {
          json row = json::array();
          for (const auto& e : es) row.push_back({{"z", e.z}, {"child", e.child}, {"prob", scalar(e.prob)}});
          ej.push_back(std::move(row));
        }
        nj["edges"] = ej;
      }
      nodes.push_back(std::move(nj));
    }
    stages.push_back({{"stage", t + 1}, {"nodes", g.stages[t].size()}, {"prescriptions", presc}, {"policy", nodes}});
  }
  json roots = json::array();
  for (const auto& r : g.roots) roots.push_back({{"z", r.z}, {"child", r.child}, {"prob", scalar(r.prob)}});
  return {{"value", scalar(sol.optimal)}, {"stages", stages}, {"roots", roots}};
}

inline json transfer(const TransferReport& r) {
  json stages = json::array();
  for (std::size_t t = 0; t < r.stages.size(); ++t) {
    const auto& s = r.stages[t];
    stages.push_back({{"stage", t + 1},
                      {"pi_s_deviation", s.pi_s_deviation},
                      {"flow_g", s.flow_g},
                      {"flow_sigma", s.flow_sigma},
                      {"mc_mean", s.mc_mean},
                      {"mc_stderr", s.mc_stderr},
                      {"within_3sigma", s.within_3sigma}});
  }
  return {{"stages", stages},
          {"samples", r.samples},
          {"seed", r.seed},
          {"tolerance", r.tolerance},
          {"failure", r.failure},
          {"exact_match", r.exact_match()},
          {"monte_carlo_ok", r.monte_carlo_ok()}};
}

}  // namespace teamdp::report
