// teamdp: validate, check, solve and simulate teamspec files.
//
// Exit codes: 0 ok, 1 assertion failed or counterexample found, 2 usage or
// spec error, 3 instance beyond the size guards.

#include "report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

namespace {

using namespace teamdp;

enum Exit { kOk = 0, kFail = 1, kUsage = 2, kSize = 3 };

struct Common {
  std::string spec_path;
  std::string report_path;
  std::uint64_t seed = 1;
  int threads = 1;
  std::uint64_t cap = kDefaultPrescriptionCap;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Run {
 public:
  Run(std::string command, const Common& c) : command_(std::move(command)), c_(c) {
    body_["schema"] = report::kSchema;
    body_["tool"] = {{"name", "teamdp"}, {"version", report::kToolVersion}};
    body_["command"] = command_;
    body_["seeds"] = {{"seed", c.seed}};
  }

  json& body() { return body_; }
  json& result() { return body_["result"]; }

  TeamSpec load() {
    const auto text = read_file(c_.spec_path);
    body_["input"] = {{"path", c_.spec_path}, {"digest", "sha256:" + report::sha256_hex(text)}};
    return parse_teamspec_text(text);
  }

  /// Runs fn, maps errors to exit codes, writes the report.
  template <class Fn>
  int operator()(Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    int code = kOk;
    try {
      code = fn();
    } catch (const SizeGuardError& e) {
      code = fail(kSize, "size-guard", e.what());
      body_["error"]["counted"] = e.counted();
      body_["error"]["count"] = e.count();
      body_["error"]["cap"] = e.cap();
    } catch (const SpecParseError& e) {
      code = fail(kUsage, "spec", e.what());
      body_["error"]["path"] = e.path();
    } catch (const std::exception& e) {
      // SpecError, NonTeamUtility, bad arguments: all caller-side.
      code = fail(kUsage, "spec", e.what());
    }
    body_["exit_code"] = code;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto text = report::render(body_, wall);
    if (c_.report_path.empty() || c_.report_path == "-") {
      std::cout << text;
    } else {
      std::ofstream out(c_.report_path, std::ios::binary);
      if (!out) {
        std::cerr << "teamdp: cannot write report '" << c_.report_path << "'\n";
        return kUsage;
      }
      out << text;
    }
    return code;
  }

 private:
  int fail(int code, const char* kind, const std::string& msg) {
    std::cerr << "teamdp " << command_ << ": " << msg << "\n";
    body_["error"] = {{"kind", kind}, {"message", msg}};
    return code;
  }

  std::string command_;
  const Common& c_;
  json body_;
};

int cmd_validate(Run& run) {
  auto spec = run.load();
  std::vector<Diagnostic> d;
  if (spec.discount) {
    StationaryModel<Rational> sm{spec.model, *spec.discount};
    d = validate_stationary(sm);
  } else {
    d = validate_model(spec.model);
  }
  for (const auto& x : d)
    std::cerr << (x.path.empty() ? "" : x.path + ": ") << x.invariant << ": " << x.message << "\n";
  run.result() = {{"valid", d.empty()}, {"diagnostics", report::diagnostics(d)}, {"model", spec.model.name}};
  return d.empty() ? kOk : kFail;
}

std::string default_scheme(const TeamSpec& spec, const std::string& fallback) {
  return spec.problem_scheme ? "problem" : fallback;
}

int cmd_check(Run& run, std::string scheme_name, const std::string& which, std::uint64_t budget, std::uint64_t seed) {
  auto spec = run.load();
  auto m = model_cast<double>(spec.model);
  require_valid(m);
  if (scheme_name.empty()) scheme_name = default_scheme(spec, "identity");
  auto r = resolve_scheme(spec, m, scheme_name);
  CheckOptions opt;
  opt.profile_budget = budget;
  opt.seed = substream(seed, "check");
  CheckReport rep;
  if (which == "payoff") {
    if (r.composite) throw SpecError("the payoff-relevance check takes a private scheme");
    rep = check_payoff_relevant(m, r.scheme, opt);
  } else if (r.composite) {
    auto composite = compose_with_belief(r.scheme);
    rep = check_sufficient_general(m, composite, opt);
  } else if (r.scheme.kind() == SchemeKind::Private) {
    rep = check_sufficient_private(m, r.scheme, opt);
  } else {
    rep = check_sufficient_general(m, r.scheme, opt);
  }
  run.result() = report::check(rep);
  run.result()["scheme"] = scheme_name;
  switch (rep.verdict()) {
    case Verdict::Holds: return kOk;
    case Verdict::Fails: return kFail;
    default: return kSize;
  }
}

template <class S>
int solve_as(Run& run, const TeamSpec& spec, const std::string& scheme_name, bool oracle, bool graph,
             std::uint64_t cap) {
  auto m = model_cast<S>(spec.model);
  require_valid(m);
  auto r = resolve_scheme(spec, m, scheme_name);
  if (r.composite) throw SpecError("scheme '" + scheme_name + "' pairs with the belief and cannot be solved directly; solve its base");
  auto sol = solve_team_dp(m, r.scheme, cap);
  auto& res = run.result();
  res["scheme"] = scheme_name;
  res["value"] = report::scalar(sol.optimal);
  res["solution"] = report::solution(m, sol, graph);
  if (!oracle) return kOk;
  auto o = brute_force_optimal(m, cap);
  const double diff = std::abs(scalar_traits<S>::to_double(sol.optimal) - scalar_traits<S>::to_double(o.value));
  res["oracle"] = {{"value", report::scalar(o.value)},
                   {"profiles", o.profiles},
                   {"responder", o.responder < 0 ? json(nullptr) : json(o.responder + 1)}};
  res["difference"] = diff;
  res["agree"] = diff <= kEqualityTolerance;
  if (diff > kEqualityTolerance) {
    std::cerr << "teamdp solve: DP value and oracle value differ by " << diff << "\n";
    return kFail;
  }
  return kOk;
}

int cmd_solve(Run& run, std::string scheme_name, bool oracle, bool rational, bool graph, std::uint64_t cap) {
  auto spec = run.load();
  if (scheme_name.empty()) scheme_name = default_scheme(spec, "identity");
  run.result()["mode"] = rational ? "rational" : "double";
  return rational ? solve_as<Rational>(run, spec, scheme_name, oracle, graph, cap)
                  : solve_as<double>(run, spec, scheme_name, oracle, graph, cap);
}

json points_decl(const TeamSpec& spec, const std::string& flag) {
  if (flag.empty()) return spec.points.is_null() ? json{{"reachable", 10}} : spec.points;
  if (flag == "spec") {
    if (spec.points.is_null()) throw SpecError("--points spec: the spec declares no points");
    return spec.points;
  }
  auto colon = flag.find(':');
  const std::string kind = flag.substr(0, colon);
  int n = -1;
  if (colon != std::string::npos) {
    auto [ptr, ec] = std::from_chars(flag.data() + colon + 1, flag.data() + flag.size(), n);
    if (ec != std::errc() || ptr != flag.data() + flag.size()) n = -1;
  }
  if ((kind == "reachable" && n >= 0) || (kind == "grid" && n >= 1)) return {{kind, n}};
  throw SpecError("--points takes reachable:<depth>, grid:<resolution> or spec");
}

int cmd_infinite(Run& run, std::string scheme_name, const std::string& delta_text, double tol,
                 const std::string& points, std::uint64_t max_iter, int draws, std::uint64_t seed, std::uint64_t cap) {
  auto spec = run.load();
  Rational delta;
  if (!delta_text.empty()) {
    try {
      delta = teamdp::detail::parse_rational(delta_text);
    } catch (const std::invalid_argument& e) {
      throw SpecError(std::string("--delta: ") + e.what());
    }
  } else if (spec.discount) {
    delta = *spec.discount;
  } else {
    throw SpecError("no discount: pass --delta or add a \"stationary\" block");
  }
  if (!(delta > 0 && delta < 1)) throw SpecError("discount must lie strictly between 0 and 1");
  if (!(tol > 0)) throw SpecError("--tol must be positive");
  if (spec.model.horizon != 2) throw SpecError("a stationary model has two stages: the first stage and the repeated kernels");
  StationaryModel<double> sm{model_cast<double>(spec.model), static_cast<double>(delta)};
  require_stationary(sm);
  if (scheme_name.empty()) scheme_name = default_scheme(spec, "window-1");
  auto r = resolve_scheme(spec, sm.stages, scheme_name);
  if (r.composite) throw SpecError("scheme '" + scheme_name + "' pairs with the belief; use its base");
  for (int i = 0; i < sm.stages.num_agents; ++i)
    if (r.scheme.count(0, i) != r.scheme.count(1, i))
      throw SpecError("scheme '" + scheme_name + "' is not stationary: value counts differ between the stages");
  const json decl = points_decl(spec, points);
  auto B = point_set(sm, r.scheme, decl);
  BellmanTable<double> table(sm, r.scheme, B, cap);
  auto vi = value_iteration(table, tol, max_iter);
  double proj = 0;
  const double v0 = initial_value(sm, r.scheme, B, vi.value, &proj);
  const double bound = sm.stages.utility_bound() / (1 - sm.discount) + 1;
  const std::uint64_t cseed = substream(seed, "contraction");
  auto cr = contraction_check(table, draws, cseed, bound);
  run.body()["seeds"]["contraction"] = cseed;

  json pts = json::array();
  for (std::size_t k = 0; k < B.points.size(); ++k) {
    json pj = {{"belief", report::belief(B.points[k])}, {"value", vi.value[k]}};
    json acts = json::array();
    for (int i = 0; i < sm.stages.num_agents; ++i) {
      json row = json::object();
      for (int v : B.points[k].support(i)) row[std::to_string(v)] = sm.stages.actions[1][i][vi.policy.actions[k][i][v]];
      acts.push_back(std::move(row));
    }
    pj["prescription"] = acts;
    pts.push_back(std::move(pj));
  }
  run.result() = {{"scheme", scheme_name},
                  {"discount", teamdp::detail::rational_to_string(delta)},
                  {"tolerance", tol},
                  {"point_set", decl},
                  {"points", pts},
                  {"closed", B.closed},
                  {"max_projection", B.max_projection},
                  {"iterations", vi.iterations},
                  {"residual", vi.residual},
                  {"converged", vi.converged},
                  {"diagnostic", vi.diagnostic},
                  {"initial_value", v0},
                  {"initial_projection", proj},
                  {"contraction",
                   {{"draws", cr.draws},
                    {"worst_ratio", cr.worst_ratio},
                    {"max_projection", cr.max_projection},
                    {"holds", cr.holds}}}};
  if (!vi.diagnostic.empty()) std::cerr << "teamdp infinite: " << vi.diagnostic << "\n";
  const bool ok = vi.converged && vi.residual <= tol && cr.holds;
  return ok ? kOk : kFail;
}

/// {"teampolicy": 1, "rows": [t][i][h][a]} or {"teampolicy": 1, "actions": [t][i][h]}; "uniform" is built in.
HistoryPolicy load_policy(const TeamModel& m, const std::string& path, json& digest) {
  if (path == "uniform") {
    digest = "uniform";
    return uniform_policy(m);
  }
  const auto text = read_file(path);
  digest = "sha256:" + report::sha256_hex(text);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecParseError("", std::string("policy file: malformed JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("teampolicy", 0) != 1) throw SpecParseError("/teampolicy", "unsupported policy file version");
  using R = teamdp::detail::SpecReader;
  HistoryIndex idx(m);
  auto g = constant_policy(m);
  const bool rows = j.contains("rows");
  const char* key = rows ? "rows" : "actions";
  const std::string root = std::string("/") + key;
  const json& top = R::arr(R::at(j, "", key), root, m.horizon);
  for (int t = 0; t < m.horizon; ++t) {
    R::arr(top[t], root + "/" + std::to_string(t), m.num_agents);
    for (int i = 0; i < m.num_agents; ++i) {
      const std::string p = root + "/" + std::to_string(t) + "/" + std::to_string(i);
      const json& tab = R::arr(top[t][i], p, idx.count(t, i));
      for (std::uint64_t h = 0; h < idx.count(t, i); ++h) {
        const std::string ph = p + "/" + std::to_string(h);
        if (!rows) {
          const int a = R::integer(tab[h], ph, 0);
          if (a >= m.num_actions(t, i)) throw SpecParseError(ph, "action out of range");
          g.set_action(t, i, h, a);
          continue;
        }
        auto r = R::row(tab[h], ph, m.num_actions(t, i));
        Rational total = 0;
        for (const auto& v : r) {
          if (v < 0) throw SpecParseError(ph, "negative probability");
          total += v;
        }
        if (total != 1) throw SpecParseError(ph, "row does not sum to 1");
        auto dst = g.row(t, i, h);
        for (std::size_t a = 0; a < r.size(); ++a) dst[a] = static_cast<double>(r[a]);
      }
    }
  }
  return g;
}

int cmd_transfer(Run& run, const std::string& policy_path, std::string scheme_name, std::uint64_t samples,
                 std::uint64_t seed) {
  auto spec = run.load();
  auto m = model_cast<double>(spec.model);
  require_valid(m);
  if (scheme_name.empty()) scheme_name = "identity";
  auto r = resolve_scheme(spec, m, scheme_name);
  if (r.composite) throw SpecError("transfer takes a private scheme");
  json policy_digest;
  auto g = load_policy(m, policy_path, policy_digest);
  run.body()["policy"] = {{"path", policy_path}, {"digest", policy_digest}};
  const std::uint64_t tseed = substream(seed, "transfer");
  run.body()["seeds"]["transfer"] = tseed;
  auto rep = transfer_to_sib(m, r.scheme, g, samples, tseed);
  run.result() = report::transfer(rep);
  run.result()["scheme"] = scheme_name;
  if (!rep.failure.empty()) std::cerr << "teamdp transfer: " << rep.failure << "\n";
  return rep.passes() ? kOk : kFail;
}

int cmd_expand(const std::string& path) {
  try {
    std::cout << report::dump(expand_teamspec(load_teamspec(path))) << "\n";
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "teamdp expand: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact dynamic programming for small dynamic teams"};
  app.require_subcommand(1);
  Common c;
  auto common = [&c](CLI::App* sub) {
    sub->add_option("spec", c.spec_path, "teamspec file")->required();
    sub->add_option("--report", c.report_path, "report file (default: standard output)");
    sub->add_option("--seed", c.seed, "root seed for every random stream");
    sub->add_option("--threads", c.threads, "worker cap (runs are sequential; accepted for compatibility)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--cap", c.cap, "size guard for nodes, prescriptions and profiles");
  };

  auto* validate = app.add_subcommand("validate", "check the model invariants");
  common(validate);

  std::string scheme, which = "auto";
  std::uint64_t budget = CheckOptions{}.profile_budget;
  auto* check = app.add_subcommand("check", "check a compression scheme");
  common(check);
  check->add_option("--scheme", scheme, "scheme name (default: problem scheme, else identity)");
  check->add_option("--budget", budget, "profile budget before sampling");
  check->add_option("--which", which, "auto (by scheme kind) or payoff")->check(CLI::IsMember({"auto", "payoff"}));

  bool oracle = false, rational = false, graph = false;
  auto* solve = app.add_subcommand("solve", "solve by dynamic programming over beliefs");
  common(solve);
  solve->add_option("--scheme", scheme, "scheme name (default: problem scheme, else identity)");
  solve->add_flag("--oracle", oracle, "also run the brute-force oracle and compare");
  solve->add_flag("--rational", rational, "exact rational arithmetic");
  solve->add_flag("--graph", graph, "include every belief-graph edge in the report");

  std::string delta, points;
  double tol = 1e-8;
  std::uint64_t max_iter = kDefaultIterationCap;
  int draws = 100;
  auto* infinite = app.add_subcommand("infinite", "discounted value iteration on belief points");
  common(infinite);
  infinite->add_option("--scheme", scheme, "stationary scheme (default: problem scheme, else window-1)");
  infinite->add_option("--delta", delta, "discount in (0, 1); overrides the spec");
  infinite->add_option("--tol", tol, "target accuracy of the returned values");
  infinite->add_option("--points", points, "reachable:<depth>, grid:<resolution> or spec");
  infinite->add_option("--max-iter", max_iter, "iteration cap");
  infinite->add_option("--draws", draws, "value pairs for the contraction check");

  std::string policy;
  std::uint64_t samples = 100'000;
  auto* transfer = app.add_subcommand("transfer", "run the SIB construction of a full-history profile");
  common(transfer);
  transfer->add_option("policy", policy, "policy file, or 'uniform'")->required();
  transfer->add_option("--scheme", scheme, "private scheme (default: identity)");
  transfer->add_option("--samples", samples, "Monte-Carlo samples (0: exact comparison only)");

  std::string expand_path;
  auto* expand = app.add_subcommand("expand", "print the fully expanded canonical teamspec");
  expand->add_option("spec", expand_path, "teamspec file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (expand->parsed()) return cmd_expand(expand_path);
  const std::string name = app.get_subcommands().front()->get_name();
  Run run(name, c);
  run.body()["args"] = {{"scheme", scheme}, {"seed", c.seed}, {"cap", c.cap}};
  if (validate->parsed()) return run([&] { return cmd_validate(run); });
  if (check->parsed()) {
    run.body()["args"]["budget"] = budget;
    run.body()["args"]["which"] = which;
    return run([&] { return cmd_check(run, scheme, which, budget, c.seed); });
  }
  if (solve->parsed()) {
    run.body()["args"]["oracle"] = oracle;
    run.body()["args"]["rational"] = rational;
    run.body()["args"]["graph"] = graph;
    return run([&] { return cmd_solve(run, scheme, oracle, rational, graph, c.cap); });
  }
  if (infinite->parsed()) {
    run.body()["args"].update({{"delta", delta}, {"tol", tol}, {"points", points}, {"max_iter", max_iter}, {"draws", draws}});
    return run([&] { return cmd_infinite(run, scheme, delta, tol, points, max_iter, draws, c.seed, c.cap); });
  }
  run.body()["args"].update({{"policy", policy}, {"samples", samples}});
  return run([&] { return cmd_transfer(run, policy, scheme, samples, c.seed); });
}
