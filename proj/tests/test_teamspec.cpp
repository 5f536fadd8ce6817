#include <gtest/gtest.h>

#include <teamdp/teamspec.hpp>

#include "fixtures.hpp"

using namespace teamdp;

namespace {

TeamSpec tiny_spec() {
  TeamSpec s;
  s.name = "TinyTeam";
  s.model = tiny_team<Rational>();
  return s;
}

json family_spec(const std::string& tag, json params) {
  return {{"teamspec", 1}, {"name", tag}, {"family", {{"tag", tag}, {"params", std::move(params)}}}};
}

}  // namespace

TEST(Teamspec, TinyTeamRoundTrips) {
  auto j = serialize_teamspec(tiny_spec());
  auto back = parse_teamspec(j);
  EXPECT_EQ(serialize_teamspec(back), j);
  EXPECT_EQ(serialize_teamspec(parse_teamspec_text(j.dump(2))), j);
  const auto& m = back.model;
  const auto ref = tiny_team<Rational>();
  EXPECT_EQ(m.transition, ref.transition);
  EXPECT_EQ(m.private_kernel, ref.private_kernel);
  EXPECT_EQ(m.utility, ref.utility);
  EXPECT_EQ(m.revealed, ref.revealed);
  EXPECT_TRUE(validate_model(m).empty());
  EXPECT_TRUE(j["model"].contains("team_utility"));
}

TEST(Teamspec, NumbersAndFractionsAreExact) {
  auto j = serialize_teamspec(tiny_spec());
  j["model"]["init"] = json::array({0.5, "1/2"});
  j["model"]["private_kernel"][0][0][0][0] = json::array({0.9, "0.1"});
  auto s = parse_teamspec(j);
  EXPECT_EQ(s.model.init[0], Rational(1, 2));
  EXPECT_EQ(s.model.priv(0, 0, 0, 0, 0), Rational(9, 10));
  EXPECT_EQ(serialize_teamspec(s)["model"]["init"], json::array({"0.5", "0.5"}));
}

TEST(Teamspec, SharedLabelShorthand) {
  auto j = serialize_teamspec(tiny_spec());
  j["model"]["states"] = {"0", "1"};
  j["model"]["actions"] = json::array({json::array({"0", "1"}), json::array({"0", "1"})});
  auto s = parse_teamspec(j);
  EXPECT_EQ(s.model.states, tiny_team<Rational>().states);
  EXPECT_EQ(s.model.actions, tiny_team<Rational>().actions);
}

TEST(Teamspec, UnknownVersionIsRejected) {
  auto j = serialize_teamspec(tiny_spec());
  j["teamspec"] = 2;
  try {
    parse_teamspec(j);
    FAIL();
  } catch (const SpecParseError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported teamspec version"), std::string::npos);
  }
  j.erase("teamspec");
  EXPECT_THROW(parse_teamspec(j), SpecParseError);
}

TEST(Teamspec, ShapeErrorsCarryPaths) {
  auto j = serialize_teamspec(tiny_spec());
  j["model"]["transition"][0][1][2] = json::array({"0.5"});
  try {
    parse_teamspec(j);
    FAIL();
  } catch (const SpecParseError& e) {
    EXPECT_EQ(e.path(), "/model/transition/0/1/2");
  }
  j = serialize_teamspec(tiny_spec());
  j["model"]["init"][1] = "half";
  try {
    parse_teamspec(j);
    FAIL();
  } catch (const SpecParseError& e) {
    EXPECT_EQ(e.path(), "/model/init/1");
  }
}

TEST(Teamspec, BadRowIsAValidationDiagnosticWithPath) {
  auto j = serialize_teamspec(tiny_spec());
  j["model"]["transition"][0][1][2] = json::array({"0.5", "0.6"});
  j["model"]["private_kernel"][1][0][0][3] = json::array({"-0.1", "1.1"});
  auto d = validate_model(parse_teamspec(j).model);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].path, "/model/transition/0/1/2");
  EXPECT_EQ(d[0].invariant, "stochastic");
  EXPECT_EQ(d[1].path, "/model/private_kernel/1/0/0/3");
  EXPECT_EQ(d[1].invariant, "nonnegative");
}

TEST(Teamspec, SchemesResolveByName) {
  auto j = serialize_teamspec(tiny_spec());
  j["schemes"] = json::array({{{"name", "last"}, {"type", "window"}, {"k", 1}},
                              {{"name", "joint"}, {"type", "composite"}, {"base", "last"}}});
  auto spec = parse_teamspec(j);
  EXPECT_EQ(spec.schemes[0].decl["include_revealed"], false);
  auto m = model_cast<double>(spec.model);
  auto last = resolve_scheme(spec, m, "last");
  EXPECT_FALSE(last.composite);
  EXPECT_EQ(last.scheme.name(), "last");
  EXPECT_EQ(last.scheme.count(1, 0), 2);
  EXPECT_TRUE(resolve_scheme(spec, m, "joint").composite);
  EXPECT_EQ(resolve_scheme(spec, m, "identity").scheme.count(1, 0), 4);
  EXPECT_EQ(resolve_scheme(spec, m, "window-2").scheme.count(1, 0), 4);
  EXPECT_THROW(resolve_scheme(spec, m, "problem"), SpecError);
  EXPECT_THROW(resolve_scheme(spec, m, "window-0"), SpecError);
}

TEST(Teamspec, TabularSchemeMatchesItsSource) {
  auto m = tiny_team<double>(false);
  auto obs = observations_only_scheme(m);
  auto [init, update] = tabulate(m, obs);
  TeamSpec spec;
  spec.name = "TinyTeam-private";
  spec.model = tiny_team<Rational>(false);
  auto j = serialize_teamspec(spec);
  j["schemes"] = json::array({{{"name", "obs"}, {"type", "tabular"}, {"counts", obs.counts()}, {"init", init}, {"update", update}}});
  auto parsed = parse_teamspec(j);
  EXPECT_EQ(serialize_teamspec(parse_teamspec(serialize_teamspec(parsed))), serialize_teamspec(parsed));
  auto s = resolve_scheme(parsed, m, "obs").scheme;
  for (int i = 0; i < 2; ++i)
    for (int v = 0; v < 2; ++v)
      for (int y = 0; y < 2; ++y)
        for (int a = 0; a < 2; ++a) EXPECT_EQ(s.update(1, i, v, y, 0, a), obs.update(1, i, v, y, 0, a));
  j["schemes"][0]["init"][0][1] = 7;
  EXPECT_THROW(resolve_scheme(parse_teamspec(j), m, "obs"), SpecParseError);
}

TEST(Teamspec, SourceCodingFamily) {
  auto spec = parse_teamspec(family_spec("SOURCE_CODING", {{"horizon", 3}, {"symbols", 2}, {"source", {"0.3", "0.7"}}}));
  auto ref = build_source_coding(iid_source_coding<Rational>({Rational(3, 10), Rational(7, 10)}, 2, 3));
  EXPECT_EQ(spec.model.transition, ref.model.transition);
  EXPECT_EQ(spec.model.utility, ref.model.utility);
  ASSERT_TRUE(spec.problem_scheme);
  EXPECT_EQ(spec.problem_scheme->counts(), ref.scheme.counts());
  auto canon = serialize_teamspec(spec);
  EXPECT_EQ(canon["family"]["params"]["order"], 1);
  EXPECT_EQ(serialize_teamspec(parse_teamspec(canon)), canon);
  auto expanded = expand_teamspec(spec);
  EXPECT_EQ(parse_teamspec(expanded).model.transition, ref.model.transition);
}

TEST(Teamspec, DelayedSharingFamily) {
  TeamSpec base;
  base.name = "TinyTeam-private";
  base.model = tiny_team<Rational>(false);
  auto spec = parse_teamspec(family_spec(
      "DELAYED_SHARING", {{"delay", 1}, {"base", {{"name", base.name}, {"model", serialize_teamspec(base)["model"]}}}}));
  auto ref = build_delayed_sharing(1, tiny_team<Rational>(false));
  EXPECT_EQ(spec.model.states, ref.model.states);
  EXPECT_EQ(spec.model.common_kernel, ref.model.common_kernel);
  auto canon = serialize_teamspec(spec);
  EXPECT_EQ(serialize_teamspec(parse_teamspec(canon)), canon);
}

TEST(Teamspec, RemoteLocalFamily) {
  auto spec = parse_teamspec(family_spec("REMOTE_LOCAL", {{"success", "1/2"}, {"horizon", 2}, {"plant", "two-state"}}));
  auto ref = build_remote_local(Rational(1, 2), two_state_plant<Rational>(), 2);
  EXPECT_EQ(spec.model.transition, ref.model.transition);
  EXPECT_EQ(spec.problem_scheme->kind(), SchemeKind::General);
  auto canon = serialize_teamspec(spec);
  EXPECT_EQ(canon["family"]["params"]["success"], "0.5");
  EXPECT_TRUE(canon["family"]["params"]["plant"].is_object());
  EXPECT_EQ(serialize_teamspec(parse_teamspec(canon)), canon);
  EXPECT_THROW(parse_teamspec(family_spec("REMOTE_LOCAL", {{"success", 0}, {"horizon", 2}, {"plant", "two-state"}})),
               SpecError);
  EXPECT_THROW(parse_teamspec(family_spec("CHAIN", json::object())), SpecParseError);
}

TEST(Teamspec, StationaryBlockAndPoints) {
  TeamSpec s;
  s.name = "CommonStateTeam";
  s.model = common_state_team<Rational>(Rational(9, 10)).stages;
  auto j = serialize_teamspec(s);
  j["stationary"] = {{"discount", 0.9}};
  j["points"] = {{"explicit", {{"2/5", 0.6}, {1, 0}, {0, 1}}}};
  auto spec = parse_teamspec(j);
  EXPECT_EQ(*spec.discount, Rational(9, 10));
  EXPECT_EQ(serialize_teamspec(parse_teamspec(serialize_teamspec(spec))), serialize_teamspec(spec));
  auto sm = stationary_model<double>(spec);
  auto scheme = resolve_scheme(spec, sm.stages, "window-1").scheme;
  auto B = point_set(sm, scheme, spec.points);
  ASSERT_EQ(B.points.size(), 3u);
  EXPECT_DOUBLE_EQ(B.points[0].prob[1], 0.6);
  auto grid = point_set(sm, scheme, json{{"grid", 4}});
  EXPECT_EQ(grid.points.size(), 5u);
  j["points"] = {{"explicit", {{"0.5", "0.6"}}}};
  EXPECT_THROW(point_set(sm, scheme, parse_teamspec(j).points), SpecParseError);
  j["model"] = serialize_teamspec(tiny_spec())["model"];
  j["model"]["horizon"] = 3;
  EXPECT_THROW(parse_teamspec(j), SpecParseError);
}
