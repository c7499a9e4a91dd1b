#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mcdetect/analytic.hpp"
#include "mcdetect/config_io.hpp"
#include "mcdetect/harness.hpp"

using namespace mcdetect;
using namespace mcdetect::harness;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.id = "small";
  s.description = "quick detection run";
  s.config.classes = {{3.0, 100.0, 2e-5}};
  s.config.exclusion_radius = 10.0;
  s.sim.horizon = 3.0;
  s.sim.trials = 200;
  s.sim.t_grid = model::log_grid(0.3, 3.0, 8);
  s.curves = {"p_detect", "mean_detectors"};
  s.mc = {"p_detect"};
  s.sweep = {{"lambda", {1e-5, 2e-5}}};
  return s;
}

std::string csv_of(const ResultTable& t) {
  std::ostringstream out;
  write_csv(t, out);
  return out.str();
}

ResultTable table_of(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("every preset validates and its scenario round-trips") {
  const auto presets = figure_presets();
  CHECK(presets.size() == 8);
  for (const auto& p : presets) {
    CAPTURE(p.id);
    CHECK_NOTHROW(validate(p));
    const model::Scenario s{p.config, p.sim};
    CHECK(model::parse_scenario(model::to_json(s)) == s);
    CHECK(preset(p.id) == p);
  }
  CHECK_THROWS_AS(preset("fig99"), std::invalid_argument);
}

TEST_CASE("spec validation collects problems") {
  auto s = small_spec();
  s.curves = {"p_detect", "nonsense", "p_sense_at"};
  s.mc = {"p_single"};
  s.sweep.push_back({"colour", {1.0}});
  try {
    validate(s);
    FAIL("expected ValidationError");
  } catch (const model::ValidationError& e) {
    CHECK(e.violations().size() >= 3);
    const std::string what = e.what();
    CHECK(what.find("nonsense") != std::string::npos);
    CHECK(what.find("marker") != std::string::npos);
  }
}

TEST_CASE("sweeps rewrite the config") {
  model::SystemConfig base;
  base.classes = {{3.0, 100.0, 1e-5}, {4.0, 75.0, 1e-5}};
  base.exclusion_radius = 30.0;
  base.marker = model::MarkerSpec{100.0, 100.0, 0.002};
  const auto c = apply_sweep(base, {{"lambda", 2e-5}, {"mu", 0.1}, {"D_t", 50.0}, {"r", 40.0},
                                    {"eta", 0.004}, {"radius_scale", 2.0}});
  CHECK(c.classes[0].density == 2e-5);
  CHECK(c.classes[1].density == 2e-5);
  CHECK(c.target.degradation_rate == 0.1);
  CHECK(c.target.diffusion == 50.0);
  CHECK(c.exclusion_radius == 40.0);
  CHECK(c.marker->threshold == 0.004);
  CHECK(c.classes[1].radius == 8.0);
  CHECK_THROWS_AS(apply_sweep(base, {{"speed", 1.0}}), model::ValidationError);
}

TEST_CASE("analytic-only run") {
  auto s = small_spec();
  s.sim.trials = 0;
  const auto t = run_experiment(s);
  CHECK(t.x_name == "t");
  CHECK(t.x == s.sim.t_grid);
  REQUIRE(t.columns.size() == 4);
  CHECK(t.columns[0].name == "p_detect@lambda=1e-05.analytic");
  CHECK(t.find("p_detect@lambda=1e-05.mc") == nullptr);
  auto config = s.config;
  config.classes[0].density = 2e-5;
  CHECK(t.find("p_detect@lambda=2e-05.analytic")->values[3] ==
        analytic::p_detect(s.sim.t_grid[3], config));
  CHECK(t.meta("experiment") == "small");
  CHECK(t.meta("trials") == "0");
  CHECK_FALSE(t.meta("wall_time_s").has_value());
  CHECK(run_experiment(s, {1, true}).meta("wall_time_s").has_value());
}

TEST_CASE("simulated run is deterministic and round-trips through CSV") {
  const auto s = small_spec();
  const auto a = run_experiment(s, {1, false});
  const auto b = run_experiment(s, {3, false});
  const auto text = csv_of(a);
  CHECK(text == csv_of(b));
  REQUIRE(a.find("p_detect@lambda=2e-05.mc") != nullptr);
  CHECK(a.find("p_detect@lambda=2e-05.ci") != nullptr);
  CHECK(a.meta("window@lambda=2e-05.detect").has_value());

  const auto back = table_of(text);
  CHECK(back.metadata == a.metadata);
  CHECK(back.x == a.x);
  REQUIRE(back.columns.size() == a.columns.size());
  for (std::size_t i = 0; i < a.columns.size(); ++i) {
    CHECK(back.columns[i].name == a.columns[i].name);
    CHECK(back.columns[i].values == a.columns[i].values);
  }
  CHECK(csv_of(back) == text);
}

TEST_CASE("compare judges probabilities absolutely and counts relatively") {
  ResultTable t;
  t.x = {1.0, 2.0, 3.0};
  t.columns = {{"p_detect.analytic", {0.1, 0.2, 0.3}},
               {"p_detect.mc", {0.1, 0.2, 0.3}},
               {"p_detect.ci", {0.01, 0.01, 0.01}},
               {"mean_detectors.analytic", {1.0, 2.0, 4.0}},
               {"mean_detectors.mc", {1.0, 2.0, 4.0}}};
  auto r = compare(t, 0.02);
  CHECK(r.pass);
  REQUIRE(r.curves.size() == 2);
  CHECK(*r.curves[0].fraction_inside_ci == 1.0);
  CHECK_FALSE(r.curves[1].fraction_inside_ci.has_value());

  t.columns[1].values[1] += 0.1;
  r = compare(t, 0.02);
  CHECK_FALSE(r.pass);
  CHECK_FALSE(r.curves[0].pass);
  CHECK(r.curves[0].worst_x == 2.0);
  CHECK(r.curves[0].max_abs_deviation == doctest::Approx(0.1));
  CHECK(*r.curves[0].fraction_inside_ci == doctest::Approx(2.0 / 3.0));
  CHECK(r.text().find("FAIL p_detect: max_abs=") != std::string::npos);

  t.columns[1].values[1] -= 0.1;
  t.columns[4].values[2] = 4.1;  // 2.5 % relative
  r = compare(t, 0.02);
  CHECK_FALSE(r.curves[1].pass);
  CHECK(r.curves[1].max_rel_deviation == doctest::Approx(0.025));
  CHECK(compare(t, 0.03).pass);
}

TEST_CASE("compare treats matching infinities as equal") {
  ResultTable t;
  t.x_name = "r";
  t.x = {10.0, 20.0};
  const double inf = std::numeric_limits<double>::infinity();
  t.columns = {{"mdt_stationary.analytic", {inf, 5.0}}, {"mdt_stationary.mc", {inf, 5.0}}};
  CHECK(compare(t, 0.01).pass);
  t.columns[1].values[0] = 7.0;
  CHECK_FALSE(compare(t, 0.01).pass);
  CHECK(quantity_kind("mdt_stationary@lambda=1e-05") == QuantityKind::time);
  CHECK(quantity_kind("p_sense_at") == QuantityKind::probability);
  CHECK(quantity_kind("mean_detectors@mu=0.1") == QuantityKind::count);
}

TEST_CASE("compare rejects structurally broken tables") {
  ResultTable t;
  t.x = {1.0};
  t.columns = {{"p_detect.analytic", {0.1}}};
  CHECK_THROWS_AS(compare(t, 0.02), StructuralError);
  t.columns = {{"p_detect.mc", {0.1}}};
  CHECK_THROWS_AS(compare(t, 0.02), StructuralError);
  t.columns = {{"p_detect.analytic", {0.1}}, {"p_detect.ci", {0.1}}};
  CHECK_THROWS_AS(compare(t, 0.02), StructuralError);
  t.columns = {{"p_detect.analytic", {0.1}}, {"p_detect.mc", {0.1}}, {"p_detect.mc", {0.1}}};
  CHECK_THROWS_AS(compare(t, 0.02), StructuralError);
  t.columns = {{"p_detect.analytic", {0.1}}, {"p_detect.sim", {0.1}}};
  CHECK_THROWS_AS(compare(t, 0.02), StructuralError);
  t.columns = {{"p_detect.analytic", {0.1, 0.2}}, {"p_detect.mc", {0.1}}};
  CHECK_THROWS_AS(compare(t, 0.02), StructuralError);
  t.columns = {{"p_detect.analytic", {0.1}}, {"p_detect.mc", {0.1}}};
  CHECK_THROWS_AS(compare(t, -1.0), std::invalid_argument);
}

TEST_CASE("CSV reader rejects malformed input") {
  CHECK_THROWS_AS(table_of("# a: b\n"), StructuralError);
  CHECK_THROWS_AS(table_of("t,p.analytic\n1,0.5,7\n"), StructuralError);
  CHECK_THROWS_AS(table_of("t,p.analytic\n1,abc\n"), StructuralError);
  CHECK_THROWS_AS(table_of("t,p.analytic\n1,0.5\n# late: 1\n"), StructuralError);
  const auto t = table_of("# k: v=w: x\nt,p.analytic\n1,0.5\n2,inf\n");
  CHECK(t.meta("k") == "v=w: x");
  CHECK(std::isinf(t.columns[0].values[1]));
  CHECK(split_column("p_detect@mu=0.1.mc") ==
        std::pair<std::string, std::string>{"p_detect@mu=0.1", "mc"});
}

}
