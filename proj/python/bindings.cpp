#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mcdetect/analytic.hpp"
#include "mcdetect/config_io.hpp"
#include "mcdetect/harness.hpp"
#include "mcdetect/numerics.hpp"
#include "mcdetect/simulator.hpp"
#include "mcdetect/version.hpp"

namespace py = pybind11;
using namespace mcdetect;

namespace {

model::Scenario scenario_of(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw model::ValidationError(
        std::vector<model::Violation>{{"<scenario>", std::string("malformed JSON: ") + e.what()}});
  }
  return model::parse_scenario(doc);
}

std::vector<double> evaluate(const std::string& scenario, const std::string& quantity,
                             const std::vector<double>& times, double sensing_margin) {
  const auto config = scenario_of(scenario).system;
  std::function<double(double)> f;
  if (quantity == "p_detect") {
    f = [&](double t) {
      return config.target.degradable() ? analytic::p_detect_deg_exact(t, config)
                                        : analytic::p_detect(t, config);
    };
  } else if (quantity == "p_detect_approx") {
    f = [&](double t) { return analytic::p_detect_deg_approx(t, config); };
  } else if (quantity == "mean_detectors") {
    f = [&](double t) {
      return config.target.degradable() ? analytic::mean_detectors_deg(t, config)
                                        : analytic::mean_detectors(t, config);
    };
  } else if (quantity == "p_sense_at") {
    f = [&](double t) { return analytic::p_sense_at(t, config, sensing_margin); };
  } else if (quantity == "p_sense_within") {
    f = [&](double t) { return analytic::p_sense_within(t, config, sensing_margin); };
  } else {
    throw std::invalid_argument("unknown quantity '" + quantity + "'");
  }
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    out.push_back(f(t));
  }
  return out;
}

py::dict simulate(const std::string& scenario, std::uint64_t trials, std::uint64_t seed,
                  std::vector<double> times, double window, double sensing_margin,
                  const std::string& mode, unsigned threads) {
  const auto parsed = scenario_of(scenario);
  auto sim = parsed.sim.value_or(model::SimConfig{});
  sim.trials = trials;
  sim.master_seed = seed;
  if (!times.empty()) {
    sim.t_grid = std::move(times);
    sim.horizon = sim.t_grid.back();
  } else if (sim.t_grid.empty()) {
    sim.t_grid = model::log_grid(sim.horizon * 1e-2, sim.horizon, 50);
  }
  simulator::RunOptions options;
  options.threads = threads;
  options.sensing_margin = sensing_margin;
  if (mode == "detect") {
    options.mode = simulator::Mode::detect;
  } else if (mode == "sense_within") {
    options.mode = simulator::Mode::sense_within;
  } else if (mode == "sense_at") {
    options.mode = simulator::Mode::sense_at;
  } else {
    throw std::invalid_argument("mode must be detect, sense_within or sense_at");
  }
  const double margin = options.mode == simulator::Mode::detect ? 0.0 : sensing_margin;
  sim.window_radius = window > 0.0
                          ? window
                          : simulator::auto_window_radius(parsed.system, sim.horizon, margin);
  simulator::McEstimate est;
  {
    py::gil_scoped_release release;
    est = simulator::estimate_curves(parsed.system, sim, options);
  }
  py::dict out;
  out["t"] = est.t_grid;
  out["p_hat"] = est.p_hat;
  out["ci"] = est.ci_half_width;
  out["mean_detectors"] = est.mean_detectors;
  out["mean_detectors_ci"] = est.mean_detectors_ci;
  out["trials"] = est.trials;
  out["window_radius"] = est.window_radius;
  return out;
}

std::string run_figure(const std::string& id, std::optional<std::uint64_t> trials,
                       std::optional<std::uint64_t> seed, unsigned threads) {
  auto spec = harness::preset(id);
  if (trials) {
    spec.sim.trials = *trials;
  }
  if (seed) {
    spec.sim.master_seed = *seed;
  }
  std::ostringstream out;
  harness::write_csv(harness::run_experiment(spec, {threads, false}), out);
  return out.str();
}

py::tuple compare_csv(const std::string& csv, double tolerance) {
  std::istringstream in(csv);
  const auto table = harness::read_csv(in);
  const auto report = harness::compare(table, tolerance);
  return py::make_tuple(report.pass, report.text(table.x_name));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Detection by diffusing nanomachines: closed forms, Monte Carlo and figure presets";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<numerics::ConvergenceError>(m, "ConvergenceError", PyExc_ArithmeticError);
  py::register_exception<harness::StructuralError>(m, "StructuralError", PyExc_ValueError);

  m.def("erfc", &numerics::erfc, py::arg("x"));
  m.def("p_single", &analytic::p_single, py::arg("t"), py::arg("radius"), py::arg("diffusion"),
        py::arg("distance"), py::arg("degradation_rate") = 0.0,
        "Probability that a single NM reaches the target within t.");
  m.def("sensing_radius",
        [](double rate, double diffusion, double threshold) {
          return analytic::sensing_radius({rate, diffusion, threshold});
        },
        py::arg("emission_rate"), py::arg("diffusion"), py::arg("threshold"));
  m.def("validate_scenario", [](const std::string& s) { scenario_of(s); }, py::arg("scenario"),
        "Raises ValueError listing every violated constraint.");
  m.def("evaluate", &evaluate, py::arg("scenario"), py::arg("quantity"), py::arg("times"),
        py::arg("sensing_margin") = 0.0);
  m.def("mean_detection_time",
        [](const std::string& s, bool mobile) {
          return analytic::mean_detection_time(scenario_of(s).system,
                                               mobile ? analytic::TargetMotion::mobile
                                                      : analytic::TargetMotion::stationary);
        },
        py::arg("scenario"), py::arg("mobile") = false);
  m.def("simulate", &simulate, py::arg("scenario"), py::arg("trials") = 1000,
        py::arg("seed") = 42, py::arg("times") = std::vector<double>{}, py::arg("window") = 0.0,
        py::arg("sensing_margin") = 0.0, py::arg("mode") = "detect", py::arg("threads") = 0u);
  m.def("presets", [] {
    std::vector<std::string> ids;
    for (const auto& s : harness::figure_presets()) {
      ids.push_back(s.id);
    }
    return ids;
  });
  m.def("preset_scenario",
        [](const std::string& id) {
          const auto spec = harness::preset(id);
          return model::to_json(model::Scenario{spec.config, spec.sim}).dump();
        },
        py::arg("id"));
  m.def("run_figure", &run_figure, py::arg("id"), py::arg("trials") = py::none(),
        py::arg("seed") = py::none(), py::arg("threads") = 0u,
        py::call_guard<py::gil_scoped_release>(), "Runs a preset and returns the CSV text.");
  m.def("compare_csv", &compare_csv, py::arg("csv"), py::arg("tolerance") = 0.02);
}
