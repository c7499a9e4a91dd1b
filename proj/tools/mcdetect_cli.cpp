// mcdetect command-line front end.
//
// Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure,
// 3 comparison failed.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcdetect/analytic.hpp"
#include "mcdetect/config_io.hpp"
#include "mcdetect/harness.hpp"
#include "mcdetect/simulator.hpp"
#include "mcdetect/version.hpp"

namespace {

using namespace mcdetect;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kNumeric = 2;
constexpr int kCompareFailed = 3;

struct SimOverrides {
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::string window;  // empty, "auto" or a number
  std::optional<bool> bridge;
  unsigned threads = 0;
  bool record_wall_time = false;
};

void add_overrides(CLI::App* cmd, SimOverrides& o, bool with_trials = true) {
  if (with_trials) {
    cmd->add_option("--trials", o.trials, "Monte Carlo trials (0 disables simulation)");
    cmd->add_option("--seed", o.seed, "master seed");
  }
  cmd->add_option("--dt", o.dt, "time step [s]")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", o.horizon, "last time point [s]; rescales the t grid")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--window", o.window, "deployment window radius [um] or 'auto'");
  cmd->add_option("--bridge", o.bridge, "intra-step boundary crossing check (true/false)");
  cmd->add_option("--threads", o.threads,
                  "worker threads (default: MCDETECT_THREADS or all cores)");
  cmd->add_flag("--record-wall-time", o.record_wall_time, "add wall time to the CSV metadata");
}

void apply_overrides(harness::ExperimentSpec& spec, const SimOverrides& o) {
  auto& sim = spec.sim;
  if (o.trials) {
    sim.trials = *o.trials;
  }
  if (o.seed) {
    sim.master_seed = *o.seed;
  }
  if (o.dt) {
    sim.time_step = *o.dt;
  }
  if (o.bridge) {
    sim.bridge_correction = *o.bridge;
  }
  if (o.horizon) {
    if (sim.t_grid.size() >= 2 && sim.t_grid.front() > 0.0 && *o.horizon > sim.t_grid.front()) {
      sim.t_grid = model::log_grid(sim.t_grid.front(), *o.horizon, sim.t_grid.size());
    }
    sim.horizon = *o.horizon;
  }
  if (o.window == "auto") {
    spec.auto_window = true;
  } else if (!o.window.empty()) {
    try {
      std::size_t used = 0;
      sim.window_radius = std::stod(o.window, &used);
      if (used != o.window.size()) {
        throw std::invalid_argument("trailing characters");
      }
    } catch (const std::exception&) {
      throw model::ValidationError(
          std::vector<model::Violation>{{"--window", "expected a number or 'auto'"}});
    }
    spec.auto_window = false;
  }
}

std::vector<std::string> default_curves(const model::SystemConfig& config) {
  std::vector<std::string> out{"p_detect"};
  if (config.target.degradable()) {
    out.push_back("p_detect_approx");
  }
  if (config.single_nm) {
    out.push_back("p_single");
  }
  out.push_back("mean_detectors");
  if (config.marker) {
    out.push_back("p_sense_at");
    out.push_back("p_sense_within");
  }
  return out;
}

harness::ExperimentSpec spec_from_config(const std::string& path,
                                         const std::vector<std::string>& curves, bool simulate) {
  const auto scenario = model::load_scenario(path);
  harness::ExperimentSpec spec;
  spec.id = simulate ? "simulate" : "analytic";
  spec.description = "scenario " + path;
  spec.config = scenario.system;
  spec.sim = scenario.sim.value_or(model::SimConfig{});
  if (spec.sim.t_grid.empty()) {
    spec.sim.t_grid = model::log_grid(spec.sim.horizon * 1e-2, spec.sim.horizon, 200);
  }
  spec.auto_window = !scenario.sim.has_value();
  spec.curves = curves.empty() ? default_curves(spec.config) : curves;
  if (simulate) {
    const auto sims = harness::simulated_quantity_names();
    for (const auto& q : spec.curves) {
      if (std::find(sims.begin(), sims.end(), q) != sims.end()) {
        spec.mc.push_back(q);
      }
    }
  } else {
    spec.sim.trials = 0;
  }
  return spec;
}

void emit(const harness::ResultTable& table, const std::string& out_path) {
  std::ostringstream buffer;
  harness::write_csv(table, buffer);
  if (out_path.empty() || out_path == "-") {
    std::cout << buffer.str();
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) {
    throw model::ValidationError(
        std::vector<model::Violation>{{out_path, "cannot open output file"}});
  }
  file << buffer.str();
  if (!file) {
    throw std::runtime_error("failed writing " + out_path);
  }
  std::cerr << "wrote " << out_path << "\n";
}

harness::RunSettings settings_of(const SimOverrides& o) {
  return {o.threads, o.record_wall_time};
}

int run(int argc, char** argv) {
  CLI::App app{"Target detection by diffusing nanomachines: closed forms and Monte Carlo"};
  app.set_version_flag("--version", std::string(kVersion) + " (" + kGitVersion + ")");
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::vector<std::string> curves;
  SimOverrides overrides;

  auto* analytic_cmd = app.add_subcommand("analytic", "Evaluate closed-form curves to CSV");
  analytic_cmd->add_option("--config", config_path, "scenario JSON")->required();
  analytic_cmd->add_option("--curves", curves, "quantities to evaluate")->delimiter(',');
  analytic_cmd->add_option("--out", out_path, "output CSV (default stdout)");
  add_overrides(analytic_cmd, overrides, false);

  auto* simulate_cmd = app.add_subcommand("simulate", "Run Monte Carlo with analytic reference");
  simulate_cmd->add_option("--config", config_path, "scenario JSON")->required();
  simulate_cmd->add_option("--curves", curves, "quantities to evaluate")->delimiter(',');
  simulate_cmd->add_option("--out", out_path, "output CSV (default stdout)");
  add_overrides(simulate_cmd, overrides);

  std::string figure_id;
  auto* figure_cmd = app.add_subcommand("figure", "Run a figure preset end to end");
  figure_cmd->add_option("id", figure_id, "preset id (see 'presets list')")->required();
  figure_cmd->add_option("--out", out_path, "output CSV (default stdout)");
  add_overrides(figure_cmd, overrides);

  std::string csv_path;
  double tolerance = 0.02;
  auto* compare_cmd = app.add_subcommand("compare", "Compare analytic and MC columns of a CSV");
  compare_cmd->add_option("csv", csv_path, "table written by figure/simulate")->required();
  compare_cmd->add_option("--tolerance", tolerance,
                          "absolute for probabilities, relative for counts and times")
      ->check(CLI::NonNegativeNumber);

  std::string presets_action = "list";
  std::string presets_id;
  auto* presets_cmd = app.add_subcommand("presets", "List presets or show one as JSON");
  presets_cmd->add_option("action", presets_action, "list or show")
      ->check(CLI::IsMember({"list", "show"}));
  presets_cmd->add_option("id", presets_id, "preset id for 'show'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return kInvalid;
  }

  if (analytic_cmd->parsed() || simulate_cmd->parsed()) {
    auto spec = spec_from_config(config_path, curves, simulate_cmd->parsed());
    apply_overrides(spec, overrides);
    emit(harness::run_experiment(spec, settings_of(overrides)), out_path);
    return kOk;
  }
  if (figure_cmd->parsed()) {
    auto spec = harness::preset(figure_id);
    apply_overrides(spec, overrides);
    emit(harness::run_experiment(spec, settings_of(overrides)), out_path);
    return kOk;
  }
  if (compare_cmd->parsed()) {
    std::ifstream in(csv_path);
    if (!in) {
      throw model::ValidationError(
          std::vector<model::Violation>{{csv_path, "cannot open CSV file"}});
    }
    const auto table = harness::read_csv(in);
    const auto report = harness::compare(table, tolerance);
    std::cout << report.text(table.x_name);
    return report.pass ? kOk : kCompareFailed;
  }
  if (presets_cmd->parsed()) {
    if (presets_action == "list") {
      for (const auto& s : harness::figure_presets()) {
        std::cout << s.id << "  " << s.description << "\n";
      }
      return kOk;
    }
    if (presets_id.empty()) {
      std::cerr << "presets show: missing preset id\n";
      return kInvalid;
    }
    const auto spec = harness::preset(presets_id);
    auto doc = model::to_json(model::Scenario{spec.config, spec.sim});
    std::cout << doc.dump(2) << "\n";
    return kOk;
  }
  return kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const numerics::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const harness::StructuralError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
}
