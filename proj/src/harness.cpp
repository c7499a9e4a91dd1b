#include "mcdetect/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "mcdetect/analytic.hpp"
#include "mcdetect/config_io.hpp"
#include "mcdetect/simulator.hpp"
#include "mcdetect/version.hpp"

namespace mcdetect::harness {

using model::SystemConfig;
using model::Violation;

namespace {

using Point = std::vector<std::pair<std::string, double>>;

const std::vector<std::string> kQuantities = {
    "p_detect",   "p_detect_approx", "p_single",       "mean_detectors",
    "p_sense_at", "p_sense_within",  "mdt_stationary", "mdt_mobile"};
const std::vector<std::string> kSimulated = {"p_detect",   "p_detect_approx", "mean_detectors",
                                             "p_sense_at", "p_sense_within",  "mdt_stationary",
                                             "mdt_mobile"};
const std::set<std::string> kAxes = {"lambda", "mu", "D_t", "r", "eta", "radius_scale"};

bool contains(const std::vector<std::string>& list, std::string_view name) {
  return std::find(list.begin(), list.end(), name) != list.end();
}

bool is_mdt(std::string_view q) { return q == "mdt_stationary" || q == "mdt_mobile"; }

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && *first == '+') {
    ++first;
  }
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw std::invalid_argument("malformed number '" + std::string(text) + "'");
  }
  return v;
}

std::vector<Point> cartesian(const std::vector<SweepAxis>& axes) {
  std::vector<Point> points{{}};
  for (const auto& axis : axes) {
    std::vector<Point> next;
    for (const auto& p : points) {
      for (double v : axis.values) {
        auto q = p;
        q.emplace_back(axis.name, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

// Axes a quantity's value depends on.
bool depends_on(std::string_view quantity, std::string_view axis) {
  if (quantity == "p_single") {
    return axis == "mu" || axis == "D_t";
  }
  return true;
}

std::string label(const Point& point, std::string_view quantity) {
  std::string out;
  for (const auto& [axis, value] : point) {
    if (!depends_on(quantity, axis)) {
      continue;
    }
    out += out.empty() ? "@" : ",";
    out += axis + "=" + format_number(value);
  }
  return out;
}

std::string describe(const Point& point) {
  std::string out;
  for (const auto& [axis, value] : point) {
    out += (out.empty() ? "" : ",") + axis + "=" + format_number(value);
  }
  return out.empty() ? "base" : out;
}

bool sense_within_valid(const SystemConfig& config, double margin) {
  return std::all_of(config.classes.begin(), config.classes.end(), [&](const model::NmClass& c) {
    return config.exclusion_radius >= c.radius + margin;
  });
}

double sensing_margin(const SystemConfig& config) {
  return config.marker ? analytic::sensing_radius(*config.marker) : 0.0;
}

bool applicable(std::string_view q, const SystemConfig& config) {
  if (q == "p_detect_approx") {
    return config.target.degradable();
  }
  if (q == "p_single") {
    return config.single_nm.has_value();
  }
  if (q == "p_sense_at") {
    return config.marker.has_value();
  }
  if (q == "p_sense_within") {
    return config.marker.has_value() && sense_within_valid(config, sensing_margin(config));
  }
  return true;
}

double analytic_value(std::string_view q, const SystemConfig& config, double t) {
  const bool deg = config.target.degradable();
  if (q == "p_detect") {
    return deg ? analytic::p_detect_deg_exact(t, config) : analytic::p_detect(t, config);
  }
  if (q == "p_detect_approx") {
    return analytic::p_detect_deg_approx(t, config);
  }
  if (q == "p_single") {
    const auto& s = *config.single_nm;
    return analytic::p_single(t, s.radius, s.diffusion + config.target.diffusion, s.distance,
                              config.target.degradation_rate);
  }
  if (q == "mean_detectors") {
    return deg ? analytic::mean_detectors_deg(t, config) : analytic::mean_detectors(t, config);
  }
  if (q == "p_sense_at") {
    return analytic::p_sense_at(t, config, sensing_margin(config));
  }
  if (q == "p_sense_within") {
    return analytic::p_sense_within(t, config, sensing_margin(config));
  }
  throw std::invalid_argument("unknown quantity " + std::string(q));
}

double analytic_mdt(std::string_view q, const SystemConfig& config) {
  return analytic::mean_detection_time(config, q == "mdt_mobile"
                                                   ? analytic::TargetMotion::mobile
                                                   : analytic::TargetMotion::stationary);
}

// Runs `body`, prefixing any domain or convergence error with context.
template <typename F>
auto with_context(const std::string& context, F&& body) {
  try {
    return body();
  } catch (const numerics::ConvergenceError& e) {
    throw numerics::ConvergenceError(context + ": " + e.what(), e.estimate(), e.error_bound());
  } catch (const std::domain_error& e) {
    throw std::domain_error(context + ": " + e.what());
  }
}

std::string axis_text(const SweepAxis& axis) {
  std::string out = axis.name + "=";
  for (std::size_t i = 0; i < axis.values.size(); ++i) {
    out += (i ? "|" : "") + format_number(axis.values[i]);
  }
  return out;
}

model::SimConfig preset_sim(double start, double stop, std::uint64_t trials = 10000) {
  model::SimConfig sim;
  sim.time_step = 1e-4;
  sim.trials = trials;
  sim.master_seed = 42;
  sim.bridge_correction = true;
  sim.t_grid = model::log_grid(start, stop, 200);
  sim.horizon = stop;
  return sim;
}

SystemConfig two_classes(double density) {
  SystemConfig c;
  c.classes = {{3.0, 100.0, density}, {4.0, 75.0, density}};
  c.exclusion_radius = 30.0;
  return c;
}

}  // namespace

std::vector<std::string> quantity_names() { return kQuantities; }
std::vector<std::string> simulated_quantity_names() { return kSimulated; }

QuantityKind quantity_kind(std::string_view name) {
  const auto base = name.substr(0, name.find('@'));
  if (is_mdt(base)) {
    return QuantityKind::time;
  }
  if (base == "mean_detectors") {
    return QuantityKind::count;
  }
  return base.starts_with("p_") ? QuantityKind::probability : QuantityKind::count;
}

const Column* ResultTable::find(std::string_view name) const {
  for (const auto& c : columns) {
    if (c.name == name) {
      return &c;
    }
  }
  return nullptr;
}

std::optional<std::string> ResultTable::meta(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) {
      return v;
    }
  }
  return std::nullopt;
}

SystemConfig apply_sweep(const SystemConfig& base, const Point& point) {
  SystemConfig c = base;
  for (const auto& [axis, v] : point) {
    if (axis == "lambda") {
      for (auto& cls : c.classes) {
        cls.density = v;
      }
    } else if (axis == "mu") {
      c.target.degradation_rate = v;
    } else if (axis == "D_t") {
      c.target.diffusion = v;
    } else if (axis == "r") {
      c.exclusion_radius = v;
    } else if (axis == "eta") {
      if (!c.marker) {
        throw model::ValidationError(std::vector<Violation>{{"sweep.eta", "requires a marker block"}});
      }
      c.marker->threshold = v;
    } else if (axis == "radius_scale") {
      for (std::size_t i = 0; i < c.classes.size(); ++i) {
        c.classes[i].radius = base.classes[i].radius * v;
      }
    } else {
      throw model::ValidationError(std::vector<Violation>{{"sweep", "unknown axis '" + axis + "'"}});
    }
  }
  return c;
}

std::vector<ExperimentSpec> figure_presets() {
  std::vector<ExperimentSpec> out;
  const std::string t_note = "t grid: 200 log-spaced points over the stated range";

  {
    ExperimentSpec s;
    s.id = "fig2";
    s.description = "detection probability of a non-degradable stationary target for two NM "
                    "densities, with a single-NM reference";
    s.config = two_classes(1e-6);
    s.config.single_nm = model::SingleNmSpec{4.0, 100.0, 50.0};
    s.sim = preset_sim(1.0, 100.0);
    s.curves = {"p_detect", "p_single"};
    s.mc = {"p_detect"};
    s.sweep = {{"lambda", {1e-6, 1e-5}}};
    s.notes = t_note + " [1, 100] s; lambda applies to both classes";
    out.push_back(std::move(s));
  }
  {
    ExperimentSpec s;
    s.id = "fig3";
    s.description = "detection probability of a degradable stationary target for two NM radius "
                    "scales and two degradation rates";
    s.config = two_classes(1e-6);
    s.sim = preset_sim(1.0, 100.0);
    s.curves = {"p_detect", "p_detect_approx"};
    s.mc = {"p_detect"};
    s.sweep = {{"radius_scale", {1.0, 2.0}}, {"mu", {0.1, 1.0}}};
    s.notes = t_note + " [1, 100] s; radii (3, 4) um scaled by radius_scale; mu values assumed";
    out.push_back(std::move(s));
  }
  {
    ExperimentSpec s;
    s.id = "fig4";
    s.description = "mean number of detecting NMs for stationary and mobile targets, with and "
                    "without degradation";
    s.config = two_classes(1e-5);
    s.sim = preset_sim(1.0, 100.0);
    s.curves = {"mean_detectors"};
    s.mc = {"mean_detectors"};
    s.sweep = {{"D_t", {0.0, 100.0}}, {"mu", {0.0, 0.1}}};
    s.notes = t_note + " [1, 100] s; degradable case uses mu = 0.1 1/s (assumed)";
    out.push_back(std::move(s));
  }
  {
    ExperimentSpec s;
    s.id = "fig5";
    s.description = "detection probability of a mobile target; two-body simulation against the "
                    "effective-diffusion closed forms";
    s.config = two_classes(1e-5);
    s.config.target.diffusion = 100.0;
    s.sim = preset_sim(1.0, 100.0);
    s.curves = {"p_detect", "p_detect_approx"};
    s.mc = {"p_detect", "p_detect_approx"};
    s.sweep = {{"mu", {0.0, 0.1}}};
    s.notes = t_note + " [1, 100] s; degradable case uses mu = 0.1 1/s (assumed)";
    out.push_back(std::move(s));
  }
  {
    ExperimentSpec s;
    s.id = "fig6";
    s.description = "single NM versus multiple NMs for stationary and mobile, degradable and "
                    "non-degradable targets";
    s.config = two_classes(1e-6);
    s.config.single_nm = model::SingleNmSpec{4.0, 100.0, 30.0};
    s.sim = preset_sim(1.0, 100.0);
    s.curves = {"p_detect", "p_detect_approx", "p_single"};
    s.mc = {"p_detect"};
    s.sweep = {{"D_t", {0.0, 100.0}}, {"mu", {0.0, 0.1}}};
    s.notes = t_note + " [1, 100] s";
    out.push_back(std::move(s));
  }
  {
    ExperimentSpec s;
    s.id = "fig7";
    s.description = "mean detection time of a non-degradable target versus exclusion radius, "
                    "stationary and mobile";
    s.config = two_classes(1e-5);
    s.config.target.diffusion = 100.0;
    s.sim = preset_sim(1.0, 100.0, 2000);
    s.sim.t_grid.clear();
    s.curves = {"mdt_stationary", "mdt_mobile"};
    s.mc = {"mdt_stationary", "mdt_mobile"};
    s.sweep = {{"lambda", {1e-5, 2e-5}}};
    s.x_axis = SweepAxis{"r", {10, 15, 20, 25, 30, 35, 40, 45, 50}};
    s.notes = "window and horizon chosen per point; second density assumed";
    out.push_back(std::move(s));
  }
  {
    ExperimentSpec s;
    s.id = "fig8";
    s.description = "indirect sensing probability for three marker thresholds";
    s.config = two_classes(1e-6);
    s.config.marker = model::MarkerSpec{100.0, 100.0, 0.002};
    s.sim = preset_sim(1.0, 100.0);
    s.curves = {"p_sense_at", "p_sense_within"};
    s.mc = {"p_sense_at", "p_sense_within"};
    s.sweep = {{"eta", {0.002, 0.004, 0.008}}};
    s.notes = t_note + " [1, 100] s; M = 100, D_m = 100 assumed; p_sense_within omitted "
                       "where r < a_i + d_m";
    out.push_back(std::move(s));
  }
  {
    ExperimentSpec s;
    s.id = "fig9";
    s.description = "indirect sensing probability for several exclusion radii at d_m = 39.79 um";
    s.config = two_classes(1e-6);
    s.config.marker = model::MarkerSpec{100.0, 100.0, 0.002};
    s.sim = preset_sim(1.0, 100.0);
    s.curves = {"p_sense_at", "p_sense_within"};
    s.mc = {"p_sense_at", "p_sense_within"};
    s.sweep = {{"r", {10.0, 30.0, 45.0, 60.0}}};
    s.notes = t_note + " [1, 100] s; M = 100, D_m = 100 assumed; p_sense_within omitted "
                       "where r < a_i + d_m";
    out.push_back(std::move(s));
  }
  return out;
}

ExperimentSpec preset(std::string_view id) {
  for (auto& s : figure_presets()) {
    if (s.id == id) {
      return s;
    }
  }
  throw std::invalid_argument("unknown preset '" + std::string(id) + "'");
}

void validate(const ExperimentSpec& spec) {
  std::vector<Violation> v;
  if (spec.id.empty()) {
    v.push_back({"id", "must not be empty"});
  }
  if (spec.curves.empty()) {
    v.push_back({"curves", "at least one quantity is required"});
  }
  for (const auto& q : spec.curves) {
    if (!contains(kQuantities, q)) {
      v.push_back({"curves", "unknown quantity '" + q + "'"});
    } else if (is_mdt(q) != spec.x_axis.has_value()) {
      v.push_back({"curves", "'" + q + "' " +
                                 (spec.x_axis ? "cannot be tabulated against " + spec.x_axis->name
                                              : std::string("needs an x axis other than t"))});
    }
    if ((q == "p_sense_at" || q == "p_sense_within") && !spec.config.marker) {
      v.push_back({"marker", "'" + q + "' requires a marker block"});
    }
    if (q == "p_single" && !spec.config.single_nm) {
      v.push_back({"single_nm", "'p_single' requires a single_nm block"});
    }
  }
  for (const auto& q : spec.mc) {
    if (!contains(kSimulated, q)) {
      v.push_back({"mc", "no simulator for '" + q + "'"});
    } else if (!contains(spec.curves, q)) {
      v.push_back({"mc", "'" + q + "' must also be listed in curves"});
    }
  }
  std::set<std::string> seen;
  auto check_axis = [&](const SweepAxis& axis, const std::string& field) {
    if (!kAxes.contains(axis.name)) {
      v.push_back({field, "unknown axis '" + axis.name + "'"});
    }
    if (!seen.insert(axis.name).second) {
      v.push_back({field, "axis '" + axis.name + "' appears twice"});
    }
    if (axis.values.empty()) {
      v.push_back({field, "axis '" + axis.name + "' has no values"});
    }
    for (double x : axis.values) {
      if (!std::isfinite(x)) {
        v.push_back({field, "axis values must be finite"});
        break;
      }
    }
  };
  for (const auto& axis : spec.sweep) {
    check_axis(axis, "sweep");
  }
  if (spec.x_axis) {
    check_axis(*spec.x_axis, "x_axis");
  }
  if (spec.sim.trials > 0 && spec.sim.trials < 100) {
    v.push_back({"simulation.trials", "must be 0 (analytic only) or >= 100"});
  }
  if (!v.empty()) {
    throw model::ValidationError(std::move(v));
  }

  auto axes = spec.sweep;
  if (spec.x_axis) {
    axes.push_back(*spec.x_axis);
  }
  auto base = model::check(spec.config);
  v.insert(v.end(), base.begin(), base.end());
  if (base.empty()) {
    for (const auto& point : cartesian(axes)) {
      try {
        const auto config = apply_sweep(spec.config, point);
        for (auto& p : model::check(config)) {
          v.push_back({"sweep point " + describe(point) + ": " + p.field, p.constraint});
        }
        if (!spec.x_axis) {
          auto sim = spec.sim;
          sim.trials = std::max<std::uint64_t>(sim.trials, 1);  // 0 means analytic only
          for (auto& p : model::check(sim, config)) {
            v.push_back({"sweep point " + describe(point) + ": " + p.field, p.constraint});
          }
        }
      } catch (const model::ValidationError& e) {
        v.insert(v.end(), e.violations().begin(), e.violations().end());
        break;
      }
    }
  }
  if (!spec.x_axis && spec.sim.t_grid.empty()) {
    v.push_back({"simulation.t_grid", "must not be empty"});
  }
  if (spec.x_axis && !(spec.sim.time_step > 0.0)) {
    v.push_back({"simulation.time_step", "dt > 0 violated"});
  }
  if (!v.empty()) {
    throw model::ValidationError(std::move(v));
  }
}

ResultTable run_experiment(const ExperimentSpec& spec, const RunSettings& settings) {
  validate(spec);
  const auto started = std::chrono::steady_clock::now();
  ResultTable table;
  auto& meta = table.metadata;
  meta.emplace_back("experiment", spec.id);
  meta.emplace_back("description", spec.description);
  meta.emplace_back("version", std::string(kVersion) + " (" + kGitVersion + ")");
  meta.emplace_back("seed", std::to_string(spec.sim.master_seed));
  meta.emplace_back("trials", std::to_string(spec.sim.trials));
  meta.emplace_back("auto_window", spec.auto_window ? "true" : "false");
  model::Scenario scenario{spec.config, spec.sim};
  meta.emplace_back("config", model::to_json(scenario).dump());
  for (const auto& axis : spec.sweep) {
    meta.emplace_back("sweep", axis_text(axis));
  }
  if (spec.x_axis) {
    meta.emplace_back("x_axis", axis_text(*spec.x_axis));
  }
  if (!spec.notes.empty()) {
    meta.emplace_back("notes", spec.notes);
  }

  const bool run_mc = spec.sim.trials > 0;
  std::set<std::string> emitted;
  auto add = [&](std::string name, std::vector<double> values) {
    if (emitted.insert(name).second) {
      table.columns.push_back({std::move(name), std::move(values)});
    }
  };

  if (spec.x_axis) {
    table.x_name = spec.x_axis->name;
    table.x = spec.x_axis->values;
    for (const auto& point : cartesian(spec.sweep)) {
      for (const auto& q : spec.curves) {
        const std::string name = q + label(point, q);
        std::vector<double> analytic_col;
        std::vector<double> mc_col;
        std::vector<double> ci_col;
        const bool simulate = run_mc && contains(spec.mc, q);
        for (double x : table.x) {
          auto row_point = point;
          row_point.emplace_back(spec.x_axis->name, x);
          const auto config = apply_sweep(spec.config, row_point);
          const std::string context = spec.id + " " + name + " at " + describe(row_point);
          analytic_col.push_back(with_context(context, [&] { return analytic_mdt(q, config); }));
          if (!simulate) {
            continue;
          }
          if (config.target.degradable()) {
            mc_col.push_back(numerics::kInfinity);
            ci_col.push_back(0.0);
            continue;
          }
          const bool mobile = q == "mdt_mobile";
          auto sim_config = config;
          if (!mobile) {
            sim_config.target.diffusion = 0.0;
          }
          auto sim = spec.sim;
          sim.t_grid.clear();
          if (spec.auto_window) {
            const auto plan = with_context(
                context, [&] { return simulator::plan_detection_time(config, mobile); });
            sim.window_radius = plan.window_radius;
            sim.horizon = plan.horizon;
          }
          simulator::RunOptions options;
          options.tally = simulator::Tally::first_detection;
          options.threads = settings.threads;
          const auto est = simulator::estimate_curves(sim_config, sim, options);
          mc_col.push_back(est.detection_time_mean);
          ci_col.push_back(1.96 * est.detection_time_se);
          meta.emplace_back("run" + label(row_point, q) + "." + q,
                            "window=" + format_number(sim.window_radius) +
                                " horizon=" + format_number(sim.horizon) +
                                " undetected=" + std::to_string(est.undetected));
        }
        add(name + ".analytic", std::move(analytic_col));
        if (simulate) {
          add(name + ".mc", std::move(mc_col));
          add(name + ".ci", std::move(ci_col));
        }
      }
    }
  } else {
    table.x = spec.sim.t_grid;
    for (const auto& point : cartesian(spec.sweep)) {
      const auto config = apply_sweep(spec.config, point);
      const double margin = sensing_margin(config);
      std::map<simulator::Mode, simulator::McEstimate> runs;
      auto mc_run = [&](simulator::Mode mode, bool all_detectors) -> const simulator::McEstimate& {
        if (auto it = runs.find(mode); it != runs.end()) {
          return it->second;
        }
        auto sim = spec.sim;
        const double m = mode == simulator::Mode::detect ? 0.0 : margin;
        if (spec.auto_window) {
          sim.window_radius = simulator::auto_window_radius(config, sim.horizon, m);
        }
        simulator::RunOptions options;
        options.mode = mode;
        options.sensing_margin = m;
        options.tally =
            all_detectors ? simulator::Tally::all_detectors : simulator::Tally::first_detection;
        options.threads = settings.threads;
        static const char* names[] = {"detect", "sense_within", "sense_at"};
        meta.emplace_back("window" + label(point, "") + "." + names[static_cast<int>(mode)],
                          format_number(sim.window_radius));
        return runs.emplace(mode, simulator::estimate_curves(config, sim, options)).first->second;
      };
      const bool count_all = contains(spec.mc, "mean_detectors");

      for (const auto& q : spec.curves) {
        if (!applicable(q, config)) {
          continue;
        }
        const std::string name = q + label(point, q);
        const std::string context = spec.id + " " + name;
        std::vector<double> values;
        values.reserve(table.x.size());
        with_context(context, [&] {
          for (double t : table.x) {
            values.push_back(analytic_value(q, config, t));
          }
          return 0;
        });
        add(name + ".analytic", std::move(values));
        if (!run_mc || !contains(spec.mc, q)) {
          continue;
        }
        const auto mode = q == "p_sense_at"       ? simulator::Mode::sense_at
                          : q == "p_sense_within" ? simulator::Mode::sense_within
                                                  : simulator::Mode::detect;
        const auto& est = mc_run(mode, count_all);
        if (q == "mean_detectors") {
          add(name + ".mc", est.mean_detectors);
          add(name + ".ci", est.mean_detectors_ci);
        } else {
          add(name + ".mc", est.p_hat);
          add(name + ".ci", est.ci_half_width);
        }
      }
    }
  }

  if (settings.record_wall_time) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    meta.emplace_back("wall_time_s", format_number(secs));
  }
  return table;
}

void write_csv(const ResultTable& table, std::ostream& out) {
  for (const auto& [k, v] : table.metadata) {
    std::string value = v;
    std::replace(value.begin(), value.end(), '\n', ' ');
    out << "# " << k << ": " << value << "\n";
  }
  out << table.x_name;
  for (const auto& c : table.columns) {
    out << "," << c.name;
  }
  out << "\n";
  for (std::size_t i = 0; i < table.x.size(); ++i) {
    out << format_number(table.x[i]);
    for (const auto& c : table.columns) {
      out << "," << format_number(c.values.at(i));
    }
    out << "\n";
  }
}

ResultTable read_csv(std::istream& in) {
  ResultTable table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    if (line.front() == '#') {
      if (have_header) {
        throw StructuralError("line " + std::to_string(line_no) + ": metadata after header");
      }
      std::string body = line.substr(1);
      if (!body.empty() && body.front() == ' ') {
        body.erase(0, 1);
      }
      const auto sep = body.find(": ");
      if (sep == std::string::npos) {
        table.metadata.emplace_back(body, "");
      } else {
        table.metadata.emplace_back(body.substr(0, sep), body.substr(sep + 2));
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
      cells.emplace_back();
    }
    if (!have_header) {
      if (cells.empty() || cells.front().empty()) {
        throw StructuralError("header must start with the x column name");
      }
      table.x_name = cells.front();
      for (std::size_t i = 1; i < cells.size(); ++i) {
        table.columns.push_back({cells[i], {}});
      }
      have_header = true;
      continue;
    }
    if (cells.size() != table.columns.size() + 1) {
      throw StructuralError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.columns.size() + 1) + " cells, found " +
                            std::to_string(cells.size()));
    }
    try {
      table.x.push_back(parse_number(cells[0]));
      for (std::size_t i = 1; i < cells.size(); ++i) {
        table.columns[i - 1].values.push_back(parse_number(cells[i]));
      }
    } catch (const std::invalid_argument& e) {
      throw StructuralError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) {
    throw StructuralError("no header row");
  }
  return table;
}

std::pair<std::string, std::string> split_column(std::string_view name) {
  const auto dot = name.rfind('.');
  if (dot == std::string_view::npos) {
    return {std::string(name), ""};
  }
  return {std::string(name.substr(0, dot)), std::string(name.substr(dot + 1))};
}

Report compare(const ResultTable& table, double tolerance) {
  if (!(tolerance >= 0.0)) {
    throw std::invalid_argument("compare: tolerance must be >= 0");
  }
  struct Group {
    const Column* analytic = nullptr;
    const Column* mc = nullptr;
    const Column* ci = nullptr;
  };
  std::vector<std::string> order;
  std::map<std::string, Group> groups;
  for (const auto& c : table.columns) {
    if (c.values.size() != table.x.size()) {
      throw StructuralError("column " + c.name + " has " + std::to_string(c.values.size()) +
                            " values, expected " + std::to_string(table.x.size()));
    }
    auto [base, variant] = split_column(c.name);
    if (!groups.contains(base)) {
      order.push_back(base);
    }
    auto& g = groups[base];
    const Column** slot = variant == "analytic" ? &g.analytic
                          : variant == "mc"     ? &g.mc
                          : variant == "ci"     ? &g.ci
                                                : nullptr;
    if (!slot) {
      throw StructuralError("column " + c.name + " has unknown variant '" + variant + "'");
    }
    if (*slot) {
      throw StructuralError("duplicate column " + c.name);
    }
    *slot = &c;
  }

  Report report;
  report.tolerance = tolerance;
  for (const auto& base : order) {
    const auto& g = groups[base];
    if (g.ci && !g.mc) {
      throw StructuralError("column " + base + ".ci has no matching " + base + ".mc");
    }
    if (!g.mc) {
      continue;
    }
    if (!g.analytic) {
      throw StructuralError("column " + base + ".mc has no matching " + base + ".analytic");
    }
    CurveReport cr;
    cr.name = base;
    cr.kind = quantity_kind(base);
    const bool relative = cr.kind != QuantityKind::probability;
    double worst = -1.0;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < table.x.size(); ++i) {
      const double a = g.analytic->values[i];
      const double m = g.mc->values[i];
      double abs_dev = std::abs(a - m);
      double rel_dev = abs_dev / std::max(std::abs(a), 1e-300);
      if (!std::isfinite(a) || !std::isfinite(m)) {
        abs_dev = rel_dev = (a == m) ? 0.0 : numerics::kInfinity;
      }
      cr.max_abs_deviation = std::max(cr.max_abs_deviation, abs_dev);
      cr.max_rel_deviation = std::max(cr.max_rel_deviation, rel_dev);
      const double score = relative ? rel_dev : abs_dev;
      if (score > worst) {
        worst = score;
        cr.worst_x = table.x[i];
        cr.worst_analytic = a;
        cr.worst_mc = m;
      }
      if (g.ci && abs_dev <= g.ci->values[i]) {
        ++inside;
      }
    }
    if (g.ci && !table.x.empty()) {
      cr.fraction_inside_ci = static_cast<double>(inside) / static_cast<double>(table.x.size());
    }
    cr.pass = (relative ? cr.max_rel_deviation : cr.max_abs_deviation) <= tolerance;
    report.pass = report.pass && cr.pass;
    report.curves.push_back(std::move(cr));
  }
  if (report.curves.empty()) {
    throw StructuralError("table has no paired analytic/mc columns");
  }
  return report;
}

std::string Report::text(std::string_view x_name) const {
  std::ostringstream out;
  out << "tolerance " << format_number(tolerance)
      << " (absolute for probabilities, relative for counts and times)\n";
  for (const auto& c : curves) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << ": max_abs=" << format_number(c.max_abs_deviation)
        << " max_rel=" << format_number(c.max_rel_deviation) << " worst at " << x_name << "="
        << format_number(c.worst_x) << " (analytic " << format_number(c.worst_analytic) << ", mc "
        << format_number(c.worst_mc) << ")";
    if (c.fraction_inside_ci) {
      out << " inside_ci=" << format_number(std::round(*c.fraction_inside_ci * 1000.0) / 10.0)
          << "%";
    }
    out << "\n";
  }
  out << (pass ? "overall PASS" : "overall FAIL") << "\n";
  return out.str();
}

}  // namespace mcdetect::harness
