#pragma once

// Experiment presets, sweeps, CSV tables and analytic-vs-MC comparison.
//
// CSV layout: `# key: value` metadata lines, then a header whose first column
// is the x axis (normally `t`) followed by series named
// `<quantity>[@axis=value,...].<variant>` with variant analytic, mc or ci.

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcdetect/model.hpp"

namespace mcdetect::harness {

enum class QuantityKind { probability, count, time };

/// Known quantities: p_detect, p_detect_approx, p_single, mean_detectors,
/// p_sense_at, p_sense_within, mdt_stationary, mdt_mobile.
std::vector<std::string> quantity_names();
/// Quantities that also have a Monte Carlo estimator.
std::vector<std::string> simulated_quantity_names();
/// Kind of a quantity name; any `@...` suffix is ignored. Unknown names
/// starting with "p_" are probabilities, anything else a count.
QuantityKind quantity_kind(std::string_view name);

/// Sweep axes: lambda (all classes), mu, D_t, r, eta, radius_scale.
struct SweepAxis {
  std::string name;
  std::vector<double> values;

  bool operator==(const SweepAxis&) const = default;
};

struct ExperimentSpec {
  std::string id;
  std::string description;
  model::SystemConfig config;
  model::SimConfig sim;
  std::vector<std::string> curves;  ///< analytic series
  std::vector<std::string> mc;      ///< simulated series, a subset of curves
  std::vector<SweepAxis> sweep;     ///< Cartesian product, one column set per point
  /// Replaces t as the first column; only for detection-time quantities.
  std::optional<SweepAxis> x_axis;
  /// Choose the deployment window per run from the analytic tail estimate.
  bool auto_window = true;
  std::string notes;

  bool operator==(const ExperimentSpec&) const = default;
};

struct Column {
  std::string name;
  std::vector<double> values;
};

struct ResultTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::string x_name = "t";
  std::vector<double> x;
  std::vector<Column> columns;

  const Column* find(std::string_view name) const;
  std::optional<std::string> meta(std::string_view key) const;
};

struct RunSettings {
  unsigned threads = 0;
  bool record_wall_time = false;
};

std::vector<ExperimentSpec> figure_presets();
/// Throws std::invalid_argument for an unknown id.
ExperimentSpec preset(std::string_view id);

/// Throws model::ValidationError listing every problem.
void validate(const ExperimentSpec& spec);

/// Config for one sweep point given (axis, value) pairs.
model::SystemConfig apply_sweep(const model::SystemConfig& base,
                                const std::vector<std::pair<std::string, double>>& point);

/// Evaluates the analytic series, runs the simulations when sim.trials > 0
/// and returns the table. Deterministic for a fixed spec.
ResultTable run_experiment(const ExperimentSpec& spec, const RunSettings& settings = {});

void write_csv(const ResultTable& table, std::ostream& out);
ResultTable read_csv(std::istream& in);

/// Raised when a table cannot be compared (unpaired or unknown columns).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CurveReport {
  std::string name;  ///< column name without the variant
  QuantityKind kind = QuantityKind::probability;
  double max_abs_deviation = 0.0;
  double max_rel_deviation = 0.0;
  double worst_x = 0.0;
  double worst_analytic = 0.0;
  double worst_mc = 0.0;
  /// Fraction of points with |analytic - mc| <= ci; absent without a ci column.
  std::optional<double> fraction_inside_ci;
  bool pass = true;
};

struct Report {
  double tolerance = 0.0;
  std::vector<CurveReport> curves;
  bool pass = true;

  std::string text(std::string_view x_name = "t") const;
};

/// Probabilities are judged by absolute deviation, counts and times by
/// relative deviation, both against `tolerance`.
Report compare(const ResultTable& table, double tolerance);

/// Splits `base.variant` at the last dot.
std::pair<std::string, std::string> split_column(std::string_view name);

}  // namespace mcdetect::harness
