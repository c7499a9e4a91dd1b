#pragma once

// Scenario description shared by the analytic engine and the simulator.
//
// Units are fixed throughout the library: micrometres, seconds, um^2/s for
// diffusion coefficients, NMs/um^3 for densities and 1/s for rates.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcdetect::model {

/// One nanomachine type.
struct NmClass {
  double radius = 0.0;     ///< a_i [um]
  double diffusion = 0.0;  ///< D_i [um^2/s]
  double density = 0.0;    ///< lambda_i [NMs/um^3]

  bool operator==(const NmClass&) const = default;
};

/// Target behaviour. Zero diffusion means stationary, zero rate means the
/// target never degrades.
struct TargetSpec {
  double diffusion = 0.0;         ///< D_t [um^2/s]
  double degradation_rate = 0.0;  ///< mu [1/s]

  bool mobile() const noexcept { return diffusion > 0.0; }
  bool degradable() const noexcept { return degradation_rate > 0.0; }
  bool operator==(const TargetSpec&) const = default;
};

/// Marker emission for indirect sensing.
struct MarkerSpec {
  double emission_rate = 0.0;  ///< M [molecules/s]
  double diffusion = 0.0;      ///< D_m [um^2/s]
  double threshold = 0.0;      ///< eta [molecules/um^3]

  bool operator==(const MarkerSpec&) const = default;
};

/// A lone nanomachine at a fixed initial distance, used as a reference curve.
struct SingleNmSpec {
  double radius = 0.0;
  double diffusion = 0.0;
  double distance = 0.0;

  bool operator==(const SingleNmSpec&) const = default;
};

struct SystemConfig {
  std::vector<NmClass> classes;
  double exclusion_radius = 0.0;  ///< r [um]
  TargetSpec target;
  std::optional<MarkerSpec> marker;
  std::optional<SingleNmSpec> single_nm;

  double max_radius() const;
  bool operator==(const SystemConfig&) const = default;
};

/// Monte Carlo controls.
struct SimConfig {
  double time_step = 1e-4;        ///< [s]
  double horizon = 100.0;         ///< [s]
  double window_radius = 150.0;   ///< outer deployment radius [um]
  std::uint64_t trials = 10000;
  std::uint64_t master_seed = 42;
  std::vector<double> t_grid;     ///< sorted, within [0, horizon]
  /// Test the Brownian bridge between consecutive positions for a boundary
  /// crossing, in addition to the end-of-step overlap check.
  bool bridge_correction = true;

  std::uint64_t steps() const;
  bool operator==(const SimConfig&) const = default;
};

struct Violation {
  std::string field;
  std::string constraint;
};

/// Carries every violated constraint, not just the first.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

std::vector<Violation> check(const SystemConfig& config);
std::vector<Violation> check(const SimConfig& sim, const SystemConfig& config);

/// Returns the config unchanged or throws ValidationError.
SystemConfig validate(const SystemConfig& config);
SimConfig validate(const SimConfig& sim, const SystemConfig& config);

std::vector<double> log_grid(double start, double stop, std::size_t points);
std::vector<double> linear_grid(double start, double stop, std::size_t points);

}  // namespace mcdetect::model
