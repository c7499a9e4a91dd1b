#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace mcdetect::numerics {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

/// Tolerances and limits for adaptive quadrature.
///
/// tail_truncation_threshold is used by callers that integrate against an
/// exponential weight: the range is cut where the weight falls below this
/// fraction of its peak.
struct QuadratureSpec {
  double relative_tolerance = 1e-10;
  double absolute_tolerance = 1e-14;
  int max_subdivisions = 1000;
  double tail_truncation_threshold = 1e-16;

  void validate() const;
};

/// Raised when adaptive quadrature cannot meet its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

/// Complementary error function. Throws std::domain_error for NaN/inf input.
double erfc(double x);

/// Scaled complementary error function exp(x^2) * erfc(x).
double erfcx(double x);

/// exp(y) * erfc(z) without intermediate overflow or underflow.
double exp_erfc(double y, double z);

/// Integrates f over [lower, upper]; upper may be +infinity.
double integrate(const std::function<double(double)>& f, double lower, double upper,
                 const QuadratureSpec& spec = {});

/// Reproducible random substream identified by (master_seed, stream_id).
///
/// Each trial owns one stream, so a trial's draws do not depend on which
/// thread runs it or in what order trials are scheduled.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  double uniform();  ///< in [0, 1)
  double normal();   ///< standard normal
  double exponential(double rate);
  std::uint64_t poisson(double mean);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mcdetect::numerics
