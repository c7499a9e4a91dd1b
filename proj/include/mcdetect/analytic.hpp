#pragma once

// Closed-form and semi-analytic detection quantities for a target at the
// origin surrounded by Brownian nanomachines deployed as a Poisson point
// process outside a ball of radius r.
//
// Conventions:
//  * t = +infinity is accepted only where a finite limit exists (p_single,
//    displaced_density, zeta, p_detect_deg_approx, p_detect_deg_equal_radius,
//    marker_concentration, p_sense_at); other functions reject it with
//    std::domain_error.
//  * A mobile target (D_t > 0) is handled by the change of reference
//    D_eff,i = D_t + D_i. This is exact for mean counts and approximate for
//    probabilities (the shared target path thins the NM process dependently).
//  * mu = 0 is never plugged into the D/mu terms of the degradable formulas;
//    those entry points require mu > 0.

#include <functional>
#include <optional>
#include <vector>

#include "mcdetect/model.hpp"
#include "mcdetect/numerics.hpp"

namespace mcdetect::analytic {

using model::MarkerSpec;
using model::NmClass;
using model::SystemConfig;
using numerics::QuadratureSpec;

inline constexpr double kInfinity = numerics::kInfinity;

/// Cumulative probability curve, values in [0, 1].
struct DetectionCurve {
  std::vector<double> t_grid;
  std::vector<double> values;
};

/// Expected number of detecting NMs, values >= 0.
struct DetectorCountCurve {
  std::vector<double> t_grid;
  std::vector<double> values;
};

/// Probability that one NM of radius `radius` starting `distance` away hits
/// the target within t; `degradation_rate` > 0 discounts hits after the
/// target degrades. Pass D_t + D_1 as `diffusion` for a mobile target.
double p_single(double t, double radius, double diffusion, double distance,
                double degradation_rate);

/// Intensity of the displaced NM process at distance rho from the origin at
/// time t: lambda times the Gaussian mass that lies outside the excluded ball.
double displaced_density(double rho, double t, const NmClass& cls, double exclusion_radius);

/// Mean number of class NMs that touch the target within t.
double kappa(double t, const NmClass& cls, double exclusion_radius,
             std::optional<double> diffusion_override = std::nullopt);

/// Mean number of class NMs that touch the target within t and before it
/// degrades. Requires mu > 0; t may be +infinity.
double zeta(double t, const NmClass& cls, double exclusion_radius, double degradation_rate,
            std::optional<double> diffusion_override = std::nullopt);

/// Detector count conditioned on the degradation time t_d.
double rho_given_td(double t, double degradation_time, const NmClass& cls,
                    double exclusion_radius,
                    std::optional<double> diffusion_override = std::nullopt);

/// Effective diffusion coefficient of class `cls` relative to the target.
double effective_diffusion(const NmClass& cls, const SystemConfig& config);

/// Sum over classes of kappa with effective diffusion.
double mean_detectors(double t, const SystemConfig& config);

/// Sum over classes of zeta with effective diffusion (mu > 0).
double mean_detectors_deg(double t, const SystemConfig& config);

/// Probability that any NM detects a non-degradable target within t.
double p_detect(double t, const SystemConfig& config);

/// Degradable target, exact expectation over the degradation time.
double p_detect_deg_exact(double t, const SystemConfig& config, const QuadratureSpec& spec = {});

/// Degradable target, first-cumulant approximation; t may be +infinity.
double p_detect_deg_approx(double t, const SystemConfig& config);

/// Equal-radius reference forms (r = a for every class, n identical classes).
double p_detect_equal_radius(double t, double radius, double diffusion, double density,
                             int classes = 1);
double p_detect_deg_equal_radius(double t, double radius, double diffusion, double density,
                                 double degradation_rate, int classes = 1);

enum class TargetMotion { stationary, mobile };

/// Integral of the survival function 1 - p(t). Returns +infinity whenever
/// detection can fail with positive probability (mu > 0 or no NMs).
double mean_detection_time(const SystemConfig& config, TargetMotion motion,
                           const QuadratureSpec& spec = {});

/// Marker concentration for continuous emission at rate M started at t = 0.
double marker_concentration(double distance, double t, const MarkerSpec& marker);

/// Concentration after an impulsive release of `molecules` `elapsed` seconds ago.
double impulse_concentration(double distance, double elapsed, double molecules,
                             double marker_diffusion);

/// Distance within which the steady-state concentration exceeds eta.
double sensing_radius(const MarkerSpec& marker);

/// Probability that some NM sits inside the sensing ball at time t.
/// Not monotone in t.
double p_sense_at(double t, const SystemConfig& config, double sensing_margin,
                  const QuadratureSpec& spec = {});

/// Probability that some NM has entered the sensing ball within t. Requires
/// r >= a_i + margin for every class. Always evaluated for a stationary,
/// non-degrading target.
double p_sense_within(double t, const SystemConfig& config, double sensing_margin);

/// Config with every radius inflated by `margin` (sensing/detection duality).
SystemConfig inflate_radii(const SystemConfig& config, double margin);

DetectionCurve detection_curve(const std::vector<double>& t_grid,
                               const std::function<double(double)>& p);
DetectorCountCurve count_curve(const std::vector<double>& t_grid,
                               const std::function<double(double)>& count);

}  // namespace mcdetect::analytic
