#include "mcdetect/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mcdetect::analytic {

using numerics::exp_erfc;
using numerics::kPi;

namespace {

void require(bool ok, const char* what) {
  if (!ok) {
    throw std::domain_error(what);
  }
}

double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

void require_time(double t, bool allow_infinity, const char* fn) {
  if (std::isnan(t) || t < 0.0) {
    throw std::domain_error(std::string(fn) + ": t must be >= 0");
  }
  if (std::isinf(t) && !allow_infinity) {
    throw std::domain_error(std::string(fn) + ": t = infinity is not accepted here");
  }
}

double class_diffusion(const NmClass& cls, std::optional<double> override_value) {
  const double d = override_value.value_or(cls.diffusion);
  require(d > 0.0 && std::isfinite(d), "diffusion coefficient must be positive");
  return d;
}

void require_geometry(const NmClass& cls, double exclusion_radius) {
  require(cls.radius > 0.0, "NM radius must be positive");
  require(cls.density >= 0.0, "NM density must be non-negative");
  if (exclusion_radius < cls.radius) {
    throw std::domain_error("exclusion radius r must be >= NM radius a_i");
  }
}

double survival_no_deg(double t, const SystemConfig& config) {
  return std::exp(-mean_detectors(t, config));
}

}  // namespace

double p_single(double t, double radius, double diffusion, double distance,
                double degradation_rate) {
  require_time(t, true, "p_single");
  require(radius > 0.0 && diffusion > 0.0, "p_single: radius and diffusion must be positive");
  require(degradation_rate >= 0.0, "p_single: degradation rate must be >= 0");
  if (!(distance >= radius)) {
    throw std::domain_error("p_single: NM initially overlaps the target (d < a)");
  }
  const double gap = distance - radius;
  const double ratio = radius / distance;
  if (gap == 0.0) {
    return 1.0;
  }
  if (t == 0.0) {
    return 0.0;
  }
  if (degradation_rate == 0.0) {
    if (std::isinf(t)) {
      return ratio;
    }
    return clamp_probability(ratio * std::erfc(gap / std::sqrt(4.0 * diffusion * t)));
  }
  const double y = std::sqrt(degradation_rate / diffusion) * gap;
  if (std::isinf(t)) {
    return clamp_probability(ratio * std::exp(-y));
  }
  const double x = gap / std::sqrt(4.0 * diffusion * t);
  const double s = std::sqrt(degradation_rate * t);
  const double value = 0.5 * ratio * (std::exp(-y) * std::erfc(x - s) + exp_erfc(y, x + s));
  return clamp_probability(value);
}

double displaced_density(double rho, double t, const NmClass& cls, double exclusion_radius) {
  require(rho >= 0.0 && std::isfinite(rho), "displaced_density: rho must be finite and >= 0");
  require_time(t, true, "displaced_density");
  require(exclusion_radius >= 0.0, "displaced_density: r must be >= 0");
  const double lambda = cls.density;
  const double r = exclusion_radius;
  if (r == 0.0 || std::isinf(t)) {
    return lambda;
  }
  if (t == 0.0) {
    return rho >= r ? lambda : 0.0;
  }
  const double dt = class_diffusion(cls, std::nullopt) * t;
  const double q = std::sqrt(4.0 * dt);
  if (rho == 0.0) {
    return lambda * (std::erfc(r / q) + r / std::sqrt(kPi * dt) * std::exp(-r * r / (q * q)));
  }
  // 1 - P(|y + Z| <= r) for Z ~ N(0, 2Dt I), |y| = rho.
  const double tails = 0.5 * (std::erfc((r - rho) / q) + std::erfc((r + rho) / q));
  const double near = (r - rho) / q;
  const double shell = std::sqrt(dt / kPi) * std::exp(-near * near) *
                       (-std::expm1(-4.0 * r * rho / (q * q))) / rho;
  return std::clamp(lambda * (tails + shell), 0.0, lambda);
}

double kappa(double t, const NmClass& cls, double exclusion_radius,
             std::optional<double> diffusion_override) {
  require_time(t, false, "kappa");
  require_geometry(cls, exclusion_radius);
  const double diffusion = class_diffusion(cls, diffusion_override);
  if (t == 0.0 || cls.density == 0.0) {
    return 0.0;
  }
  const double a = cls.radius;
  const double r = exclusion_radius;
  const double lambda = cls.density;
  const double dt = diffusion * t;
  const double x = (r - a) / std::sqrt(4.0 * dt);
  const double bulk = 2.0 * kPi * a * lambda * (a * a - r * r + 2.0 * dt) * std::erfc(x);
  const double front = 4.0 * lambda * std::sqrt(kPi * dt) * a * (r + a) * std::exp(-x * x);
  return std::max(0.0, bulk + front);
}

double zeta(double t, const NmClass& cls, double exclusion_radius, double degradation_rate,
            std::optional<double> diffusion_override) {
  if (!(degradation_rate > 0.0)) {
    throw std::domain_error("zeta: requires mu > 0; use kappa for a non-degradable target");
  }
  require_time(t, true, "zeta");
  require_geometry(cls, exclusion_radius);
  const double diffusion = class_diffusion(cls, diffusion_override);
  if (t == 0.0 || cls.density == 0.0) {
    return 0.0;
  }
  const double a = cls.radius;
  const double r = exclusion_radius;
  const double lambda = cls.density;
  const double mu = degradation_rate;
  const double ratio = diffusion / mu;
  const double length = std::sqrt(ratio);  // sqrt(D/mu)
  const double y = (r - a) / length;
  if (std::isinf(t)) {
    return 4.0 * kPi * lambda * a * (ratio + r * length) * std::exp(-y);
  }
  const double x = (r - a) / std::sqrt(4.0 * diffusion * t);
  const double s = std::sqrt(mu * t);
  const double approach = 2.0 * kPi * lambda * a * (ratio + r * length) * std::exp(-y) *
                          std::erfc(x - s);
  const double recede = 2.0 * kPi * lambda * a * (ratio - r * length) * exp_erfc(y, x + s);
  const double survivor = -4.0 * kPi * a * lambda * ratio * std::exp(-mu * t) * std::erfc(x);
  return std::max(0.0, approach + recede + survivor);
}

double rho_given_td(double t, double degradation_time, const NmClass& cls,
                    double exclusion_radius, std::optional<double> diffusion_override) {
  require_time(t, false, "rho_given_td");
  require(!std::isnan(degradation_time) && degradation_time >= 0.0,
          "rho_given_td: t_d must be >= 0");
  const double horizon = degradation_time <= t ? degradation_time : t;
  return kappa(horizon, cls, exclusion_radius, diffusion_override);
}

double effective_diffusion(const NmClass& cls, const SystemConfig& config) {
  return cls.diffusion + config.target.diffusion;
}

double mean_detectors(double t, const SystemConfig& config) {
  double total = 0.0;
  for (const auto& cls : config.classes) {
    total += kappa(t, cls, config.exclusion_radius, effective_diffusion(cls, config));
  }
  return total;
}

double mean_detectors_deg(double t, const SystemConfig& config) {
  double total = 0.0;
  for (const auto& cls : config.classes) {
    total += zeta(t, cls, config.exclusion_radius, config.target.degradation_rate,
                  effective_diffusion(cls, config));
  }
  return total;
}

double p_detect(double t, const SystemConfig& config) {
  if (config.target.degradable()) {
    throw std::domain_error(
        "p_detect: target is degradable; use p_detect_deg_exact or p_detect_deg_approx");
  }
  return clamp_probability(-std::expm1(-mean_detectors(t, config)));
}

double p_detect_deg_exact(double t, const SystemConfig& config, const QuadratureSpec& spec) {
  const double mu = config.target.degradation_rate;
  if (!(mu > 0.0)) {
    throw std::domain_error("p_detect_deg_exact: requires mu > 0; use p_detect");
  }
  require_time(t, false, "p_detect_deg_exact");
  if (t == 0.0) {
    return 0.0;
  }
  // Degradation before t: density mu e^{-mu tau}, cut where the weight is
  // negligible. Survival past t: atom of mass e^{-mu t}.
  const double cutoff = std::min(t, -std::log(spec.tail_truncation_threshold) / mu);
  const double degraded = numerics::integrate(
      [&](double tau) { return mu * std::exp(-mu * tau) * survival_no_deg(tau, config); }, 0.0,
      cutoff, spec);
  const double intact = std::exp(-mu * t) * survival_no_deg(t, config);
  return clamp_probability(1.0 - degraded - intact);
}

double p_detect_deg_approx(double t, const SystemConfig& config) {
  return clamp_probability(-std::expm1(-mean_detectors_deg(t, config)));
}

double p_detect_equal_radius(double t, double radius, double diffusion, double density,
                             int classes) {
  require_time(t, false, "p_detect_equal_radius");
  const double n = classes;
  const double exponent = n * (4.0 * kPi * radius * diffusion * t * density +
                               8.0 * radius * radius * density * std::sqrt(kPi * diffusion * t));
  return clamp_probability(-std::expm1(-exponent));
}

double p_detect_deg_equal_radius(double t, double radius, double diffusion, double density,
                                 double degradation_rate, int classes) {
  require(degradation_rate > 0.0, "p_detect_deg_equal_radius: requires mu > 0");
  require_time(t, true, "p_detect_deg_equal_radius");
  const double n = classes;
  const double length = std::sqrt(diffusion / degradation_rate);
  const double decay = std::isinf(t) ? 1.0 : -std::expm1(-degradation_rate * t);
  const double spread = std::isinf(t) ? 1.0 : std::erf(std::sqrt(degradation_rate * t));
  const double exponent =
      n * 4.0 * kPi * radius * length * density * (length * decay + radius * spread);
  return clamp_probability(-std::expm1(-exponent));
}

double mean_detection_time(const SystemConfig& config, TargetMotion motion,
                           const QuadratureSpec& spec) {
  if (config.target.degradable()) {
    return kInfinity;
  }
  const bool any_nm = std::any_of(config.classes.begin(), config.classes.end(),
                                  [](const NmClass& c) { return c.density > 0.0; });
  if (!any_nm) {
    return kInfinity;
  }
  SystemConfig view = config;
  if (motion == TargetMotion::stationary) {
    view.target.diffusion = 0.0;
  }
  const double threshold = spec.tail_truncation_threshold;
  double cutoff = 1.0;
  for (int i = 0; i < 200 && survival_no_deg(cutoff, view) > threshold; ++i) {
    cutoff *= 2.0;
  }
  return numerics::integrate([&](double t) { return survival_no_deg(t, view); }, 0.0, cutoff,
                             spec);
}

double marker_concentration(double distance, double t, const MarkerSpec& marker) {
  if (!(distance > 0.0)) {
    throw std::domain_error("marker_concentration: distance must be > 0 (source singularity)");
  }
  require_time(t, true, "marker_concentration");
  const double steady = marker.emission_rate / (4.0 * kPi * marker.diffusion * distance);
  if (std::isinf(t)) {
    return steady;
  }
  if (t == 0.0) {
    return 0.0;
  }
  return steady * std::erfc(distance / std::sqrt(4.0 * marker.diffusion * t));
}

double impulse_concentration(double distance, double elapsed, double molecules,
                             double marker_diffusion) {
  require(distance >= 0.0, "impulse_concentration: distance must be >= 0");
  require(elapsed >= 0.0 && std::isfinite(elapsed), "impulse_concentration: elapsed must be >= 0");
  require(marker_diffusion > 0.0, "impulse_concentration: diffusion must be > 0");
  if (elapsed == 0.0) {
    return 0.0;
  }
  const double spread = 4.0 * kPi * marker_diffusion * elapsed;
  return molecules / (spread * std::sqrt(spread)) *
         std::exp(-distance * distance / (4.0 * marker_diffusion * elapsed));
}

double sensing_radius(const MarkerSpec& marker) {
  require(marker.diffusion > 0.0 && marker.threshold > 0.0,
          "sensing_radius: D_m and eta must be positive");
  require(marker.emission_rate >= 0.0, "sensing_radius: M must be >= 0");
  return marker.emission_rate / (4.0 * kPi * marker.diffusion * marker.threshold);
}

double p_sense_at(double t, const SystemConfig& config, double sensing_margin,
                  const QuadratureSpec& spec) {
  require_time(t, true, "p_sense_at");
  require(sensing_margin >= 0.0, "p_sense_at: sensing margin must be >= 0");
  double mean = 0.0;
  for (const auto& cls : config.classes) {
    const double reach = cls.radius + sensing_margin;
    const double ball = 4.0 / 3.0 * kPi;
    if (std::isinf(t)) {
      mean += cls.density * ball * reach * reach * reach;
    } else if (t == 0.0) {
      const double r = config.exclusion_radius;
      mean += cls.density * ball * std::max(0.0, reach * reach * reach - r * r * r);
    } else {
      mean += 4.0 * kPi *
              numerics::integrate(
                  [&](double rho) {
                    return rho * rho * displaced_density(rho, t, cls, config.exclusion_radius);
                  },
                  0.0, reach, spec);
    }
  }
  return clamp_probability(-std::expm1(-mean));
}

SystemConfig inflate_radii(const SystemConfig& config, double margin) {
  SystemConfig out = config;
  for (auto& cls : out.classes) {
    cls.radius += margin;
  }
  return out;
}

double p_sense_within(double t, const SystemConfig& config, double sensing_margin) {
  require(sensing_margin >= 0.0, "p_sense_within: sensing margin must be >= 0");
  for (const auto& cls : config.classes) {
    if (config.exclusion_radius < cls.radius + sensing_margin) {
      throw std::domain_error(
          "p_sense_within: closed form requires r >= a_i + d_m (NMs would start inside the "
          "sensing ball)");
    }
  }
  SystemConfig inflated = inflate_radii(config, sensing_margin);
  inflated.target = {};
  return p_detect(t, inflated);
}

DetectionCurve detection_curve(const std::vector<double>& t_grid,
                               const std::function<double(double)>& p) {
  DetectionCurve curve{t_grid, {}};
  curve.values.reserve(t_grid.size());
  for (double t : t_grid) {
    curve.values.push_back(p(t));
  }
  return curve;
}

DetectorCountCurve count_curve(const std::vector<double>& t_grid,
                               const std::function<double(double)>& count) {
  DetectorCountCurve curve{t_grid, {}};
  curve.values.reserve(t_grid.size());
  for (double t : t_grid) {
    curve.values.push_back(count(t));
  }
  return curve;
}

}  // namespace mcdetect::analytic
