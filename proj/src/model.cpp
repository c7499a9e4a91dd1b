#include "mcdetect/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mcdetect::model {

namespace {

std::string join(const std::vector<Violation>& violations) {
  std::ostringstream out;
  out << "invalid configuration:";
  for (const auto& v : violations) {
    out << "\n  " << v.field << ": " << v.constraint;
  }
  return out.str();
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }
bool finite_non_negative(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::invalid_argument(join(violations)), violations_(std::move(violations)) {}

double SystemConfig::max_radius() const {
  double a = 0.0;
  for (const auto& c : classes) {
    a = std::max(a, c.radius);
  }
  return a;
}

std::uint64_t SimConfig::steps() const {
  return static_cast<std::uint64_t>(std::llround(horizon / time_step));
}

std::vector<Violation> check(const SystemConfig& config) {
  std::vector<Violation> out;
  if (config.classes.empty()) {
    out.push_back({"classes", "at least one NM class is required"});
  }
  for (std::size_t i = 0; i < config.classes.size(); ++i) {
    const auto& c = config.classes[i];
    const std::string path = "classes[" + std::to_string(i) + "]";
    if (!finite_positive(c.radius)) {
      out.push_back({path + ".radius", "a_i > 0 violated"});
    }
    if (!finite_positive(c.diffusion)) {
      out.push_back({path + ".diffusion", "D_i > 0 violated"});
    }
    if (!finite_non_negative(c.density)) {
      out.push_back({path + ".density", "lambda_i >= 0 violated"});
    }
  }
  if (!finite_non_negative(config.exclusion_radius)) {
    out.push_back({"exclusion_radius", "r must be finite and non-negative"});
  } else if (!config.classes.empty() && config.exclusion_radius < config.max_radius()) {
    out.push_back({"exclusion_radius", "r >= max a_i violated"});
  }
  if (!finite_non_negative(config.target.diffusion)) {
    out.push_back({"target.diffusion", "D_t >= 0 violated"});
  }
  if (!finite_non_negative(config.target.degradation_rate)) {
    out.push_back({"target.degradation_rate", "mu >= 0 violated"});
  }
  if (config.marker) {
    if (!finite_positive(config.marker->emission_rate)) {
      out.push_back({"marker.emission_rate", "M > 0 violated"});
    }
    if (!finite_positive(config.marker->diffusion)) {
      out.push_back({"marker.diffusion", "D_m > 0 violated"});
    }
    if (!finite_positive(config.marker->threshold)) {
      out.push_back({"marker.threshold", "eta > 0 violated"});
    }
  }
  if (config.single_nm) {
    const auto& s = *config.single_nm;
    if (!finite_positive(s.radius)) {
      out.push_back({"single_nm.radius", "a > 0 violated"});
    }
    if (!finite_positive(s.diffusion)) {
      out.push_back({"single_nm.diffusion", "D > 0 violated"});
    }
    if (!std::isfinite(s.distance) || s.distance < s.radius) {
      out.push_back({"single_nm.distance", "d >= a violated"});
    }
  }
  return out;
}

std::vector<Violation> check(const SimConfig& sim, const SystemConfig& config) {
  std::vector<Violation> out;
  if (!finite_positive(sim.time_step)) {
    out.push_back({"simulation.time_step", "dt > 0 violated"});
  }
  if (!finite_positive(sim.horizon)) {
    out.push_back({"simulation.horizon", "horizon > 0 violated"});
  } else if (finite_positive(sim.time_step) && sim.time_step > sim.horizon) {
    out.push_back({"simulation.time_step", "dt <= horizon violated"});
  }
  if (!std::isfinite(sim.window_radius) || sim.window_radius <= config.exclusion_radius) {
    out.push_back({"simulation.window_radius", "R_max > r violated"});
  }
  if (sim.trials < 1) {
    out.push_back({"simulation.trials", "trials >= 1 violated"});
  }
  if (!std::is_sorted(sim.t_grid.begin(), sim.t_grid.end())) {
    out.push_back({"simulation.t_grid", "grid must be sorted"});
  }
  for (double t : sim.t_grid) {
    if (!(t >= 0.0 && t <= sim.horizon * (1.0 + 1e-12))) {
      out.push_back({"simulation.t_grid", "grid points must lie within [0, horizon]"});
      break;
    }
  }
  return out;
}

SystemConfig validate(const SystemConfig& config) {
  auto violations = check(config);
  if (!violations.empty()) {
    throw ValidationError(std::move(violations));
  }
  return config;
}

SimConfig validate(const SimConfig& sim, const SystemConfig& config) {
  auto violations = check(sim, config);
  if (!violations.empty()) {
    throw ValidationError(std::move(violations));
  }
  return sim;
}

std::vector<double> log_grid(double start, double stop, std::size_t points) {
  if (!(start > 0.0) || !(stop > start) || points < 2) {
    throw std::invalid_argument("log_grid: need 0 < start < stop and at least two points");
  }
  std::vector<double> grid(points);
  const double ls = std::log(start);
  const double step = (std::log(stop) - ls) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = std::exp(ls + step * static_cast<double>(i));
  }
  grid.front() = start;
  grid.back() = stop;
  return grid;
}

std::vector<double> linear_grid(double start, double stop, std::size_t points) {
  if (!(stop > start) || points < 2) {
    throw std::invalid_argument("linear_grid: need start < stop and at least two points");
  }
  std::vector<double> grid(points);
  const double step = (stop - start) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = start + step * static_cast<double>(i);
  }
  grid.back() = stop;
  return grid;
}

}  // namespace mcdetect::model
