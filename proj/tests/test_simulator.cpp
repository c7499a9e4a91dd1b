#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "mcdetect/analytic.hpp"
#include "mcdetect/simulator.hpp"

using namespace mcdetect;
using namespace mcdetect::simulator;

namespace {

const double kPi = std::acos(-1.0);

SystemConfig one_class(double r = 30.0, double lambda = 1e-5) {
  SystemConfig c;
  c.classes = {{3.0, 100.0, lambda}};
  c.exclusion_radius = r;
  return c;
}

SimConfig short_run(double horizon, std::uint64_t trials, std::size_t points = 12) {
  SimConfig s;
  s.horizon = horizon;
  s.trials = trials;
  s.t_grid = model::log_grid(horizon / 20.0, horizon, points);
  return s;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("deployment is a uniform Poisson process on the shell") {
  const auto c = one_class();
  SimConfig sim;
  const double r0 = 30.0;
  const double R = sim.window_radius;
  const double expected = 1e-5 * 4.0 / 3.0 * kPi * (R * R * R - r0 * r0 * r0);
  std::vector<double> radii;
  double count = 0.0;
  double z_mean = 0.0;
  double z2_mean = 0.0;
  const int deployments = 1000;
  for (int i = 0; i < deployments; ++i) {
    RngStream rng(11, i);
    const auto d = sample_deployment(c, sim, rng);
    REQUIRE(d.positions.size() == 1);
    count += static_cast<double>(d.positions[0].size());
    for (const auto& x : d.positions[0]) {
      const double rho = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
      radii.push_back(rho);
      z_mean += x[2] / rho;
      z2_mean += x[2] * x[2] / (rho * rho);
    }
  }
  CHECK(expected == doctest::Approx(140.2).epsilon(1e-3));
  CHECK(std::abs(count / deployments - expected) < 4.0 * std::sqrt(expected / deployments));
  const double n = static_cast<double>(radii.size());
  CHECK(std::abs(z_mean / n) < 0.01);
  CHECK(std::abs(z2_mean / n - 1.0 / 3.0) < 0.01);

  std::sort(radii.begin(), radii.end());
  CHECK(radii.front() >= r0);
  CHECK(radii.back() <= R);
  double ks = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double cdf = (std::pow(radii[i], 3) - r0 * r0 * r0) / (R * R * R - r0 * r0 * r0);
    ks = std::max({ks, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  CHECK(ks < 0.01);
}

TEST_CASE("trials are reproducible and independent") {
  auto c = one_class();
  c.target = {50.0, 0.05};
  const auto sim = short_run(5.0, 1);
  const auto a = run_trial(c, sim, 7);
  const auto b = run_trial(c, sim, 7);
  CHECK(a.hit_times == b.hit_times);
  CHECK(a.detectors_by_time == b.detectors_by_time);
  CHECK(a.degradation_time == b.degradation_time);
  const auto other = run_trial(c, sim, 8);
  CHECK(other.degradation_time != a.degradation_time);
}

TEST_CASE("instant degradation prevents detection") {
  auto c = one_class();
  c.target.degradation_rate = 1e6;
  const auto est = estimate_curves(c, short_run(2.0, 200));
  for (double p : est.p_hat) {
    CHECK(p == 0.0);
  }
  CHECK(est.undetected == 200);
}

TEST_CASE("an empty deployment never detects") {
  const auto est = estimate_curves(one_class(30.0, 0.0), short_run(2.0, 100));
  CHECK(est.undetected == 100);
  CHECK(std::isinf(est.detection_time_mean));
  CHECK(*std::max_element(est.p_hat.begin(), est.p_hat.end()) == 0.0);
}

TEST_CASE("sensing within a zero margin is detection of a fixed target") {
  const auto c = one_class(10.0, 2e-5);
  const auto sim = short_run(3.0, 1);
  for (std::uint64_t i = 0; i < 20; ++i) {
    RunOptions sense;
    sense.mode = Mode::sense_within;
    const auto a = run_trial(c, sim, i);
    const auto b = run_trial(c, sim, i, sense);
    CHECK(a.hit_times == b.hit_times);
    CHECK(a.detectors_by_time == b.detectors_by_time);
  }
}

TEST_CASE("results do not depend on the thread count") {
  auto c = one_class(10.0, 2e-5);
  c.target = {100.0, 0.1};
  const auto sim = short_run(3.0, 120);
  RunOptions one;
  one.threads = 1;
  RunOptions four;
  four.threads = 4;
  const auto a = estimate_curves(c, sim, one);
  const auto b = estimate_curves(c, sim, four);
  CHECK(a.p_hat == b.p_hat);
  CHECK(a.mean_detectors == b.mean_detectors);
  CHECK(a.detection_time_mean == b.detection_time_mean);
}

TEST_CASE("detection probability matches the closed form") {
  const auto c = one_class(10.0, 2e-5);
  auto sim = short_run(5.0, 2000, 10);
  sim.window_radius = auto_window_radius(c, sim.horizon);
  const auto est = estimate_curves(c, sim);
  double prev = 0.0;
  for (std::size_t j = 0; j < sim.t_grid.size(); ++j) {
    const double p = analytic::p_detect(sim.t_grid[j], c);
    const double se = std::sqrt(p * (1.0 - p) / 2000.0);
    CHECK_MESSAGE(std::abs(est.p_hat[j] - p) <= 4.0 * se + 0.005, "t=" << sim.t_grid[j]);
    CHECK(est.p_hat[j] >= prev);
    prev = est.p_hat[j];
  }
}

TEST_CASE("mean detector count of a mobile target uses relative diffusion") {
  auto c = one_class(10.0, 2e-5);
  c.target.diffusion = 100.0;
  auto sim = short_run(4.0, 1000, 6);
  sim.window_radius = auto_window_radius(c, sim.horizon);
  const auto est = estimate_curves(c, sim);
  for (std::size_t j = 0; j < sim.t_grid.size(); ++j) {
    const double k = analytic::mean_detectors(sim.t_grid[j], c);
    CHECK_MESSAGE(std::abs(est.mean_detectors[j] - k) <= est.mean_detectors_ci[j] * 4.0 / 1.96 + 0.01 * k,
                  "t=" << sim.t_grid[j]);
  }
}

TEST_CASE("doubling the automatic window leaves the estimate unchanged") {
  const auto c = one_class(10.0, 2e-5);
  auto sim = short_run(5.0, 1500, 4);
  sim.window_radius = auto_window_radius(c, sim.horizon);
  const auto base = estimate_curves(c, sim);
  sim.window_radius *= 2.0;
  const auto wide = estimate_curves(c, sim);
  for (std::size_t j = 0; j < sim.t_grid.size(); ++j) {
    const double se = std::sqrt((base.ci_half_width[j] * base.ci_half_width[j] +
                                 wide.ci_half_width[j] * wide.ci_half_width[j])) / 1.96;
    CHECK(std::abs(base.p_hat[j] - wide.p_hat[j]) <= 4.0 * se);
  }
}

TEST_CASE("presence in the sensing ball matches the closed form") {
  const auto c = one_class(30.0, 1e-5);
  SimConfig sim;
  sim.horizon = 5.0;
  sim.trials = 4000;
  sim.t_grid = {0.0, 1.0, 5.0};
  const auto est = simulate_sensing(c, sim, 10.0, Mode::sense_at, 0);
  CHECK(est.p_hat[0] == 0.0);
  for (std::size_t j = 1; j < 3; ++j) {
    const double p = analytic::p_sense_at(sim.t_grid[j], c, 10.0);
    CHECK(std::abs(est.p_hat[j] - p) <= 4.0 * std::sqrt(p * (1.0 - p) / 4000.0));
  }
}

TEST_CASE("invalid runs are rejected") {
  const auto c = one_class();
  CHECK_THROWS_AS(estimate_curves(c, short_run(1.0, 99)), std::invalid_argument);
  CHECK_THROWS_AS(simulate_sensing(c, short_run(1.0, 100), 1.0, Mode::detect), std::invalid_argument);
  RunOptions bad;
  bad.sensing_margin = -1.0;
  CHECK_THROWS_AS(run_trial(c, short_run(1.0, 1), 0, bad), std::invalid_argument);
  auto sim = short_run(1.0, 1);
  sim.window_radius = 20.0;
  CHECK_THROWS_AS(run_trial(c, sim, 0), model::ValidationError);
}

TEST_CASE("automatic window") {
  const auto c = one_class();
  const double w10 = auto_window_radius(c, 10.0);
  const double w100 = auto_window_radius(c, 100.0);
  CHECK(w10 >= 150.0);
  CHECK(std::fmod(w100, 10.0) == 0.0);
  CHECK(w100 >= w10);
  CHECK(auto_window_radius(c, 100.0, 0.0, 1e-2) <= w100);
  CHECK(auto_window_radius(one_class(200.0), 1.0) >= 210.0);
}

TEST_CASE("detection time plan") {
  auto c = one_class(30.0, 1e-5);
  const auto plan = plan_detection_time(c, false);
  CHECK(std::exp(-analytic::mean_detectors(plan.horizon, c)) <= 1e-6);
  CHECK(plan.window_radius > c.exclusion_radius);
  c.target.diffusion = 100.0;
  CHECK(plan_detection_time(c, true).horizon < plan.horizon);
  c.target.degradation_rate = 0.1;
  CHECK_THROWS_AS(plan_detection_time(c, false), std::domain_error);
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_threads(3) == 3);
  ::setenv("MCDETECT_THREADS", "2", 1);
  CHECK(resolve_threads(0) == 2);
  ::setenv("MCDETECT_THREADS", "nonsense", 1);
  CHECK(resolve_threads(0) >= 1);
  ::unsetenv("MCDETECT_THREADS");
}

}
