#include "mcdetect/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include "mcdetect/analytic.hpp"

namespace mcdetect::simulator {

using numerics::kInfinity;
using numerics::kPi;

namespace {

// A block of k steps is taken in one jump only if the gap exceeds
// kReach standard deviations of the relative displacement over the block.
constexpr double kReach = 7.0;
constexpr double kReach2 = kReach * kReach;
// Bridge crossing probabilities below exp(-kBridgeCut) are treated as zero.
constexpr double kBridgeCut = 40.0;
constexpr std::uint64_t kTargetStream = std::uint64_t{1} << 63;

double distance(const Vec3& x, const Vec3& y) {
  const double dx = x[0] - y[0];
  const double dy = x[1] - y[1];
  const double dz = x[2] - y[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double norm(const Vec3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

void jitter(Vec3& x, double sd, RngStream& rng) {
  x[0] += sd * rng.normal();
  x[1] += sd * rng.normal();
  x[2] += sd * rng.normal();
}

// Target trajectory on the step lattice, sampled lazily by dyadic Brownian
// bridge refinement; only the instants actually visited are drawn.
class TargetPath {
 public:
  void reset(double diffusion, double dt, std::uint64_t steps, RngStream* rng) {
    diffusion_ = diffusion;
    dt_ = dt;
    rng_ = rng;
    if (diffusion_ <= 0.0) {
      return;
    }
    top_ = std::bit_ceil(std::max<std::uint64_t>(steps, 1));
    if (pos_.size() < top_ + 1) {
      pos_.assign(top_ + 1, Vec3{});
      stamp_.assign(top_ + 1, 0);
      generation_ = 0;
    }
    if (++generation_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      generation_ = 1;
    }
    pos_[0] = Vec3{};
    stamp_[0] = generation_;
    Vec3 end{};
    jitter(end, std::sqrt(2.0 * diffusion_ * static_cast<double>(top_) * dt_), *rng_);
    pos_[top_] = end;
    stamp_[top_] = generation_;
  }

  const Vec3& at(std::uint64_t n) {
    if (diffusion_ <= 0.0) {
      return origin_;
    }
    if (stamp_[n] == generation_) {
      return pos_[n];
    }
    const std::uint64_t half = std::uint64_t{1} << std::countr_zero(n);
    const Vec3 left = at(n - half);
    const Vec3 right = at(n + half);
    Vec3 mid{0.5 * (left[0] + right[0]), 0.5 * (left[1] + right[1]), 0.5 * (left[2] + right[2])};
    jitter(mid, std::sqrt(diffusion_ * static_cast<double>(half) * dt_), *rng_);
    pos_[n] = mid;
    stamp_[n] = generation_;
    return pos_[n];
  }

 private:
  double diffusion_ = 0.0;
  double dt_ = 0.0;
  std::uint64_t top_ = 0;
  RngStream* rng_ = nullptr;
  std::vector<Vec3> pos_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t generation_ = 0;
  Vec3 origin_{};
};

struct Walker {
  double contact;    // hit when the centre distance is <= contact
  double diffusion;  // NM diffusion
  double relative;   // diffusion of NM relative to target
};

// Returns the step index of the first hit, 0 for an initial overlap.
std::optional<std::uint64_t> walk(Vec3 x, const Walker& w, std::uint64_t limit, double dt,
                                  bool bridge, TargetPath& target, RngStream& rng) {
  double gap = distance(x, target.at(0)) - w.contact;
  if (gap <= 0.0) {
    return 0;
  }
  const double block_scale = 1.0 / (kReach2 * 2.0 * w.relative * dt);
  std::uint64_t n = 0;
  while (n < limit) {
    const double room = static_cast<double>(limit - n);
    const double fit = std::min(gap * gap * block_scale, room);
    const std::uint64_t k = fit >= 2.0 ? static_cast<std::uint64_t>(fit) : 1;
    const double span = static_cast<double>(k) * dt;
    jitter(x, std::sqrt(2.0 * w.diffusion * span), rng);
    n += k;
    const double next = distance(x, target.at(n)) - w.contact;
    if (next <= 0.0) {
      return n;
    }
    if (bridge) {
      const double exponent = gap * next / (w.relative * span);
      if (exponent < kBridgeCut && rng.uniform() < std::exp(-exponent)) {
        return n;
      }
    }
    gap = next;
  }
  return std::nullopt;
}

struct Workspace {
  TargetPath target;
};

TrialOutcome simulate_trial(const SystemConfig& config, const SimConfig& sim,
                            std::uint64_t trial_index, const RunOptions& options, Workspace& ws) {
  RngStream rng(sim.master_seed, trial_index);
  const double u = rng.uniform();
  const bool sensing = options.mode != Mode::detect;
  const double mu = config.target.degradation_rate;

  TrialOutcome out;
  out.degradation_time = (!sensing && mu > 0.0) ? -std::log1p(-u) / mu : kInfinity;
  out.detectors_by_time.assign(sim.t_grid.size(), 0);

  const Deployment deployment = sample_deployment(config, sim, rng);

  if (options.mode == Mode::sense_at) {
    for (std::size_t c = 0; c < config.classes.size(); ++c) {
      const auto& cls = config.classes[c];
      const double reach = cls.radius + options.sensing_margin;
      for (Vec3 x : deployment.positions[c]) {
        double now = 0.0;
        for (std::size_t j = 0; j < sim.t_grid.size(); ++j) {
          const double t = sim.t_grid[j];
          if (t > now) {
            jitter(x, std::sqrt(2.0 * cls.diffusion * (t - now)), rng);
            now = t;
          }
          if (norm(x) <= reach) {
            ++out.detectors_by_time[j];
          }
        }
      }
    }
    for (std::size_t j = 0; j < sim.t_grid.size(); ++j) {
      if (out.detectors_by_time[j] > 0) {
        out.detected = true;
        out.first_detection_time = sim.t_grid[j];
        break;
      }
    }
    return out;
  }

  const std::uint64_t steps = sim.steps();
  const double target_diffusion = sensing ? 0.0 : config.target.diffusion;
  RngStream target_rng(sim.master_seed, trial_index | kTargetStream);
  ws.target.reset(target_diffusion, sim.time_step, steps, &target_rng);

  std::uint64_t best = steps + 1;
  if (options.tally == Tally::first_detection && std::isfinite(out.degradation_time)) {
    // Walks stop at t_d.
    const double last = std::floor(out.degradation_time / sim.time_step);
    best = std::min(best, static_cast<std::uint64_t>(std::min(last, static_cast<double>(steps))) + 1);
  }
  std::vector<std::uint64_t> hits;
  for (std::size_t c = 0; c < config.classes.size(); ++c) {
    const auto& cls = config.classes[c];
    const Walker w{cls.radius + (sensing ? options.sensing_margin : 0.0), cls.diffusion,
                   cls.diffusion + target_diffusion};
    for (const Vec3& x : deployment.positions[c]) {
      std::uint64_t limit = steps;
      if (options.tally == Tally::first_detection) {
        if (best == 0) {
          break;
        }
        limit = std::min(steps, best - 1);
      }
      if (const auto hit = walk(x, w, limit, sim.time_step, sim.bridge_correction, ws.target, rng)) {
        hits.push_back(*hit);
        best = std::min(best, *hit);
      }
    }
  }

  std::sort(hits.begin(), hits.end());
  out.hit_times.reserve(hits.size());
  for (std::uint64_t n : hits) {
    out.hit_times.push_back(static_cast<double>(n) * sim.time_step);
  }
  if (!out.hit_times.empty()) {
    out.first_detection_time = out.hit_times.front();
    out.detected = out.first_detection_time <= std::min(sim.horizon, out.degradation_time);
  }
  for (std::size_t j = 0; j < sim.t_grid.size(); ++j) {
    const double cut = std::min(sim.t_grid[j], out.degradation_time);
    out.detectors_by_time[j] = static_cast<std::uint32_t>(
        std::upper_bound(out.hit_times.begin(), out.hit_times.end(), cut) - out.hit_times.begin());
  }
  return out;
}

void check_options(const SystemConfig& config, const SimConfig& sim, const RunOptions& options) {
  model::validate(config);
  model::validate(sim, config);
  if (!(options.sensing_margin >= 0.0) || !std::isfinite(options.sensing_margin)) {
    throw std::invalid_argument("sensing margin must be finite and >= 0");
  }
}

}  // namespace

MdtPlan plan_detection_time(const SystemConfig& config, bool mobile, double relative_tolerance) {
  model::validate(config);
  if (config.target.degradable()) {
    throw std::domain_error("plan_detection_time: the target must not degrade");
  }
  const double target = mobile ? config.target.diffusion : 0.0;
  auto counts = [&](double t, double window) {
    double inner = 0.0;
    double tail = 0.0;
    for (const auto& cls : config.classes) {
      const double d = cls.diffusion + target;
      inner += analytic::kappa(t, cls, config.exclusion_radius, d);
      tail += analytic::kappa(t, cls, window, d);
    }
    return std::pair{inner - tail, tail};
  };
  SystemConfig view = config;
  view.target.diffusion = target;
  const double mean = analytic::mean_detection_time(
      view, mobile ? analytic::TargetMotion::mobile : analytic::TargetMotion::stationary);
  if (!std::isfinite(mean)) {
    throw std::domain_error("plan_detection_time: the mean detection time is infinite");
  }
  // Horizon from the unbounded system, then the window over [0, horizon].
  double horizon = 1.0;
  for (int i = 0; i < 60 && std::exp(-analytic::mean_detectors(horizon, view)) > 1e-6; ++i) {
    horizon *= 2.0;
  }
  double low = 0.5 * horizon;
  for (int i = 0; i < 30; ++i) {
    const double mid = 0.5 * (low + horizon);
    (std::exp(-analytic::mean_detectors(mid, view)) > 1e-6 ? low : horizon) = mid;
  }
  horizon = std::ceil(horizon);
  auto shift = [&](double window) {
    return numerics::integrate(
        [&](double t) {
          const auto [inner, tail] = counts(t, window);
          return std::exp(-inner) * -std::expm1(-tail);
        },
        0.0, horizon, {1e-6, 1e-12, 1000, 1e-16});
  };
  double window = std::max(150.0, 10.0 * std::ceil(config.exclusion_radius / 10.0 + 1));
  while (window < 1e4 && shift(window) > relative_tolerance * mean) {
    window += 10.0;
  }
  return {window, horizon};
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) {
    return requested;
  }
  if (const char* env = std::getenv("MCDETECT_THREADS")) {
    try {
      const long value = std::stol(env);
      if (value > 0) {
        return static_cast<unsigned>(value);
      }
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Deployment sample_deployment(const SystemConfig& config, const SimConfig& sim, RngStream& rng) {
  const double r3 = std::pow(config.exclusion_radius, 3);
  const double shell = std::pow(sim.window_radius, 3) - r3;
  Deployment d;
  d.positions.resize(config.classes.size());
  for (std::size_t c = 0; c < config.classes.size(); ++c) {
    const double mean = config.classes[c].density * 4.0 / 3.0 * kPi * shell;
    const std::uint64_t count = rng.poisson(mean);
    auto& list = d.positions[c];
    list.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const double rho = std::cbrt(r3 + rng.uniform() * shell);
      const double z = 2.0 * rng.uniform() - 1.0;
      const double phi = 2.0 * kPi * rng.uniform();
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      list.push_back({rho * s * std::cos(phi), rho * s * std::sin(phi), rho * z});
    }
  }
  return d;
}

TrialOutcome run_trial(const SystemConfig& config, const SimConfig& sim,
                       std::uint64_t trial_index, const RunOptions& options) {
  check_options(config, sim, options);
  Workspace ws;
  return simulate_trial(config, sim, trial_index, options, ws);
}

std::vector<TrialOutcome> run_trials(const SystemConfig& config, const SimConfig& sim,
                                     const RunOptions& options) {
  check_options(config, sim, options);
  std::vector<TrialOutcome> outcomes(sim.trials);
  const unsigned threads =
      static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(options.threads),
                                                    std::max<std::uint64_t>(sim.trials, 1)));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    Workspace ws;
    for (;;) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= sim.trials) {
        return;
      }
      try {
        outcomes[i] = simulate_trial(config, sim, i, options, ws);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next = sim.trials;
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
  return outcomes;
}

McEstimate reduce(const std::vector<TrialOutcome>& outcomes, const SimConfig& sim, Mode mode) {
  McEstimate est;
  est.t_grid = sim.t_grid;
  est.trials = outcomes.size();
  est.window_radius = sim.window_radius;
  const std::size_t m = sim.t_grid.size();
  std::vector<std::uint64_t> positive(m, 0);
  std::vector<double> detectors(m, 0.0);
  std::vector<double> intact(m, 0.0);
  std::vector<double> detectors_sq(m, 0.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t detected = 0;
  for (const auto& o : outcomes) {
    for (std::size_t j = 0; j < m; ++j) {
      positive[j] += o.detectors_by_time[j] > 0 ? 1 : 0;
      detectors[j] += o.detectors_by_time[j];
      detectors_sq[j] += static_cast<double>(o.detectors_by_time[j]) * o.detectors_by_time[j];
      if (mode != Mode::sense_at) {
        intact[j] += static_cast<double>(
            std::upper_bound(o.hit_times.begin(), o.hit_times.end(), sim.t_grid[j]) -
            o.hit_times.begin());
      }
    }
    if (mode != Mode::sense_at && o.detected) {
      ++detected;
      sum += o.first_detection_time;
      sum_sq += o.first_detection_time * o.first_detection_time;
    }
  }
  const double n = static_cast<double>(outcomes.size());
  for (std::size_t j = 0; j < m; ++j) {
    const double p = n > 0 ? static_cast<double>(positive[j]) / n : 0.0;
    est.p_hat.push_back(p);
    est.ci_half_width.push_back(n > 0 ? 1.96 * std::sqrt(p * (1.0 - p) / n) : 0.0);
    est.mean_detectors.push_back(n > 0 ? detectors[j] / n : 0.0);
    est.mean_detectors_intact.push_back(mode == Mode::sense_at ? est.mean_detectors.back()
                                        : n > 0                ? intact[j] / n
                                                               : 0.0);
    const double var = n > 1 ? std::max(0.0, (detectors_sq[j] - detectors[j] * detectors[j] / n) /
                                                 (n - 1.0))
                             : 0.0;
    est.mean_detectors_ci.push_back(n > 0 ? 1.96 * std::sqrt(var / n) : 0.0);
  }
  est.undetected = outcomes.size() - detected;
  if (detected > 0) {
    const double k = static_cast<double>(detected);
    est.detection_time_mean = sum / k;
    const double var = detected > 1 ? std::max(0.0, (sum_sq - sum * sum / k) / (k - 1.0)) : 0.0;
    est.detection_time_se = std::sqrt(var / k);
  }
  return est;
}

McEstimate estimate_curves(const SystemConfig& config, const SimConfig& sim,
                           const RunOptions& options) {
  if (sim.trials < 100) {
    throw std::invalid_argument("estimate_curves: at least 100 trials are required");
  }
  return reduce(run_trials(config, sim, options), sim, options.mode);
}

McEstimate simulate_sensing(const SystemConfig& config, const SimConfig& sim, double margin,
                            Mode mode, unsigned threads) {
  if (mode == Mode::detect) {
    throw std::invalid_argument("simulate_sensing: mode must be sense_within or sense_at");
  }
  RunOptions options;
  options.mode = mode;
  options.sensing_margin = margin;
  options.threads = threads;
  return estimate_curves(config, sim, options);
}

double auto_window_radius(const SystemConfig& config, double horizon, double margin,
                          double tolerance) {
  model::validate(config);
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("auto_window_radius: horizon must be finite and > 0");
  }
  const auto grid = model::log_grid(horizon * 1e-3, horizon, 200);
  auto error_at = [&](double window) {
    double worst = 0.0;
    for (double t : grid) {
      double inner = 0.0;
      double tail = 0.0;
      for (const auto& cls : config.classes) {
        model::NmClass c = cls;
        c.radius += margin;
        const double d = cls.diffusion + config.target.diffusion;
        tail += analytic::kappa(t, c, window, d);
        inner += analytic::kappa(t, c, std::max(config.exclusion_radius, c.radius), d);
      }
      worst = std::max(worst, std::exp(-(inner - tail)) * -std::expm1(-tail));
    }
    return worst;
  };
  double window = std::max(150.0, 10.0 * std::ceil((config.exclusion_radius + margin) / 10.0 + 1));
  while (window < 1e5 && error_at(window) > tolerance) {
    window += 10.0;
  }
  return window;
}

}  // namespace mcdetect::simulator
