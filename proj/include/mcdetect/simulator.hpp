#pragma once

// Particle-based Monte Carlo for the detection model.
//
// Every NM performs a Gaussian random walk with time step dt. Far from the
// target consecutive steps are merged into one exact Gaussian jump whenever
// the walker cannot reach the target within the merged interval except with
// probability ~1e-12.

#include <array>
#include <cstdint>
#include <vector>

#include "mcdetect/model.hpp"
#include "mcdetect/numerics.hpp"

namespace mcdetect::simulator {

using model::SimConfig;
using model::SystemConfig;
using numerics::RngStream;

using Vec3 = std::array<double, 3>;

/// Initial NM centres, one list per class.
struct Deployment {
  std::vector<std::vector<Vec3>> positions;
};

enum class Mode {
  detect,        ///< contact with the (possibly mobile) target
  sense_within,  ///< entry into the ball of radius a_i + margin within t
  sense_at,      ///< presence in that ball at the grid instant t
};

enum class Tally {
  all_detectors,    ///< walk every NM to the horizon
  first_detection,  ///< stop each walk at the earliest hit so far or at t_d
};

struct RunOptions {
  Mode mode = Mode::detect;
  double sensing_margin = 0.0;  ///< d_m for the sensing modes
  Tally tally = Tally::all_detectors;
  unsigned threads = 0;  ///< 0: MCDETECT_THREADS or hardware concurrency
};

struct TrialOutcome {
  bool detected = false;
  double first_detection_time = numerics::kInfinity;
  double degradation_time = numerics::kInfinity;
  /// Distinct NMs with first hit <= min(t, t_d) per grid point; for sense_at
  /// the number of NMs inside the sensing ball at t.
  std::vector<std::uint32_t> detectors_by_time;
  /// Sorted first-hit times of all NMs that hit before the horizon,
  /// degradation not applied.
  std::vector<double> hit_times;
};

struct McEstimate {
  std::vector<double> t_grid;
  std::vector<double> p_hat;
  std::vector<double> ci_half_width;
  std::vector<double> mean_detectors;
  /// Same as mean_detectors with degradation ignored.
  std::vector<double> mean_detectors_intact;
  std::vector<double> mean_detectors_ci;  ///< 1.96 standard errors
  std::uint64_t trials = 0;
  double window_radius = 0.0;
  double detection_time_mean = numerics::kInfinity;
  double detection_time_se = 0.0;
  std::uint64_t undetected = 0;  ///< trials with no detection before min(horizon, t_d)
};

Deployment sample_deployment(const SystemConfig& config, const SimConfig& sim, RngStream& rng);

/// Runs one trial with the stream derived from (sim.master_seed, trial_index).
TrialOutcome run_trial(const SystemConfig& config, const SimConfig& sim,
                       std::uint64_t trial_index, const RunOptions& options = {});

/// All sim.trials outcomes in trial-index order.
std::vector<TrialOutcome> run_trials(const SystemConfig& config, const SimConfig& sim,
                                     const RunOptions& options = {});

/// Reduces outcomes in order. Cumulative p_hat for detect and sense_within,
/// instantaneous for sense_at.
McEstimate reduce(const std::vector<TrialOutcome>& outcomes, const SimConfig& sim, Mode mode);

/// Requires sim.trials >= 100.
McEstimate estimate_curves(const SystemConfig& config, const SimConfig& sim,
                           const RunOptions& options = {});

McEstimate simulate_sensing(const SystemConfig& config, const SimConfig& sim, double margin,
                            Mode mode, unsigned threads = 0);

/// Smallest window (in 10 um steps from 150 um) for which NMs initially
/// beyond it change the detection probability by at most `tolerance` on
/// [0, horizon], judged from the analytic tail count.
double auto_window_radius(const SystemConfig& config, double horizon, double margin = 0.0,
                          double tolerance = 1e-3);

struct MdtPlan {
  double window_radius;
  double horizon;
};

/// Window and horizon for estimating the mean detection time of a
/// non-degradable target: the truncated window shifts the mean by at most
/// `relative_tolerance` and a trial stays undetected past the horizon with
/// probability below 1e-6.
MdtPlan plan_detection_time(const SystemConfig& config, bool mobile,
                            double relative_tolerance = 5e-3);

unsigned resolve_threads(unsigned requested);

}  // namespace mcdetect::simulator
