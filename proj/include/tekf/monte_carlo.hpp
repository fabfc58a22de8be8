#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tekf/simulation.hpp"

namespace tekf {

enum class AppKind { Cl, Tt };

// Everything that determines a Monte Carlo result. Metrics are a pure function
// of this struct; worker-thread count never changes them.
struct TrialConfig {
  AppKind app = AppKind::Cl;
  EstimatorKind estimator = EstimatorKind::Ekf;
  TransformKind transform = TransformKind::Identity;
  UpdateMode update_mode = UpdateMode::Exact;
  bool joseph_form = false;

  int trials = 100;
  int steps = 300;
  std::uint64_t master_seed = 1;

  int robots = 6;
  ClNoiseConfig cl;
  TtConfig tt;
  std::vector<Landmark> landmarks;  // empty selects tt_default_landmarks()

  int threads = 0;  // 0 = hardware concurrency
};

// Throws ConfigError on incompatible combinations (dead reckoning outside
// target tracking, fleet transformations outside the fleet app, and so on).
void validate(const TrialConfig& cfg);

// Per-step trial-averaged metrics. Position NEES uses the per-robot 2x2
// marginal, orientation the 1x1 marginal, both averaged over robots.
struct StepMetrics {
  double rmse_pos = 0.0;  // m
  double rmse_ori = 0.0;  // rad
  double nees_pos = 0.0;
  double nees_ori = 0.0;
};

struct TrialMetrics {
  std::vector<StepMetrics> steps;
  std::vector<double> nees_joint;  // full-state NEES per step
  double avg_rmse_pos = 0.0;
  double avg_rmse_ori = 0.0;
  double avg_nees_pos = 0.0;
  double avg_nees_ori = 0.0;
  double avg_nees_joint = 0.0;
  int trials_requested = 0;
  int trials_used = 0;
  int diverged_trials = 0;
  double wall_ms_per_step = 0.0;
};

// e^T cov^{-1} e; NaN when the block's condition number exceeds 1e12.
double nees(const Eigen::VectorXd& e, const Eigen::MatrixXd& cov);

// Runs cfg.trials independent trials (trial t seeded with master_seed + t),
// drops diverged ones from the averages, and reduces in trial order.
TrialMetrics run_monte_carlo(const TrialConfig& cfg);

// Canonical spellings used by the CLI and the result files.
std::string to_string(AppKind v);
std::string to_string(EstimatorKind v);
std::string to_string(TransformKind v);
std::string to_string(UpdateMode v);
AppKind app_from_string(const std::string& s);              // throws ConfigError
EstimatorKind estimator_from_string(const std::string& s);  // throws ConfigError
TransformKind transform_from_string(const std::string& s);  // throws ConfigError
UpdateMode update_mode_from_string(const std::string& s);   // throws ConfigError

}  // namespace tekf
