#pragma once

#include <string>

#include "tekf/monte_carlo.hpp"
#include "tekf/utias.hpp"

namespace tekf {

// Event-driven replay of a recorded dataset. The fleet mode fuses
// robot-to-robot relative positions (and, when enabled, landmark sightings
// against their surveyed positions); the target mode tracks one robot from the
// bearing component of its landmark sightings alone.
struct ReplayConfig {
  AppKind app = AppKind::Cl;
  EstimatorKind estimator = EstimatorKind::Ekf;
  TransformKind transform = TransformKind::Identity;
  UpdateMode update_mode = UpdateMode::Exact;

  bool use_landmarks = false;  // fleet mode: fuse landmark sightings too
  int robot_index = 0;         // target mode: which robot to track

  double sigma_r = 0.1;       // m, range noise for the relative-position conversion
  double sigma_b = 0.05;      // rad, bearing noise
  double sigma_v = 0.15;      // m/s, odometry linear noise
  double sigma_omega = 0.06;  // rad/s
  double prior_pos_std = 0.1;   // m, initial belief around the first ground truth
  double prior_ori_std = 0.05;  // rad
};

struct ReplayResult {
  int odometry_events = 0;
  int measurements_used = 0;
  int measurements_skipped = 0;  // wrong kind for the mode, or pre-start
  int groundtruth_samples = 0;
  double duration = 0.0;  // s of data replayed
  double rmse_pos = 0.0;  // m, against ground truth at its own timestamps
  double rmse_ori = 0.0;  // rad
  bool diverged = false;
};

ReplayResult replay_utias(const UtiasDataset& ds, const ReplayConfig& cfg);

}  // namespace tekf
