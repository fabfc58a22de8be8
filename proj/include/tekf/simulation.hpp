#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tekf/cl.hpp"
#include "tekf/observability.hpp"
#include "tekf/tekf.hpp"
#include "tekf/tt.hpp"

namespace tekf {

enum class EstimatorKind { Ekf, Fej, Tekf1, Tekf2, Dr };
enum class TransformKind { Identity, T1, T2, TtDefault };

struct FilterSetup {
  EstimatorKind estimator = EstimatorKind::Ekf;
  TransformKind transform = TransformKind::Identity;
  UpdateMode update_mode = UpdateMode::Exact;
  bool joseph_form = false;
};

// One simulated fleet trial: known inputs, true trajectory, and the detected
// relative-position measurements per step. All randomness comes from the seed.
struct ClSimData {
  int m = 0;
  ClNoiseConfig cfg;
  Eigen::VectorXd x0;
  std::vector<Eigen::VectorXd> u;                    // [steps], each 3m
  std::vector<Eigen::VectorXd> x_true;               // [steps + 1]
  std::vector<std::vector<RelPosMeasurement>> meas;  // [steps]
};

// Robots start uniform in [-5, 5]^2 with headings uniform in (-pi, pi]; linear
// velocity is fixed (0.3, 0) body-frame, angular velocity resampled per robot
// per step from U[-0.1, 0.1] except that a robot straying outside a fixed
// arena radius is commanded back toward the origin; each ordered pair is
// detected independently with cfg.detection_prob.
ClSimData simulate_cl(int m, const ClNoiseConfig& cfg, int steps, std::uint64_t seed);

// One simulated target trial on the circular trajectory; landmarks take turns
// in cycle order, each holding for cfg.switch_period steps.
struct TtSimData {
  TtConfig cfg;
  std::vector<Landmark> landmarks;
  Eigen::VectorXd x0;
  std::vector<Eigen::VectorXd> u;       // [steps], each 3
  std::vector<Eigen::VectorXd> x_true;  // [steps + 1]
  std::vector<int> landmark_index;      // [steps]
  std::vector<double> z;                // [steps], wrapped bearings
};

TtSimData simulate_tt(const std::vector<Landmark>& landmarks, const TtConfig& cfg,
                      int steps, std::uint64_t seed);

// Default two-landmark layout: the circle center and an offset anchor.
std::vector<Landmark> tt_default_landmarks();

// Post-update estimate series of one filter over one trial. covs are in
// original coordinates; cov_bars is filled for Tekf1 only.
struct FilterRun {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
  std::vector<Eigen::MatrixXd> cov_bars;
  bool diverged = false;
  double seconds = 0.0;  // filter arithmetic only
};

// Initial belief: true initial state with zero covariance.
FilterRun run_cl_filter(const ClSimData& sim, const FilterSetup& setup);
FilterRun run_tt_filter(const TtSimData& sim, const FilterSetup& setup);

// Per-step linearization Jacobians. F[t] propagates state t -> t+1 and H[t] is
// the measurement Jacobian at step t+1, so a window anchored at step a >= 1
// stacks H from index a-1 and F from index a.
struct JacobianSequences {
  std::vector<Eigen::MatrixXd> F;
  std::vector<Eigen::MatrixXd> H;
};

// Classical-EKF linearization points along a noisy run.
JacobianSequences cl_estimator_sequences(const ClSimData& sim);
// Noise-free nominal trajectory driven by the same inputs, same pair schedule.
JacobianSequences cl_nominal_sequences(const ClSimData& sim);
// Transformed coordinates: F_bar/H_bar as a T-EKF 1 run computes them.
JacobianSequences cl_transformed_sequences(const ClSimData& sim, const Transformation& trans,
                                           UpdateMode mode);
// Same three views for target tracking.
JacobianSequences tt_estimator_sequences(const TtSimData& sim);
JacobianSequences tt_nominal_sequences(const TtSimData& sim);
JacobianSequences tt_transformed_sequences(const TtSimData& sim, const Transformation& trans,
                                           UpdateMode mode);

// Observability matrix over [anchor, anchor + window] from recorded sequences
// (anchor is 1-based; anchor + window must stay within the run).
ObservabilityMatrix window_observability(const JacobianSequences& seq, int anchor,
                                         int window);

}  // namespace tekf
