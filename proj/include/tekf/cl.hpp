#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "tekf/system_model.hpp"
#include "tekf/transformation.hpp"

namespace tekf {

// Planar pose. Every producer in this module writes psi wrapped to (-pi, pi].
struct RobotPose {
  Eigen::Vector2d p{0.0, 0.0};
  double psi = 0.0;
};

// Fleet state stacked as (p_1, psi_1, ..., p_m, psi_m), n = 3m.
struct FleetState {
  std::vector<RobotPose> poses;

  int robot_count() const { return static_cast<int>(poses.size()); }
  Eigen::VectorXd to_vector() const;
  static FleetState from_vector(const Eigen::VectorXd& x);
};

// Robot `observer` saw robot `target` at relative position z in its body frame.
struct RelPosMeasurement {
  int observer = 0;
  int target = 0;
  Eigen::Vector2d z{0.0, 0.0};
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity();
};

struct ClNoiseConfig {
  double sigma_v = 0.15;      // m/s per body axis
  double sigma_omega = 0.06;  // rad/s
  double sigma_z = 0.1;       // m per relative-position axis
  double dt = 2.0;            // s
  double detection_prob = 0.20;
};

using RobotPair = std::pair<int, int>;  // (observer, target), 0-based

// All m(m-1) ordered pairs.
std::vector<RobotPair> cl_all_pairs(int m);

// Fleet system for a fixed list of measurement pairs (default: all ordered pairs).
// Dynamics per robot: p += R(psi)(v + nu) dt, psi += (omega + varpi) dt.
// Measurement per pair (i, j): R(psi_i)^T (p_j - p_i) + w.
// Inputs stack (v_i, omega_i) per robot; process noise stacks (nu_i, varpi_i).
SystemModel cl_model(int m, const ClNoiseConfig& cfg);
SystemModel cl_model(int m, const ClNoiseConfig& cfg, const std::vector<RobotPair>& pairs);

// Q for the fleet and the block-diagonal R for n_pairs relative-position blocks.
NoiseSpec cl_noise_spec(int m, const ClNoiseConfig& cfg, int n_pairs);

// Basis of the nominal unobservable subspace at x: per robot rows [[I2, J p_i], [0, 1]].
Eigen::MatrixXd cl_unobservable_basis(const Eigen::VectorXd& x);

// Transformation from partitioning the basis above (block closed form, det 1):
// robot 1 rows [[I2, -J p_1], [0, 1]], robot i >= 2 rows -[[I2, J(p_i - p_1)], [0, 1]]
// in the first block column plus an identity in their own block.
Transformation cl_transform_t1(int m);

// Block-diagonal transformation, per robot [[I2, -J p_i], [0, 1]]; makes the
// propagation Jacobian exactly the identity.
Transformation cl_transform_t2(int m);

// Closed forms for x = x_pred + T_inv(x) e. Per robot block the position solve is
// p = (I2 - eps J)^{-1} (p_pred + e_p) with det 1 + eps^2 > 0.
FleetState cl_exact_update_closed_form(const FleetState& pred, const Eigen::VectorXd& e);
FleetState cl_exact_update_closed_form_t1(const FleetState& pred, const Eigen::VectorXd& e);

}  // namespace tekf
