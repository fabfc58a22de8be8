#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tekf/gaussian_belief.hpp"
#include "tekf/system_model.hpp"
#include "tekf/transformation.hpp"

namespace tekf {

// Planar target state (p, psi), n = 3; psi kept wrapped by producers.
struct TargetState {
  Eigen::Vector2d p{0.0, 0.0};
  double psi = 0.0;

  Eigen::Vector3d to_vector() const;
  static TargetState from_vector(const Eigen::VectorXd& x);
};

struct Landmark {
  int id = 0;
  Eigen::Vector2d p_s{0.0, 0.0};
};

struct BearingMeasurement {
  int landmark_id = 0;
  double z = 0.0;      // rad, wrapped
  double sigma = 0.1;  // rad
};

struct TtConfig {
  Eigen::Vector2d v{0.3, 0.0};  // body-frame linear velocity command
  double omega = 0.1;           // rad/s
  double sigma_v = 0.15;        // m/s per body axis
  double sigma_omega = 0.06;    // rad/s
  double sigma_bearing = 0.1;   // rad
  double dt = 0.4;              // s
  // Steps each landmark keeps sighting the target before the next takes over.
  // Long blocks are the stress case: a lone landmark leaves one direction
  // unobservable, so filters that mistake that direction drift block by block.
  int switch_period = 1;
};

// Bearing-only system; measurement row i covers landmarks[i]:
// h_i = atan2(y_s - y, x_s - x) - psi, wrapped. Dynamics match one fleet robot.
// h and H throw DegenerateGeometry within 1e-9 m of a landmark. An empty
// landmark list yields the propagation-only system (p = 0).
SystemModel tt_model(const std::vector<Landmark>& landmarks, const TtConfig& cfg);

// Q for the target and R = sigma_bearing^2 I for n_landmarks bearing rows.
NoiseSpec tt_noise_spec(const TtConfig& cfg, int n_landmarks);

// Unobservable direction when only this landmark measures: [J(p - p_s); 1].
Eigen::Vector3d tt_single_landmark_basis(const Eigen::VectorXd& x, const Landmark& lm);

// T = [[I2, -J p], [0, 1]]; makes the propagation Jacobian exactly the identity.
Transformation tt_transform();

// Pure propagation baseline; never updates.
GaussianBelief dead_reckoning_step(const GaussianBelief& state, const Eigen::VectorXd& u,
                                   const TtConfig& cfg);

}  // namespace tekf
