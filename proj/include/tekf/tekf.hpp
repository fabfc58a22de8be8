#pragma once

#include "tekf/ekf.hpp"
#include "tekf/transformation.hpp"

namespace tekf {

enum class UpdateMode { Exact, Approximate };

// Filter in transformed coordinates: mean kept in original coordinates, covariance
// in transformed ones (P_bar).
struct Tekf1State {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov_bar;
};

// Filter in original coordinates with the post-update covariance correction.
struct Tekf2State {
  GaussianBelief belief;
};

// P_bar_{0|0} = T(x0) P0 T(x0)^T.
Tekf1State tekf1_init(const GaussianBelief& prior, const Transformation& trans);

// Propagates the mean through f and the covariance with
// F_bar = T(x_pred) F(x_prev, u) T_inv(x_prev), G_bar = T(x_pred) G(x_prev, u).
Tekf1State tekf1_predict(const Tekf1State& state, const SystemModel& model,
                         const Transformation& trans, const Eigen::VectorXd& u,
                         const NoiseSpec& noise);

// H_bar = H(x_pred) T_inv(x_pred); gain and covariance in transformed coordinates.
// Exact mode solves x = x_pred + T_inv(x) K_bar r (closed form when the
// transformation registers one, damped fixed point otherwise); Approximate mode
// uses T_inv(x_pred). A p = 0 model returns the state unchanged.
Tekf1State tekf1_update(const Tekf1State& state, const SystemModel& model,
                        const Transformation& trans, const Eigen::VectorXd& y,
                        const NoiseSpec& noise, UpdateMode mode);

// One full step in original coordinates: classical prediction and gain, the
// chosen update branch, then the covariance correction
// P = dT S dT^T with dT = T(x_{k|k})^{-1} T(x_{k|k-1}) and S = (I - KH) P_pred.
// Pass a p = 0 model (empty y) to run the prediction alone.
Tekf2State tekf2_step(const Tekf2State& state, const SystemModel& model,
                      const Transformation& trans, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& y, const NoiseSpec& noise, UpdateMode mode);

// Covariance of a T-EKF 1 state expressed in original coordinates,
// P = T_inv(x) P_bar T_inv(x)^T, for metrics and cross-filter comparison.
Eigen::MatrixXd tekf1_cov_original(const Tekf1State& state, const Transformation& trans);

}  // namespace tekf
