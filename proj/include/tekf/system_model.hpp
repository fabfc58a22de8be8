#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

namespace tekf {

// Discrete-time nonlinear system
//   x_{k+1} = f(x_k, u_k, v_k),   y_k = h(x_k, w_k)
// with Jacobians F = df/dx and G = df/dv taken at (x, u, 0), and H = dh/dx and
// D = dh/dw taken at (x, 0). Dimensions: n state, q process noise, p measurement.
// p = 0 is a valid system with no measurement (prediction only).
struct SystemModel {
  int n = 0;
  int q = 0;
  int p = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                const Eigen::VectorXd& v)>
      f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& w)> h;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u)> F;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u)> G;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x)> H;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x)> D;
  // residual(measured, predicted); wraps angle components. Zero for identical inputs.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> residual;
  // Optional canonicalization applied after every mean write (angle wrapping).
  // Leave empty for models without angular components.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> normalize;
};

// Process and (stacked) measurement noise covariances. When several measurement
// blocks arrive at once, R is their block-diagonal stack.
struct NoiseSpec {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};

// Where Jacobians are evaluated: the latest estimates, or a first-prediction
// cache that is set once and never overwritten.
enum class LinearizationPolicy { CurrentBest, FirstEstimates };

// First-estimates cache. Populated by the first predict; afterwards F's
// prior-state argument and H are evaluated at this state permanently.
struct FejCache {
  std::optional<Eigen::VectorXd> first_prediction;
};

// Classical-EKF knobs. The covariance update defaults to (I - KH)P; the Joseph
// form is available for robustness studies.
struct EkfOptions {
  LinearizationPolicy policy = LinearizationPolicy::CurrentBest;
  bool joseph_form = false;
};

}  // namespace tekf
