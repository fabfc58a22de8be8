#pragma once

#include "tekf/gaussian_belief.hpp"
#include "tekf/system_model.hpp"

namespace tekf {

// Noise-free mean propagation f(x, u, 0).
Eigen::VectorXd propagate_mean(const SystemModel& model, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u);

// Mean propagation plus covariance prediction P <- F P F^T + G Q G^T.
// With LinearizationPolicy::FirstEstimates the prior-state argument of F comes
// from the cache; the first call populates it with its own prediction.
GaussianBelief ekf_predict(const GaussianBelief& belief, const SystemModel& model,
                           const Eigen::VectorXd& u, const NoiseSpec& noise,
                           const EkfOptions& opt = {}, FejCache* fej = nullptr);

// Gain K = P H^T (H P H^T + D R D^T)^{-1}; mean += K * residual; P <- (I - KH)P.
// Throws SingularInnovation when the innovation covariance condition number
// exceeds 1e12. A p = 0 model returns the belief unchanged.
GaussianBelief ekf_update(const GaussianBelief& belief, const SystemModel& model,
                          const Eigen::VectorXd& y, const NoiseSpec& noise,
                          const EkfOptions& opt = {}, const FejCache* fej = nullptr);

}  // namespace tekf
