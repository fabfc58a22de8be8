#include "tekf/replay.hpp"

#include <cmath>
#include <map>

#include "tekf/angles.hpp"
#include "tekf/ekf.hpp"
#include "tekf/errors.hpp"

namespace tekf {
namespace {

// One estimator behind a uniform fused-step interface so the event loop does
// not care which filter runs. A step propagates over dt (dt = 0 is a no-op
// because every process term carries a dt factor) and applies the optional
// measurement.
struct AnyFilter {
  EstimatorKind kind = EstimatorKind::Ekf;
  UpdateMode mode = UpdateMode::Exact;
  Transformation trans;
  EkfOptions opt;
  FejCache fej;
  GaussianBelief belief;
  Tekf1State t1;
  Tekf2State t2;

  void init(const GaussianBelief& prior) {
    switch (kind) {
      case EstimatorKind::Fej:
        opt.policy = LinearizationPolicy::FirstEstimates;
        [[fallthrough]];
      case EstimatorKind::Ekf:
      case EstimatorKind::Dr:
        belief = prior;
        break;
      case EstimatorKind::Tekf1:
        t1 = tekf1_init(prior, trans);
        break;
      case EstimatorKind::Tekf2:
        t2 = Tekf2State{prior};
        break;
    }
  }

  void step(const SystemModel& model, const Eigen::VectorXd& u, const Eigen::VectorXd& y,
            const NoiseSpec& noise) {
    switch (kind) {
      case EstimatorKind::Ekf:
      case EstimatorKind::Fej: {
        FejCache* cache = kind == EstimatorKind::Fej ? &fej : nullptr;
        belief = ekf_predict(belief, model, u, noise, opt, cache);
        belief = ekf_update(belief, model, y, noise, opt, cache);
        break;
      }
      case EstimatorKind::Dr:
        belief = ekf_predict(belief, model, u, noise, opt);
        break;
      case EstimatorKind::Tekf1:
        t1 = tekf1_predict(t1, model, trans, u, noise);
        t1 = tekf1_update(t1, model, trans, y, noise, mode);
        break;
      case EstimatorKind::Tekf2:
        t2 = tekf2_step(t2, model, trans, u, y, noise, mode);
        break;
    }
  }

  Eigen::VectorXd mean() const {
    switch (kind) {
      case EstimatorKind::Tekf1:
        return t1.mean;
      case EstimatorKind::Tekf2:
        return t2.belief.mean;
      default:
        return belief.mean;
    }
  }
};

// Relative position of a surveyed landmark in the observer's body frame;
// only the observer's block of H is nonzero.
SystemModel landmark_sighting_model(int m, int observer, const Eigen::Vector2d& p_s) {
  SystemModel model;
  model.n = 3 * m;
  model.q = 3 * m;
  model.p = 2;
  model.h = [observer, p_s](const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
    const Eigen::Vector2d pi = x.segment<2>(3 * observer);
    const double psi = x(3 * observer + 2);
    return (rot2(psi).transpose() * (p_s - pi) + w).eval();
  };
  model.H = [observer, p_s, n = model.n](const Eigen::VectorXd& x) {
    const Eigen::Vector2d pi = x.segment<2>(3 * observer);
    const double psi = x(3 * observer + 2);
    const Eigen::Matrix2d Rt = rot2(psi).transpose();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, n);
    H.block<2, 2>(0, 3 * observer) = -Rt;
    H.block<2, 1>(0, 3 * observer + 2) = -Rt * kJ * (p_s - pi);
    return H;
  };
  model.D = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(2, 2); };
  model.residual = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).eval();
  };
  return model;
}

GaussianBelief prior_from_groundtruth(const UtiasDataset& ds, const ReplayConfig& cfg,
                                      int robots, const std::vector<int>& robot_map) {
  Eigen::VectorXd x0(3 * robots);
  std::vector<bool> seen(robots, false);
  int remaining = robots;
  for (const UtiasGroundtruth& gt : ds.groundtruth) {
    const int slot = robot_map[gt.robot];
    if (slot < 0 || seen[slot]) continue;
    x0.segment<2>(3 * slot) << gt.x, gt.y;
    x0(3 * slot + 2) = wrap_angle(gt.theta);
    seen[slot] = true;
    if (--remaining == 0) break;
  }
  if (remaining != 0) throw ConfigError("replay: a tracked robot has no ground truth");
  Eigen::VectorXd d(3 * robots);
  for (int i = 0; i < robots; ++i)
    d.segment<3>(3 * i) << cfg.prior_pos_std * cfg.prior_pos_std,
        cfg.prior_pos_std * cfg.prior_pos_std, cfg.prior_ori_std * cfg.prior_ori_std;
  return GaussianBelief{x0, d.asDiagonal()};
}

}  // namespace

ReplayResult replay_utias(const UtiasDataset& ds, const ReplayConfig& cfg) {
  const bool fleet = cfg.app == AppKind::Cl;
  if (!fleet && (cfg.robot_index < 0 || cfg.robot_index >= ds.robot_count))
    throw ConfigError("replay: robot_index out of range");
  if (fleet && cfg.estimator == EstimatorKind::Dr)
    throw ConfigError("dead reckoning is a target-tracking baseline");
  if (!fleet && ds.landmarks.empty() && cfg.estimator != EstimatorKind::Dr)
    throw ConfigError("target replay needs surveyed landmarks");

  // Fleet mode estimates every robot; target mode a single slot.
  const int robots = fleet ? ds.robot_count : 1;
  std::vector<int> robot_map(ds.robot_count, -1);
  if (fleet) {
    for (int i = 0; i < ds.robot_count; ++i) robot_map[i] = i;
  } else {
    robot_map[cfg.robot_index] = 0;
  }

  std::map<int, Eigen::Vector2d> surveyed;
  for (const UtiasLandmark& lm : ds.landmarks) surveyed[lm.subject] = lm.p;

  ClNoiseConfig cl_cfg;
  cl_cfg.sigma_v = cfg.sigma_v;
  cl_cfg.sigma_omega = cfg.sigma_omega;
  TtConfig tt_cfg;
  tt_cfg.sigma_v = cfg.sigma_v;
  tt_cfg.sigma_omega = cfg.sigma_omega;
  tt_cfg.sigma_bearing = cfg.sigma_b;

  AnyFilter filter;
  filter.kind = cfg.estimator;
  filter.mode = cfg.update_mode;
  switch (cfg.transform) {
    case TransformKind::Identity:
      filter.trans = identity_transformation(3 * robots);
      break;
    case TransformKind::T1:
      filter.trans = cl_transform_t1(robots);
      break;
    case TransformKind::T2:
      filter.trans = cl_transform_t2(robots);
      break;
    case TransformKind::TtDefault:
      if (fleet) throw ConfigError("the target transformation does not apply to a fleet");
      filter.trans = tt_transform();
      break;
  }
  filter.init(prior_from_groundtruth(ds, cfg, robots, robot_map));

  // Zero-order hold on each robot's latest odometry command.
  std::vector<Eigen::Vector3d> held(robots, Eigen::Vector3d::Zero());

  ReplayResult res;
  double t_now = -1.0;
  double t_start = -1.0;
  double sum_sq_pos = 0.0, sum_sq_ori = 0.0;
  int pose_samples = 0;

  auto propagate_to = [&](double t) {
    const double dt = t - t_now;
    if (dt < 0) throw ContractViolation("replay: event stream not time-sorted");
    if (fleet) {
      cl_cfg.dt = dt;
      Eigen::VectorXd u(3 * robots);
      for (int i = 0; i < robots; ++i) u.segment<3>(3 * i) = held[i];
      filter.step(cl_model(robots, cl_cfg, {}), u, Eigen::VectorXd(),
                  cl_noise_spec(robots, cl_cfg, 0));
    } else {
      tt_cfg.dt = dt;
      filter.step(tt_model({}, tt_cfg), held[0], Eigen::VectorXd(), tt_noise_spec(tt_cfg, 0));
    }
    t_now = t;
  };

  for (const UtiasEvent& ev : ds.events) {
    if (t_now < 0) {
      // Clock starts at the first event; the prior covers the gap to truth.
      t_now = ev.time;
      t_start = ev.time;
    }
    switch (ev.kind) {
      case UtiasEventKind::Odometry: {
        const UtiasOdometry& od = ds.odometry[ev.index];
        const int slot = robot_map[od.robot];
        if (slot < 0) break;
        propagate_to(ev.time);
        held[slot] << od.v, 0.0, od.omega;
        ++res.odometry_events;
        break;
      }
      case UtiasEventKind::Groundtruth: {
        const UtiasGroundtruth& gt = ds.groundtruth[ev.index];
        const int slot = robot_map[gt.robot];
        if (slot < 0) break;
        propagate_to(ev.time);
        const Eigen::VectorXd est = filter.mean();
        const Eigen::Vector2d ep = est.segment<2>(3 * slot) - Eigen::Vector2d(gt.x, gt.y);
        const double eo = wrap_angle(est(3 * slot + 2) - gt.theta);
        if (!est.allFinite() || ep.norm() > 1e3) {
          res.diverged = true;
          res.duration = t_now - t_start;
          return res;
        }
        sum_sq_pos += ep.squaredNorm();
        sum_sq_ori += eo * eo;
        ++pose_samples;
        break;
      }
      case UtiasEventKind::Measurement: {
        const UtiasMeasurement& ms = ds.measurements[ev.index];
        const int slot = robot_map[ms.robot];
        if (slot < 0) {
          ++res.measurements_skipped;
          break;
        }
        if (fleet && ms.target_is_robot) {
          propagate_to(ev.time);
          RelPosMeasurement rel = utias_to_relpos(ms, cfg.sigma_r, cfg.sigma_b);
          cl_cfg.dt = 0.0;
          const SystemModel model =
              cl_model(robots, cl_cfg, {{slot, robot_map[ms.subject]}});
          NoiseSpec noise = cl_noise_spec(robots, cl_cfg, 1);
          noise.R = rel.R;
          filter.step(model, Eigen::VectorXd::Zero(3 * robots), rel.z, noise);
          ++res.measurements_used;
        } else if (fleet && !ms.target_is_robot && cfg.use_landmarks &&
                   surveyed.count(ms.subject) != 0) {
          propagate_to(ev.time);
          RelPosMeasurement rel = utias_to_relpos(ms, cfg.sigma_r, cfg.sigma_b);
          SystemModel model = landmark_sighting_model(robots, slot, surveyed.at(ms.subject));
          // Reuse the fleet dynamics for the fused step's (zero-length) predict.
          cl_cfg.dt = 0.0;
          const SystemModel dyn = cl_model(robots, cl_cfg, {});
          model.f = dyn.f;
          model.F = dyn.F;
          model.G = dyn.G;
          model.normalize = dyn.normalize;
          NoiseSpec noise = cl_noise_spec(robots, cl_cfg, 0);
          noise.R = rel.R;
          filter.step(model, Eigen::VectorXd::Zero(3 * robots), rel.z, noise);
          ++res.measurements_used;
        } else if (!fleet && !ms.target_is_robot && surveyed.count(ms.subject) != 0 &&
                   cfg.estimator != EstimatorKind::Dr) {
          propagate_to(ev.time);
          tt_cfg.dt = 0.0;
          const Landmark lm{ms.subject, surveyed.at(ms.subject)};
          Eigen::VectorXd y(1);
          y(0) = wrap_angle(ms.bearing);
          NoiseSpec noise = tt_noise_spec(tt_cfg, 1);
          noise.R(0, 0) = cfg.sigma_b * cfg.sigma_b;
          filter.step(tt_model({lm}, tt_cfg), held[0], y, noise);
          ++res.measurements_used;
        } else {
          ++res.measurements_skipped;
        }
        break;
      }
    }
  }
  res.duration = t_now < 0 ? 0.0 : t_now - t_start;
  res.groundtruth_samples = pose_samples;
  if (pose_samples > 0) {
    res.rmse_pos = std::sqrt(sum_sq_pos / pose_samples);
    res.rmse_ori = std::sqrt(sum_sq_ori / pose_samples);
  }
  return res;
}

}  // namespace tekf
