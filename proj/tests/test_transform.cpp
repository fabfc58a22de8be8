#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "tekf/angles.hpp"
#include "tekf/cl.hpp"
#include "tekf/errors.hpp"
#include "tekf/tekf.hpp"
#include "tekf/transformation.hpp"
#include "tekf/tt.hpp"

using namespace tekf;

namespace {

std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> fleet_samples(int m, int count,
                                                                       std::uint64_t seed) {
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> out;
  for (int i = 0; i < count; ++i) {
    out.emplace_back(oracle::random_fleet_state(m, seed + 2 * i),
                     0.3 * oracle::random_vector(3 * m, seed + 2 * i + 1));
  }
  return out;
}

// Residual of the implicit equation x = x_pred + T_inv(x) e.
double implicit_residual(const Transformation& trans, const Eigen::VectorXd& x_pred,
                         const Eigen::VectorXd& e, const Eigen::VectorXd& x) {
  return (x - x_pred - trans.T_inv(x) * e).norm();
}

void check_states_match(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tol) {
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() % 3 == 0);
  for (int i = 0; i * 3 < a.size(); ++i) {
    CHECK((a.segment<2>(3 * i) - b.segment<2>(3 * i)).norm() < tol);
    // Angles agree modulo 2 pi; the closed forms wrap, the generic solver does not.
    CHECK(std::abs(wrap_angle(a(3 * i + 2) - b(3 * i + 2))) < tol);
  }
}

}  // namespace

TEST_CASE("identity transformation reduces both transformed filters to the EKF") {
  const int m = 3, n = 3 * m;
  ClNoiseConfig cfg;
  const SystemModel model = cl_model(m, cfg);
  const NoiseSpec noise = cl_noise_spec(m, cfg, m * (m - 1));
  const Transformation id = identity_transformation(n);
  CHECK_FALSE(id.constant_F.has_value());

  const Eigen::VectorXd x = oracle::random_fleet_state(m, 201);
  for (int i = 0; i < 20; ++i) CHECK(id.T(oracle::random_vector(n, 300 + i)).isIdentity(0.0));

  GaussianBelief prior{x, 0.1 * oracle::random_spd(n, 202)};
  const Eigen::VectorXd u = 0.3 * oracle::random_vector(n, 203);
  const Eigen::VectorXd y =
      model.h(x + 0.05 * oracle::random_vector(n, 204), Eigen::VectorXd::Zero(model.p));

  const GaussianBelief ekf = ekf_update(ekf_predict(prior, model, u, noise), model, y, noise);

  Tekf1State t1 = tekf1_init(prior, id);
  t1 = tekf1_update(tekf1_predict(t1, model, id, u, noise), model, id, y, noise,
                    UpdateMode::Exact);
  CHECK((t1.mean - ekf.mean).norm() < 1e-9);
  CHECK((tekf1_cov_original(t1, id) - ekf.cov).norm() < 1e-9);

  Tekf2State t2{prior};
  t2 = tekf2_step(t2, model, id, u, y, noise, UpdateMode::Exact);
  CHECK((t2.belief.mean - ekf.mean).norm() < 1e-9);
  CHECK((t2.belief.cov - ekf.cov).norm() < 1e-9);
}

TEST_CASE("transformation_from_basis sends the basis to the leading identity") {
  const Eigen::VectorXd x = oracle::random_fleet_state(4, 211);
  const Eigen::MatrixXd N = cl_unobservable_basis(x);
  const int n = static_cast<int>(N.rows()), r = static_cast<int>(N.cols());

  const Transformation trans = transformation_from_basis(N);
  const Eigen::MatrixXd T = trans.T(x);
  const Eigen::MatrixXd T_inv = trans.T_inv(x);

  Eigen::MatrixXd want = Eigen::MatrixXd::Zero(n, r);
  want.topRows(r).setIdentity();
  CHECK((T * N - want).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((T * T_inv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((T_inv * T - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
  // The construction is frozen at the supplied basis: no state dependence.
  CHECK((trans.T(oracle::random_vector(n, 212)) - T).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("singular leading block is repaired by row permutation") {
  Eigen::MatrixXd N(5, 2);
  N << 0.0, 0.0,
       0.0, 0.0,
       1.0, 0.0,
       0.0, 1.0,
       0.3, 0.7;
  const Transformation trans = transformation_from_basis(N);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
  Eigen::MatrixXd want = Eigen::MatrixXd::Zero(5, 2);
  want.topRows(2).setIdentity();
  CHECK((trans.T(x) * N - want).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((trans.T(x) * trans.T_inv(x) - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("rank-deficient basis cannot be turned into a transformation") {
  Eigen::MatrixXd N(4, 2);
  N.col(0) = Eigen::Vector4d(1.0, 2.0, 3.0, 4.0);
  N.col(1) = 2.0 * N.col(0);
  CHECK_THROWS_AS(transformation_from_basis(N), ConstructionError);
}

TEST_CASE("block-diagonal fleet transformation has an exactly constant propagation Jacobian") {
  const int m = 3;
  ClNoiseConfig cfg;
  const SystemModel model = cl_model(m, cfg);
  const Transformation t2 = cl_transform_t2(m);

  const auto report = verify_constant_F(t2, model, fleet_samples(m, 8, 221), 1e-12);
  CHECK(report.is_constant);
  CHECK(report.max_deviation <= 1e-12);
  CHECK(report.F_bar.isIdentity(1e-12));
  // The registered shortcut agrees with the verified value.
  REQUIRE(t2.constant_F.has_value());
  CHECK((*t2.constant_F - report.F_bar).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("target transformation has an exactly constant propagation Jacobian") {
  TtConfig cfg;
  const SystemModel model = tt_model({Landmark{0, {0.0, 3.0}}}, cfg);
  const Transformation trans = tt_transform();
  const auto report = verify_constant_F(trans, model, fleet_samples(1, 8, 231), 1e-12);
  CHECK(report.is_constant);
  CHECK(report.F_bar.isIdentity(1e-12));
  REQUIRE(trans.constant_F.has_value());
  CHECK((*trans.constant_F - report.F_bar).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("first-robot-relative transformation is not constant in F") {
  const int m = 3;
  ClNoiseConfig cfg;
  const SystemModel model = cl_model(m, cfg);
  const Transformation t1 = cl_transform_t1(m);
  CHECK_FALSE(t1.constant_F.has_value());
  const auto report = verify_constant_F(t1, model, fleet_samples(m, 8, 241));
  CHECK_FALSE(report.is_constant);
  CHECK(report.max_deviation > 1e-3);
}

TEST_CASE("fleet transformations are pointwise inverses and map the basis as designed") {
  for (int m : {2, 3, 5}) {
    const int n = 3 * m;
    const Transformation t1 = cl_transform_t1(m);
    const Transformation t2 = cl_transform_t2(m);
    for (int i = 0; i < 4; ++i) {
      const Eigen::VectorXd x = oracle::random_fleet_state(m, 251 + 10 * m + i);
      const Eigen::MatrixXd N = cl_unobservable_basis(x);
      CHECK((t1.T(x) * t1.T_inv(x) - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <
            1e-12);
      CHECK((t2.T(x) * t2.T_inv(x) - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <
            1e-12);
      // T1 comes from the basis partition, so it sends N to the leading identity.
      Eigen::MatrixXd want = Eigen::MatrixXd::Zero(n, 3);
      want.topRows(3).setIdentity();
      CHECK((t1.T(x) * N - want).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("closed-form exact updates solve the implicit equation") {
  const int m = 4;
  for (int i = 0; i < 6; ++i) {
    const Eigen::VectorXd x_pred = oracle::random_fleet_state(m, 261 + 2 * i);
    const Eigen::VectorXd e = 0.2 * oracle::random_vector(3 * m, 262 + 2 * i);
    for (const Transformation& trans : {cl_transform_t1(m), cl_transform_t2(m)}) {
      const Eigen::VectorXd x = trans.exact_update(x_pred, e);
      CHECK(implicit_residual(trans, x_pred, e, x) < 1e-12);
    }
  }
}

TEST_CASE("generic fixed-point solver agrees with the fleet closed forms") {
  const int m = 3;
  const Transformation t1 = cl_transform_t1(m);
  const Transformation t2 = cl_transform_t2(m);
  for (int i = 0; i < 6; ++i) {
    const Eigen::VectorXd x_pred = oracle::random_fleet_state(m, 271 + 2 * i);
    const Eigen::VectorXd e = 0.2 * oracle::random_vector(3 * m, 272 + 2 * i);

    const Eigen::VectorXd closed2 =
        cl_exact_update_closed_form(FleetState::from_vector(x_pred), e).to_vector();
    check_states_match(solve_exact_update(t2, x_pred, e), closed2, 1e-10);

    const Eigen::VectorXd closed1 =
        cl_exact_update_closed_form_t1(FleetState::from_vector(x_pred), e).to_vector();
    check_states_match(solve_exact_update(t1, x_pred, e), closed1, 1e-10);
  }
}

TEST_CASE("generic fixed-point solver agrees with the target closed form") {
  const Transformation trans = tt_transform();
  for (int i = 0; i < 6; ++i) {
    const Eigen::VectorXd x_pred = oracle::random_fleet_state(1, 281 + 2 * i);
    const Eigen::VectorXd e = 0.2 * oracle::random_vector(3, 282 + 2 * i);
    const Eigen::VectorXd closed = trans.exact_update(x_pred, e);
    CHECK(implicit_residual(trans, x_pred, e, closed) < 1e-12);
    check_states_match(solve_exact_update(trans, x_pred, e), closed, 1e-10);
  }
}
