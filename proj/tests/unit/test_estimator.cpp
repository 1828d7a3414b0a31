#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "imuarray/estimator.hpp"
#include "imuarray/units.hpp"
#include "support/oracles.hpp"

using namespace imuarray;

namespace
{

ArrayGeometry planar_fig_array()
{
  return make_square_grid_array(0.01, 2, 4, deg2rad(2000.0));
}

NoiseModel paper_noise(const ArrayGeometry& geom)
{
  const double gyro_std = deg2rad(1.0);
  return NoiseModel::iid(0.01, gyro_std * gyro_std, geom);
}

Measurement noiseless(const MotionState& state, const ArrayGeometry& geom)
{
  const Eigen::VectorXd y = noiseless_measurement(state, geom);
  Measurement meas;
  meas.accel = y.head(geom.n_accel_channels());
  meas.gyro = y.tail(geom.n_gyro_channels());
  meas.saturated.assign(geom.n_gyro_channels(), false);
  return meas;
}

MotionState sample_state(std::mt19937& gen, double omega_scale)
{
  MotionState s;
  s.omega = oracles::random_vector(gen, omega_scale);
  s.omega_dot = oracles::random_vector(gen, 40.0);
  s.specific_force = oracles::random_vector(gen, 12.0);
  return s;
}

} // namespace

TEST_CASE("weighted least squares inverts the noiseless model")
{
  std::mt19937 gen(31);
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);
  for (int i = 0; i < 20; ++i)
  {
    const MotionState state = sample_state(gen, 15.0);
    const Measurement meas = noiseless(state, geom);
    const Vector6d phi = wls_linear_params(state.omega, meas, geom, noise);
    CHECK((phi - state.linear_params()).norm() <= 1e-9 * (1.0 + state.linear_params().norm()));
  }
}

TEST_CASE("weighted least squares force estimate is the triad mean for symmetric arrays")
{
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);
  MotionState state;
  state.omega = Eigen::Vector3d(4.0, 1.0, -2.0);
  state.omega_dot = Eigen::Vector3d(20.0, -5.0, 3.0);
  state.specific_force = Eigen::Vector3d(1.0, -2.0, 9.5);

  const Measurement meas = noiseless(state, geom);
  const Vector6d phi = wls_linear_params(state.omega, meas, geom, noise);

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int t = 0; t < geom.n_accel_triads(); ++t)
  {
    mean += meas.accel.segment<3>(3 * t);
  }
  mean /= geom.n_accel_triads();
  CHECK((phi.tail<3>() - mean).norm() <= 1e-12 * (1.0 + mean.norm()));
}

TEST_CASE("weighted least squares rejects rank-deficient geometries")
{
  ArrayGeometry collinear;
  collinear.accel_positions = {Eigen::Vector3d::Zero(), Eigen::Vector3d(0.01, 0, 0),
                               Eigen::Vector3d(0.02, 0, 0)};
  collinear.n_gyro_triads = 1;
  collinear.gyro_saturation = deg2rad(2000.0);
  const NoiseModel noise = paper_noise(collinear);
  MotionState state;
  const Measurement meas = noiseless(state, collinear);
  CHECK_THROWS_AS(wls_linear_params(state.omega, meas, collinear, noise), ValidationError);
}

TEST_CASE("residual projection annihilates the linear design matrix")
{
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);
  const Eigen::MatrixXd p = residual_projection(geom, noise);
  const Eigen::MatrixXd h = linear_design_matrix(geom);

  CHECK((p * h).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(numerical_rank(p) == geom.n_channels() - 6);
}

TEST_CASE("concentrated cost properties")
{
  std::mt19937 gen(41);
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);
  const Eigen::MatrixXd p = residual_projection(geom, noise);
  const Eigen::MatrixXd h = linear_design_matrix(geom);

  const MotionState state = sample_state(gen, 10.0);
  const Eigen::VectorXd clean = noiseless_measurement(state, geom);
  CHECK(concentrated_neg_loglik(state.omega, clean, p, geom) <= 1e-12);

  for (int i = 0; i < 20; ++i)
  {
    Eigen::VectorXd y = clean;
    for (Eigen::Index k = 0; k < y.size(); ++k)
    {
      y[k] += 0.01 * oracles::random_vector(gen, 1.0)[0];
    }
    const double base = concentrated_neg_loglik(state.omega, y, p, geom);

    // Shifting along the range of the design matrix changes nothing.
    Vector6d delta;
    delta << oracles::random_vector(gen, 5.0), oracles::random_vector(gen, 5.0);
    const double shifted = concentrated_neg_loglik(state.omega, y + h * delta, p, geom);
    CHECK(shifted == doctest::Approx(base).epsilon(1e-9));

    // Equals the unconcentrated cost at the WLS linear parameters.
    Measurement meas;
    meas.accel = y.head(geom.n_accel_channels());
    meas.gyro = y.tail(geom.n_gyro_channels());
    meas.saturated.assign(geom.n_gyro_channels(), false);
    const Vector6d phi = wls_linear_params(state.omega, meas, geom, noise);
    const Eigen::VectorXd r = y - nonlinear_response(state.omega, geom) - h * phi;
    const Eigen::VectorXd q_inv_r = noise.covariance().llt().solve(r);
    const double unconcentrated = 0.5 * r.dot(q_inv_r);
    CHECK(unconcentrated == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("gyro initialization is the per-axis mean for iid noise")
{
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);

  Measurement meas;
  meas.accel.setZero(geom.n_accel_channels());
  meas.gyro.resize(12);
  meas.gyro << 1.0, 10.0, 100.0, 2.0, 20.0, 200.0, 3.0, 30.0, 300.0, 4.0, 40.0, 400.0;
  meas.saturated.assign(12, false);

  const Eigen::Vector3d init = init_from_gyros(meas, geom, noise);
  CHECK(init.x() == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(init.y() == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(init.z() == doctest::Approx(250.0).epsilon(1e-12));

  // One triad clipped on x: the x mean uses the remaining three triads.
  meas.saturated[0] = true;
  meas.gyro[0] = geom.gyro_saturation;
  const Eigen::Vector3d pruned = init_from_gyros(meas, geom, noise);
  CHECK(pruned.x() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(pruned.y() == doctest::Approx(25.0).epsilon(1e-12));

  // Flagged channels must sit at the clipping limit.
  Measurement inconsistent = meas;
  inconsistent.gyro[0] = 1.0;
  CHECK_THROWS_AS(init_from_gyros(inconsistent, geom, noise), ValidationError);

  // No usable x channel at all: signal the saturated fall-through.
  for (int k = 0; k < 12; k += 3)
  {
    meas.saturated[k] = true;
    meas.gyro[k] = geom.gyro_saturation;
  }
  CHECK_THROWS_AS(init_from_gyros(meas, geom, noise), ValidationError);
}

TEST_CASE("gauss-newton from the truth stops immediately on noiseless data")
{
  std::mt19937 gen(51);
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);
  for (int i = 0; i < 10; ++i)
  {
    const MotionState state = sample_state(gen, 20.0);
    const Measurement meas = noiseless(state, geom);
    const FusionResult res = gauss_newton_solve(meas, geom, noise, state.omega);
    CHECK(res.converged);
    CHECK(res.iterations <= 2);
    CHECK((res.omega - state.omega).norm() <= 1e-9);
    CHECK((res.omega_dot - state.omega_dot).norm() <= 1e-9);
    CHECK((res.specific_force - state.specific_force).norm() <= 1e-9);
  }
}

TEST_CASE("gauss-newton recovers from a perturbed start on noiseless data")
{
  std::mt19937 gen(61);
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);
  for (int i = 0; i < 10; ++i)
  {
    const MotionState state = sample_state(gen, 20.0);
    const Measurement meas = noiseless(state, geom);
    const Eigen::Vector3d init = state.omega + deg2rad(10.0) * oracles::random_unit(gen);
    const FusionResult res = gauss_newton_solve(meas, geom, noise, init);
    CHECK(res.converged);
    CHECK((res.omega - state.omega).norm() <= 1e-8);
    CHECK((res.omega_dot - state.omega_dot).norm() <= 1e-7);
    CHECK((res.specific_force - state.specific_force).norm() <= 1e-7);
  }
}

TEST_CASE("accepted gauss-newton steps never increase the cost")
{
  std::mt19937 gen(71);
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);
  for (int i = 0; i < 20; ++i)
  {
    const MotionState state = sample_state(gen, 30.0);
    CounterRng rng(100u + i, 0u);
    const Measurement meas = simulate_measurement(state, geom, noise, rng);
    const Eigen::Vector3d init = state.omega + deg2rad(200.0) * oracles::random_unit(gen);
    const FusionResult res = gauss_newton_solve(meas, geom, noise, init);
    REQUIRE(res.cost_history.size() >= 1);
    for (size_t k = 1; k < res.cost_history.size(); ++k)
    {
      CHECK(res.cost_history[k] <= res.cost_history[k - 1]);
    }
  }
}

TEST_CASE("estimate equals the plain solve when nothing is saturated")
{
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);
  MotionState state;
  state.omega = Eigen::Vector3d(deg2rad(300.0), deg2rad(-100.0), deg2rad(50.0));
  state.specific_force = Eigen::Vector3d(0, 0, 9.81);
  const Measurement meas = simulate_measurement(state, geom, noise, 33u);

  const FusionResult via_estimate = estimate(meas, geom, noise);
  const FusionResult direct =
      gauss_newton_solve(meas, geom, noise, init_from_gyros(meas, geom, noise));
  CHECK((via_estimate.omega - direct.omega).norm() == 0.0);
  CHECK((via_estimate.omega_dot - direct.omega_dot).norm() == 0.0);
  CHECK(via_estimate.final_neg_loglik == direct.final_neg_loglik);
  CHECK(via_estimate.iterations == direct.iterations);
}

TEST_CASE("estimate handles a fully saturated axis")
{
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);
  MotionState state;
  state.omega = Eigen::Vector3d(deg2rad(2500.0), 0.0, 0.0);
  state.specific_force = Eigen::Vector3d(0, 0, 9.81);
  const Measurement meas = simulate_measurement(state, geom, noise, 404u);

  // All four x gyro channels clip.
  int clipped = 0;
  for (int k = 0; k < 12; k += 3)
  {
    clipped += meas.saturated[k] ? 1 : 0;
  }
  REQUIRE(clipped == 4);

  const FusionResult res = estimate(meas, geom, noise);
  CHECK(res.converged);
  CHECK(res.omega.x() > 0.0);
  // Accelerometer-driven magnitude: allow several saturated-bound sigmas.
  CHECK(std::abs(res.omega.x() - state.omega.x()) <= deg2rad(40.0));
  CHECK(std::abs(res.omega.y()) <= deg2rad(3.0));
  CHECK(std::abs(res.omega.z()) <= deg2rad(3.0));

  // The clipped rows are excluded, everything else is kept.
  for (int k = 0; k < 12; ++k)
  {
    CHECK(res.used_channels[geom.n_accel_channels() + k] == (k % 3 != 0));
  }
}

TEST_CASE("estimate handles every gyro saturated on a 3d array")
{
  const ArrayGeometry geom = make_octahedron_array(0.005, 6, deg2rad(2000.0));
  const NoiseModel noise = paper_noise(geom);
  MotionState state;
  state.omega = deg2rad(4000.0) / std::sqrt(3.0) * Eigen::Vector3d(1, 1, 1);
  state.specific_force = Eigen::Vector3d(0, 0, 9.81);
  const Measurement meas = simulate_measurement(state, geom, noise, 505u);
  for (const bool flag : meas.saturated)
  {
    REQUIRE(flag);
  }

  const FusionResult res = estimate(meas, geom, noise);
  CHECK(res.converged);
  CHECK((res.omega - state.omega).norm() <= deg2rad(60.0));
  CHECK(res.omega.x() > 0.0);
  CHECK(res.omega.y() > 0.0);
  CHECK(res.omega.z() > 0.0);
}

TEST_CASE("estimate resolves mixed signs when every gyro is saturated")
{
  const ArrayGeometry geom = make_octahedron_array(0.005, 6, deg2rad(2000.0));
  const NoiseModel noise = paper_noise(geom);
  MotionState state;
  state.omega = deg2rad(4200.0) * Eigen::Vector3d(-1, 1, -1).normalized();
  state.omega_dot = Eigen::Vector3d(5.0, -8.0, 2.0);
  state.specific_force = Eigen::Vector3d(0, 0, 9.81);

  for (std::uint64_t seed = 900; seed < 910; ++seed)
  {
    const Measurement meas = simulate_measurement(state, geom, noise, seed);
    bool all = true;
    for (const bool flag : meas.saturated)
    {
      all = all && flag;
    }
    REQUIRE(all);
    const FusionResult res = estimate(meas, geom, noise);
    CHECK(res.converged);
    CHECK(res.omega.x() < 0.0);
    CHECK(res.omega.y() > 0.0);
    CHECK(res.omega.z() < 0.0);
    CHECK((res.omega - state.omega).norm() <= deg2rad(60.0));
  }
}

TEST_CASE("estimate accepts a prior start when everything is saturated")
{
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);
  MotionState state;
  state.omega = Eigen::Vector3d(deg2rad(2400.0), deg2rad(2200.0), deg2rad(2600.0));
  const Measurement meas = simulate_measurement(state, geom, noise, 606u);
  for (const bool flag : meas.saturated)
  {
    REQUIRE(flag);
  }

  const FusionResult res = estimate(meas, geom, noise, {}, state.omega);
  CHECK(res.converged);
  CHECK((res.omega - state.omega).norm() <= deg2rad(80.0));
}

TEST_CASE("estimate refuses unidentifiable geometries")
{
  ArrayGeometry no_gyro = planar_fig_array();
  no_gyro.n_gyro_triads = 0;
  const NoiseModel noise = paper_noise(no_gyro);
  Measurement meas;
  meas.accel.setZero(no_gyro.n_accel_channels());
  meas.gyro.resize(0);
  meas.saturated.clear();
  CHECK_THROWS_AS(estimate(meas, no_gyro, noise), ValidationError);
}

TEST_CASE("estimates are equivariant under a common rotation")
{
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(0.83, Eigen::Vector3d(1, -2, 0.5).normalized()).toRotationMatrix();

  const ArrayGeometry geom = planar_fig_array();
  ArrayGeometry rotated = geom;
  for (auto& r : rotated.accel_positions)
  {
    r = (rot * r).eval();
  }
  const NoiseModel noise = paper_noise(geom);

  MotionState state;
  state.omega = Eigen::Vector3d(3.0, -7.0, 2.0);
  state.omega_dot = Eigen::Vector3d(11.0, 4.0, -6.0);
  state.specific_force = Eigen::Vector3d(1.5, 0.2, 9.0);

  MotionState rotated_state;
  rotated_state.omega = rot * state.omega;
  rotated_state.omega_dot = rot * state.omega_dot;
  rotated_state.specific_force = rot * state.specific_force;

  const Measurement meas = noiseless(state, geom);
  const Measurement rotated_meas = noiseless(rotated_state, rotated);

  const FusionResult res = estimate(meas, geom, noise);
  const FusionResult rotated_res = estimate(rotated_meas, rotated, noise);

  CHECK((rotated_res.omega - rot * res.omega).norm() <= 1e-8);
  CHECK((rotated_res.omega_dot - rot * res.omega_dot).norm() <= 1e-8);
  CHECK((rotated_res.specific_force - rot * res.specific_force).norm() <= 1e-8);
}

TEST_CASE("pruned estimates equal a model built without those channels")
{
  const ArrayGeometry geom = planar_fig_array();
  const NoiseModel noise = paper_noise(geom);

  // Hand-built measurement where the last gyro triad clipped on all axes.
  std::mt19937 gen(81);
  Measurement meas;
  meas.accel.resize(geom.n_accel_channels());
  for (Eigen::Index k = 0; k < meas.accel.size(); ++k)
  {
    meas.accel[k] = oracles::random_vector(gen, 5.0)[0];
  }
  meas.gyro.resize(12);
  for (int k = 0; k < 9; ++k)
  {
    meas.gyro[k] = oracles::random_vector(gen, 2.0)[0];
  }
  const double limit = geom.gyro_saturation;
  meas.gyro[9] = limit;
  meas.gyro[10] = limit;
  meas.gyro[11] = -limit;
  meas.saturated.assign(12, false);
  meas.saturated[9] = meas.saturated[10] = meas.saturated[11] = true;

  ArrayGeometry smaller = geom;
  smaller.n_gyro_triads = 3;
  const NoiseModel smaller_noise = paper_noise(smaller);
  Measurement trimmed;
  trimmed.accel = meas.accel;
  trimmed.gyro = meas.gyro.head(9);
  trimmed.saturated.assign(9, false);

  const FusionResult a = estimate(meas, geom, noise);
  const FusionResult b = estimate(trimmed, smaller, smaller_noise);
  CHECK(a.omega.x() == b.omega.x());
  CHECK(a.omega.y() == b.omega.y());
  CHECK(a.omega.z() == b.omega.z());
  CHECK(a.omega_dot.x() == b.omega_dot.x());
  CHECK(a.specific_force.z() == b.specific_force.z());
  CHECK(a.final_neg_loglik == b.final_neg_loglik);
}

TEST_CASE("noiseless end-to-end recovery on both reference arrays")
{
  std::mt19937 gen(91);
  const std::vector<ArrayGeometry> geometries = {planar_fig_array(),
                                                 make_octahedron_array(0.005, 6, deg2rad(2000.0))};
  for (const auto& geom : geometries)
  {
    const NoiseModel noise = paper_noise(geom);
    for (int i = 0; i < 100; ++i)
    {
      // Stay below the clipping limit so no channel is flagged.
      const MotionState state = sample_state(gen, deg2rad(1500.0) / std::sqrt(3.0));
      const Measurement meas = noiseless(state, geom);
      const FusionResult res = estimate(meas, geom, noise);
      CHECK(res.converged);
      CHECK((res.omega - state.omega).norm() <= 1e-8 * (1.0 + state.omega.norm()));
      CHECK((res.omega_dot - state.omega_dot).norm() <= 1e-8 * (1.0 + state.omega_dot.norm()));
      CHECK((res.specific_force - state.specific_force).norm() <=
            1e-8 * (1.0 + state.specific_force.norm()));
    }
  }
}
