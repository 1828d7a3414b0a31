/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

// Acceptance suite: end-to-end accuracy and agreement checks for the
// measurement fusion library, one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "imuarray/crb.hpp"
#include "imuarray/estimator.hpp"
#include "imuarray/montecarlo.hpp"
#include "imuarray/tensor.hpp"
#include "imuarray/units.hpp"

#include "support/oracles.hpp"

using namespace imuarray;

namespace
{

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail)
{
  std::printf("%s  criterion %d  %s  (%s)\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass)
  {
    ++g_failures;
  }
}

int worker_threads()
{
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::max(1u, std::min(hw, 8u)));
}

ArrayGeometry planar_array()
{
  return make_square_grid_array(0.01, 2, 4, deg2rad(2000.0));
}

ArrayGeometry cube_array()
{
  return make_octahedron_array(0.005, 6, deg2rad(2000.0));
}

McScenario base_scenario(const ArrayGeometry& geom)
{
  McScenario sc;
  sc.geom = geom;
  sc.accel_var = 0.01; // (m/s^2)^2
  const double gyro_std = deg2rad(1.0);
  sc.gyro_var = gyro_std * gyro_std;
  sc.specific_force = Eigen::Vector3d(0.0, 0.0, 9.81);
  sc.n_runs = 10000;
  sc.methods = {McMethod::ml};
  return sc;
}

double row_value(const McReport& report, double speed, McMethod method, int axis,
                 double McRow::* field)
{
  for (const auto& row : report.rows)
  {
    if (row.method == method && row.axis == axis && std::abs(row.speed - speed) < 1e-12)
    {
      return row.*field;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

int row_failures(const McReport& report, double speed, McMethod method)
{
  for (const auto& row : report.rows)
  {
    if (row.method == method && row.axis == 0 && std::abs(row.speed - speed) < 1e-12)
    {
      return row.failures;
    }
  }
  return -1;
}

std::string fmt(const char* format, ...)
{
  char buffer[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof(buffer), format, args);
  va_end(args);
  return buffer;
}

// 1. Standstill: per-axis rate RMSE equals the gyro-average floor.
void criterion_1()
{
  const auto t0 = std::chrono::steady_clock::now();
  McScenario sc = base_scenario(planar_array());
  sc.speeds = {0.0};
  sc.direction = Eigen::Vector3d::UnitX();
  sc.master_seed = 1001;
  const McReport mc = run_scenario(sc, worker_threads());
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const double base = deg2rad(1.0) / 2.0; // gyro std over sqrt(4)
  bool pass = seconds < 10.0;
  double worst = 0.0;
  for (int axis = 0; axis < 3; ++axis)
  {
    const double rmse = row_value(mc, 0.0, McMethod::ml, axis, &McRow::rmse);
    const double rel = std::abs(rmse / base - 1.0);
    worst = std::max(worst, rel);
    pass = pass && rel <= 0.03;
  }
  report(1, "standstill base level", pass,
         fmt("max |rmse/0.5dps - 1| = %.4f (tol 0.03), runtime %.1f s (limit 10)", worst,
             seconds));
}

// 2. The fusion attains the bound below saturation, per axis, for
// in-plane and out-of-plane rotations; uninformed axes stay at the
// floor.
void criterion_2()
{
  const auto t0 = std::chrono::steady_clock::now();
  const double base = deg2rad(1.0) / 2.0;
  bool pass = true;
  double worst_ratio_err = 0.0;
  double worst_base_err = 0.0;

  struct Sweep
  {
    Eigen::Vector3d direction;
    std::vector<int> floor_axes;
    std::uint64_t seed;
  };
  const std::vector<Sweep> sweeps = {
      {Eigen::Vector3d::UnitX(), {2}, 2001},    // in-plane: z stays at the floor
      {Eigen::Vector3d::UnitZ(), {0, 1}, 2002}, // out-of-plane: x and y stay at the floor
  };

  for (const auto& sweep : sweeps)
  {
    McScenario sc = base_scenario(planar_array());
    sc.speeds = {deg2rad(500.0), deg2rad(1000.0), deg2rad(1500.0)};
    sc.direction = sweep.direction;
    sc.master_seed = sweep.seed;
    const McReport mc = run_scenario(sc, worker_threads());

    for (const double speed : sc.speeds)
    {
      for (int axis = 0; axis < 3; ++axis)
      {
        const double rmse = row_value(mc, speed, McMethod::ml, axis, &McRow::rmse);
        const double bound = row_value(mc, speed, McMethod::ml, axis, &McRow::sqrt_crb);
        const double ratio = rmse / bound;
        worst_ratio_err = std::max(worst_ratio_err, std::abs(ratio - 1.0));
        pass = pass && ratio >= 0.95 && ratio <= 1.05;
      }
      for (const int axis : sweep.floor_axes)
      {
        const double rmse = row_value(mc, speed, McMethod::ml, axis, &McRow::rmse);
        const double rel = std::abs(rmse / base - 1.0);
        worst_base_err = std::max(worst_base_err, rel);
        pass = pass && rel <= 0.03;
      }
    }
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  pass = pass && seconds < 120.0;
  report(2, "bound attainment below saturation", pass,
         fmt("max |rmse/bound - 1| = %.4f (tol 0.05), floor axes max err %.4f (tol 0.03), "
             "runtime %.1f s (limit 120)",
             worst_ratio_err, worst_base_err, seconds));
}

// 3. Closed forms against the general information machinery.
void criterion_3()
{
  std::mt19937 gen(3003);
  double worst = 0.0;
  const double gyro_var = deg2rad(1.0) * deg2rad(1.0);
  for (const int side : {2, 3})
  {
    const ArrayGeometry geom = make_square_grid_array(0.01, side, 4, deg2rad(2000.0));
    const NoiseModel noise = NoiseModel::iid(0.01, gyro_var, geom);
    for (int i = 0; i < 100; ++i)
    {
      const Eigen::Vector3d omega = oracles::random_vector(gen, 50.0);
      const Eigen::Matrix3d closed = square_grid_omega_info(omega, geom, noise);
      const Eigen::Matrix3d general = omega_info_schur(omega, geom, noise);
      worst = std::max(worst, (closed - general).norm() / general.norm());
    }
  }

  // Linear-motion angular-acceleration bound, closed form versus the
  // full numerical inverse, plus the frozen worked example.
  const ArrayGeometry grid = planar_array();
  const NoiseModel noise = NoiseModel::iid(0.01, gyro_var, grid);
  const CrbReport numerical = crb_full(Eigen::Vector3d::Zero(), grid, noise);
  const Eigen::Matrix3d closed = square_grid_linear_motion_accel_crb(0.01, 4, 0.01);
  const double accel_dev = (numerical.crb_omega_dot - closed).norm() / closed.norm();
  worst = std::max(worst, accel_dev);

  const Eigen::Matrix3d expected = Eigen::Vector3d(100.0, 100.0, 50.0).asDiagonal();
  const double example_dev = (numerical.crb_omega_dot - expected).norm() / expected.norm();
  worst = std::max(worst, example_dev);

  report(3, "closed-form agreement", worst <= 1e-9,
         fmt("max relative deviation %.2e (tol 1e-9)", worst));
}

// 4. Saturated regime: with the x gyros clipped the x-rate error tracks
// the accelerometer-only bound.
void criterion_4()
{
  McScenario sc = base_scenario(planar_array());
  sc.speeds = {deg2rad(2500.0), deg2rad(3500.0)};
  sc.direction = Eigen::Vector3d::UnitX();
  sc.master_seed = 4004;
  const McReport mc = run_scenario(sc, worker_threads());

  bool pass = true;
  std::string detail;
  for (const double speed : sc.speeds)
  {
    const double rmse = row_value(mc, speed, McMethod::ml, 0, &McRow::rmse);
    const double bound = row_value(mc, speed, McMethod::ml, 0, &McRow::sqrt_crb_sat);
    const int failures = row_failures(mc, speed, McMethod::ml);
    const double ratio = rmse / bound;
    pass = pass && ratio >= 0.90 && ratio <= 1.10 && failures == 0;
    detail += fmt("%s%.0f dps: rmse/bound = %.3f, failures %d", detail.empty() ? "" : "; ",
                  rad2deg(speed), ratio, failures);
  }
  report(4, "saturated-gyro range extension", pass, detail + " (tol [0.90, 1.10])");
}

// 5. The fusion beats the tensor baseline on the 3d array and stays
// near the regime-appropriate bound.
void criterion_5()
{
  McScenario sc = base_scenario(cube_array());
  sc.speeds = {deg2rad(2500.0), deg2rad(3000.0), deg2rad(4000.0)};
  sc.direction = Eigen::Vector3d(1, 1, 1).normalized();
  sc.methods = {McMethod::ml, McMethod::tensor};
  sc.master_seed = 5005;
  const McReport mc = run_scenario(sc, worker_threads());

  bool pass = true;
  double worst_ratio = 0.0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const double speed : sc.speeds)
  {
    // Every scalar gyro channel clips once the per-axis rate passes the
    // limit.
    const bool saturated = speed / std::sqrt(3.0) > deg2rad(2000.0);
    for (int axis = 0; axis < 3; ++axis)
    {
      const double ml = row_value(mc, speed, McMethod::ml, axis, &McRow::rmse);
      const double tensor = row_value(mc, speed, McMethod::tensor, axis, &McRow::rmse);
      const double bound =
          saturated ? row_value(mc, speed, McMethod::ml, axis, &McRow::sqrt_crb_sat)
                    : row_value(mc, speed, McMethod::ml, axis, &McRow::sqrt_crb);
      worst_ratio = std::max(worst_ratio, ml / bound);
      worst_margin = std::min(worst_margin, tensor / ml);
      pass = pass && tensor >= ml && ml / bound <= 1.1;
    }
  }
  report(5, "tensor-method comparison", pass,
         fmt("min rmse(tensor)/rmse(ml) = %.2f (need >= 1), max rmse(ml)/bound = %.3f "
             "(tol 1.1)",
             worst_margin, worst_ratio));
}

// 6. Noise-free recovery through the full pipelines.
void criterion_6()
{
  std::mt19937 gen(6006);
  const double gyro_var = deg2rad(1.0) * deg2rad(1.0);
  bool pass = true;
  double worst = 0.0;

  for (const ArrayGeometry& geom : {planar_array(), cube_array()})
  {
    const NoiseModel noise = NoiseModel::iid(0.01, gyro_var, geom);
    for (int i = 0; i < 100; ++i)
    {
      MotionState state;
      state.omega = oracles::random_vector(gen, deg2rad(1500.0) / std::sqrt(3.0));
      state.omega_dot = oracles::random_vector(gen, 50.0);
      state.specific_force = oracles::random_vector(gen, 12.0);

      const Eigen::VectorXd clean = noiseless_measurement(state, geom);
      Measurement meas;
      meas.accel = clean.head(geom.n_accel_channels());
      meas.gyro = clean.tail(geom.n_gyro_channels());
      meas.saturated.assign(geom.n_gyro_channels(), false);

      const FusionResult res = estimate(meas, geom, noise);
      const double err = (res.omega - state.omega).norm() +
                         (res.omega_dot - state.omega_dot).norm() +
                         (res.specific_force - state.specific_force).norm();
      const double scale = 1.0 + state.parameters().norm();
      worst = std::max(worst, err / scale);
      pass = pass && res.converged && err <= 1e-8 * scale;
    }
  }

  // Tensor pipeline on the 3d array, sign resolved from the true signs.
  const ArrayGeometry cube = cube_array();
  for (int i = 0; i < 100; ++i)
  {
    MotionState state;
    state.omega = oracles::random_vector(gen, 40.0);
    state.omega_dot = oracles::random_vector(gen, 60.0);
    state.specific_force = oracles::random_vector(gen, 12.0);
    const Eigen::VectorXd clean = noiseless_measurement(state, cube);
    const Eigen::Vector3i signs(state.omega.x() > 0 ? 1 : -1, state.omega.y() > 0 ? 1 : -1,
                                state.omega.z() > 0 ? 1 : -1);
    const TensorEstimate est = tensor_estimate(clean.head(cube.n_accel_channels()), cube, signs);
    const double err = (*est.omega_signed - state.omega).norm() +
                       (est.omega_dot - state.omega_dot).norm() +
                       (est.s_hat - state.specific_force).norm();
    const double scale = 1.0 + state.parameters().norm();
    worst = std::max(worst, err / scale);
    pass = pass && err <= 1e-8 * scale;
  }

  report(6, "noise-free end-to-end recovery", pass,
         fmt("max relative error %.2e (tol 1e-8)", worst));
}

// 7. Analytic sensitivities against central differences, and the
// projection identity.
void criterion_7()
{
  std::mt19937 gen(7007);
  bool pass = true;
  double worst_jac = 0.0;

  for (int i = 0; i < 100; ++i)
  {
    ArrayGeometry geom;
    geom.n_gyro_triads = 1 + i % 3;
    geom.gyro_saturation = 1e6;
    const int ns = 3 + i % 4;
    for (int t = 0; t < ns; ++t)
    {
      geom.accel_positions.push_back(oracles::random_vector(gen, 0.03));
    }
    const Eigen::Vector3d omega = oracles::random_vector(gen, 25.0);
    const Eigen::MatrixXd analytic = nonlinear_jacobian(omega, geom);
    const Eigen::MatrixXd numeric = oracles::finite_difference_jacobian(
        [&geom](const Eigen::Vector3d& w) { return nonlinear_response(w, geom); }, omega);
    const double err = (analytic - numeric).cwiseAbs().maxCoeff();
    worst_jac = std::max(worst_jac, err);
    pass = pass && err <= 1e-6;
  }

  const ArrayGeometry geom = planar_array();
  const NoiseModel noise = NoiseModel::iid(0.01, deg2rad(1.0) * deg2rad(1.0), geom);
  const Eigen::MatrixXd p = residual_projection(geom, noise);
  const Eigen::MatrixXd h = linear_design_matrix(geom);
  const double ph = (p * h).cwiseAbs().maxCoeff();
  pass = pass && ph <= 1e-10;

  report(7, "jacobian and projection identities", pass,
         fmt("max jacobian deviation %.2e (tol 1e-6), max |P H| %.2e (tol 1e-10)", worst_jac,
             ph));
}

// 8. Sensor-position uncertainty: the speed error grows with the rate
// and dominates the clean-geometry error at high speed.
void criterion_8()
{
  McScenario sc = base_scenario(planar_array());
  sc.speeds = {deg2rad(500.0), deg2rad(4000.0)};
  sc.direction = Eigen::Vector3d::UnitX();
  sc.master_seed = 8008;
  sc.position_perturbation_std = 1e-4; // 0.1 mm

  const McReport perturbed = run_scenario(sc, worker_threads());

  McScenario clean = sc;
  clean.position_perturbation_std = 0.0;
  clean.speeds = {deg2rad(4000.0)};
  const McReport unperturbed = run_scenario(clean, worker_threads());

  const double pert_low =
      row_value(perturbed, deg2rad(500.0), McMethod::ml, kNormAxis, &McRow::rmse);
  const double pert_high =
      row_value(perturbed, deg2rad(4000.0), McMethod::ml, kNormAxis, &McRow::rmse);
  const double clean_high =
      row_value(unperturbed, deg2rad(4000.0), McMethod::ml, kNormAxis, &McRow::rmse);

  const bool pass = pert_high > pert_low && pert_high > clean_high;
  report(8, "position-perturbation trend", pass,
         fmt("speed rmse [dps]: perturbed %.2f @500, %.2f @4000; clean %.2f @4000",
             rad2deg(pert_low), rad2deg(pert_high), rad2deg(clean_high)));
}

} // namespace

int main()
{
  const auto t0 = std::chrono::steady_clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d of 8 criteria passed in %.1f s\n", 8 - g_failures, seconds);
  return g_failures == 0 ? 0 : 1;
}
