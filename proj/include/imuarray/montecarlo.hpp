/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "imuarray/estimator.hpp"
#include "imuarray/geometry.hpp"
#include "imuarray/signal_model.hpp"
#include "imuarray/types.hpp"

namespace imuarray
{

enum class McMethod
{
  ml,
  tensor,
  gyro_average
};

const char* to_string(McMethod method);

/// One RMSE-versus-bound study: a speed sweep along a fixed rotation
/// axis, repeated estimation on noisy draws, optional i.i.d. Gaussian
/// perturbation of the true sensor positions (the estimator always uses
/// the nominal ones).
struct McScenario
{
  ArrayGeometry geom;
  double accel_var = 0.0; ///< [(m/s^2)^2]
  double gyro_var = 0.0;  ///< [(rad/s)^2]
  std::vector<double> speeds; ///< [rad/s]
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX(); ///< unit rotation axis
  Eigen::Vector3d omega_dot = Eigen::Vector3d::Zero();
  Eigen::Vector3d specific_force = Eigen::Vector3d::Zero();
  int n_runs = 10000;
  std::uint64_t master_seed = 1;
  std::vector<McMethod> methods = {McMethod::ml};
  double position_perturbation_std = 0.0; ///< [m], 0 disables
  SolverOptions solver;

  void validate() const;
};

/// Axis index 0..2 for x/y/z; 3 for the rotation-speed error |w_hat|-|w|.
inline constexpr int kNormAxis = 3;

struct McRow
{
  double speed = 0.0; ///< [rad/s]
  McMethod method = McMethod::ml;
  int axis = 0;
  double rmse = 0.0;       ///< [rad/s]; NaN when the method was unavailable
  double sqrt_crb = 0.0;   ///< [rad/s]
  double sqrt_crb_sat = 0.0; ///< [rad/s]; +inf where unbounded
  int n_runs = 0;
  int failures = 0;
};

struct McReport
{
  std::vector<McRow> rows;
  std::uint64_t master_seed = 0;
  int n_runs = 0;
  double wall_seconds = 0.0;
  long total_simulated = 0;
};

/// Runs the scenario. Deterministic for a given master seed regardless
/// of the thread count: every run draws from its own counter-based
/// stream and partial sums are reduced in fixed chunk order.
McReport run_scenario(const McScenario& scenario, int threads = 1);

/// Per-axis weighted mean of unsaturated gyro channels; identical to
/// the solver initialization, exposed as a named reference method.
/// Throws ValidationError when some axis has no unsaturated channel.
Eigen::Vector3d gyro_average_baseline(const Measurement& y, const ArrayGeometry& geom,
                                      const NoiseModel& noise);

} // namespace imuarray
