/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "imuarray/geometry.hpp"
#include "imuarray/signal_model.hpp"
#include "imuarray/types.hpp"

namespace imuarray
{

struct SolverOptions
{
  int max_iterations = 50;
  double step_tolerance = 1e-10; ///< [rad/s]
  double cost_tolerance = 1e-12; ///< relative decrease of the concentrated cost
  int line_search_halvings = 20;
};

struct FusionResult
{
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega_dot = Eigen::Vector3d::Zero();
  Eigen::Vector3d specific_force = Eigen::Vector3d::Zero();
  int iterations = 0;
  bool converged = false;
  double final_neg_loglik = 0.0;
  std::vector<bool> used_channels; ///< one flag per stacked channel
  std::vector<double> cost_history; ///< concentrated cost after each accepted step

  MotionState state() const { return MotionState{omega, omega_dot, specific_force}; }
};

/// Weighted-least-squares solution for the linear parameters [wdot; s]
/// at a fixed angular velocity, over the unsaturated channels.
/// Throws ValidationError when the design matrix is rank deficient.
Vector6d wls_linear_params(const Eigen::Vector3d& omega, const Measurement& y,
                           const ArrayGeometry& geom, const NoiseModel& noise);

/// Residual-space projection weight: annihilates the range of the linear
/// design matrix; symmetric positive semidefinite.
Eigen::MatrixXd residual_projection(const ArrayGeometry& geom, const NoiseModel& noise);

/// Concentrated negative log-likelihood (constant dropped):
/// half the projection-weighted squared residual of the nonlinear part.
double concentrated_neg_loglik(const Eigen::Vector3d& omega, const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& projection, const ArrayGeometry& geom);

/// Angular velocity initialization: weighted least squares over the
/// unsaturated gyro channels. Throws ValidationError when some axis has
/// no unsaturated channel (callers should fall through to the saturated
/// start strategy in estimate()).
Eigen::Vector3d init_from_gyros(const Measurement& y, const ArrayGeometry& geom,
                                const NoiseModel& noise);

/// Gauss-Newton minimization of the concentrated cost on the full
/// (unpruned) model, with a step-halving safeguard. Non-convergence is
/// reported in the result, not thrown.
FusionResult gauss_newton_solve(const Measurement& y, const ArrayGeometry& geom,
                                const NoiseModel& noise, const Eigen::Vector3d& init,
                                const SolverOptions& opts = {});

/// Full fusion driver.
///
/// Saturated gyro channels are removed from the model. When every axis
/// still has a gyro reading the solver starts from the gyro WLS
/// estimate; otherwise multiple starts are generated from the clipping
/// sign pattern: the prior (when given), the accelerometer-tensor
/// estimate (when the geometry spans 3D), and a log-spaced magnitude
/// grid. The candidate with the smallest concentrated negative
/// log-likelihood and a sign pattern consistent with the clipped gyros
/// wins.
FusionResult estimate(const Measurement& y, const ArrayGeometry& geom, const NoiseModel& noise,
                      const SolverOptions& opts = {},
                      const std::optional<Eigen::Vector3d>& prior_omega = std::nullopt);

} // namespace imuarray
