/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <Eigen/Core>

#include "imuarray/geometry.hpp"
#include "imuarray/signal_model.hpp"
#include "imuarray/types.hpp"

namespace imuarray
{

/// Fisher information over the parameters [omega; omega_dot; s].
/// Independent of omega_dot and s (the model is linear in them).
struct FisherInfo
{
  Matrix9d matrix = Matrix9d::Zero();

  Eigen::Matrix3d omega_block() const { return matrix.block<3, 3>(0, 0); }
  Eigen::Matrix3d omega_omega_dot_block() const { return matrix.block<3, 3>(0, 3); }
  Eigen::Matrix3d omega_dot_block() const { return matrix.block<3, 3>(3, 3); }
  Eigen::Matrix3d force_block() const { return matrix.block<3, 3>(6, 6); }
};

enum class CrbRegime
{
  full,          ///< all channels inform the bound
  gyro_saturated ///< gyros removed: only sign information, no metric information
};

/// Lower bounds on the covariance of unbiased estimates, per block.
/// Diagonal entries are +inf where the information matrix has no
/// support (unbounded directions); `bounded` is false in that case.
struct CrbReport
{
  Eigen::Matrix3d crb_omega = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d crb_omega_dot = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d crb_s = Eigen::Matrix3d::Zero();
  CrbRegime regime = CrbRegime::full;
  bool bounded = true;
};

FisherInfo fisher_info(const Eigen::Vector3d& omega, const ArrayGeometry& geom,
                       const NoiseModel& noise);

/// Inverts the 9x9 information matrix (pseudo-inverse when singular,
/// with unbounded directions flagged on the diagonal). The saturated
/// regime removes every gyro row from the model first.
CrbReport crb_full(const Eigen::Vector3d& omega, const ArrayGeometry& geom,
                   const NoiseModel& noise, CrbRegime regime = CrbRegime::full);

/// Angular-velocity information block via the Schur complement against
/// the six linear parameters; an algebraically independent route to the
/// omega block of crb_full.
Eigen::Matrix3d omega_info_schur(const Eigen::Vector3d& omega, const ArrayGeometry& geom,
                                 const NoiseModel& noise);

/// Closed-form angular-velocity information for a centered planar square
/// grid (Ns a perfect square >= 4) with i.i.d. noise.
Eigen::Matrix3d square_grid_omega_info(const Eigen::Vector3d& omega, double spacing, int n_accel,
                                       int n_gyro, double accel_var, double gyro_var);

/// Geometry-checked overload: validates that the array is a centered
/// planar square grid and the noise i.i.d., then derives the spacing.
Eigen::Matrix3d square_grid_omega_info(const Eigen::Vector3d& omega, const ArrayGeometry& geom,
                                       const NoiseModel& noise);

/// Closed-form angular-velocity bound for the same grids when all gyros
/// are saturated. Requires omega_x^2 + omega_y^2 > 0 and omega_z != 0;
/// valid when every axis is beyond the gyro range. Off-diagonal entries
/// are computed numerically.
Eigen::Matrix3d square_grid_saturated_omega_crb(const Eigen::Vector3d& omega, double spacing,
                                                int n_accel, double accel_var);

/// Angular-acceleration bound via the Schur complement of the
/// symmetric-array information blocks; requires i.i.d. noise and
/// sum(r_i) = 0. Throws on singular information.
Eigen::Matrix3d angular_accel_crb(const Eigen::Vector3d& omega, const ArrayGeometry& geom,
                                  const NoiseModel& noise);

/// Closed-form angular-acceleration bound for a centered planar square
/// grid in linear motion (omega = 0).
Eigen::Matrix3d square_grid_linear_motion_accel_crb(double spacing, int n_accel,
                                                    double accel_var);

} // namespace imuarray
