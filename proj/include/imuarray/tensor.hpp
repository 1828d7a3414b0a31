/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <optional>

#include <Eigen/Core>

#include "imuarray/geometry.hpp"
#include "imuarray/types.hpp"

namespace imuarray
{

/// Accelerometer-only baseline: unconstrained least squares of the
/// specific force and the 3x3 rotation tensor, followed by extraction
/// of the angular acceleration and the angular velocity up to sign.
struct TensorEstimate
{
  Eigen::Vector3d s_hat = Eigen::Vector3d::Zero();
  Eigen::Matrix3d w_hat = Eigen::Matrix3d::Zero();
  Eigen::Vector3d omega_dot = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega_abs = Eigen::Vector3d::Zero();            ///< per-axis magnitudes
  std::optional<Eigen::Vector3d> omega_signed = std::nullopt;     ///< after sign resolution
  Eigen::Matrix3d outer_product = Eigen::Matrix3d::Zero();        ///< rank-one omega outer product
  bool low_confidence_sign = false; ///< a needed gyro sign was 0 and defaulted to +
};

struct AngularVelocityExtraction
{
  Eigen::Vector3d omega_abs = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega_signed = Eigen::Vector3d::Zero();
  Eigen::Matrix3d outer_product = Eigen::Matrix3d::Zero();
  bool low_confidence = false;
};

/// Least squares fit of [s W] from the stacked accelerometer readings.
/// Requires at least four triads whose positions span 3D (the augmented
/// position matrix must have rank 4); throws ValidationError otherwise.
/// Fills only s_hat and w_hat.
TensorEstimate tensor_ls(const Eigen::VectorXd& y_accel, const ArrayGeometry& geom);

/// Angular acceleration from the antisymmetric part of the tensor.
/// The antisymmetric entries carry the angular acceleration twice, so
/// the paired differences are halved; validated against the noise-free
/// forward model.
Eigen::Vector3d angular_accel_from_tensor(const Eigen::Matrix3d& w);

/// Angular velocity magnitudes from the symmetric part of the tensor,
/// then sign resolution: the axis of largest magnitude takes its sign
/// from the gyros and the off-diagonal signs of the outer product fix
/// the remaining axes. gyro_signs entries are -1, 0, or +1; a 0 on a
/// needed axis falls back to + and flags low confidence.
AngularVelocityExtraction angular_velocity_from_tensor(const Eigen::Matrix3d& w,
                                                       const Eigen::Vector3i& gyro_signs);

/// Full pipeline: tensor fit plus both extractions.
TensorEstimate tensor_estimate(const Eigen::VectorXd& y_accel, const ArrayGeometry& geom,
                               const Eigen::Vector3i& gyro_signs);

} // namespace imuarray
