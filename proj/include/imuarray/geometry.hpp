/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <vector>

#include <Eigen/Core>

#include "imuarray/types.hpp"

namespace imuarray
{

/// Physical layout of an inertial sensor array: accelerometer triad
/// positions in the array frame, the number of gyroscope triads (their
/// positions are irrelevant to the model), and the gyroscope clipping
/// limit.
struct ArrayGeometry
{
  std::vector<Eigen::Vector3d> accel_positions; ///< r_i [m]
  int n_gyro_triads = 0;
  double gyro_saturation = 0.0; ///< clipping limit [rad/s]

  int n_accel_triads() const { return static_cast<int>(accel_positions.size()); }
  int n_accel_channels() const { return 3 * n_accel_triads(); }
  int n_gyro_channels() const { return 3 * n_gyro_triads; }
  int n_channels() const { return n_accel_channels() + n_gyro_channels(); }

  /// Throws ValidationError when the configuration is not usable:
  /// no sensors at all, negative counts, non-finite positions, or a
  /// non-positive saturation limit.
  void validate() const;
};

enum class IdentifiabilityIssue
{
  none,
  sign_ambiguity_no_gyro,  ///< no gyroscope triad; the model is even in the angular rate
  too_few_accel_triads,    ///< fewer than three accelerometer triads
  positions_not_planar_spanning ///< positions collinear (or a single point)
};

struct IdentifiabilityVerdict
{
  bool identifiable = false;
  int h_rank = 0;            ///< numerical rank of the linear design matrix
  int position_span_dim = 0; ///< affine span dimension of the triad positions, 0..3
  IdentifiabilityIssue reason = IdentifiabilityIssue::none;
};

const char* to_string(IdentifiabilityIssue issue);

/// Skew-symmetric cross-product matrix: skew(a) * b == a x b.
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Euler-force design matrix, 3*Ns x 3; triad block i is -skew(r_i), so
/// that the block times an angular acceleration gives wdot x r_i.
Eigen::MatrixXd euler_design_matrix(const ArrayGeometry& geom);

/// Design matrix of the linear model parameters [wdot; s],
/// 3*(Ns+Nw) x 6; accelerometer rows are [euler_design | I3 stack],
/// gyroscope rows are zero.
Eigen::MatrixXd linear_design_matrix(const ArrayGeometry& geom);

/// Rank-based identifiability analysis: at least one gyroscope triad and
/// at least three accelerometer triads whose positions span a plane.
IdentifiabilityVerdict check_identifiability(const ArrayGeometry& geom);

/// Rank from singular values with a relative threshold.
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

/// n_side x n_side planar grid of accelerometer triads with the given
/// spacing, centered on the origin (z = 0).
ArrayGeometry make_square_grid_array(double spacing, int n_side, int n_gyro_triads,
                                     double gyro_saturation);

/// Six accelerometer triads at +-radius along each coordinate axis
/// (the face centers of a cube with edge 2*radius); spans 3D.
ArrayGeometry make_octahedron_array(double radius, int n_gyro_triads, double gyro_saturation);

} // namespace imuarray
