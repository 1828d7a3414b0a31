/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "imuarray/geometry.hpp"
#include "imuarray/random.hpp"
#include "imuarray/types.hpp"

namespace imuarray
{

/// True (or estimated) motion of the array frame.
struct MotionState
{
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();          ///< angular velocity [rad/s]
  Eigen::Vector3d omega_dot = Eigen::Vector3d::Zero();      ///< angular acceleration [rad/s^2]
  Eigen::Vector3d specific_force = Eigen::Vector3d::Zero(); ///< at the array origin [m/s^2]

  /// Linear model parameters [omega_dot; specific_force].
  Vector6d linear_params() const;
  /// Full parameter vector [omega; omega_dot; specific_force].
  Vector9d parameters() const;
};

/// Stacked sensor readings with per-channel gyroscope clipping flags.
struct Measurement
{
  Eigen::VectorXd accel; ///< 3*Ns values [m/s^2]
  Eigen::VectorXd gyro;  ///< 3*Nw values [rad/s]
  std::vector<bool> saturated; ///< one flag per gyro scalar channel

  /// Accel and gyro parts stacked into one vector.
  Eigen::VectorXd stacked() const;

  /// Throws ValidationError on any dimension mismatch with the geometry.
  void validate(const ArrayGeometry& geom) const;
};

/// Measurement-error covariance for the stacked channel vector.
///
/// Either i.i.d. per sensor kind (accelerometer variance, gyroscope
/// variance) or a full symmetric positive-definite matrix.
class NoiseModel
{
public:
  static NoiseModel iid(double accel_var, double gyro_var, const ArrayGeometry& geom);
  static NoiseModel full_covariance(const Eigen::MatrixXd& q);

  const Eigen::MatrixXd& covariance() const { return q_; }
  /// Lower Cholesky factor of the covariance (cached).
  const Eigen::MatrixXd& cholesky_lower() const { return chol_lower_; }

  bool is_iid() const { return iid_; }
  /// Only meaningful when is_iid().
  double accel_var() const { return accel_var_; }
  double gyro_var() const { return gyro_var_; }

  Eigen::Index dim() const { return q_.rows(); }

private:
  NoiseModel() = default;

  Eigen::MatrixXd q_;
  Eigen::MatrixXd chol_lower_;
  bool iid_ = false;
  double accel_var_ = 0.0;
  double gyro_var_ = 0.0;
};

/// Centrifugal part of the accelerometer model: triad block i is
/// skew(omega)^2 * r_i. Even in omega.
Eigen::VectorXd centrifugal_response(const Eigen::Vector3d& omega, const ArrayGeometry& geom);

/// Nonlinear part of the full stacked model: centrifugal accelerometer
/// blocks followed by the angular velocity replicated per gyro triad.
Eigen::VectorXd nonlinear_response(const Eigen::Vector3d& omega, const ArrayGeometry& geom);

/// Derivative of omega -> skew(omega)^2 * r evaluated at omega:
/// skew(omega)^T * skew(r) + skew(r x omega).
Eigen::Matrix3d centrifugal_jacobian(const Eigen::Vector3d& omega, const Eigen::Vector3d& r);

/// Jacobian of nonlinear_response with respect to omega,
/// 3*(Ns+Nw) x 3: stacked centrifugal blocks, then identity blocks.
Eigen::MatrixXd nonlinear_jacobian(const Eigen::Vector3d& omega, const ArrayGeometry& geom);

/// Noise-free stacked response for a full motion state.
Eigen::VectorXd noiseless_measurement(const MotionState& state, const ArrayGeometry& geom);

/// Draws one measurement: model response plus correlated Gaussian noise
/// from the given stream; gyro channels beyond the saturation limit are
/// clipped to +-limit and flagged.
Measurement simulate_measurement(const MotionState& state, const ArrayGeometry& geom,
                                 const NoiseModel& noise, CounterRng& rng);

/// Convenience overload seeding a fresh stream (master_seed, stream 0).
Measurement simulate_measurement(const MotionState& state, const ArrayGeometry& geom,
                                 const NoiseModel& noise, std::uint64_t seed);

} // namespace imuarray
