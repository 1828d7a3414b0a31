/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "imuarray/signal_model.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace imuarray
{

Vector6d MotionState::linear_params() const
{
  Vector6d phi;
  phi << omega_dot, specific_force;
  return phi;
}

Vector9d MotionState::parameters() const
{
  Vector9d theta;
  theta << omega, omega_dot, specific_force;
  return theta;
}

Eigen::VectorXd Measurement::stacked() const
{
  Eigen::VectorXd y(accel.size() + gyro.size());
  y << accel, gyro;
  return y;
}

void Measurement::validate(const ArrayGeometry& geom) const
{
  if (accel.size() != geom.n_accel_channels())
  {
    throw ValidationError("measurement accel size does not match geometry");
  }
  if (gyro.size() != geom.n_gyro_channels())
  {
    throw ValidationError("measurement gyro size does not match geometry");
  }
  if (static_cast<int>(saturated.size()) != geom.n_gyro_channels())
  {
    throw ValidationError("saturation mask size does not match geometry");
  }
  // A flagged channel carries a clipped reading at the limit.
  const double limit = geom.gyro_saturation;
  for (int j = 0; j < geom.n_gyro_channels(); ++j)
  {
    if (saturated[j] && std::abs(std::abs(gyro[j]) - limit) > 1e-9 * limit)
    {
      throw ValidationError("saturated gyro channel is not at the clipping limit");
    }
  }
}

NoiseModel NoiseModel::iid(double accel_var, double gyro_var, const ArrayGeometry& geom)
{
  if (geom.n_accel_channels() > 0 && !(accel_var > 0.0))
  {
    throw ValidationError("accelerometer variance must be positive");
  }
  if (geom.n_gyro_channels() > 0 && !(gyro_var > 0.0))
  {
    throw ValidationError("gyroscope variance must be positive");
  }
  NoiseModel model;
  const int n = geom.n_channels();
  Eigen::VectorXd diag(n);
  diag.head(geom.n_accel_channels()).setConstant(accel_var);
  diag.tail(geom.n_gyro_channels()).setConstant(gyro_var);
  model.q_ = diag.asDiagonal();
  model.chol_lower_ = diag.cwiseSqrt().asDiagonal();
  model.iid_ = true;
  model.accel_var_ = accel_var;
  model.gyro_var_ = gyro_var;
  return model;
}

NoiseModel NoiseModel::full_covariance(const Eigen::MatrixXd& q)
{
  if (q.rows() != q.cols())
  {
    throw ValidationError("covariance must be square");
  }
  if (!q.isApprox(q.transpose(), 1e-12))
  {
    throw ValidationError("covariance must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() != Eigen::Success)
  {
    throw ValidationError("covariance must be positive definite");
  }
  NoiseModel model;
  model.q_ = q;
  model.chol_lower_ = llt.matrixL();
  model.iid_ = false;
  return model;
}

Eigen::VectorXd centrifugal_response(const Eigen::Vector3d& omega, const ArrayGeometry& geom)
{
  const int ns = geom.n_accel_triads();
  Eigen::VectorXd h(3 * ns);
  for (int i = 0; i < ns; ++i)
  {
    const Eigen::Vector3d& r = geom.accel_positions[i];
    h.segment<3>(3 * i) = omega.cross(omega.cross(r));
  }
  return h;
}

Eigen::VectorXd nonlinear_response(const Eigen::Vector3d& omega, const ArrayGeometry& geom)
{
  Eigen::VectorXd h(geom.n_channels());
  h.head(geom.n_accel_channels()) = centrifugal_response(omega, geom);
  for (int j = 0; j < geom.n_gyro_triads; ++j)
  {
    h.segment<3>(geom.n_accel_channels() + 3 * j) = omega;
  }
  return h;
}

Eigen::Matrix3d centrifugal_jacobian(const Eigen::Vector3d& omega, const Eigen::Vector3d& r)
{
  return skew(omega).transpose() * skew(r) + skew(r.cross(omega));
}

Eigen::MatrixXd nonlinear_jacobian(const Eigen::Vector3d& omega, const ArrayGeometry& geom)
{
  Eigen::MatrixXd j(geom.n_channels(), 3);
  const int ns = geom.n_accel_triads();
  for (int i = 0; i < ns; ++i)
  {
    j.block<3, 3>(3 * i, 0) = centrifugal_jacobian(omega, geom.accel_positions[i]);
  }
  for (int k = 0; k < geom.n_gyro_triads; ++k)
  {
    j.block<3, 3>(3 * ns + 3 * k, 0) = Eigen::Matrix3d::Identity();
  }
  return j;
}

Eigen::VectorXd noiseless_measurement(const MotionState& state, const ArrayGeometry& geom)
{
  return nonlinear_response(state.omega, geom) +
         linear_design_matrix(geom) * state.linear_params();
}

Measurement simulate_measurement(const MotionState& state, const ArrayGeometry& geom,
                                 const NoiseModel& noise, CounterRng& rng)
{
  geom.validate();
  if (noise.dim() != geom.n_channels())
  {
    throw ValidationError("noise model dimension does not match geometry");
  }
  if (!state.parameters().allFinite())
  {
    throw ValidationError("motion state must be finite");
  }

  const Eigen::VectorXd clean = noiseless_measurement(state, geom);
  const Eigen::VectorXd y = clean + noise.cholesky_lower() * rng.normal_vector(noise.dim());

  Measurement meas;
  meas.accel = y.head(geom.n_accel_channels());
  meas.gyro = y.tail(geom.n_gyro_channels());
  meas.saturated.assign(geom.n_gyro_channels(), false);
  const double limit = geom.gyro_saturation;
  for (int j = 0; j < geom.n_gyro_channels(); ++j)
  {
    if (std::abs(meas.gyro[j]) >= limit)
    {
      meas.gyro[j] = std::copysign(limit, meas.gyro[j]);
      meas.saturated[j] = true;
    }
  }
  return meas;
}

Measurement simulate_measurement(const MotionState& state, const ArrayGeometry& geom,
                                 const NoiseModel& noise, std::uint64_t seed)
{
  CounterRng rng(seed, 0);
  return simulate_measurement(state, geom, noise, rng);
}

} // namespace imuarray
