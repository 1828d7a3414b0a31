/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "imuarray/tensor.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace imuarray
{

TensorEstimate tensor_ls(const Eigen::VectorXd& y_accel, const ArrayGeometry& geom)
{
  const int ns = geom.n_accel_triads();
  if (y_accel.size() != 3 * ns)
  {
    throw ValidationError("tensor_ls: accelerometer vector does not match geometry");
  }
  if (ns < 4)
  {
    throw ValidationError("tensor_ls: needs at least four accelerometer triads");
  }

  // Augmented position matrix [1; r_i], 4 x Ns; full row rank means the
  // positions span 3D.
  Eigen::MatrixXd r(4, ns);
  for (int i = 0; i < ns; ++i)
  {
    r(0, i) = 1.0;
    r.col(i).tail<3>() = geom.accel_positions[i];
  }
  if (numerical_rank(r) < 4)
  {
    throw ValidationError("tensor_ls: triad positions must span a three dimensional space");
  }

  Eigen::MatrixXd y(3, ns);
  for (int i = 0; i < ns; ++i)
  {
    y.col(i) = y_accel.segment<3>(3 * i);
  }

  const Eigen::Matrix4d rrt = r * r.transpose();
  const Eigen::Matrix<double, 3, 4> x = rrt.llt().solve(r * y.transpose()).transpose();

  TensorEstimate est;
  est.s_hat = x.col(0);
  est.w_hat = x.rightCols<3>();
  return est;
}

Eigen::Vector3d angular_accel_from_tensor(const Eigen::Matrix3d& w)
{
  // The paired differences read the antisymmetric part twice.
  return 0.5 * Eigen::Vector3d(w(2, 1) - w(1, 2), w(0, 2) - w(2, 0), w(1, 0) - w(0, 1));
}

AngularVelocityExtraction angular_velocity_from_tensor(const Eigen::Matrix3d& w,
                                                       const Eigen::Vector3i& gyro_signs)
{
  AngularVelocityExtraction out;
  const Eigen::Matrix3d sym = w + w.transpose();
  out.outer_product = 0.5 * sym - 0.25 * sym.trace() * Eigen::Matrix3d::Identity();

  for (int axis = 0; axis < 3; ++axis)
  {
    out.omega_abs[axis] = std::sqrt(std::max(out.outer_product(axis, axis), 0.0));
  }

  // Anchor the global sign on the axis of largest magnitude (ties prefer
  // x before y before z), then read the relative signs off the outer
  // product's off-diagonal entries.
  int anchor = 0;
  for (int axis = 1; axis < 3; ++axis)
  {
    if (out.omega_abs[axis] > out.omega_abs[anchor])
    {
      anchor = axis;
    }
  }
  int anchor_sign = gyro_signs[anchor];
  if (anchor_sign == 0)
  {
    anchor_sign = 1;
    if (out.omega_abs[anchor] > 0.0)
    {
      out.low_confidence = true;
    }
  }

  out.omega_signed = Eigen::Vector3d::Zero();
  out.omega_signed[anchor] = anchor_sign * out.omega_abs[anchor];
  for (int axis = 0; axis < 3; ++axis)
  {
    if (axis == anchor)
    {
      continue;
    }
    const double coupling = out.outer_product(anchor, axis);
    double sign = anchor_sign * (coupling >= 0.0 ? 1.0 : -1.0);
    if (coupling == 0.0 && gyro_signs[axis] != 0)
    {
      sign = gyro_signs[axis];
    }
    out.omega_signed[axis] = sign * out.omega_abs[axis];
  }
  return out;
}

TensorEstimate tensor_estimate(const Eigen::VectorXd& y_accel, const ArrayGeometry& geom,
                               const Eigen::Vector3i& gyro_signs)
{
  TensorEstimate est = tensor_ls(y_accel, geom);
  est.omega_dot = angular_accel_from_tensor(est.w_hat);
  const AngularVelocityExtraction extraction =
      angular_velocity_from_tensor(est.w_hat, gyro_signs);
  est.omega_abs = extraction.omega_abs;
  est.omega_signed = extraction.omega_signed;
  est.outer_product = extraction.outer_product;
  est.low_confidence_sign = extraction.low_confidence;
  return est;
}

} // namespace imuarray
