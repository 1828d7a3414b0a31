/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "imuarray/geometry.hpp"

#include <cmath>

#include <Eigen/SVD>

namespace imuarray
{

void ArrayGeometry::validate() const
{
  if (n_gyro_triads < 0)
  {
    throw ValidationError("n_gyro_triads must be non-negative");
  }
  if (n_accel_triads() + n_gyro_triads < 1)
  {
    throw ValidationError("array has no sensors");
  }
  for (const auto& r : accel_positions)
  {
    if (!r.allFinite())
    {
      throw ValidationError("accelerometer position is not finite");
    }
  }
  if (!(gyro_saturation > 0.0) || !std::isfinite(gyro_saturation))
  {
    throw ValidationError("gyro saturation limit must be positive and finite");
  }
}

const char* to_string(IdentifiabilityIssue issue)
{
  switch (issue)
  {
    case IdentifiabilityIssue::none:
      return "none";
    case IdentifiabilityIssue::sign_ambiguity_no_gyro:
      return "sign_ambiguity_no_gyro";
    case IdentifiabilityIssue::too_few_accel_triads:
      return "too_few_accel_triads";
    case IdentifiabilityIssue::positions_not_planar_spanning:
      return "positions_not_planar_spanning";
  }
  return "unknown";
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v)
{
  Eigen::Matrix3d m;
  // clang-format off
  m <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return m;
}

Eigen::MatrixXd euler_design_matrix(const ArrayGeometry& geom)
{
  const int ns = geom.n_accel_triads();
  if (ns < 1)
  {
    throw ValidationError("euler_design_matrix requires at least one accelerometer triad");
  }
  Eigen::MatrixXd g(3 * ns, 3);
  for (int i = 0; i < ns; ++i)
  {
    g.block<3, 3>(3 * i, 0) = -skew(geom.accel_positions[i]);
  }
  return g;
}

Eigen::MatrixXd linear_design_matrix(const ArrayGeometry& geom)
{
  const int ns = geom.n_accel_triads();
  const int rows = geom.n_channels();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(rows, 6);
  for (int i = 0; i < ns; ++i)
  {
    h.block<3, 3>(3 * i, 0) = -skew(geom.accel_positions[i]);
    h.block<3, 3>(3 * i, 3) = Eigen::Matrix3d::Identity();
  }
  return h;
}

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol)
{
  if (m.size() == 0)
  {
    return 0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0)
  {
    return 0;
  }
  const double threshold = rel_tol * sv[0];
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
  {
    if (sv[i] > threshold)
    {
      ++rank;
    }
  }
  return rank;
}

IdentifiabilityVerdict check_identifiability(const ArrayGeometry& geom)
{
  IdentifiabilityVerdict verdict;
  const int ns = geom.n_accel_triads();

  // Affine span of the positions: rank of [r_2-r_1 ... r_Ns-r_1].
  if (ns >= 2)
  {
    Eigen::MatrixXd d(3, ns - 1);
    for (int i = 1; i < ns; ++i)
    {
      d.col(i - 1) = geom.accel_positions[i] - geom.accel_positions[0];
    }
    verdict.position_span_dim = numerical_rank(d);
  }

  if (geom.n_channels() > 0)
  {
    verdict.h_rank = numerical_rank(linear_design_matrix(geom));
  }

  if (geom.n_gyro_triads < 1)
  {
    verdict.reason = IdentifiabilityIssue::sign_ambiguity_no_gyro;
  }
  else if (ns < 3)
  {
    verdict.reason = IdentifiabilityIssue::too_few_accel_triads;
  }
  else if (verdict.position_span_dim < 2)
  {
    verdict.reason = IdentifiabilityIssue::positions_not_planar_spanning;
  }
  else
  {
    verdict.reason = IdentifiabilityIssue::none;
    verdict.identifiable = true;
  }
  return verdict;
}

ArrayGeometry make_square_grid_array(double spacing, int n_side, int n_gyro_triads,
                                     double gyro_saturation)
{
  if (n_side < 1 || !(spacing > 0.0))
  {
    throw ValidationError("square grid requires n_side >= 1 and positive spacing");
  }
  ArrayGeometry geom;
  geom.n_gyro_triads = n_gyro_triads;
  geom.gyro_saturation = gyro_saturation;
  const double offset = 0.5 * (n_side - 1);
  for (int ix = 0; ix < n_side; ++ix)
  {
    for (int iy = 0; iy < n_side; ++iy)
    {
      geom.accel_positions.emplace_back((ix - offset) * spacing, (iy - offset) * spacing, 0.0);
    }
  }
  geom.validate();
  return geom;
}

ArrayGeometry make_octahedron_array(double radius, int n_gyro_triads, double gyro_saturation)
{
  if (!(radius > 0.0))
  {
    throw ValidationError("octahedron array requires a positive radius");
  }
  ArrayGeometry geom;
  geom.n_gyro_triads = n_gyro_triads;
  geom.gyro_saturation = gyro_saturation;
  for (int axis = 0; axis < 3; ++axis)
  {
    for (const double sign : {1.0, -1.0})
    {
      Eigen::Vector3d r = Eigen::Vector3d::Zero();
      r[axis] = sign * radius;
      geom.accel_positions.push_back(r);
    }
  }
  geom.validate();
  return geom;
}

} // namespace imuarray
