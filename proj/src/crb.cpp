/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "imuarray/crb.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace imuarray
{
namespace
{

constexpr double kEigRelTol = 1e-10;

bool perfect_square(int n, int& side)
{
  const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  side = root;
  return root * root == n;
}

Eigen::Matrix<double, Eigen::Dynamic, 9> model_sensitivity(const Eigen::Vector3d& omega,
                                                           const ArrayGeometry& geom)
{
  Eigen::Matrix<double, Eigen::Dynamic, 9> phi(geom.n_channels(), 9);
  phi.leftCols<3>() = nonlinear_jacobian(omega, geom);
  phi.rightCols<6>() = linear_design_matrix(geom);
  return phi;
}

Matrix9d information_matrix(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& q)
{
  const Eigen::MatrixXd q_inv_phi = q.llt().solve(phi);
  Matrix9d info = phi.transpose() * q_inv_phi;
  return 0.5 * (info + info.transpose());
}

// Pseudo-inverse of a PSD information matrix after diagonal
// equilibration; parameters supported by a null direction get +inf on
// the diagonal.
Eigen::MatrixXd bounded_inverse(const Matrix9d& info, bool& bounded)
{
  Vector9d scale;
  for (int i = 0; i < 9; ++i)
  {
    const double d = info(i, i);
    scale[i] = d > 0.0 ? std::sqrt(d) : 1.0;
  }
  Matrix9d c;
  for (int i = 0; i < 9; ++i)
  {
    for (int j = 0; j < 9; ++j)
    {
      c(i, j) = info(i, j) / (scale[i] * scale[j]);
    }
  }

  Eigen::SelfAdjointEigenSolver<Matrix9d> eig(c);
  const Vector9d& lambda = eig.eigenvalues();
  const Matrix9d& v = eig.eigenvectors();
  const double lambda_max = std::max(lambda.maxCoeff(), 0.0);
  const double threshold = std::max(lambda_max * kEigRelTol, 0.0);

  Vector9d inv_lambda = Vector9d::Zero();
  std::vector<int> null_dirs;
  for (int k = 0; k < 9; ++k)
  {
    if (lambda[k] > threshold)
    {
      inv_lambda[k] = 1.0 / lambda[k];
    }
    else
    {
      null_dirs.push_back(k);
    }
  }

  Matrix9d crb = v * inv_lambda.asDiagonal() * v.transpose();
  for (int i = 0; i < 9; ++i)
  {
    for (int j = 0; j < 9; ++j)
    {
      crb(i, j) /= scale[i] * scale[j];
    }
  }

  bounded = null_dirs.empty();
  for (int i = 0; i < 9; ++i)
  {
    double null_mass = 0.0;
    for (const int k : null_dirs)
    {
      null_mass += v(i, k) * v(i, k);
    }
    if (null_mass > 1e-8 || !(info(i, i) > 0.0))
    {
      crb(i, i) = std::numeric_limits<double>::infinity();
      bounded = false;
    }
  }
  return crb;
}

void check_iid(const NoiseModel& noise, const char* where)
{
  if (!noise.is_iid())
  {
    throw ValidationError(std::string(where) + ": requires i.i.d. per-kind noise");
  }
}

void check_centered(const ArrayGeometry& geom, const char* where)
{
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  double max_norm = 0.0;
  for (const auto& r : geom.accel_positions)
  {
    sum += r;
    max_norm = std::max(max_norm, r.norm());
  }
  if (sum.norm() > 1e-9 * std::max(max_norm, 1e-30) * geom.n_accel_triads())
  {
    throw ValidationError(std::string(where) + ": triad positions must sum to zero");
  }
}

// Verifies the array is a centered planar square grid and returns the
// grid spacing.
double square_grid_spacing(const ArrayGeometry& geom, const char* where)
{
  int side = 0;
  if (!perfect_square(geom.n_accel_triads(), side) || side < 2)
  {
    throw ValidationError(std::string(where) +
                          ": triad count must be a perfect square of at least 4");
  }
  double min_x = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  for (const auto& r : geom.accel_positions)
  {
    min_x = std::min(min_x, r.x());
    max_x = std::max(max_x, r.x());
  }
  const double spacing = (max_x - min_x) / (side - 1);
  if (!(spacing > 0.0))
  {
    throw ValidationError(std::string(where) + ": degenerate grid");
  }
  const double tol = 1e-9 * spacing;
  std::vector<bool> matched(geom.accel_positions.size(), false);
  const double offset = 0.5 * (side - 1);
  for (int ix = 0; ix < side; ++ix)
  {
    for (int iy = 0; iy < side; ++iy)
    {
      const Eigen::Vector3d expected((ix - offset) * spacing, (iy - offset) * spacing, 0.0);
      bool found = false;
      for (size_t k = 0; k < geom.accel_positions.size(); ++k)
      {
        if (!matched[k] && (geom.accel_positions[k] - expected).norm() <= tol)
        {
          matched[k] = true;
          found = true;
          break;
        }
      }
      if (!found)
      {
        throw ValidationError(std::string(where) +
                              ": positions do not form a centered planar square grid");
      }
    }
  }
  return spacing;
}

Eigen::Matrix3d rate_coupling_matrix(const Eigen::Vector3d& w)
{
  Eigen::Matrix3d m;
  // clang-format off
  m << 2.0 * w.x() * w.x() + w.y() * w.y(), w.x() * w.y(),                      2.0 * w.x() * w.z(),
       w.x() * w.y(),                       2.0 * w.y() * w.y() + w.x() * w.x(), 2.0 * w.y() * w.z(),
       2.0 * w.x() * w.z(),                 2.0 * w.y() * w.z(),                 4.0 * w.z() * w.z();
  // clang-format on
  return m;
}

} // namespace

FisherInfo fisher_info(const Eigen::Vector3d& omega, const ArrayGeometry& geom,
                       const NoiseModel& noise)
{
  geom.validate();
  if (noise.dim() != geom.n_channels())
  {
    throw ValidationError("fisher_info: noise dimension does not match geometry");
  }
  FisherInfo info;
  info.matrix = information_matrix(model_sensitivity(omega, geom), noise.covariance());
  return info;
}

CrbReport crb_full(const Eigen::Vector3d& omega, const ArrayGeometry& geom,
                   const NoiseModel& noise, CrbRegime regime)
{
  Matrix9d info;
  if (regime == CrbRegime::full)
  {
    info = fisher_info(omega, geom, noise).matrix;
  }
  else
  {
    // Saturated gyros carry only sign information: remove every gyro
    // row from the model before forming the information matrix.
    geom.validate();
    if (noise.dim() != geom.n_channels())
    {
      throw ValidationError("crb_full: noise dimension does not match geometry");
    }
    const int na = geom.n_accel_channels();
    if (na == 0)
    {
      throw ValidationError("crb_full: saturated regime needs accelerometers");
    }
    const Eigen::MatrixXd phi = model_sensitivity(omega, geom).topRows(na);
    const Eigen::MatrixXd q = noise.covariance().topLeftCorner(na, na);
    info = information_matrix(phi, q);
  }

  CrbReport report;
  report.regime = regime;
  const Eigen::MatrixXd crb = bounded_inverse(info, report.bounded);
  report.crb_omega = crb.block<3, 3>(0, 0);
  report.crb_omega_dot = crb.block<3, 3>(3, 3);
  report.crb_s = crb.block<3, 3>(6, 6);
  return report;
}

Eigen::Matrix3d omega_info_schur(const Eigen::Vector3d& omega, const ArrayGeometry& geom,
                                 const NoiseModel& noise)
{
  const Matrix9d info = fisher_info(omega, geom, noise).matrix;
  const Eigen::Matrix3d head = info.block<3, 3>(0, 0);
  const Eigen::Matrix<double, 3, 6> cross = info.block<3, 6>(0, 3);
  const Eigen::Matrix<double, 6, 6> linear = info.block<6, 6>(3, 3);
  Eigen::LLT<Eigen::Matrix<double, 6, 6>> llt(linear);
  if (llt.info() != Eigen::Success)
  {
    throw ValidationError("omega_info_schur: linear-parameter information is singular");
  }
  return head - cross * llt.solve(cross.transpose());
}

Eigen::Matrix3d square_grid_omega_info(const Eigen::Vector3d& omega, double spacing, int n_accel,
                                       int n_gyro, double accel_var, double gyro_var)
{
  int side = 0;
  if (!perfect_square(n_accel, side) || side < 2)
  {
    throw ValidationError("square_grid_omega_info: n_accel must be a perfect square >= 4");
  }
  if (!(spacing > 0.0) || !(accel_var > 0.0) || n_gyro < 0 || (n_gyro > 0 && !(gyro_var > 0.0)))
  {
    throw ValidationError("square_grid_omega_info: invalid parameters");
  }
  const double gyro_term = n_gyro > 0 ? n_gyro / gyro_var : 0.0;
  const double accel_gain =
      spacing * spacing * (static_cast<double>(n_accel) * n_accel - n_accel) / (6.0 * accel_var);
  return gyro_term * Eigen::Matrix3d::Identity() + accel_gain * rate_coupling_matrix(omega);
}

Eigen::Matrix3d square_grid_omega_info(const Eigen::Vector3d& omega, const ArrayGeometry& geom,
                                       const NoiseModel& noise)
{
  check_iid(noise, "square_grid_omega_info");
  const double spacing = square_grid_spacing(geom, "square_grid_omega_info");
  return square_grid_omega_info(omega, spacing, geom.n_accel_triads(), geom.n_gyro_triads,
                                noise.accel_var(), noise.gyro_var());
}

Eigen::Matrix3d square_grid_saturated_omega_crb(const Eigen::Vector3d& omega, double spacing,
                                                int n_accel, double accel_var)
{
  int side = 0;
  if (!perfect_square(n_accel, side) || side < 2)
  {
    throw ValidationError(
        "square_grid_saturated_omega_crb: n_accel must be a perfect square >= 4");
  }
  const double planar = omega.x() * omega.x() + omega.y() * omega.y();
  if (!(planar > 0.0) || omega.z() == 0.0)
  {
    throw ValidationError(
        "square_grid_saturated_omega_crb: needs in-plane rate and nonzero z rate");
  }
  const double accel_gain =
      spacing * spacing * (static_cast<double>(n_accel) * n_accel - n_accel) / (6.0 * accel_var);
  const Eigen::Matrix3d info = accel_gain * rate_coupling_matrix(omega);
  // The inverse carries the printed diagonal exactly; the off-diagonal
  // entries are defined numerically.
  return info.inverse();
}

Eigen::Matrix3d angular_accel_crb(const Eigen::Vector3d& omega, const ArrayGeometry& geom,
                                  const NoiseModel& noise)
{
  geom.validate();
  check_iid(noise, "angular_accel_crb");
  check_centered(geom, "angular_accel_crb");
  if (geom.n_accel_triads() < 1)
  {
    throw ValidationError("angular_accel_crb: needs accelerometers");
  }

  const double accel_var = noise.accel_var();
  Eigen::Matrix3d gamma11 = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d gamma12 = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d gamma22 = Eigen::Matrix3d::Zero();
  for (const auto& r : geom.accel_positions)
  {
    const Eigen::Matrix3d a = centrifugal_jacobian(omega, r);
    const Eigen::Matrix3d omega_r = skew(r);
    gamma11 += a.transpose() * a;
    gamma12 += a.transpose() * (-omega_r);
    gamma22 += omega_r.transpose() * omega_r;
  }

  const double gyro_term =
      geom.n_gyro_triads > 0 ? geom.n_gyro_triads / noise.gyro_var() : 0.0;
  const Eigen::Matrix3d inner =
      gyro_term * Eigen::Matrix3d::Identity() + gamma11 / accel_var;
  Eigen::LLT<Eigen::Matrix3d> inner_llt(inner);
  if (inner_llt.info() != Eigen::Success)
  {
    throw ValidationError("angular_accel_crb: rate information block is singular");
  }

  const Eigen::Matrix3d info = gamma22 / accel_var -
                               gamma12.transpose() * inner_llt.solve(gamma12) /
                                   (accel_var * accel_var);
  Eigen::LLT<Eigen::Matrix3d> info_llt(info);
  if (info_llt.info() != Eigen::Success)
  {
    throw ValidationError("angular_accel_crb: angular acceleration information is singular");
  }
  return info_llt.solve(Eigen::Matrix3d::Identity());
}

Eigen::Matrix3d square_grid_linear_motion_accel_crb(double spacing, int n_accel, double accel_var)
{
  int side = 0;
  if (!perfect_square(n_accel, side) || side < 2 || !(spacing > 0.0) || !(accel_var > 0.0))
  {
    throw ValidationError("square_grid_linear_motion_accel_crb: invalid parameters");
  }
  const double factor =
      12.0 * accel_var / (spacing * spacing * (static_cast<double>(n_accel) * n_accel - n_accel));
  return factor * Eigen::Vector3d(1.0, 1.0, 0.5).asDiagonal();
}

} // namespace imuarray
