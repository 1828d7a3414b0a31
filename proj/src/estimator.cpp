/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "imuarray/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "imuarray/tensor.hpp"

namespace imuarray
{
namespace
{

// Model restricted to the unsaturated channels. Accelerometer rows are
// never removed; gyro rows are kept per scalar channel. All weight
// matrices are formed once per pattern.
struct ActiveModel
{
  const ArrayGeometry* geom = nullptr;
  std::vector<int> rows;               // indices into the full stacked vector
  std::vector<int> gyro_axes;          // axis (0..2) of each active gyro row, in order
  std::array<int, 3> gyro_axis_count = {0, 0, 0};

  Eigen::MatrixXd h_design;  // pruned linear design matrix
  Eigen::MatrixXd q_inv;
  Eigen::MatrixXd projection;
  Eigen::MatrixXd ht_q_inv;  // 6 x n
  Eigen::LLT<Eigen::MatrixXd> normal_llt;

  int n() const { return static_cast<int>(rows.size()); }
  int n_accel() const { return geom->n_accel_channels(); }

  Eigen::VectorXd take(const Eigen::VectorXd& full) const
  {
    Eigen::VectorXd out(n());
    for (int k = 0; k < n(); ++k)
    {
      out[k] = full[rows[k]];
    }
    return out;
  }

  Eigen::VectorXd response(const Eigen::Vector3d& omega) const
  {
    Eigen::VectorXd h(n());
    h.head(n_accel()) = centrifugal_response(omega, *geom);
    for (size_t k = 0; k < gyro_axes.size(); ++k)
    {
      h[n_accel() + static_cast<int>(k)] = omega[gyro_axes[k]];
    }
    return h;
  }

  Eigen::MatrixXd jacobian(const Eigen::Vector3d& omega) const
  {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n(), 3);
    for (int i = 0; i < geom->n_accel_triads(); ++i)
    {
      j.block<3, 3>(3 * i, 0) = centrifugal_jacobian(omega, geom->accel_positions[i]);
    }
    for (size_t k = 0; k < gyro_axes.size(); ++k)
    {
      j(n_accel() + static_cast<int>(k), gyro_axes[k]) = 1.0;
    }
    return j;
  }

  double cost(const Eigen::Vector3d& omega, const Eigen::VectorXd& y_active) const
  {
    const Eigen::VectorXd r = y_active - response(omega);
    return 0.5 * r.dot(projection * r);
  }

  Vector6d wls(const Eigen::Vector3d& omega, const Eigen::VectorXd& y_active) const
  {
    return normal_llt.solve(ht_q_inv * (y_active - response(omega)));
  }
};

ActiveModel build_active_model(const ArrayGeometry& geom, const NoiseModel& noise,
                               const std::vector<bool>* saturated)
{
  ActiveModel m;
  m.geom = &geom;

  const int na = geom.n_accel_channels();
  const int ng = geom.n_gyro_channels();
  m.rows.reserve(na + ng);
  for (int i = 0; i < na; ++i)
  {
    m.rows.push_back(i);
  }
  for (int j = 0; j < ng; ++j)
  {
    if (saturated != nullptr && (*saturated)[j])
    {
      continue;
    }
    m.rows.push_back(na + j);
    m.gyro_axes.push_back(j % 3);
    ++m.gyro_axis_count[j % 3];
  }

  const int n = m.n();
  const Eigen::MatrixXd h_full = linear_design_matrix(geom);
  m.h_design.resize(n, 6);
  Eigen::MatrixXd q(n, n);
  const Eigen::MatrixXd& q_full = noise.covariance();
  for (int a = 0; a < n; ++a)
  {
    m.h_design.row(a) = h_full.row(m.rows[a]);
    for (int b = 0; b < n; ++b)
    {
      q(a, b) = q_full(m.rows[a], m.rows[b]);
    }
  }

  Eigen::LLT<Eigen::MatrixXd> q_llt(q);
  if (q_llt.info() != Eigen::Success)
  {
    throw ValidationError("noise covariance is not positive definite on active channels");
  }
  m.q_inv = q_llt.solve(Eigen::MatrixXd::Identity(n, n));

  const Eigen::MatrixXd q_inv_h = m.q_inv * m.h_design; // n x 6
  Eigen::Matrix<double, 6, 6> normal = m.h_design.transpose() * q_inv_h;
  normal = 0.5 * (normal + normal.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(normal);
  const double lambda_max = eig.eigenvalues().maxCoeff();
  if (!(lambda_max > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * lambda_max)
  {
    throw ValidationError(
        "linear design matrix is rank deficient on active channels "
        "(need three accelerometer triads spanning a plane)");
  }

  m.normal_llt.compute(normal);
  m.ht_q_inv = q_inv_h.transpose();
  m.projection = m.q_inv - q_inv_h * m.normal_llt.solve(q_inv_h.transpose());
  m.projection = 0.5 * (m.projection + m.projection.transpose());
  return m;
}

struct GyroWls
{
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  std::array<bool, 3> axis_available = {false, false, false};
  bool all_available = false;
};

// Weighted least squares of the angular velocity from the active gyro
// rows alone; axes without any active row are left at zero and marked
// unavailable. Each gyro row touches exactly one axis, so the normal
// equations restricted to the available axes are exact.
GyroWls gyro_wls(const ActiveModel& m, const Eigen::VectorXd& y_active, const NoiseModel& noise)
{
  GyroWls out;
  const int n_gyro = static_cast<int>(m.gyro_axes.size());
  if (n_gyro == 0)
  {
    return out;
  }

  const int na = m.n_accel();
  Eigen::MatrixXd q_gyro(n_gyro, n_gyro);
  const Eigen::MatrixXd& q_full = noise.covariance();
  for (int a = 0; a < n_gyro; ++a)
  {
    for (int b = 0; b < n_gyro; ++b)
    {
      q_gyro(a, b) = q_full(m.rows[na + a], m.rows[na + b]);
    }
  }
  Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(n_gyro, 3);
  for (int k = 0; k < n_gyro; ++k)
  {
    sel(k, m.gyro_axes[k]) = 1.0;
  }
  const Eigen::VectorXd y_gyro = y_active.tail(n_gyro);

  const Eigen::MatrixXd q_inv_sel = q_gyro.llt().solve(sel);
  const Eigen::Matrix3d normal = sel.transpose() * q_inv_sel;
  const Eigen::Vector3d rhs = q_inv_sel.transpose() * y_gyro;

  std::vector<int> avail;
  for (int axis = 0; axis < 3; ++axis)
  {
    out.axis_available[axis] = m.gyro_axis_count[axis] > 0;
    if (out.axis_available[axis])
    {
      avail.push_back(axis);
    }
  }
  if (!avail.empty())
  {
    Eigen::MatrixXd sub(avail.size(), avail.size());
    Eigen::VectorXd sub_rhs(avail.size());
    for (size_t a = 0; a < avail.size(); ++a)
    {
      sub_rhs[static_cast<Eigen::Index>(a)] = rhs[avail[a]];
      for (size_t b = 0; b < avail.size(); ++b)
      {
        sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            normal(avail[a], avail[b]);
      }
    }
    const Eigen::VectorXd sol = sub.llt().solve(sub_rhs);
    for (size_t a = 0; a < avail.size(); ++a)
    {
      out.omega[avail[a]] = sol[static_cast<Eigen::Index>(a)];
    }
  }
  out.all_available = out.axis_available[0] && out.axis_available[1] && out.axis_available[2];
  return out;
}

struct GnOutcome
{
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  double cost = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;
};

GnOutcome gauss_newton_active(const ActiveModel& m, const Eigen::VectorXd& y_active,
                              const Eigen::Vector3d& init, const SolverOptions& opts)
{
  GnOutcome out;
  out.omega = init;

  Eigen::VectorXd residual = y_active - m.response(out.omega);
  out.cost = 0.5 * residual.dot(m.projection * residual);
  out.cost_history.push_back(out.cost);

  for (int it = 0; it < opts.max_iterations; ++it)
  {
    const Eigen::MatrixXd jac = m.jacobian(out.omega);
    const Eigen::MatrixXd proj_jac = m.projection * jac;
    Eigen::Matrix3d normal = jac.transpose() * proj_jac;
    normal = 0.5 * (normal + normal.transpose());
    const Eigen::Vector3d gradient = proj_jac.transpose() * residual;

    Eigen::LLT<Eigen::Matrix3d> llt(normal);
    if (llt.info() != Eigen::Success)
    {
      break; // singular curvature, e.g. accel-only model at zero rate
    }
    const Eigen::Vector3d step = llt.solve(gradient);
    if (!step.allFinite())
    {
      break;
    }
    out.iterations = it + 1;
    if (step.norm() <= opts.step_tolerance)
    {
      out.converged = true;
      break;
    }

    // Step halving: accept only non-increasing cost.
    double scale = 1.0;
    bool accepted = false;
    Eigen::Vector3d trial;
    Eigen::VectorXd trial_residual;
    double trial_cost = 0.0;
    for (int half = 0; half <= opts.line_search_halvings; ++half)
    {
      trial = out.omega + scale * step;
      trial_residual = y_active - m.response(trial);
      trial_cost = 0.5 * trial_residual.dot(m.projection * trial_residual);
      if (trial_cost <= out.cost)
      {
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted)
    {
      // Stalled. If the quadratic model has nothing meaningful left to
      // gain, this is the optimum at working precision.
      const double predicted_decrease = 0.5 * gradient.dot(step);
      out.converged =
          predicted_decrease <= opts.cost_tolerance * std::max(1.0, std::abs(out.cost));
      break;
    }

    const double previous = out.cost;
    out.omega = trial;
    residual = std::move(trial_residual);
    out.cost = trial_cost;
    out.cost_history.push_back(out.cost);

    if (scale * step.norm() <= opts.step_tolerance ||
        previous - out.cost <= opts.cost_tolerance * std::max(1.0, std::abs(previous)))
    {
      out.converged = true;
      break;
    }
  }
  return out;
}

std::vector<bool> used_channel_mask(const ArrayGeometry& geom, const ActiveModel& m)
{
  std::vector<bool> mask(geom.n_channels(), false);
  for (const int row : m.rows)
  {
    mask[row] = true;
  }
  return mask;
}

FusionResult finish_result(const ActiveModel& m, const Eigen::VectorXd& y_active,
                           const GnOutcome& gn, const ArrayGeometry& geom)
{
  FusionResult result;
  result.omega = gn.omega;
  const Vector6d phi = m.wls(gn.omega, y_active);
  result.omega_dot = phi.head<3>();
  result.specific_force = phi.tail<3>();
  result.iterations = gn.iterations;
  result.converged = gn.converged;
  result.final_neg_loglik = gn.cost;
  result.used_channels = used_channel_mask(geom, m);
  result.cost_history = gn.cost_history;
  return result;
}

// Sign of an axis from its clipped readings; ties default to +.
int saturated_axis_sign(const Measurement& y, int axis)
{
  double sum = 0.0;
  for (int j = 0; j < static_cast<int>(y.saturated.size()); ++j)
  {
    if (y.saturated[j] && j % 3 == axis)
    {
      sum += y.gyro[j];
    }
  }
  if (sum > 0.0)
  {
    return 1;
  }
  if (sum < 0.0)
  {
    return -1;
  }
  return 0;
}

} // namespace

Vector6d wls_linear_params(const Eigen::Vector3d& omega, const Measurement& y,
                           const ArrayGeometry& geom, const NoiseModel& noise)
{
  y.validate(geom);
  const ActiveModel m = build_active_model(geom, noise, &y.saturated);
  return m.wls(omega, m.take(y.stacked()));
}

Eigen::MatrixXd residual_projection(const ArrayGeometry& geom, const NoiseModel& noise)
{
  const ActiveModel m = build_active_model(geom, noise, nullptr);
  return m.projection;
}

double concentrated_neg_loglik(const Eigen::Vector3d& omega, const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& projection, const ArrayGeometry& geom)
{
  if (y.size() != geom.n_channels() || projection.rows() != y.size() ||
      projection.cols() != y.size())
  {
    throw ValidationError("concentrated_neg_loglik: dimension mismatch");
  }
  const Eigen::VectorXd r = y - nonlinear_response(omega, geom);
  return 0.5 * r.dot(projection * r);
}

Eigen::Vector3d init_from_gyros(const Measurement& y, const ArrayGeometry& geom,
                                const NoiseModel& noise)
{
  y.validate(geom);
  const ActiveModel m = build_active_model(geom, noise, &y.saturated);
  const GyroWls wls = gyro_wls(m, m.take(y.stacked()), noise);
  if (!wls.all_available)
  {
    throw ValidationError(
        "init_from_gyros: an axis has no unsaturated gyro channel; "
        "use the saturated start strategy in estimate()");
  }
  return wls.omega;
}

FusionResult gauss_newton_solve(const Measurement& y, const ArrayGeometry& geom,
                                const NoiseModel& noise, const Eigen::Vector3d& init,
                                const SolverOptions& opts)
{
  y.validate(geom);
  const ActiveModel m = build_active_model(geom, noise, &y.saturated);
  const Eigen::VectorXd y_active = m.take(y.stacked());
  const GnOutcome gn = gauss_newton_active(m, y_active, init, opts);
  return finish_result(m, y_active, gn, geom);
}

FusionResult estimate(const Measurement& y, const ArrayGeometry& geom, const NoiseModel& noise,
                      const SolverOptions& opts, const std::optional<Eigen::Vector3d>& prior_omega)
{
  geom.validate();
  y.validate(geom);
  if (noise.dim() != geom.n_channels())
  {
    throw ValidationError("noise model dimension does not match geometry");
  }
  const IdentifiabilityVerdict verdict = check_identifiability(geom);
  if (!verdict.identifiable)
  {
    throw ValidationError(std::string("model is not identifiable: ") + to_string(verdict.reason));
  }

  const ActiveModel m = build_active_model(geom, noise, &y.saturated);
  const Eigen::VectorXd y_active = m.take(y.stacked());
  const GyroWls wls = gyro_wls(m, y_active, noise);

  if (wls.all_available)
  {
    const GnOutcome gn = gauss_newton_active(m, y_active, wls.omega, opts);
    return finish_result(m, y_active, gn, geom);
  }

  // Some axis lost every gyro channel: the magnitude there must come
  // from the accelerometers, the sign from the clipped readings.
  std::array<int, 3> signs = {0, 0, 0};
  std::vector<int> missing;
  for (int axis = 0; axis < 3; ++axis)
  {
    if (!wls.axis_available[axis])
    {
      missing.push_back(axis);
      signs[axis] = saturated_axis_sign(y, axis);
      if (signs[axis] == 0)
      {
        signs[axis] = 1;
      }
    }
  }

  const double gamma = geom.gyro_saturation;
  constexpr int kGridSeeds = 8;
  std::vector<Eigen::Vector3d> seeds;

  if (prior_omega.has_value())
  {
    seeds.push_back(*prior_omega);
  }

  // Tensor start needs four triads spanning 3D.
  if (geom.n_accel_triads() >= 4)
  {
    Eigen::Vector3i tensor_signs;
    for (int axis = 0; axis < 3; ++axis)
    {
      if (!wls.axis_available[axis])
      {
        tensor_signs[axis] = signs[axis];
      }
      else
      {
        tensor_signs[axis] = wls.omega[axis] > 0.0 ? 1 : (wls.omega[axis] < 0.0 ? -1 : 0);
      }
    }
    try
    {
      const TensorEstimate tensor = tensor_estimate(y.accel, geom, tensor_signs);
      if (tensor.omega_signed.has_value() && tensor.omega_signed->allFinite())
      {
        seeds.push_back(*tensor.omega_signed);
      }
    }
    catch (const ValidationError&)
    {
      // planar array: no tensor start available
    }
  }

  if (missing.size() == 3)
  {
    Eigen::Vector3d direction(signs[0], signs[1], signs[2]);
    direction.normalize();
    for (int k = 0; k < kGridSeeds; ++k)
    {
      const double speed = gamma * std::pow(10.0, static_cast<double>(k) / (kGridSeeds - 1));
      seeds.push_back(speed * direction);
    }
  }
  else
  {
    // Mixed case: gyro WLS on the covered axes, per-axis magnitude grid
    // on the saturated ones (a clipped axis is at least at the limit).
    for (int k = 0; k < kGridSeeds; ++k)
    {
      const double magnitude = gamma * std::pow(10.0, static_cast<double>(k) / (kGridSeeds - 1));
      Eigen::Vector3d seed = wls.omega;
      for (const int axis : missing)
      {
        seed[axis] = signs[axis] * magnitude;
      }
      seeds.push_back(seed);
    }
  }

  GnOutcome best;
  GnOutcome best_signed;
  bool have_signed = false;
  for (const auto& seed : seeds)
  {
    const GnOutcome gn = gauss_newton_active(m, y_active, seed, opts);
    if (gn.cost < best.cost)
    {
      best = gn;
    }
    bool sign_ok = true;
    for (const int axis : missing)
    {
      if (gn.omega[axis] * signs[axis] <= 0.0)
      {
        sign_ok = false;
        break;
      }
    }
    if (!sign_ok)
    {
      continue;
    }
    // Converged candidates outrank stalled ones; cost breaks ties.
    const bool better = !have_signed || (gn.converged && !best_signed.converged) ||
                        (gn.converged == best_signed.converged && gn.cost < best_signed.cost);
    if (better)
    {
      best_signed = gn;
      have_signed = true;
    }
  }

  GnOutcome winner = have_signed ? best_signed : best;
  if (!have_signed)
  {
    winner.converged = false;
  }
  if (!std::isfinite(winner.cost))
  {
    // no seed produced a usable solve
    winner.omega = Eigen::Vector3d::Zero();
    winner.cost = m.cost(winner.omega, y_active);
    winner.converged = false;
    winner.cost_history = {winner.cost};
  }
  return finish_result(m, y_active, winner, geom);
}

} // namespace imuarray
