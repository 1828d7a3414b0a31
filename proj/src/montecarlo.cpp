/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "imuarray/montecarlo.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "imuarray/crb.hpp"
#include "imuarray/tensor.hpp"

namespace imuarray
{
namespace
{

constexpr int kChunkRuns = 256;

struct MethodAccum
{
  std::array<double, 4> sum_sq = {0.0, 0.0, 0.0, 0.0}; // x, y, z, speed
  long successes = 0;
  long failures = 0;
};

struct ChunkAccum
{
  std::vector<MethodAccum> per_method;
  long simulated = 0;
};

Eigen::Vector3i gyro_sign_pattern(const Measurement& meas, const ArrayGeometry& geom)
{
  Eigen::Vector3i signs = Eigen::Vector3i::Zero();
  for (int axis = 0; axis < 3; ++axis)
  {
    double sum = 0.0;
    for (int j = axis; j < geom.n_gyro_channels(); j += 3)
    {
      sum += meas.gyro[j];
    }
    signs[axis] = sum > 0.0 ? 1 : (sum < 0.0 ? -1 : 0);
  }
  return signs;
}

// Delta-method bound on the speed error: the direction-projected
// variance. Unbounded axes poison the projection only when the
// direction actually touches them.
double projected_sqrt_crb(const Eigen::Matrix3d& crb, const Eigen::Vector3d& direction)
{
  double acc = 0.0;
  for (int i = 0; i < 3; ++i)
  {
    if (std::isinf(crb(i, i)))
    {
      if (std::abs(direction[i]) > 1e-12)
      {
        return std::numeric_limits<double>::infinity();
      }
      continue;
    }
    for (int j = 0; j < 3; ++j)
    {
      if (std::isinf(crb(j, j)) && std::abs(direction[j]) <= 1e-12)
      {
        continue;
      }
      acc += direction[i] * crb(i, j) * direction[j];
    }
  }
  return std::sqrt(std::max(acc, 0.0));
}

void run_one(const McScenario& sc, const NoiseModel& noise, const MotionState& truth,
             std::uint64_t stream, ChunkAccum& acc)
{
  CounterRng rng(sc.master_seed, stream);

  ArrayGeometry true_geom = sc.geom;
  if (sc.position_perturbation_std > 0.0)
  {
    for (auto& r : true_geom.accel_positions)
    {
      for (int k = 0; k < 3; ++k)
      {
        r[k] += sc.position_perturbation_std * rng.normal();
      }
    }
  }

  const Measurement meas = simulate_measurement(truth, true_geom, noise, rng);
  ++acc.simulated;

  const double true_speed = truth.omega.norm();
  for (size_t mi = 0; mi < sc.methods.size(); ++mi)
  {
    MethodAccum& ma = acc.per_method[mi];
    try
    {
      Eigen::Vector3d omega_hat;
      switch (sc.methods[mi])
      {
        case McMethod::ml:
        {
          const FusionResult res = estimate(meas, sc.geom, noise, sc.solver);
          if (!res.converged)
          {
            ++ma.failures;
            continue;
          }
          omega_hat = res.omega;
          break;
        }
        case McMethod::tensor:
        {
          const TensorEstimate te =
              tensor_estimate(meas.accel, sc.geom, gyro_sign_pattern(meas, sc.geom));
          omega_hat = te.omega_signed.value();
          break;
        }
        case McMethod::gyro_average:
        {
          omega_hat = gyro_average_baseline(meas, sc.geom, noise);
          break;
        }
      }
      const Eigen::Vector3d err = omega_hat - truth.omega;
      ma.sum_sq[0] += err.x() * err.x();
      ma.sum_sq[1] += err.y() * err.y();
      ma.sum_sq[2] += err.z() * err.z();
      const double speed_err = omega_hat.norm() - true_speed;
      ma.sum_sq[3] += speed_err * speed_err;
      ++ma.successes;
    }
    catch (const ValidationError&)
    {
      ++ma.failures;
    }
  }
}

} // namespace

const char* to_string(McMethod method)
{
  switch (method)
  {
    case McMethod::ml:
      return "ml";
    case McMethod::tensor:
      return "tensor";
    case McMethod::gyro_average:
      return "gyro_average";
  }
  return "unknown";
}

void McScenario::validate() const
{
  geom.validate();
  if (n_runs < 1)
  {
    throw ValidationError("scenario needs n_runs >= 1");
  }
  if (speeds.empty())
  {
    throw ValidationError("scenario needs at least one speed");
  }
  if (std::abs(direction.norm() - 1.0) > 1e-9)
  {
    throw ValidationError("scenario direction must be unit norm");
  }
  if (methods.empty())
  {
    throw ValidationError("scenario needs at least one method");
  }
  if (!(accel_var > 0.0) && geom.n_accel_triads() > 0)
  {
    throw ValidationError("scenario needs a positive accelerometer variance");
  }
  if (!(gyro_var > 0.0) && geom.n_gyro_triads > 0)
  {
    throw ValidationError("scenario needs a positive gyroscope variance");
  }
  if (position_perturbation_std < 0.0)
  {
    throw ValidationError("position perturbation std must be non-negative");
  }
}

McReport run_scenario(const McScenario& scenario, int threads)
{
  scenario.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const NoiseModel noise = NoiseModel::iid(scenario.accel_var, scenario.gyro_var, scenario.geom);
  const int n_methods = static_cast<int>(scenario.methods.size());
  const int worker_count = std::max(1, threads);

  McReport report;
  report.master_seed = scenario.master_seed;
  report.n_runs = scenario.n_runs;

  for (size_t speed_idx = 0; speed_idx < scenario.speeds.size(); ++speed_idx)
  {
    const double speed = scenario.speeds[speed_idx];
    MotionState truth;
    truth.omega = speed * scenario.direction;
    truth.omega_dot = scenario.omega_dot;
    truth.specific_force = scenario.specific_force;

    const int n_chunks = (scenario.n_runs + kChunkRuns - 1) / kChunkRuns;
    std::vector<ChunkAccum> chunks(n_chunks);
    for (auto& c : chunks)
    {
      c.per_method.resize(n_methods);
    }

    std::atomic<int> next_chunk{0};
    auto worker = [&]() {
      while (true)
      {
        const int chunk = next_chunk.fetch_add(1);
        if (chunk >= n_chunks)
        {
          return;
        }
        const int begin = chunk * kChunkRuns;
        const int end = std::min(begin + kChunkRuns, scenario.n_runs);
        for (int run = begin; run < end; ++run)
        {
          const std::uint64_t stream =
              static_cast<std::uint64_t>(speed_idx) * scenario.n_runs + run;
          run_one(scenario, noise, truth, stream, chunks[chunk]);
        }
      }
    };

    if (worker_count == 1)
    {
      worker();
    }
    else
    {
      std::vector<std::thread> pool;
      pool.reserve(worker_count);
      for (int t = 0; t < worker_count; ++t)
      {
        pool.emplace_back(worker);
      }
      for (auto& t : pool)
      {
        t.join();
      }
    }

    // Fixed-order reduction keeps the report identical for any thread
    // count.
    std::vector<MethodAccum> totals(n_methods);
    for (const auto& chunk : chunks)
    {
      report.total_simulated += chunk.simulated;
      for (int mi = 0; mi < n_methods; ++mi)
      {
        for (int axis = 0; axis < 4; ++axis)
        {
          totals[mi].sum_sq[axis] += chunk.per_method[mi].sum_sq[axis];
        }
        totals[mi].successes += chunk.per_method[mi].successes;
        totals[mi].failures += chunk.per_method[mi].failures;
      }
    }

    const CrbReport crb = crb_full(truth.omega, scenario.geom, noise, CrbRegime::full);
    const CrbReport crb_sat =
        crb_full(truth.omega, scenario.geom, noise, CrbRegime::gyro_saturated);

    for (int mi = 0; mi < n_methods; ++mi)
    {
      for (int axis = 0; axis < 4; ++axis)
      {
        McRow row;
        row.speed = speed;
        row.method = scenario.methods[mi];
        row.axis = axis;
        row.rmse = totals[mi].successes > 0
                       ? std::sqrt(totals[mi].sum_sq[axis] / totals[mi].successes)
                       : std::numeric_limits<double>::quiet_NaN();
        if (axis < 3)
        {
          row.sqrt_crb = std::sqrt(crb.crb_omega(axis, axis));
          row.sqrt_crb_sat = std::sqrt(crb_sat.crb_omega(axis, axis));
        }
        else
        {
          row.sqrt_crb = projected_sqrt_crb(crb.crb_omega, scenario.direction);
          row.sqrt_crb_sat = projected_sqrt_crb(crb_sat.crb_omega, scenario.direction);
        }
        row.n_runs = scenario.n_runs;
        row.failures = static_cast<int>(totals[mi].failures);
        report.rows.push_back(row);
      }
    }
  }

  const long expected =
      static_cast<long>(scenario.n_runs) * static_cast<long>(scenario.speeds.size());
  if (report.total_simulated != expected)
  {
    throw std::logic_error("montecarlo: simulated measurement count mismatch");
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

Eigen::Vector3d gyro_average_baseline(const Measurement& y, const ArrayGeometry& geom,
                                      const NoiseModel& noise)
{
  return init_from_gyros(y, geom, noise);
}

} // namespace imuarray
