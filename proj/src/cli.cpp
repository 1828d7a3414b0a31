/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "imuarray/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imuarray/io.hpp"

namespace imuarray
{
namespace
{

struct NoiseFlags
{
  std::string file;
  double accel_var = -1.0;
  double gyro_std_dps = -1.0;

  NoiseModel resolve(const ArrayGeometry& geom) const
  {
    if (accel_var > 0.0 || gyro_std_dps > 0.0)
    {
      if (!(accel_var > 0.0) || !(gyro_std_dps > 0.0))
      {
        throw ValidationError("inline noise needs both --accel-var and --gyro-std-dps");
      }
      const double gyro_std = deg2rad(gyro_std_dps);
      return NoiseModel::iid(accel_var, gyro_std * gyro_std, geom);
    }
    if (file.empty())
    {
      throw ValidationError("a noise file or inline noise values are required");
    }
    return load_noise_json(file, geom);
  }
};

AngleUnit parse_unit(const std::string& unit)
{
  if (unit == "deg")
  {
    return AngleUnit::degrees;
  }
  if (unit == "rad")
  {
    return AngleUnit::radians;
  }
  throw ValidationError("--units must be deg or rad");
}

int cmd_simulate(const std::string& geometry_file, const std::string& state_file,
                 const NoiseFlags& noise_flags, std::uint64_t seed, const std::string& unit_name,
                 const std::string& out)
{
  const ArrayGeometry geom = load_geometry_json(geometry_file);
  const MotionState state = load_state_json(state_file, parse_unit(unit_name));
  const NoiseModel noise = noise_flags.resolve(geom);
  const Measurement meas = simulate_measurement(state, geom, noise, seed);
  save_measurement_csv(meas, geom, out);

  int clipped = 0;
  for (const bool flag : meas.saturated)
  {
    clipped += flag ? 1 : 0;
  }
  std::printf("wrote %s: %d accel channels, %d gyro channels, %d saturated\n", out.c_str(),
              geom.n_accel_channels(), geom.n_gyro_channels(), clipped);
  return kExitOk;
}

int cmd_estimate(const std::string& geometry_file, const std::string& measurement_file,
                 const NoiseFlags& noise_flags, const std::string& unit_name,
                 const std::vector<double>& prior, const SolverOptions& opts,
                 const std::string& out)
{
  const ArrayGeometry geom = load_geometry_json(geometry_file);
  const AngleUnit unit = parse_unit(unit_name);
  const NoiseModel noise = noise_flags.resolve(geom);
  const Measurement meas = load_measurement_csv(measurement_file, geom);

  std::optional<Eigen::Vector3d> prior_omega;
  if (!prior.empty())
  {
    if (prior.size() != 3)
    {
      throw ValidationError("--prior needs three values");
    }
    prior_omega = Eigen::Vector3d(to_si_angle(prior[0], unit), to_si_angle(prior[1], unit),
                                  to_si_angle(prior[2], unit));
  }

  const FusionResult result = estimate(meas, geom, noise, opts, prior_omega);
  save_estimate_json(result, unit, out);
  std::printf("omega [%s]: %.6g %.6g %.6g (%s in %d iterations)\n",
              unit == AngleUnit::degrees ? "deg/s" : "rad/s",
              from_si_angle(result.omega.x(), unit), from_si_angle(result.omega.y(), unit),
              from_si_angle(result.omega.z(), unit),
              result.converged ? "converged" : "did not converge", result.iterations);
  return result.converged ? kExitOk : kExitNoConvergence;
}

int cmd_crb(const std::string& geometry_file, const NoiseFlags& noise_flags,
            const std::vector<double>& speeds_dps, const std::vector<double>& direction,
            const std::string& out)
{
  const ArrayGeometry geom = load_geometry_json(geometry_file);
  const NoiseModel noise = noise_flags.resolve(geom);
  if (speeds_dps.empty())
  {
    throw ValidationError("--speeds-dps needs at least one value");
  }
  if (direction.size() != 3)
  {
    throw ValidationError("--direction needs three values");
  }
  std::vector<double> speeds;
  speeds.reserve(speeds_dps.size());
  for (const double s : speeds_dps)
  {
    speeds.push_back(deg2rad(s));
  }
  const Eigen::Vector3d dir(direction[0], direction[1], direction[2]);
  if (!(dir.norm() > 0.0))
  {
    throw ValidationError("--direction must be nonzero");
  }
  save_crb_sweep_csv(speeds, dir, geom, noise, out);
  std::printf("wrote %s (%zu speeds)\n", out.c_str(), speeds.size());
  return kExitOk;
}

int cmd_montecarlo(const std::string& scenario_file, int threads, const std::string& out)
{
  const McScenario scenario = load_scenario_json(scenario_file);
  const McReport report = run_scenario(scenario, threads);
  save_mc_report_csv(report, out);
  std::printf("wrote %s: %zu rows, %ld simulated measurements, %.1f s\n", out.c_str(),
              report.rows.size(), report.total_simulated, report.wall_seconds);
  return kExitOk;
}

int cmd_tensor(const std::string& geometry_file, const std::string& measurement_file,
               const std::string& unit_name, const std::string& out)
{
  const ArrayGeometry geom = load_geometry_json(geometry_file);
  const AngleUnit unit = parse_unit(unit_name);
  const Measurement meas = load_measurement_csv(measurement_file, geom);

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

  const TensorEstimate est = tensor_estimate(meas.accel, geom, signs);
  save_tensor_json(est, unit, out);
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

int cmd_check(const std::string& geometry_file)
{
  const ArrayGeometry geom = load_geometry_json(geometry_file);
  const IdentifiabilityVerdict verdict = check_identifiability(geom);

  bool tensor_capable = geom.n_accel_triads() >= 4;
  if (tensor_capable)
  {
    Eigen::MatrixXd r(4, geom.n_accel_triads());
    for (int i = 0; i < geom.n_accel_triads(); ++i)
    {
      r(0, i) = 1.0;
      r.col(i).tail<3>() = geom.accel_positions[i];
    }
    tensor_capable = numerical_rank(r) == 4;
  }

  std::printf("identifiable: %s\n", verdict.identifiable ? "true" : "false");
  std::printf("reason: %s\n", to_string(verdict.reason));
  std::printf("h_rank: %d\n", verdict.h_rank);
  std::printf("position_span_dim: %d\n", verdict.position_span_dim);
  std::printf("tensor_capable: %s\n", tensor_capable ? "true" : "false");
  return verdict.identifiable ? kExitOk : kExitValidation;
}

} // namespace

int run_cli(int argc, const char* const* argv)
{
  CLI::App app{"inertial sensor array measurement fusion"};
  app.require_subcommand(1);

  std::string geometry_file;
  std::string state_file;
  std::string measurement_file;
  std::string scenario_file;
  std::string out;
  std::string unit_name = "deg";
  std::uint64_t seed = 1;
  int threads = 1;
  NoiseFlags noise;
  SolverOptions solver;
  std::vector<double> prior;
  std::vector<double> speeds_dps;
  std::vector<double> direction = {1.0, 0.0, 0.0};

  auto add_noise_flags = [&noise](CLI::App* cmd) {
    cmd->add_option("--noise", noise.file, "noise JSON file");
    cmd->add_option("--accel-var", noise.accel_var, "accelerometer variance [(m/s^2)^2]");
    cmd->add_option("--gyro-std-dps", noise.gyro_std_dps, "gyro standard deviation [deg/s]");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "draw one noisy measurement set");
  simulate->add_option("--geometry", geometry_file, "geometry JSON file")->required();
  simulate->add_option("--state", state_file, "motion state JSON file")->required();
  add_noise_flags(simulate);
  simulate->add_option("--seed", seed, "random seed");
  simulate->add_option("--units", unit_name, "deg or rad");
  simulate->add_option("--out", out, "output CSV path")->required();

  CLI::App* estimate_cmd = app.add_subcommand("estimate", "fuse one measurement set");
  estimate_cmd->add_option("--geometry", geometry_file, "geometry JSON file")->required();
  estimate_cmd->add_option("--measurement", measurement_file, "measurement CSV file")->required();
  add_noise_flags(estimate_cmd);
  estimate_cmd->add_option("--units", unit_name, "deg or rad");
  estimate_cmd->add_option("--prior", prior, "prior angular velocity (three values)");
  estimate_cmd->add_option("--max-iterations", solver.max_iterations, "solver iteration cap");
  estimate_cmd->add_option("--out", out, "output JSON path")->required();

  CLI::App* crb_cmd = app.add_subcommand("crb", "bound sweep over rotation speeds");
  crb_cmd->add_option("--geometry", geometry_file, "geometry JSON file")->required();
  add_noise_flags(crb_cmd);
  crb_cmd->add_option("--speeds-dps", speeds_dps, "speeds [deg/s]")->required();
  crb_cmd->add_option("--direction", direction, "rotation axis (three values)");
  crb_cmd->add_option("--out", out, "output CSV path")->required();

  CLI::App* mc = app.add_subcommand("montecarlo", "RMSE versus bound study");
  mc->add_option("--scenario", scenario_file, "scenario JSON file")->required();
  mc->add_option("--threads", threads, "worker threads");
  mc->add_option("--out", out, "output CSV path")->required();

  CLI::App* tensor_cmd = app.add_subcommand("tensor", "accelerometer-only tensor estimate");
  tensor_cmd->add_option("--geometry", geometry_file, "geometry JSON file")->required();
  tensor_cmd->add_option("--measurement", measurement_file, "measurement CSV file")->required();
  tensor_cmd->add_option("--units", unit_name, "deg or rad");
  tensor_cmd->add_option("--out", out, "output JSON path")->required();

  CLI::App* check = app.add_subcommand("check", "identifiability report");
  check->add_option("--geometry", geometry_file, "geometry JSON file")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try
  {
    if (simulate->parsed())
    {
      return cmd_simulate(geometry_file, state_file, noise, seed, unit_name, out);
    }
    if (estimate_cmd->parsed())
    {
      return cmd_estimate(geometry_file, measurement_file, noise, unit_name, prior, solver, out);
    }
    if (crb_cmd->parsed())
    {
      return cmd_crb(geometry_file, noise, speeds_dps, direction, out);
    }
    if (mc->parsed())
    {
      return cmd_montecarlo(scenario_file, threads, out);
    }
    if (tensor_cmd->parsed())
    {
      return cmd_tensor(geometry_file, measurement_file, unit_name, out);
    }
    if (check->parsed())
    {
      return cmd_check(geometry_file);
    }
  }
  catch (const ValidationError& e)
  {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  catch (const IoError& e)
  {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return kExitValidation;
}

} // namespace imuarray
