/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "imuarray/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace imuarray
{
namespace
{

using nlohmann::json;

json read_json_file(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot open " + path.string());
  }
  try
  {
    return json::parse(in);
  }
  catch (const json::exception& e)
  {
    throw IoError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content)
{
  std::ofstream out(path);
  if (!out)
  {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << content;
  if (!out)
  {
    throw IoError("failed writing " + path.string());
  }
}

Eigen::Vector3d vector3_from_json(const json& j, const std::string& what)
{
  if (!j.is_array() || j.size() != 3)
  {
    throw IoError(what + " must be an array of three numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string format_double(double value)
{
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

const char* axis_name(int axis)
{
  switch (axis)
  {
    case 0:
      return "x";
    case 1:
      return "y";
    case 2:
      return "z";
    default:
      return "norm";
  }
}

int axis_from_name(const std::string& name)
{
  if (name == "x")
  {
    return 0;
  }
  if (name == "y")
  {
    return 1;
  }
  if (name == "z")
  {
    return 2;
  }
  throw IoError("unknown axis name: " + name);
}

std::vector<std::string> split_csv_line(const std::string& line)
{
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ','))
  {
    fields.push_back(field);
  }
  return fields;
}

} // namespace

ArrayGeometry load_geometry_json(const std::filesystem::path& path)
{
  const json j = read_json_file(path);
  ArrayGeometry geom;
  try
  {
    for (const auto& row : j.at("accel_positions_m"))
    {
      geom.accel_positions.push_back(vector3_from_json(row, "accel position"));
    }
    geom.n_gyro_triads = j.at("n_gyro_triads").get<int>();
    geom.gyro_saturation = deg2rad(j.at("gyro_saturation_dps").get<double>());
  }
  catch (const json::exception& e)
  {
    throw IoError("bad geometry file " + path.string() + ": " + e.what());
  }
  geom.validate();
  return geom;
}

void save_geometry_json(const ArrayGeometry& geom, const std::filesystem::path& path)
{
  json j;
  j["accel_positions_m"] = json::array();
  for (const auto& r : geom.accel_positions)
  {
    j["accel_positions_m"].push_back({r.x(), r.y(), r.z()});
  }
  j["n_gyro_triads"] = geom.n_gyro_triads;
  j["gyro_saturation_dps"] = rad2deg(geom.gyro_saturation);
  write_text_file(path, j.dump(2) + "\n");
}

NoiseModel load_noise_json(const std::filesystem::path& path, const ArrayGeometry& geom)
{
  const json j = read_json_file(path);
  try
  {
    if (j.contains("covariance_si"))
    {
      const auto& rows = j.at("covariance_si");
      const int n = static_cast<int>(rows.size());
      Eigen::MatrixXd q(n, n);
      for (int a = 0; a < n; ++a)
      {
        for (int b = 0; b < n; ++b)
        {
          q(a, b) = rows[a][b].get<double>();
        }
      }
      if (n != geom.n_channels())
      {
        throw ValidationError("covariance size does not match geometry");
      }
      return NoiseModel::full_covariance(q);
    }
    const double accel_var = j.at("accel_var_mps2sq").get<double>();
    const double gyro_std = deg2rad(j.at("gyro_std_dps").get<double>());
    return NoiseModel::iid(accel_var, gyro_std * gyro_std, geom);
  }
  catch (const json::exception& e)
  {
    throw IoError("bad noise file " + path.string() + ": " + e.what());
  }
}

MotionState load_state_json(const std::filesystem::path& path, AngleUnit unit)
{
  const json j = read_json_file(path);
  MotionState state;
  try
  {
    const Eigen::Vector3d omega = vector3_from_json(j.at("omega"), "omega");
    const Eigen::Vector3d omega_dot =
        j.contains("omega_dot") ? vector3_from_json(j.at("omega_dot"), "omega_dot")
                                : Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k)
    {
      state.omega[k] = to_si_angle(omega[k], unit);
      state.omega_dot[k] = to_si_angle(omega_dot[k], unit);
    }
    if (j.contains("specific_force_mps2"))
    {
      state.specific_force = vector3_from_json(j.at("specific_force_mps2"), "specific force");
    }
  }
  catch (const json::exception& e)
  {
    throw IoError("bad state file " + path.string() + ": " + e.what());
  }
  return state;
}

void save_measurement_csv(const Measurement& meas, const ArrayGeometry& geom,
                          const std::filesystem::path& path)
{
  meas.validate(geom);
  std::string out = "channel_id,kind,triad_index,axis,value_SI,saturated\n";
  int channel = 0;
  for (int i = 0; i < geom.n_accel_channels(); ++i, ++channel)
  {
    out += std::to_string(channel) + ",accel," + std::to_string(i / 3) + "," +
           axis_name(i % 3) + "," + format_double(meas.accel[i]) + ",0\n";
  }
  for (int i = 0; i < geom.n_gyro_channels(); ++i, ++channel)
  {
    out += std::to_string(channel) + ",gyro," + std::to_string(i / 3) + "," + axis_name(i % 3) +
           "," + format_double(meas.gyro[i]) + "," + (meas.saturated[i] ? "1" : "0") + "\n";
  }
  write_text_file(path, out);
}

Measurement load_measurement_csv(const std::filesystem::path& path, const ArrayGeometry& geom)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot open " + path.string());
  }
  Measurement meas;
  meas.accel.setZero(geom.n_accel_channels());
  meas.gyro.setZero(geom.n_gyro_channels());
  meas.saturated.assign(geom.n_gyro_channels(), false);
  std::vector<bool> seen_accel(geom.n_accel_channels(), false);
  std::vector<bool> seen_gyro(geom.n_gyro_channels(), false);

  std::string line;
  if (!std::getline(in, line))
  {
    throw IoError("empty measurement file " + path.string());
  }
  int line_no = 1;
  while (std::getline(in, line))
  {
    ++line_no;
    if (line.empty())
    {
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 6)
    {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields");
    }
    try
    {
      const std::string& kind = fields[1];
      const int triad = std::stoi(fields[2]);
      const int axis = axis_from_name(fields[3]);
      const double value = std::stod(fields[4]);
      const bool saturated = fields[5] == "1";
      const int idx = 3 * triad + axis;
      if (kind == "accel")
      {
        if (idx < 0 || idx >= geom.n_accel_channels())
        {
          throw IoError("accel channel out of range");
        }
        meas.accel[idx] = value;
        seen_accel[idx] = true;
      }
      else if (kind == "gyro")
      {
        if (idx < 0 || idx >= geom.n_gyro_channels())
        {
          throw IoError("gyro channel out of range");
        }
        meas.gyro[idx] = value;
        meas.saturated[idx] = saturated;
        seen_gyro[idx] = true;
      }
      else
      {
        throw IoError("unknown channel kind: " + kind);
      }
    }
    catch (const std::invalid_argument&)
    {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad numeric field");
    }
  }
  for (const bool seen : seen_accel)
  {
    if (!seen)
    {
      throw IoError(path.string() + ": missing accelerometer channels");
    }
  }
  for (const bool seen : seen_gyro)
  {
    if (!seen)
    {
      throw IoError(path.string() + ": missing gyroscope channels");
    }
  }
  return meas;
}

McScenario load_scenario_json(const std::filesystem::path& path)
{
  const json j = read_json_file(path);
  McScenario sc;
  try
  {
    if (j.contains("geometry_file"))
    {
      const std::filesystem::path geom_path = path.parent_path() / j.at("geometry_file").get<std::string>();
      sc.geom = load_geometry_json(geom_path);
    }
    else
    {
      const auto& g = j.at("geometry");
      for (const auto& row : g.at("accel_positions_m"))
      {
        sc.geom.accel_positions.push_back(vector3_from_json(row, "accel position"));
      }
      sc.geom.n_gyro_triads = g.at("n_gyro_triads").get<int>();
      sc.geom.gyro_saturation = deg2rad(g.at("gyro_saturation_dps").get<double>());
    }

    const auto& noise = j.at("noise");
    sc.accel_var = noise.at("accel_var_mps2sq").get<double>();
    const double gyro_std = deg2rad(noise.at("gyro_std_dps").get<double>());
    sc.gyro_var = gyro_std * gyro_std;

    const auto& sweep = j.at("sweep");
    if (sweep.contains("speeds_dps"))
    {
      for (const auto& s : sweep.at("speeds_dps"))
      {
        sc.speeds.push_back(deg2rad(s.get<double>()));
      }
    }
    else
    {
      const double min_dps = sweep.at("min_dps").get<double>();
      const double max_dps = sweep.at("max_dps").get<double>();
      const int per_decade = sweep.at("points_per_decade").get<int>();
      if (!(min_dps > 0.0) || !(max_dps > min_dps) || per_decade < 1)
      {
        throw ValidationError("bad logarithmic sweep");
      }
      const double decades = std::log10(max_dps / min_dps);
      const int n = static_cast<int>(std::floor(decades * per_decade)) + 1;
      for (int k = 0; k < n; ++k)
      {
        sc.speeds.push_back(deg2rad(min_dps * std::pow(10.0, static_cast<double>(k) / per_decade)));
      }
    }
    sc.direction = vector3_from_json(sweep.at("direction"), "sweep direction").normalized();

    if (j.contains("omega_dot_dps2"))
    {
      const Eigen::Vector3d wd = vector3_from_json(j.at("omega_dot_dps2"), "omega_dot");
      sc.omega_dot = Eigen::Vector3d(deg2rad(wd.x()), deg2rad(wd.y()), deg2rad(wd.z()));
    }
    if (j.contains("specific_force_mps2"))
    {
      sc.specific_force = vector3_from_json(j.at("specific_force_mps2"), "specific force");
    }

    sc.n_runs = j.at("n_runs").get<int>();
    sc.master_seed = j.at("master_seed").get<std::uint64_t>();

    sc.methods.clear();
    for (const auto& m : j.at("methods"))
    {
      const std::string name = m.get<std::string>();
      if (name == "ml")
      {
        sc.methods.push_back(McMethod::ml);
      }
      else if (name == "tensor")
      {
        sc.methods.push_back(McMethod::tensor);
      }
      else if (name == "gyro_average")
      {
        sc.methods.push_back(McMethod::gyro_average);
      }
      else
      {
        throw ValidationError("unknown method: " + name);
      }
    }

    if (j.contains("position_perturbation_std_m"))
    {
      sc.position_perturbation_std = j.at("position_perturbation_std_m").get<double>();
    }
  }
  catch (const json::exception& e)
  {
    throw IoError("bad scenario file " + path.string() + ": " + e.what());
  }
  sc.validate();
  return sc;
}

void save_mc_report_csv(const McReport& report, const std::filesystem::path& path)
{
  std::string out =
      "speed_dps,method,axis,rmse_dps,sqrt_crb_dps,sqrt_crb_sat_dps,n_runs,failures\n";
  for (const auto& row : report.rows)
  {
    out += format_double(rad2deg(row.speed));
    out += ",";
    out += to_string(row.method);
    out += ",";
    out += axis_name(row.axis);
    out += ",";
    out += format_double(rad2deg(row.rmse));
    out += ",";
    out += format_double(rad2deg(row.sqrt_crb));
    out += ",";
    out += format_double(rad2deg(row.sqrt_crb_sat));
    out += ",";
    out += std::to_string(row.n_runs);
    out += ",";
    out += std::to_string(row.failures);
    out += "\n";
  }
  write_text_file(path, out);
}

void save_crb_sweep_csv(const std::vector<double>& speeds, const Eigen::Vector3d& direction,
                        const ArrayGeometry& geom, const NoiseModel& noise,
                        const std::filesystem::path& path)
{
  const Eigen::Vector3d dir = direction.normalized();
  std::string out = "speed_dps,axis,sqrt_crb_full,sqrt_crb_saturated\n";
  for (const double speed : speeds)
  {
    const Eigen::Vector3d omega = speed * dir;
    const CrbReport full = crb_full(omega, geom, noise, CrbRegime::full);
    const CrbReport sat = crb_full(omega, geom, noise, CrbRegime::gyro_saturated);
    for (int axis = 0; axis < 3; ++axis)
    {
      out += format_double(rad2deg(speed));
      out += ",";
      out += axis_name(axis);
      out += ",";
      out += format_double(rad2deg(std::sqrt(full.crb_omega(axis, axis))));
      out += ",";
      out += format_double(rad2deg(std::sqrt(sat.crb_omega(axis, axis))));
      out += "\n";
    }
  }
  write_text_file(path, out);
}

void save_estimate_json(const FusionResult& result, AngleUnit unit,
                        const std::filesystem::path& path)
{
  json j;
  j["units"] = unit == AngleUnit::degrees ? "deg" : "rad";
  j["omega"] = {from_si_angle(result.omega.x(), unit), from_si_angle(result.omega.y(), unit),
                from_si_angle(result.omega.z(), unit)};
  j["omega_dot"] = {from_si_angle(result.omega_dot.x(), unit),
                    from_si_angle(result.omega_dot.y(), unit),
                    from_si_angle(result.omega_dot.z(), unit)};
  j["specific_force_mps2"] = {result.specific_force.x(), result.specific_force.y(),
                              result.specific_force.z()};
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["neg_loglik"] = result.final_neg_loglik;
  json used = json::array();
  for (size_t k = 0; k < result.used_channels.size(); ++k)
  {
    if (result.used_channels[k])
    {
      used.push_back(static_cast<int>(k));
    }
  }
  j["used_channels"] = used;
  write_text_file(path, j.dump(2) + "\n");
}

void save_tensor_json(const TensorEstimate& estimate, AngleUnit unit,
                      const std::filesystem::path& path)
{
  json j;
  j["units"] = unit == AngleUnit::degrees ? "deg" : "rad";
  j["specific_force_mps2"] = {estimate.s_hat.x(), estimate.s_hat.y(), estimate.s_hat.z()};
  j["omega_dot"] = {from_si_angle(estimate.omega_dot.x(), unit),
                    from_si_angle(estimate.omega_dot.y(), unit),
                    from_si_angle(estimate.omega_dot.z(), unit)};
  j["omega_abs"] = {from_si_angle(estimate.omega_abs.x(), unit),
                    from_si_angle(estimate.omega_abs.y(), unit),
                    from_si_angle(estimate.omega_abs.z(), unit)};
  if (estimate.omega_signed.has_value())
  {
    j["omega"] = {from_si_angle(estimate.omega_signed->x(), unit),
                  from_si_angle(estimate.omega_signed->y(), unit),
                  from_si_angle(estimate.omega_signed->z(), unit)};
  }
  j["low_confidence_sign"] = estimate.low_confidence_sign;
  write_text_file(path, j.dump(2) + "\n");
}

} // namespace imuarray
