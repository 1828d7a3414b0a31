/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "imuarray/crb.hpp"
#include "imuarray/estimator.hpp"
#include "imuarray/geometry.hpp"
#include "imuarray/montecarlo.hpp"
#include "imuarray/signal_model.hpp"
#include "imuarray/tensor.hpp"
#include "imuarray/units.hpp"

namespace imuarray
{

// Geometry file: {"accel_positions_m": [[x,y,z],...],
//                 "n_gyro_triads": k, "gyro_saturation_dps": g}
ArrayGeometry load_geometry_json(const std::filesystem::path& path);
void save_geometry_json(const ArrayGeometry& geom, const std::filesystem::path& path);

// Noise file: {"accel_var_mps2sq": v, "gyro_std_dps": s} or a full
// SI covariance {"covariance_si": [[...],...]}.
NoiseModel load_noise_json(const std::filesystem::path& path, const ArrayGeometry& geom);

// State file: {"omega": [...], "omega_dot": [...], "specific_force_mps2": [...]}
// with the angular entries interpreted per `unit`.
MotionState load_state_json(const std::filesystem::path& path, AngleUnit unit);

// Measurement file: CSV channel_id,kind,triad_index,axis,value_si,saturated
void save_measurement_csv(const Measurement& meas, const ArrayGeometry& geom,
                          const std::filesystem::path& path);
Measurement load_measurement_csv(const std::filesystem::path& path, const ArrayGeometry& geom);

// Scenario file: JSON mirror of McScenario (angular quantities in degrees).
McScenario load_scenario_json(const std::filesystem::path& path);

// Report file: CSV speed_dps,method,axis,rmse_dps,sqrt_crb_dps,
// sqrt_crb_sat_dps,n_runs,failures
void save_mc_report_csv(const McReport& report, const std::filesystem::path& path);

// Sweep file: CSV speed_dps,axis,sqrt_crb_full,sqrt_crb_saturated
void save_crb_sweep_csv(const std::vector<double>& speeds, const Eigen::Vector3d& direction,
                        const ArrayGeometry& geom, const NoiseModel& noise,
                        const std::filesystem::path& path);

void save_estimate_json(const FusionResult& result, AngleUnit unit,
                        const std::filesystem::path& path);
void save_tensor_json(const TensorEstimate& estimate, AngleUnit unit,
                      const std::filesystem::path& path);

} // namespace imuarray
