/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <numbers>

namespace imuarray
{

enum class AngleUnit
{
  degrees,
  radians
};

constexpr double deg2rad(double deg)
{
  return deg * (std::numbers::pi / 180.0);
}

constexpr double rad2deg(double rad)
{
  return rad * (180.0 / std::numbers::pi);
}

/// Converts an angular quantity given in `unit` to SI (rad-based).
constexpr double to_si_angle(double value, AngleUnit unit)
{
  return unit == AngleUnit::degrees ? deg2rad(value) : value;
}

/// Converts an angular quantity from SI (rad-based) to `unit`.
constexpr double from_si_angle(double value, AngleUnit unit)
{
  return unit == AngleUnit::degrees ? rad2deg(value) : value;
}

} // namespace imuarray
