/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace imuarray
{

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector9d = Eigen::Matrix<double, 9, 1>;
using Matrix9d = Eigen::Matrix<double, 9, 9>;

/// Invalid configuration, dimension mismatch, or an unidentifiable model.
class ValidationError : public std::runtime_error
{
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// File-level failure: missing path, malformed content, write error.
class IoError : public std::runtime_error
{
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace imuarray
