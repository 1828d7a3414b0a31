/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace imuarray
{

/// Counter-based, splittable pseudo-random generator.
///
/// The output for draw i of stream s is a pure function of
/// (master_seed, s, i), so any run of a Monte Carlo experiment can be
/// regenerated independently of execution order or thread count.
/// The core is the splitmix64 finalizer applied to an affine counter.
class CounterRng
{
public:
  CounterRng(std::uint64_t master_seed, std::uint64_t stream)
  {
    key_ = mix(mix(master_seed) ^ (stream * 0xd2b74407b1ce6e93ULL + 0xca5a826395121157ULL));
  }

  std::uint64_t next_u64()
  {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix(key_ + counter_);
  }

  /// Uniform draw in [0, 1).
  double uniform()
  {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal draw (Marsaglia polar method, second value cached).
  double normal()
  {
    if (has_spare_)
    {
      has_spare_ = false;
      return spare_;
    }
    double u;
    double v;
    double s;
    do
    {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  Eigen::VectorXd normal_vector(Eigen::Index n)
  {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
      z[i] = normal();
    }
    return z;
  }

private:
  static std::uint64_t mix(std::uint64_t z)
  {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

} // namespace imuarray
