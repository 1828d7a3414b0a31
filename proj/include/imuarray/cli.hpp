/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

namespace imuarray
{

// Exit codes: 0 success, 2 validation/identifiability, 3 I/O,
// 4 non-convergence.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNoConvergence = 4;

/// Entry point of the command-line tool (simulate, estimate, crb,
/// montecarlo, tensor, check). Separated from main() so tests can drive
/// it in-process.
int run_cli(int argc, const char* const* argv);

} // namespace imuarray
