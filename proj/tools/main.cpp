/*
 *  Copyright (C) 2026 imuarray contributors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "imuarray/cli.hpp"

int main(int argc, char** argv)
{
  return imuarray::run_cli(argc, argv);
}
