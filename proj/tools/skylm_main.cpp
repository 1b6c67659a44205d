// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "skylm/cli.h"

int main(int argc, char** argv) {
  return skylm::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
