// Copyright 2026 The skylm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace skylm {

// Runs the skylm command line. Returns the process exit code: 0 on success,
// 1 on a fatal error, the parser's code on bad usage. Diagnostics go to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace skylm
