// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace viz::cli {

// Runs one vizctl invocation. `args` excludes the program name. Returns the exit
// status: 0 on success, 1 when the operation was refused or failed, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace viz::cli
