// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "recipe_tune/config.hpp"

namespace recipe_tune::cli {

enum ExitStatus : int {
    kOk = 0,
    kValidationFailure = 1,
    kConfigError = 2,
    kPartialFailure = 3,
};

/// Runs one subcommand. `args` includes the program name. Never throws.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const EnvLookup& env = process_env);

} // namespace recipe_tune::cli
