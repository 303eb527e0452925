// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "recipe_tune/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return recipe_tune::cli::dispatch(args, std::cout, std::cerr);
}
