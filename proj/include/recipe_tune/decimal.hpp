// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace recipe_tune {

enum class Rounding { HalfUp, Truncate };

/// Renders 100 * part / whole with exactly `decimals` fractional digits using
/// exact integer arithmetic. No trailing percent sign. `whole` must be nonzero.
std::string render_percent(std::uint64_t part, std::uint64_t whole, int decimals,
                           Rounding rounding = Rounding::HalfUp);

/// Renders a finite double with exactly `decimals` fractional digits. Rounding
/// applies to the shortest round-trip decimal form of the value, so 3.12345
/// rounds half-up to 3.1235 even though the binary value sits just below it.
std::string render_fixed(double value, int decimals, Rounding rounding = Rounding::HalfUp);

} // namespace recipe_tune
