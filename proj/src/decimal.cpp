// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/decimal.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "recipe_tune/error.hpp"

namespace recipe_tune {

namespace {

using u128 = unsigned __int128;

u128 pow10(int n) {
    u128 r = 1;
    for (int i = 0; i < n; ++i) r *= 10;
    return r;
}

std::string u128_to_string(u128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v > 0) {
        s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    return s;
}

// Splits a scaled integer into "<int>.<frac>" with `decimals` digits.
std::string place_point(u128 scaled, int decimals) {
    std::string digits = u128_to_string(scaled);
    if (decimals == 0) return digits;
    if (static_cast<int>(digits.size()) <= decimals) {
        digits.insert(0, static_cast<std::size_t>(decimals + 1) - digits.size(), '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(decimals), ".");
    return digits;
}

} // namespace

std::string render_percent(std::uint64_t part, std::uint64_t whole, int decimals, Rounding rounding) {
    if (whole == 0) throw Error(ErrorCode::InvalidArgument, "render_percent: zero denominator");
    if (decimals < 0 || decimals > 12) throw Error(ErrorCode::InvalidArgument, "render_percent: bad decimal count");
    const u128 numerator = static_cast<u128>(part) * 100 * pow10(decimals);
    u128 scaled = 0;
    if (rounding == Rounding::HalfUp) {
        scaled = (2 * numerator + whole) / (2 * static_cast<u128>(whole));
    } else {
        scaled = numerator / whole;
    }
    return place_point(scaled, decimals);
}

std::string render_fixed(double value, int decimals, Rounding rounding) {
    if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "render_fixed: non-finite value");
    if (decimals < 0 || decimals > 12) throw Error(ErrorCode::InvalidArgument, "render_fixed: bad decimal count");

    std::array<char, 512> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), std::fabs(value),
                                   std::chars_format::fixed);
    if (ec != std::errc{}) throw Error(ErrorCode::InvalidArgument, "render_fixed: value too large");
    std::string text(buf.data(), end);

    auto dot = text.find('.');
    std::string int_part = dot == std::string::npos ? text : text.substr(0, dot);
    std::string frac_part = dot == std::string::npos ? "" : text.substr(dot + 1);

    bool round_up = false;
    if (static_cast<int>(frac_part.size()) > decimals) {
        round_up = rounding == Rounding::HalfUp && frac_part[static_cast<std::size_t>(decimals)] >= '5';
        frac_part.resize(static_cast<std::size_t>(decimals));
    } else {
        frac_part.append(static_cast<std::size_t>(decimals) - frac_part.size(), '0');
    }

    std::string digits = int_part + frac_part;
    if (round_up) {
        int i = static_cast<int>(digits.size()) - 1;
        for (; i >= 0; --i) {
            if (digits[static_cast<std::size_t>(i)] == '9') {
                digits[static_cast<std::size_t>(i)] = '0';
            } else {
                ++digits[static_cast<std::size_t>(i)];
                break;
            }
        }
        if (i < 0) digits.insert(digits.begin(), '1');
    }

    std::string out = decimals == 0
        ? digits
        : digits.substr(0, digits.size() - static_cast<std::size_t>(decimals)) + "." +
              digits.substr(digits.size() - static_cast<std::size_t>(decimals));
    bool all_zero = out.find_first_not_of("0.") == std::string::npos;
    if (value < 0 && !all_zero) out.insert(out.begin(), '-');
    return out;
}

} // namespace recipe_tune
