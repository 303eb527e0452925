// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace recipe_tune::detail {

// Returns the end (one past '}') of the brace-balanced span starting at
// text[open], honoring quoted strings of either quote style, or npos.
inline std::size_t balanced_end(std::string_view text, std::size_t open) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = open; i < text.size(); ++i) {
        char c = text[i];
        if (quote) {
            if (c == '\\') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

// Python-style dict literals ({'score': 4}) are common in LLM replies.
inline std::string single_to_double_quotes(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c == '\'') c = '"';
    }
    return out;
}

/// Every top-level JSON object embedded in free text, in order of appearance.
inline std::vector<nlohmann::json> json_objects_in(std::string_view text) {
    std::vector<nlohmann::json> found;
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string_view::npos) {
        auto end = balanced_end(text, pos);
        if (end == std::string_view::npos) break;
        auto span = text.substr(pos, end - pos);
        auto parsed = nlohmann::json::parse(span, nullptr, false);
        if (parsed.is_discarded()) parsed = nlohmann::json::parse(single_to_double_quotes(span), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) {
            found.push_back(std::move(parsed));
            pos = end;
        } else {
            ++pos;
        }
    }
    return found;
}

} // namespace recipe_tune::detail
