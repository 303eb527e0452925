// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace recipe_tune {

using ordered_json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames, so readers never see a
// half-written file. Throws OutputUnwritable.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

// Blank lines are skipped. Throws FileUnreadable / MalformedDocument (with the
// 1-based line number in the message).
std::vector<ordered_json> read_jsonl(const std::filesystem::path& path);

std::string to_jsonl(const std::vector<ordered_json>& rows);

} // namespace recipe_tune
