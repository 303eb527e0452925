// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/jsonl.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "recipe_tune/error.hpp"

namespace recipe_tune {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileUnreadable, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::FileUnreadable, "read failed for '" + path.string() + "'");
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::OutputUnwritable, "cannot open '" + path.string() + "' for writing");
        out << contents;
        out.flush();
        if (!out) throw Error(ErrorCode::OutputUnwritable, "write failed for '" + path.string() + "'");
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::OutputUnwritable, "cannot move output into '" + path.string() + "'");
    }
}

std::vector<ordered_json> read_jsonl(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<ordered_json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(ordered_json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::MalformedDocument,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

std::string to_jsonl(const std::vector<ordered_json>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump();
        out += '\n';
    }
    return out;
}

} // namespace recipe_tune
