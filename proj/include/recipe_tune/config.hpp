// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "recipe_tune/jsonl.hpp"

namespace recipe_tune {

/// Settings shared by every subcommand. Loaded from one JSON file; secrets
/// come from the environment (JUDGE_API_KEY, GENERATION_API_KEY,
/// BACKEND_AUTH_TOKEN) and are never read from the file.
struct PipelineConfig {
    struct Paths {
        std::filesystem::path output_dir = "out";
        std::filesystem::path cache_dir = "out/judge-cache";
        std::filesystem::path media_root;
    } paths;

    struct Generation {
        std::string client = "live"; // live | script
        std::string endpoint = "https://api.openai.com/v1/chat/completions";
        std::string model = "gpt-3.5-turbo";
        double temperature = 1.0;
        std::size_t max_attempts = 0;
        std::size_t parallelism = 4;
        std::filesystem::path script_file; // JSONL {question, answer}
        std::string api_key;
    } generation;

    struct Judge {
        std::string client = "live"; // live | script
        std::string endpoint = "https://api.openai.com/v1/chat/completions";
        std::string model = "gpt-3.5-turbo";
        std::size_t parallelism = 4;
        int retry_cap = 5;
        int backoff_ms = 500;
        bool use_cache = true;
        std::filesystem::path script_file; // JSONL {item_id, reply}
        std::string api_key;
    } judge;

    struct Backend {
        std::string kind = "mock"; // live | replay | mock
        std::string url;
        std::filesystem::path replay_file;
        std::string mock_template = "RECIPE FOR {video_stem}";
        std::size_t parallelism = 4;
        double temperature = 0.2;
        int max_tokens = 1024;
        int timeout_s = 600;
        std::string media_extension = ".mp4";
        std::string auth_token;
    } backend;

    struct Lora {
        long d_in = 16;
        long d_out = 16;
        int rank = 4;
        double alpha = 8.0;
        double learning_rate = 0.05;
        int steps = 500;
        std::uint64_t seed = 0;
        std::size_t batch_size = 32;
        std::size_t examples = 256;
        int true_rank = 1;
        std::string layout = "per_modality"; // per_modality | shared
    } lora;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

/// Unknown keys and wrongly typed values throw ConfigInvalid. Relative paths
/// in the file resolve against the file's directory.
PipelineConfig parse_config(const ordered_json& doc, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env = process_env);

/// Range checks that do not depend on the subcommand.
void validate_config(const PipelineConfig& config);

ordered_json to_json(const PipelineConfig& config); // secrets omitted

} // namespace recipe_tune
