// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recipe_tune/jsonl.hpp"
#include "recipe_tune/youcook2.hpp"

namespace recipe_tune::inference {

using youcook2::EvalItem;

enum class MediaKind { Video, Image, None };

struct GenerationParams {
    double temperature = 0.2;
    int max_tokens = 1024;
};

struct GenerationRequest {
    std::string item_id;
    MediaKind media_kind = MediaKind::None;
    std::optional<std::string> media_ref; // present iff media_kind != None
    std::string prompt;
    GenerationParams params;
};

struct ModelResponse {
    std::string item_id;
    std::string text;
    std::string backend_name;
    std::int64_t latency_ms = 0;

    bool operator==(const ModelResponse&) const = default;
};

// Throws InvalidArgument when media_ref and media_kind disagree.
void validate_request(const GenerationRequest& request);

/// A generation backend. Calls must not depend on earlier calls. Backends
/// that cannot take concurrent calls report max_parallelism() == 1.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    virtual std::size_t max_parallelism() const { return std::numeric_limits<std::size_t>::max(); }
    virtual ModelResponse generate(const GenerationRequest& request) = 0;
};

/// Serves prerecorded text by item id. Byte-identical across runs; latency is
/// reported as 0.
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(std::map<std::string, std::string> responses);
    // JSONL of {item_id, text}
    static ReplayBackend from_file(const std::filesystem::path& path);

    std::string name() const override { return "replay"; }
    ModelResponse generate(const GenerationRequest& request) override;

private:
    std::map<std::string, std::string> responses_;
};

/// Fills a fixed template. Placeholders: {video_stem}, {item_id}, {prompt}.
class MockBackend final : public Backend {
public:
    explicit MockBackend(std::string text_template = "RECIPE FOR {video_stem}");

    std::string name() const override { return "mock"; }
    ModelResponse generate(const GenerationRequest& request) override;

private:
    std::string template_;
};

/// Thin client for a hosted model endpoint:
/// POST {prompt, media_url | media_b64, params} -> {text}.
class HttpBackend final : public Backend {
public:
    HttpBackend(std::string url, std::string auth_token,
                std::chrono::seconds timeout = std::chrono::seconds(600), std::size_t max_parallelism = 4);

    std::string name() const override { return "live"; }
    std::size_t max_parallelism() const override { return max_parallelism_; }
    ModelResponse generate(const GenerationRequest& request) override;

    // Exposed for tests: the JSON document sent for `request`.
    static ordered_json request_body(const GenerationRequest& request);

private:
    std::string url_;
    std::string auth_token_;
    std::chrono::seconds timeout_;
    std::size_t max_parallelism_;
};

struct InferenceOptions {
    std::size_t parallelism = 4;
    std::filesystem::path media_root; // empty -> media_ref is the bare video id
    std::string media_extension = ".mp4";
    GenerationParams params;
};

GenerationRequest make_request(const EvalItem& item, const InferenceOptions& options);

/// One line of a responses file: either a response or an error.
struct ResponseRow {
    std::string item_id;
    std::optional<ModelResponse> response;
    std::string error;

    bool ok() const { return response.has_value(); }
};

ordered_json to_json(const ResponseRow& row);
ResponseRow response_row_from_json(const ordered_json& j);
std::vector<ResponseRow> read_responses(const std::filesystem::path& path);

struct RunSummary {
    std::size_t ok = 0;
    std::size_t failed = 0;
    std::vector<ResponseRow> rows; // input order
};

/// Runs every item through `backend` and writes one JSONL row per item, in
/// input order. Per-item failures become error rows; the run continues.
/// Throws EmptyInput for an empty item list and OutputUnwritable.
RunSummary run_inference(Backend& backend, const std::vector<EvalItem>& items, const std::filesystem::path& out_path,
                         const InferenceOptions& options = {});

/// Same as run_inference without touching the filesystem.
RunSummary generate_all(Backend& backend, const std::vector<EvalItem>& items, const InferenceOptions& options = {});

} // namespace recipe_tune::inference
