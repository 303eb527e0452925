// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/inference.hpp"

#include <algorithm>

#include "recipe_tune/error.hpp"
#include "recipe_tune/http_transport.hpp"
#include "recipe_tune/parallel.hpp"
#include "text_util.hpp"

namespace recipe_tune::inference {

void validate_request(const GenerationRequest& request) {
    const bool has_media = request.media_ref.has_value() && !request.media_ref->empty();
    if (has_media != (request.media_kind != MediaKind::None)) {
        throw Error(ErrorCode::InvalidArgument, "request '" + request.item_id + "': media_ref must be set iff media_kind is not none");
    }
}

// --- replay -----------------------------------------------------------------

ReplayBackend::ReplayBackend(std::map<std::string, std::string> responses) : responses_(std::move(responses)) {}

ReplayBackend ReplayBackend::from_file(const std::filesystem::path& path) {
    std::map<std::string, std::string> responses;
    for (const auto& row : read_jsonl(path)) {
        try {
            responses[row.at("item_id").get<std::string>()] = row.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedDocument, path.string() + ": replay rows need item_id and text: " + e.what());
        }
    }
    return ReplayBackend(std::move(responses));
}

ModelResponse ReplayBackend::generate(const GenerationRequest& request) {
    validate_request(request);
    auto it = responses_.find(request.item_id);
    if (it == responses_.end()) {
        throw Error(ErrorCode::GenerationFailed, "no recorded response for item '" + request.item_id + "'");
    }
    return {request.item_id, it->second, name(), 0};
}

// --- mock -------------------------------------------------------------------

MockBackend::MockBackend(std::string text_template) : template_(std::move(text_template)) {}

namespace {

void replace_all(std::string& s, std::string_view from, const std::string& to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

} // namespace

ModelResponse MockBackend::generate(const GenerationRequest& request) {
    validate_request(request);
    auto stem = request.media_ref ? std::filesystem::path(*request.media_ref).stem().string() : std::string();
    auto text = template_;
    replace_all(text, "{video_stem}", stem);
    replace_all(text, "{item_id}", request.item_id);
    replace_all(text, "{prompt}", request.prompt);
    return {request.item_id, text, name(), 0};
}

// --- live -------------------------------------------------------------------

HttpBackend::HttpBackend(std::string url, std::string auth_token, std::chrono::seconds timeout,
                         std::size_t max_parallelism)
    : url_(std::move(url)), auth_token_(std::move(auth_token)), timeout_(timeout),
      max_parallelism_(std::max<std::size_t>(max_parallelism, 1)) {}

ordered_json HttpBackend::request_body(const GenerationRequest& request) {
    ordered_json body;
    body["prompt"] = request.prompt;
    if (request.media_ref) {
        const auto& ref = *request.media_ref;
        if (ref.starts_with("http://") || ref.starts_with("https://")) {
            body["media_url"] = ref;
        } else {
            std::error_code ec;
            if (!std::filesystem::is_regular_file(ref, ec)) {
                throw Error(ErrorCode::MediaNotFound, "media file '" + ref + "' does not exist");
            }
            body["media_b64"] = base64_encode(read_text_file(ref));
        }
    }
    body["params"] = {{"temperature", request.params.temperature}, {"max_tokens", request.params.max_tokens}};
    return body;
}

ModelResponse HttpBackend::generate(const GenerationRequest& request) {
    validate_request(request);
    auto body = request_body(request).dump();

    std::map<std::string, std::string> headers;
    if (!auth_token_.empty()) headers["Authorization"] = "Bearer " + auth_token_;

    const auto started = std::chrono::steady_clock::now();
    HttpResponse response;
    try {
        response = post_json(url_, body, headers, timeout_);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::TransportError) throw Error(ErrorCode::BackendUnavailable, e.what());
        throw;
    }
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    if (response.status < 200 || response.status >= 300) {
        throw Error(ErrorCode::GenerationFailed,
                    "endpoint returned HTTP " + std::to_string(response.status) + ": " + response.body.substr(0, 256));
    }
    auto doc = nlohmann::json::parse(response.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("text") || !doc["text"].is_string()) {
        throw Error(ErrorCode::GenerationFailed, "endpoint reply has no string \"text\" field");
    }
    return {request.item_id, doc["text"].get<std::string>(), name(), elapsed.count()};
}

// --- batch runs -------------------------------------------------------------

GenerationRequest make_request(const EvalItem& item, const InferenceOptions& options) {
    GenerationRequest req;
    req.item_id = item.item_id;
    req.media_kind = MediaKind::Video;
    req.media_ref = options.media_root.empty()
                        ? item.video_id
                        : (options.media_root / (item.video_id + options.media_extension)).string();
    req.prompt = item.question;
    req.params = options.params;
    return req;
}

ordered_json to_json(const ResponseRow& row) {
    if (row.response) {
        const auto& r = *row.response;
        return {{"item_id", r.item_id}, {"text", r.text}, {"backend_name", r.backend_name}, {"latency_ms", r.latency_ms}};
    }
    return {{"item_id", row.item_id}, {"error", row.error}};
}

ResponseRow response_row_from_json(const ordered_json& j) {
    try {
        ResponseRow row;
        row.item_id = j.at("item_id").get<std::string>();
        if (j.contains("error")) {
            row.error = j["error"].get<std::string>();
            return row;
        }
        row.response = ModelResponse{row.item_id, j.at("text").get<std::string>(),
                                     j.at("backend_name").get<std::string>(), j.at("latency_ms").get<std::int64_t>()};
        return row;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, std::string("response row: ") + e.what());
    }
}

std::vector<ResponseRow> read_responses(const std::filesystem::path& path) {
    std::vector<ResponseRow> rows;
    for (const auto& j : read_jsonl(path)) rows.push_back(response_row_from_json(j));
    return rows;
}

RunSummary generate_all(Backend& backend, const std::vector<EvalItem>& items, const InferenceOptions& options) {
    if (items.empty()) throw Error(ErrorCode::EmptyInput, "no eval items to run");
    if (options.parallelism == 0) throw Error(ErrorCode::InvalidArgument, "parallelism must be at least 1");
    const auto workers = std::min(options.parallelism, backend.max_parallelism());

    RunSummary summary;
    summary.rows = parallel_map(items.size(), workers, [&](std::size_t i) {
        const auto& item = items[i];
        ResponseRow row{item.item_id, std::nullopt, {}};
        try {
            auto response = backend.generate(make_request(item, options));
            if (response.item_id != item.item_id) {
                row.error = "GenerationFailed: backend answered for item '" + response.item_id + "'";
            } else if (detail::is_blank(response.text)) {
                row.error = "GenerationFailed: empty response";
            } else {
                row.response = std::move(response);
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        return row;
    });
    for (const auto& row : summary.rows) (row.ok() ? summary.ok : summary.failed)++;
    return summary;
}

RunSummary run_inference(Backend& backend, const std::vector<EvalItem>& items, const std::filesystem::path& out_path,
                         const InferenceOptions& options) {
    auto summary = generate_all(backend, items, options);
    std::vector<ordered_json> rows;
    rows.reserve(summary.rows.size());
    for (const auto& row : summary.rows) rows.push_back(to_json(row));
    write_text_file(out_path, to_jsonl(rows));
    return summary;
}

} // namespace recipe_tune::inference
