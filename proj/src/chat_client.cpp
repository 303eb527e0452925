// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/chat_client.hpp"

#include "recipe_tune/error.hpp"
#include "recipe_tune/http_transport.hpp"

namespace recipe_tune {

ordered_json messages_to_json(const std::vector<ChatMessage>& messages) {
    auto arr = ordered_json::array();
    for (const auto& m : messages) {
        arr.push_back({{"role", m.role}, {"content", m.content}});
    }
    return arr;
}

HttpChatClient::HttpChatClient(std::string endpoint_url, std::string api_key, std::chrono::seconds timeout)
    : endpoint_url_(std::move(endpoint_url)), api_key_(std::move(api_key)), timeout_(timeout) {}

ordered_json HttpChatClient::request_body(const ChatRequest& request) {
    ordered_json body;
    body["model"] = request.model;
    body["messages"] = messages_to_json(request.messages);
    body["temperature"] = request.temperature;
    if (request.seed) body["seed"] = *request.seed;
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
    return body;
}

std::string HttpChatClient::complete(const ChatRequest& request) {
    std::map<std::string, std::string> headers;
    if (!api_key_.empty()) headers["Authorization"] = "Bearer " + api_key_;

    auto response = post_json(endpoint_url_, request_body(request).dump(), headers, timeout_);
    if (is_retryable_status(response.status)) {
        throw Error(ErrorCode::TransportError, "chat endpoint returned HTTP " + std::to_string(response.status));
    }
    if (response.status < 200 || response.status >= 300) {
        throw Error(ErrorCode::ClientError, "chat endpoint returned HTTP " + std::to_string(response.status) +
                                                ": " + response.body.substr(0, 512));
    }

    try {
        auto doc = nlohmann::json::parse(response.body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ClientError, std::string("unexpected chat completion payload: ") + e.what());
    }
}

ScriptedChatClient::ScriptedChatClient(std::map<std::string, std::string> by_tag, std::vector<std::string> cycle)
    : by_tag_(std::move(by_tag)), cycle_(std::move(cycle)) {}

std::string ScriptedChatClient::complete(const ChatRequest& request) {
    auto call = calls_.fetch_add(1);
    if (auto it = by_tag_.find(request.tag); it != by_tag_.end()) return it->second;
    if (cycle_.empty()) {
        throw Error(ErrorCode::ClientError, "no scripted reply for '" + request.tag + "'");
    }
    auto index = request.seed ? *request.seed : static_cast<std::uint64_t>(call);
    return cycle_[index % cycle_.size()];
}

} // namespace recipe_tune
