// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recipe_tune/jsonl.hpp"

namespace recipe_tune {

struct ChatMessage {
    std::string role;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::string model;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_tokens;
    // Caller-side correlation id (item id, attempt number). Never sent on the wire.
    std::string tag;
};

ordered_json messages_to_json(const std::vector<ChatMessage>& messages);

/// Text-in, text-out chat completion client shared by the judge and the
/// question generator. Implementations throw Error(TransportError) for
/// retryable failures and Error(ClientError) for everything else, and must be
/// safe to call concurrently.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

/// OpenAI-compatible `/v1/chat/completions` client.
class HttpChatClient final : public ChatClient {
public:
    HttpChatClient(std::string endpoint_url, std::string api_key,
                   std::chrono::seconds timeout = std::chrono::seconds(120));

    std::string complete(const ChatRequest& request) override;

    static ordered_json request_body(const ChatRequest& request);

private:
    std::string endpoint_url_;
    std::string api_key_;
    std::chrono::seconds timeout_;
};

/// Offline client. A request whose tag has a scripted reply gets it; otherwise
/// the reply cycle is indexed by the request seed (or by call order when the
/// request carries no seed).
class ScriptedChatClient final : public ChatClient {
public:
    ScriptedChatClient(std::map<std::string, std::string> by_tag, std::vector<std::string> cycle);

    std::string complete(const ChatRequest& request) override;

    std::size_t call_count() const { return calls_.load(); }

private:
    std::map<std::string, std::string> by_tag_;
    std::vector<std::string> cycle_;
    std::atomic<std::size_t> calls_{0};
};

} // namespace recipe_tune
