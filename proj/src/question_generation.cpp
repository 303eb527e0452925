// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include "json_scan.hpp"
#include "recipe_tune/error.hpp"
#include "recipe_tune/instruction_data.hpp"
#include "recipe_tune/parallel.hpp"
#include "text_util.hpp"

namespace recipe_tune::data {

using detail::trim;

std::vector<ChatMessage> question_generation_messages() {
    return {
        {"system", "You write training data for a cooking assistant."},
        {"user",
         "Write one general cooking question that a home cook might ask. It should be about technique, "
         "ingredients, equipment, food safety or kitchen habits, not a request for the recipe of one "
         "specific named dish. Then answer it thoroughly, giving concrete quantities, temperatures and "
         "times wherever they apply.\n"
         "Reply with only a JSON object of the form "
         "{\"question\": \"...\", \"answer\": \"...\"}."},
    };
}

std::string question_key(std::string_view question) {
    std::string key;
    bool pending_space = false;
    for (char c : trim(question)) {
        if (detail::is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space) key += ' ';
        pending_space = false;
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return key;
}

std::optional<QuestionAnswer> parse_question_reply(const std::string& reply) {
    for (const auto& obj : detail::json_objects_in(reply)) {
        if (obj.contains("question") && obj.contains("answer") && obj["question"].is_string() &&
            obj["answer"].is_string()) {
            QuestionAnswer qa{std::string(trim(obj["question"].get<std::string>())),
                              std::string(trim(obj["answer"].get<std::string>()))};
            if (qa.question.empty() || qa.answer.empty()) return std::nullopt;
            return qa;
        }
    }

    auto lower = detail::to_lower(reply);
    auto q = lower.find("question:");
    auto a = lower.find("answer:", q == std::string::npos ? 0 : q);
    if (q == std::string::npos || a == std::string::npos) return std::nullopt;
    QuestionAnswer qa{std::string(trim(std::string_view(reply).substr(q + 9, a - q - 9))),
                      std::string(trim(std::string_view(reply).substr(a + 7)))};
    if (qa.question.empty() || qa.answer.empty()) return std::nullopt;
    return qa;
}

std::vector<InstructionRecord> generate_text_qa(std::size_t target_count, ChatClient& client, std::uint64_t seed,
                                                const GenerationConfig& config) {
    if (target_count == 0) throw Error(ErrorCode::InvalidArgument, "target_count must be at least 1");
    if (config.parallelism == 0) throw Error(ErrorCode::InvalidArgument, "parallelism must be at least 1");
    const std::size_t budget = config.max_attempts ? config.max_attempts : 4 * target_count;
    const auto messages = question_generation_messages();

    std::vector<InstructionRecord> records;
    std::set<std::string> seen;
    std::size_t attempts = 0;

    while (records.size() < target_count && attempts < budget) {
        const std::size_t wave =
            std::min({config.parallelism, budget - attempts, target_count - records.size()});
        const std::size_t first = attempts;

        std::vector<std::string> replies;
        try {
            replies = parallel_map(wave, config.parallelism, [&](std::size_t i) {
                ChatRequest req;
                req.messages = messages;
                req.model = config.model;
                req.temperature = config.temperature;
                req.seed = seed + first + i;
                req.tag = "attempt-" + std::to_string(first + i);
                return client.complete(req);
            });
        } catch (const Error& e) {
            throw Error(ErrorCode::ClientError, std::string("question generation: ") + e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorCode::ClientError, std::string("question generation: ") + e.what());
        }
        attempts += wave;

        for (const auto& reply : replies) {
            if (records.size() == target_count) break;
            auto qa = parse_question_reply(reply);
            if (!qa || !seen.insert(question_key(qa->question)).second) continue;
            records.push_back(build_text_record(std::to_string(records.size()), qa->question, qa->answer));
        }
    }

    if (records.size() < target_count) {
        throw Error(ErrorCode::GenerationExhausted,
                    "only " + std::to_string(records.size()) + " unique questions of " +
                        std::to_string(target_count) + " after " + std::to_string(attempts) + " attempts");
    }
    return records;
}

} // namespace recipe_tune::data
