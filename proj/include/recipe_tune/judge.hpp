// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recipe_tune/chat_client.hpp"
#include "recipe_tune/decimal.hpp"
#include "recipe_tune/inference.hpp"
#include "recipe_tune/youcook2.hpp"

namespace recipe_tune::judge {

using youcook2::EvalItem;

/// Scores at or above this are counted as accurate ("yes").
inline constexpr double kYesThreshold = 3.5;

// Adjacent literals are concatenated with no separator; only the first two
// bullet lines end in "\n".
inline constexpr std::string_view kSystemPrompt =
    "You are an intelligent chatbot designed for evaluating the correctness of generative outputs for "
    "question-answer pairs. "
    "Your task is to compare the predicted answer with the correct answer and determine if they match "
    "meaningfully. Here's how you can accomplish the task:"
    "-----"
    "##INSTRUCTIONS: "
    "- Focus on the meaningful match between the predicted answer and the correct answer.\n"
    "- Consider synonyms or paraphrases as valid matches.\n"
    "- Evaluate the correctness of the prediction compared to the answer."
    "- Consider the similarity between ingredient lists and measurements.";

/// Fixed user-message template. Its text is part of every cache key.
/// Placeholders: {question}, {answer}, {prediction}.
inline constexpr std::string_view kUserTemplate =
    "Please evaluate the following recipe question-answer pair:\n\n"
    "Question: {question}\n"
    "Correct Answer: {answer}\n"
    "Predicted Answer: {prediction}\n\n"
    "Provide your evaluation only as a JSON object with two keys: \"score\", a number from 1 to 5 where 5 "
    "indicates the highest meaningful match, and \"pred\", which is \"yes\" if the score is 3.5 or higher and "
    "\"no\" otherwise. Do not provide any other output text or explanation. "
    "For example: {\"score\": 4.0, \"pred\": \"yes\"}.";

enum class Pred { Yes, No };

std::string_view to_string(Pred pred);
Pred pred_for_score(double score);

struct JudgeVerdict {
    std::string item_id;
    double score = 1.0;
    Pred pred = Pred::No;
    std::string raw;

    bool operator==(const JudgeVerdict&) const = default;
};

/// System message (verbatim prompt) followed by the filled user template.
/// Throws EmptyPrediction.
std::vector<ChatMessage> build_judge_messages(const EvalItem& item, const std::string& prediction);

struct ParsedVerdict {
    double score = 1.0;
    Pred pred = Pred::No;
};

/// Reads the first JSON object carrying "score"; a "pred" in it must agree
/// with the threshold. Without such an object, takes the first standalone
/// number in [1, 5]. Throws UnparseableVerdictError.
ParsedVerdict parse_verdict(const std::string& raw);

/// Content-addressed verdict store: one JSON file per key under `dir`.
/// Distinct keys may be read and written concurrently.
class VerdictCache {
public:
    explicit VerdictCache(std::filesystem::path dir);

    static std::string key_for(const std::string& item_id, const std::string& model,
                               const std::vector<ChatMessage>& messages);

    std::optional<JudgeVerdict> get(const std::string& key) const;
    void put(const std::string& key, const JudgeVerdict& verdict) const;

private:
    std::filesystem::path path_for(const std::string& key) const;
    std::filesystem::path dir_;
};

struct JudgeOptions {
    std::string model = "gpt-3.5-turbo";
    double temperature = 0.0;
    int retry_cap = 5;
    std::chrono::milliseconds initial_backoff{500};
    // Injected for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Scores one prediction. A cache hit skips the client entirely. Transport
/// errors are retried with doubling backoff up to retry_cap times, then
/// surface as JudgeUnreachable.
JudgeVerdict score_item(ChatClient& client, const EvalItem& item, const std::string& prediction,
                        const JudgeOptions& options, const VerdictCache* cache = nullptr);

struct JudgeFailure {
    std::string item_id;
    std::string error;
};

struct JudgeRun {
    std::vector<JudgeVerdict> verdicts; // item order
    std::vector<JudgeFailure> failures;
};

/// Judges every item that has a successful response row. Items without one
/// (or whose judging fails) are reported as failures.
JudgeRun judge_all(ChatClient& client, const std::vector<EvalItem>& items,
                   const std::vector<inference::ResponseRow>& responses, const JudgeOptions& options,
                   const VerdictCache* cache, std::size_t parallelism);

ordered_json to_json(const JudgeVerdict& verdict);
JudgeVerdict verdict_from_json(const ordered_json& j);
void write_verdicts(const std::filesystem::path& path, const std::vector<JudgeVerdict>& verdicts);
std::vector<JudgeVerdict> read_verdicts(const std::filesystem::path& path);

struct EvalReport {
    std::size_t yes_count = 0;
    std::size_t no_count = 0;
    double accuracy_percent = 0.0;
    double average_score = 0.0;

    std::size_t total() const { return yes_count + no_count; }
};

/// Throws EmptyEvaluation on an empty list.
EvalReport aggregate(std::span<const JudgeVerdict> verdicts);

/// "46.814%" (3 decimals).
std::string render_accuracy(const EvalReport& report, Rounding rounding = Rounding::HalfUp);
/// "3.1296" (4 decimals).
std::string render_average(const EvalReport& report, Rounding rounding = Rounding::HalfUp);

struct ReportColumn {
    std::string label;
    EvalReport report;
};

struct RenderedReport {
    std::string markdown;
    ordered_json json;
};

/// Comparison table with rows Yes Count, No Count, Accuracy, Average Score and
/// one column per report. The JSON document carries the same rendered cells.
RenderedReport render_report(const EvalReport& fine_tuned, const std::optional<EvalReport>& baseline,
                             Rounding rounding = Rounding::HalfUp);
RenderedReport render_report(const std::vector<ReportColumn>& columns, Rounding rounding = Rounding::HalfUp);

} // namespace recipe_tune::judge
