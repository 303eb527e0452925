// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/judge.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <thread>

#include "json_scan.hpp"
#include "recipe_tune/digest.hpp"
#include "recipe_tune/error.hpp"
#include "recipe_tune/parallel.hpp"
#include "text_util.hpp"

namespace recipe_tune::judge {

std::string_view to_string(Pred pred) {
    return pred == Pred::Yes ? "yes" : "no";
}

Pred pred_for_score(double score) {
    return score >= kYesThreshold ? Pred::Yes : Pred::No;
}

std::vector<ChatMessage> build_judge_messages(const EvalItem& item, const std::string& prediction) {
    if (detail::is_blank(prediction)) {
        throw Error(ErrorCode::EmptyPrediction, "prediction for item '" + item.item_id + "' is empty");
    }
    const std::map<std::string_view, const std::string*> values{
        {"{question}", &item.question}, {"{answer}", &item.ground_truth}, {"{prediction}", &prediction}};

    // Single left-to-right pass, so braces inside substituted text stay literal.
    std::string user;
    std::string_view rest = kUserTemplate;
    while (!rest.empty()) {
        bool substituted = false;
        if (rest.front() == '{') {
            for (const auto& [key, value] : values) {
                if (rest.starts_with(key)) {
                    user += *value;
                    rest.remove_prefix(key.size());
                    substituted = true;
                    break;
                }
            }
        }
        if (!substituted) {
            user += rest.front();
            rest.remove_prefix(1);
        }
    }
    return {{"system", std::string(kSystemPrompt)}, {"user", std::move(user)}};
}

// --- verdict parsing --------------------------------------------------------

namespace {

[[noreturn]] void unparseable(const std::string& why, const std::string& raw) {
    throw UnparseableVerdictError(why, raw);
}

std::optional<double> number_in(const nlohmann::json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        auto s = detail::trim(v.get_ref<const std::string&>());
        double d = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
        if (ec == std::errc{} && ptr == s.data() + s.size()) return d;
    }
    return std::nullopt;
}

bool in_range(double s) { return std::isfinite(s) && s >= 1.0 && s <= 5.0; }

// Numbers that are not glued to letters, digits, or other numbers. A trailing
// sentence period is fine ("gave it 4.").
std::vector<double> standalone_numbers(std::string_view text) {
    std::vector<double> out;
    auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        bool negative = start > 0 && text[start - 1] == '-' && (start < 2 || !is_word(text[start - 2]));
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        if (i + 1 < text.size() && text[i] == '.' && std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            ++i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        }
        bool glued_before = start > 0 && (is_word(text[start - 1]) || text[start - 1] == '.');
        bool glued_after = i < text.size() && (is_word(text[i]) ||
                                               (text[i] == '.' && i + 1 < text.size() &&
                                                std::isdigit(static_cast<unsigned char>(text[i + 1]))));
        if (glued_before || glued_after) continue;
        double v = 0;
        std::from_chars(text.data() + start, text.data() + i, v);
        out.push_back(negative ? -v : v);
    }
    return out;
}

} // namespace

ParsedVerdict parse_verdict(const std::string& raw) {
    for (const auto& obj : detail::json_objects_in(raw)) {
        if (!obj.contains("score")) continue;
        auto score = number_in(obj["score"]);
        if (!score) unparseable("\"score\" is not a number", raw);
        if (!in_range(*score)) unparseable("score " + std::to_string(*score) + " is outside 1-5", raw);
        ParsedVerdict v{*score, pred_for_score(*score)};
        if (obj.contains("pred")) {
            if (!obj["pred"].is_string()) unparseable("\"pred\" is not a string", raw);
            auto p = detail::to_lower(detail::trim(obj["pred"].get<std::string>()));
            if (p != "yes" && p != "no") unparseable("\"pred\" must be yes or no", raw);
            if (p != to_string(v.pred)) {
                unparseable("\"pred\" " + p + " contradicts score " + std::to_string(*score), raw);
            }
        }
        return v;
    }
    for (double n : standalone_numbers(raw)) {
        if (in_range(n)) return {n, pred_for_score(n)};
    }
    unparseable("no score found in judge reply", raw);
}

// --- cache ------------------------------------------------------------------

VerdictCache::VerdictCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string VerdictCache::key_for(const std::string& item_id, const std::string& model,
                                  const std::vector<ChatMessage>& messages) {
    auto message_hash = sha256_hex(messages_to_json(messages).dump());
    return sha256_hex(item_id + '\n' + model + '\n' + message_hash);
}

std::filesystem::path VerdictCache::path_for(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<JudgeVerdict> VerdictCache::get(const std::string& key) const {
    auto path = path_for(key);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
    auto doc = ordered_json::parse(read_text_file(path), nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
    try {
        return verdict_from_json(doc);
    } catch (const Error&) {
        return std::nullopt;
    }
}

void VerdictCache::put(const std::string& key, const JudgeVerdict& verdict) const {
    write_text_file(path_for(key), to_json(verdict).dump() + "\n");
}

// --- scoring ----------------------------------------------------------------

JudgeVerdict score_item(ChatClient& client, const EvalItem& item, const std::string& prediction,
                        const JudgeOptions& options, const VerdictCache* cache) {
    auto messages = build_judge_messages(item, prediction);
    std::string key;
    if (cache) {
        key = VerdictCache::key_for(item.item_id, options.model, messages);
        if (auto hit = cache->get(key)) return *hit;
    }

    ChatRequest request;
    request.messages = std::move(messages);
    request.model = options.model;
    request.temperature = options.temperature;
    request.tag = item.item_id;

    std::string raw;
    auto backoff = options.initial_backoff;
    for (int attempt = 0;; ++attempt) {
        try {
            raw = client.complete(request);
            break;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::TransportError) {
                throw Error(ErrorCode::JudgeUnreachable, "item '" + item.item_id + "': " + e.what());
            }
            if (attempt >= options.retry_cap) {
                throw Error(ErrorCode::JudgeUnreachable, "item '" + item.item_id + "' after " +
                                                             std::to_string(attempt + 1) + " attempts: " + e.what());
            }
        }
        if (options.sleep) {
            options.sleep(backoff);
        } else {
            std::this_thread::sleep_for(backoff);
        }
        backoff *= 2;
    }

    auto parsed = parse_verdict(raw);
    JudgeVerdict verdict{item.item_id, parsed.score, parsed.pred, raw};
    if (cache) cache->put(key, verdict);
    return verdict;
}

JudgeRun judge_all(ChatClient& client, const std::vector<EvalItem>& items,
                   const std::vector<inference::ResponseRow>& responses, const JudgeOptions& options,
                   const VerdictCache* cache, std::size_t parallelism) {
    std::map<std::string, const inference::ResponseRow*> by_id;
    for (const auto& row : responses) by_id[row.item_id] = &row;

    struct Outcome {
        std::optional<JudgeVerdict> verdict;
        std::string error;
    };
    auto outcomes = parallel_map(items.size(), std::max<std::size_t>(parallelism, 1), [&](std::size_t i) {
        const auto& item = items[i];
        auto it = by_id.find(item.item_id);
        if (it == by_id.end()) return Outcome{std::nullopt, "no response row"};
        if (!it->second->ok()) return Outcome{std::nullopt, "inference failed: " + it->second->error};
        try {
            return Outcome{score_item(client, item, it->second->response->text, options, cache), {}};
        } catch (const std::exception& e) {
            return Outcome{std::nullopt, e.what()};
        }
    });

    JudgeRun run;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (outcomes[i].verdict) {
            run.verdicts.push_back(std::move(*outcomes[i].verdict));
        } else {
            run.failures.push_back({items[i].item_id, std::move(outcomes[i].error)});
        }
    }
    return run;
}

// --- verdict files ----------------------------------------------------------

ordered_json to_json(const JudgeVerdict& verdict) {
    return {{"item_id", verdict.item_id}, {"score", verdict.score}, {"pred", to_string(verdict.pred)}, {"raw", verdict.raw}};
}

JudgeVerdict verdict_from_json(const ordered_json& j) {
    JudgeVerdict v;
    try {
        v.item_id = j.at("item_id").get<std::string>();
        v.score = j.at("score").get<double>();
        auto pred = j.at("pred").get<std::string>();
        if (pred != "yes" && pred != "no") throw Error(ErrorCode::MalformedDocument, "pred must be yes or no");
        v.pred = pred == "yes" ? Pred::Yes : Pred::No;
        v.raw = j.value("raw", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, std::string("verdict row: ") + e.what());
    }
    if (!in_range(v.score)) throw Error(ErrorCode::MalformedDocument, "verdict '" + v.item_id + "' score outside 1-5");
    if (v.pred != pred_for_score(v.score)) {
        throw Error(ErrorCode::MalformedDocument, "verdict '" + v.item_id + "' pred disagrees with its score");
    }
    return v;
}

void write_verdicts(const std::filesystem::path& path, const std::vector<JudgeVerdict>& verdicts) {
    std::vector<ordered_json> rows;
    rows.reserve(verdicts.size());
    for (const auto& v : verdicts) rows.push_back(to_json(v));
    write_text_file(path, to_jsonl(rows));
}

std::vector<JudgeVerdict> read_verdicts(const std::filesystem::path& path) {
    std::vector<JudgeVerdict> out;
    for (const auto& row : read_jsonl(path)) out.push_back(verdict_from_json(row));
    return out;
}

// --- aggregation ------------------------------------------------------------

EvalReport aggregate(std::span<const JudgeVerdict> verdicts) {
    if (verdicts.empty()) throw Error(ErrorCode::EmptyEvaluation, "no verdicts to aggregate");
    EvalReport report;
    std::vector<double> scores;
    scores.reserve(verdicts.size());
    for (const auto& v : verdicts) {
        if (!in_range(v.score) || v.pred != pred_for_score(v.score)) {
            throw Error(ErrorCode::InvalidArgument, "verdict '" + v.item_id + "' is inconsistent");
        }
        (v.pred == Pred::Yes ? report.yes_count : report.no_count)++;
        scores.push_back(v.score);
    }
    // Summing in sorted order makes the mean independent of verdict order.
    std::sort(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += s;
    report.accuracy_percent = 100.0 * static_cast<double>(report.yes_count) / static_cast<double>(report.total());
    report.average_score = sum / static_cast<double>(verdicts.size());
    return report;
}

std::string render_accuracy(const EvalReport& report, Rounding rounding) {
    if (report.total() == 0) throw Error(ErrorCode::EmptyEvaluation, "report has no verdicts");
    return render_percent(report.yes_count, report.total(), 3, rounding) + "%";
}

std::string render_average(const EvalReport& report, Rounding rounding) {
    return render_fixed(report.average_score, 4, rounding);
}

} // namespace recipe_tune::judge
