// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recipe_tune/chat_client.hpp"
#include "recipe_tune/jsonl.hpp"

namespace recipe_tune::data {

inline constexpr std::string_view kImagePrompt = "What is the dish in this image?";
inline constexpr std::string_view kVideoPrompt =
    "Can you give me a recipe from the provided videos and include specific "
    "measurements for each of the ingredients?";

enum class Speaker { Human, Gpt };
enum class Modality { Image, Video, Text };

std::string_view to_string(Speaker speaker);
std::string_view to_string(Modality modality);

struct ConversationTurn {
    Speaker speaker = Speaker::Human;
    std::string text;

    bool operator==(const ConversationTurn&) const = default;
};

/// One training example. Image and video records carry `media_path`; text
/// records carry `model_tag` instead (serialized as "model").
struct InstructionRecord {
    std::string id;
    Modality modality = Modality::Text;
    std::optional<std::string> media_path;
    std::optional<std::string> model_tag;
    std::vector<ConversationTurn> turns;

    bool operator==(const InstructionRecord&) const = default;
};

// Label -> display name. Entries here win over normalize_class_label.
class ClassMap {
public:
    ClassMap() = default;
    explicit ClassMap(std::map<std::string, std::string> names) : names_(std::move(names)) {}

    // Two-column `label,name` CSV; an optional `label,name` header row is skipped.
    static ClassMap load_csv(const std::filesystem::path& path);

    std::string resolve(const std::string& raw_label) const;
    std::size_t size() const { return names_.size(); }

private:
    std::map<std::string, std::string> names_;
};

/// "beef_wellington" -> "Beef Wellington". Surrounding whitespace is ignored;
/// runs of underscores collapse to one space.
std::string normalize_class_label(std::string_view raw_label);

InstructionRecord build_image_record(const std::string& id, const std::string& image_path,
                                     const std::string& raw_label, const ClassMap& class_map = {});
InstructionRecord build_video_record(const std::string& id, const std::string& video_path,
                                     const std::string& recipe_text);
InstructionRecord build_text_record(const std::string& id, const std::string& question,
                                    const std::string& answer);

ordered_json to_json(const InstructionRecord& record);
InstructionRecord record_from_json(const ordered_json& j);

// A dataset file is a JSON array of records.
std::string serialize_dataset(const std::vector<InstructionRecord>& records);
std::vector<InstructionRecord> parse_dataset(const std::string& text);

enum class ViolationKind { DuplicateId, ModalityField, TurnOrder, EmptyText, MissingMedia, Malformed };
std::string_view to_string(ViolationKind kind);

struct DatasetViolation {
    ViolationKind kind;
    std::size_t index = 0; // position of the offending record
    std::string id;
    std::string detail;
};

struct ValidationReport {
    std::vector<DatasetViolation> violations;
    std::size_t record_count = 0;

    bool ok() const { return violations.empty(); }
    std::size_t count(ViolationKind kind) const;
};

/// Collects every violation instead of stopping at the first. Media paths are
/// resolved against `media_root` when check_files is set.
ValidationReport validate_dataset(const std::vector<InstructionRecord>& records, bool check_files,
                                  const std::filesystem::path& media_root = {});

/// Like validate_dataset, but starts from raw JSON so records that fail to
/// parse are reported as Malformed violations rather than aborting.
ValidationReport validate_dataset_json(const std::string& text, bool check_files,
                                       const std::filesystem::path& media_root = {});

struct DatasetStats {
    std::uint64_t record_count = 0;
    std::uint64_t baseline_count = 1;
    double ratio_percent = 0.0;
    std::string rendered; // "23.76%"
};

DatasetStats dataset_stats(std::uint64_t record_count, std::uint64_t baseline_count);

struct GenerationConfig {
    std::string model = "gpt-3.5-turbo";
    double temperature = 1.0;
    std::size_t max_attempts = 0; // 0 -> 4 * target_count
    std::size_t parallelism = 4;
};

/// Prompt used to request one general cooking question with its answer.
std::vector<ChatMessage> question_generation_messages();

/// Case-insensitive, whitespace-collapsed dedup key.
std::string question_key(std::string_view question);

struct QuestionAnswer {
    std::string question;
    std::string answer;
};

/// Accepts a JSON object {"question", "answer"} anywhere in the reply, or
/// "Question: ... Answer: ..." text. Returns nullopt when neither is present.
std::optional<QuestionAnswer> parse_question_reply(const std::string& reply);

/// Produces exactly target_count text records with ids "0", "1", ... Attempt k
/// is sent with seed `seed + k`; replies are merged in attempt order, so the
/// result does not depend on completion order.
std::vector<InstructionRecord> generate_text_qa(std::size_t target_count, ChatClient& client,
                                                std::uint64_t seed, const GenerationConfig& config = {});

} // namespace recipe_tune::data
