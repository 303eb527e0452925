// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/instruction_data.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "recipe_tune/decimal.hpp"
#include "recipe_tune/error.hpp"
#include "text_util.hpp"

namespace recipe_tune::data {

using detail::is_blank;
using detail::trim;

std::string_view to_string(Speaker speaker) {
    return speaker == Speaker::Human ? "human" : "gpt";
}

std::string_view to_string(Modality modality) {
    switch (modality) {
    case Modality::Image: return "image";
    case Modality::Video: return "video";
    case Modality::Text: return "text";
    }
    return "unknown";
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::ModalityField: return "ModalityField";
    case ViolationKind::TurnOrder: return "TurnOrder";
    case ViolationKind::EmptyText: return "EmptyText";
    case ViolationKind::MissingMedia: return "MissingMedia";
    case ViolationKind::Malformed: return "Malformed";
    }
    return "unknown";
}

// --- class labels -----------------------------------------------------------

std::string normalize_class_label(std::string_view raw_label) {
    auto label = trim(raw_label);
    if (label.empty()) throw Error(ErrorCode::EmptyLabel, "class label is empty");

    std::string out;
    bool word_start = true;
    for (char c : label) {
        auto uc = static_cast<unsigned char>(c);
        if (c == '_' || c == ' ') {
            word_start = true;
            continue;
        }
        if (!std::isalnum(uc)) {
            throw Error(ErrorCode::InvalidLabel,
                        "class label '" + std::string(label) + "' has character '" + std::string(1, c) + "'");
        }
        if (word_start && !out.empty()) out += ' ';
        out += static_cast<char>(word_start ? std::toupper(uc) : std::tolower(uc));
        word_start = false;
    }
    if (out.empty()) throw Error(ErrorCode::EmptyLabel, "class label has no words");
    return out;
}

ClassMap ClassMap::load_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::map<std::string, std::string> names;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 2) {
            throw Error(ErrorCode::MalformedDocument,
                        path.string() + ":" + std::to_string(line_no) + ": expected two columns label,name");
        }
        auto label = std::string(trim(fields[0]));
        auto name = std::string(trim(fields[1]));
        if (line_no == 1 && label == "label" && name == "name") continue;
        if (label.empty() || name.empty()) {
            throw Error(ErrorCode::MalformedDocument,
                        path.string() + ":" + std::to_string(line_no) + ": empty label or name");
        }
        names[label] = name;
    }
    return ClassMap(std::move(names));
}

std::string ClassMap::resolve(const std::string& raw_label) const {
    if (auto it = names_.find(std::string(trim(raw_label))); it != names_.end()) return it->second;
    return normalize_class_label(raw_label);
}

// --- builders ---------------------------------------------------------------

InstructionRecord build_image_record(const std::string& id, const std::string& image_path,
                                     const std::string& raw_label, const ClassMap& class_map) {
    auto name = class_map.resolve(raw_label);
    if (id.empty()) throw Error(ErrorCode::InvalidId, "record id is empty");
    if (is_blank(image_path)) throw Error(ErrorCode::EmptyField, "image path is empty");
    return InstructionRecord{
        .id = id,
        .modality = Modality::Image,
        .media_path = image_path,
        .model_tag = std::nullopt,
        .turns = {{Speaker::Human, std::string(kImagePrompt)}, {Speaker::Gpt, std::move(name)}},
    };
}

InstructionRecord build_video_record(const std::string& id, const std::string& video_path,
                                     const std::string& recipe_text) {
    if (is_blank(recipe_text)) throw Error(ErrorCode::EmptyRecipe, "recipe text is empty for video '" + id + "'");
    if (id.empty()) throw Error(ErrorCode::InvalidId, "record id is empty");
    if (is_blank(video_path)) throw Error(ErrorCode::EmptyField, "video path is empty");
    return InstructionRecord{
        .id = id,
        .modality = Modality::Video,
        .media_path = video_path,
        .model_tag = std::nullopt,
        .turns = {{Speaker::Human, std::string(kVideoPrompt)}, {Speaker::Gpt, recipe_text}},
    };
}

InstructionRecord build_text_record(const std::string& id, const std::string& question, const std::string& answer) {
    if (is_blank(question)) throw Error(ErrorCode::EmptyField, "question is empty");
    if (is_blank(answer)) throw Error(ErrorCode::EmptyField, "answer is empty");
    if (id.empty()) throw Error(ErrorCode::InvalidId, "record id is empty");
    return InstructionRecord{
        .id = id,
        .modality = Modality::Text,
        .media_path = std::nullopt,
        .model_tag = std::string(),
        .turns = {{Speaker::Human, question}, {Speaker::Gpt, answer}},
    };
}

// --- serialization ----------------------------------------------------------

ordered_json to_json(const InstructionRecord& record) {
    ordered_json j;
    j["id"] = record.id;
    switch (record.modality) {
    case Modality::Image: j["image"] = record.media_path.value_or(""); break;
    case Modality::Video: j["video"] = record.media_path.value_or(""); break;
    case Modality::Text: j["model"] = record.model_tag.value_or(""); break;
    }
    auto turns = ordered_json::array();
    for (const auto& t : record.turns) {
        turns.push_back({{"from", to_string(t.speaker)}, {"value", t.text}});
    }
    j["conversations"] = std::move(turns);
    return j;
}

namespace {

[[noreturn]] void fail(const std::string& why) { throw Error(ErrorCode::MalformedRecord, why); }

} // namespace

InstructionRecord record_from_json(const ordered_json& j) {
    if (!j.is_object()) fail("record is not a JSON object");
    if (!j.contains("id") || !j["id"].is_string()) fail("record needs a string \"id\"");

    InstructionRecord r;
    r.id = j["id"].get<std::string>();

    int media_keys = 0;
    for (const auto& [key, value] : j.items()) {
        if (key == "id" || key == "conversations") continue;
        if (key != "image" && key != "video" && key != "model") fail("record '" + r.id + "' has unknown key \"" + key + "\"");
        if (!value.is_string()) fail("record '" + r.id + "' field \"" + key + "\" must be a string");
        ++media_keys;
        if (key == "image") {
            r.modality = Modality::Image;
            r.media_path = value.get<std::string>();
        } else if (key == "video") {
            r.modality = Modality::Video;
            r.media_path = value.get<std::string>();
        } else {
            r.modality = Modality::Text;
            r.model_tag = value.get<std::string>();
        }
    }
    if (media_keys != 1) fail("record '" + r.id + "' needs exactly one of \"image\", \"video\", \"model\"");

    if (!j.contains("conversations") || !j["conversations"].is_array()) {
        fail("record '" + r.id + "' needs a \"conversations\" array");
    }
    for (const auto& turn : j["conversations"]) {
        if (!turn.is_object() || !turn.contains("from") || !turn.contains("value") || !turn["from"].is_string() ||
            !turn["value"].is_string()) {
            fail("record '" + r.id + "' has a turn without string \"from\"/\"value\"");
        }
        auto from = turn["from"].get<std::string>();
        Speaker speaker;
        if (from == "human") {
            speaker = Speaker::Human;
        } else if (from == "gpt") {
            speaker = Speaker::Gpt;
        } else {
            fail("record '" + r.id + "' has unknown speaker \"" + from + "\"");
        }
        r.turns.push_back({speaker, turn["value"].get<std::string>()});
    }
    return r;
}

std::string serialize_dataset(const std::vector<InstructionRecord>& records) {
    auto arr = ordered_json::array();
    for (const auto& r : records) arr.push_back(to_json(r));
    return arr.dump(2) + "\n";
}

std::vector<InstructionRecord> parse_dataset(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedDocument, e.what());
    }
    if (!doc.is_array()) throw Error(ErrorCode::MalformedDocument, "dataset file must hold a JSON array");
    std::vector<InstructionRecord> out;
    out.reserve(doc.size());
    for (const auto& j : doc) out.push_back(record_from_json(j));
    return out;
}

// --- validation -------------------------------------------------------------

std::size_t ValidationReport::count(ViolationKind kind) const {
    std::size_t n = 0;
    for (const auto& v : violations) n += v.kind == kind ? 1 : 0;
    return n;
}

namespace {

void check_record(const InstructionRecord& r, std::size_t index, bool check_files,
                  const std::filesystem::path& media_root, std::vector<DatasetViolation>& out) {
    auto add = [&](ViolationKind kind, std::string detail) {
        out.push_back({kind, index, r.id, std::move(detail)});
    };

    if (r.id.empty()) add(ViolationKind::Malformed, "empty id");

    const bool wants_media = r.modality != Modality::Text;
    if (wants_media && (!r.media_path || is_blank(*r.media_path))) {
        add(ViolationKind::ModalityField, std::string(to_string(r.modality)) + " record has no media path");
    }
    if (wants_media && r.model_tag) {
        add(ViolationKind::ModalityField, std::string(to_string(r.modality)) + " record carries a \"model\" field");
    }
    if (!wants_media && r.media_path) add(ViolationKind::ModalityField, "text record carries a media field");
    if (!wants_media && !r.model_tag) add(ViolationKind::ModalityField, "text record has no \"model\" field");

    bool order_ok = r.turns.size() >= 2 && r.turns.size() % 2 == 0;
    for (std::size_t i = 0; order_ok && i < r.turns.size(); ++i) {
        order_ok = r.turns[i].speaker == (i % 2 == 0 ? Speaker::Human : Speaker::Gpt);
    }
    if (!order_ok) add(ViolationKind::TurnOrder, "turns must alternate human/gpt, start with human, and come in pairs");

    for (std::size_t i = 0; i < r.turns.size(); ++i) {
        if (is_blank(r.turns[i].text)) add(ViolationKind::EmptyText, "turn " + std::to_string(i) + " is empty");
    }

    if (check_files && wants_media && r.media_path && !is_blank(*r.media_path)) {
        std::filesystem::path p(*r.media_path);
        if (p.is_relative() && !media_root.empty()) p = media_root / p;
        std::error_code ec;
        if (!std::filesystem::exists(p, ec)) add(ViolationKind::MissingMedia, "missing file " + p.string());
    }
}

} // namespace

ValidationReport validate_dataset(const std::vector<InstructionRecord>& records, bool check_files,
                                  const std::filesystem::path& media_root) {
    ValidationReport report;
    report.record_count = records.size();
    std::set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!seen.insert(r.id).second) {
            report.violations.push_back({ViolationKind::DuplicateId, i, r.id, "duplicate id \"" + r.id + "\""});
        }
        check_record(r, i, check_files, media_root, report.violations);
    }
    return report;
}

ValidationReport validate_dataset_json(const std::string& text, bool check_files,
                                       const std::filesystem::path& media_root) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedDocument, e.what());
    }
    if (!doc.is_array()) throw Error(ErrorCode::MalformedDocument, "dataset file must hold a JSON array");

    std::vector<InstructionRecord> parsed;
    std::vector<std::size_t> positions;
    std::vector<DatasetViolation> malformed;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        try {
            parsed.push_back(record_from_json(doc[i]));
            positions.push_back(i);
        } catch (const Error& e) {
            std::string id = doc[i].is_object() && doc[i].contains("id") && doc[i]["id"].is_string()
                                 ? doc[i]["id"].get<std::string>()
                                 : std::string();
            malformed.push_back({ViolationKind::Malformed, i, id, e.what()});
        }
    }

    auto report = validate_dataset(parsed, check_files, media_root);
    for (auto& v : report.violations) v.index = positions[v.index];
    report.violations.insert(report.violations.end(), malformed.begin(), malformed.end());
    std::stable_sort(report.violations.begin(), report.violations.end(),
                     [](const auto& a, const auto& b) { return a.index < b.index; });
    report.record_count = doc.size();
    return report;
}

// --- stats ------------------------------------------------------------------

DatasetStats dataset_stats(std::uint64_t record_count, std::uint64_t baseline_count) {
    if (baseline_count == 0) throw Error(ErrorCode::ZeroBaseline, "baseline dataset size must be positive");
    return DatasetStats{
        .record_count = record_count,
        .baseline_count = baseline_count,
        .ratio_percent = 100.0 * static_cast<double>(record_count) / static_cast<double>(baseline_count),
        .rendered = render_percent(record_count, baseline_count, 2) + "%",
    };
}

} // namespace recipe_tune::data
