// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/youcook2.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "recipe_tune/error.hpp"
#include "text_util.hpp"

namespace recipe_tune::youcook2 {

using detail::trim;

std::size_t AnnotationSet::recipe_type_count() const {
    std::set<std::string> types;
    for (const auto& a : annotations) types.insert(a.recipe_type);
    return types.size();
}

namespace {

void sort_segments(std::vector<Segment>& segments) {
    std::stable_sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
        if (a.start_s != b.start_s) return a.start_s < b.start_s;
        return a.end_s < b.end_s;
    });
}

bool finite_number(const ordered_json& j) {
    return j.is_number() && std::isfinite(j.get<double>());
}

// Returns an empty string on success, otherwise the rejection reason.
std::string parse_entry(const std::string& video_id, const ordered_json& entry, VideoAnnotation& out) {
    if (!entry.is_object()) return "entry is not an object";
    out.video_id = video_id;

    if (!entry.contains("recipe_type")) return "missing recipe_type";
    const auto& rt = entry["recipe_type"];
    if (rt.is_string()) {
        out.recipe_type = rt.get<std::string>();
    } else if (rt.is_number_integer()) {
        out.recipe_type = std::to_string(rt.get<long long>());
    } else {
        return "recipe_type must be a string or integer";
    }

    if (!entry.contains("duration") || !finite_number(entry["duration"])) return "missing numeric duration";
    out.duration_s = entry["duration"].get<double>();
    if (out.duration_s <= 0) return "duration must be positive";

    if (!entry.contains("annotations") || !entry["annotations"].is_array()) return "missing annotations array";
    const auto& anns = entry["annotations"];
    if (anns.empty()) return "no segments";

    for (std::size_t i = 0; i < anns.size(); ++i) {
        const auto& a = anns[i];
        auto where = "segment " + std::to_string(i) + ": ";
        if (!a.is_object() || !a.contains("segment") || !a.contains("sentence")) {
            return where + "needs \"segment\" and \"sentence\"";
        }
        const auto& seg = a["segment"];
        if (!seg.is_array() || seg.size() != 2 || !finite_number(seg[0]) || !finite_number(seg[1])) {
            return where + "\"segment\" must be [start, end]";
        }
        if (!a["sentence"].is_string()) return where + "\"sentence\" must be a string";

        Segment s{seg[0].get<double>(), seg[1].get<double>(), std::string(trim(a["sentence"].get<std::string>()))};
        if (s.start_s < 0) return where + "negative start";
        if (s.start_s >= s.end_s) return where + "start must precede end";
        if (s.end_s > out.duration_s) return where + "ends after the video duration";
        if (s.sentence.empty()) return where + "empty sentence";
        out.segments.push_back(std::move(s));
    }
    sort_segments(out.segments);
    return {};
}

} // namespace

AnnotationSet parse_annotations_json(const ordered_json& document) {
    if (!document.is_object()) throw Error(ErrorCode::MalformedDocument, "annotation document must be an object");
    const ordered_json* db = &document;
    if (document.contains("database")) {
        db = &document["database"];
        if (!db->is_object()) throw Error(ErrorCode::MalformedDocument, "\"database\" must be an object");
    }

    AnnotationSet set;
    for (const auto& [video_id, entry] : db->items()) {
        VideoAnnotation ann;
        auto reason = parse_entry(video_id, entry, ann);
        if (reason.empty()) {
            set.annotations.push_back(std::move(ann));
        } else {
            set.rejects.push_back({video_id, std::move(reason)});
        }
    }
    return set;
}

AnnotationSet parse_annotations(const std::filesystem::path& annotation_file) {
    auto text = read_text_file(annotation_file);
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedDocument, annotation_file.string() + ": " + e.what());
    }
    return parse_annotations_json(doc);
}

std::string segments_to_ground_truth(const VideoAnnotation& annotation) {
    auto segments = annotation.segments;
    sort_segments(segments);
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i + 1) + ". " + segments[i].sentence;
    }
    return out;
}

std::vector<EvalItem> build_eval_items(const std::vector<VideoAnnotation>& annotations,
                                       const std::set<std::string>& available_video_ids) {
    std::vector<EvalItem> items;
    for (const auto& a : annotations) {
        if (!available_video_ids.contains(a.video_id)) continue;
        items.push_back(EvalItem{
            .item_id = std::to_string(items.size()),
            .video_id = a.video_id,
            .question = std::string(kEvalQuestion),
            .ground_truth = segments_to_ground_truth(a),
        });
    }
    if (items.empty()) {
        throw Error(ErrorCode::EmptyResult, "no annotated video is in the availability set (" +
                                                std::to_string(available_video_ids.size()) + " ids)");
    }
    return items;
}

std::set<std::string> load_available_ids(const std::filesystem::path& path) {
    std::set<std::string> ids;
    std::error_code ec;
    if (std::filesystem::is_directory(path, ec)) {
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.is_regular_file()) ids.insert(entry.path().stem().string());
        }
        return ids;
    }
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
        auto id = trim(line);
        if (!id.empty() && id.front() != '#') ids.insert(std::string(id));
    }
    return ids;
}

ordered_json to_json(const EvalItem& item) {
    return {{"item_id", item.item_id},
            {"video_id", item.video_id},
            {"question", item.question},
            {"ground_truth", item.ground_truth}};
}

EvalItem eval_item_from_json(const ordered_json& j) {
    try {
        return EvalItem{j.at("item_id").get<std::string>(), j.at("video_id").get<std::string>(),
                        j.at("question").get<std::string>(), j.at("ground_truth").get<std::string>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, std::string("eval item: ") + e.what());
    }
}

void write_eval_items(const std::filesystem::path& path, const std::vector<EvalItem>& items) {
    std::vector<ordered_json> rows;
    rows.reserve(items.size());
    for (const auto& item : items) rows.push_back(to_json(item));
    write_text_file(path, to_jsonl(rows));
}

std::vector<EvalItem> read_eval_items(const std::filesystem::path& path) {
    std::vector<EvalItem> items;
    for (const auto& row : read_jsonl(path)) items.push_back(eval_item_from_json(row));
    return items;
}

std::map<std::string, double> durations_by_video(const std::vector<VideoAnnotation>& annotations) {
    std::map<std::string, double> out;
    for (const auto& a : annotations) out[a.video_id] = a.duration_s;
    return out;
}

} // namespace recipe_tune::youcook2
