// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "recipe_tune/jsonl.hpp"

namespace recipe_tune::youcook2 {

inline constexpr std::string_view kEvalQuestion =
    "Can you give me a step-by-step recipe for the dish in this video, and include specific "
    "measurements for all of the ingredients?";

struct Segment {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string sentence;

    bool operator==(const Segment&) const = default;
};

struct VideoAnnotation {
    std::string video_id;
    std::string recipe_type;
    double duration_s = 0.0;
    std::vector<Segment> segments; // ascending start_s

    bool operator==(const VideoAnnotation&) const = default;
};

struct RejectedEntry {
    std::string video_id;
    std::string reason;
};

struct AnnotationSet {
    std::vector<VideoAnnotation> annotations; // document order
    std::vector<RejectedEntry> rejects;

    std::size_t recipe_type_count() const;
};

/// Accepts the published YouCook2 layout ({"database": {vid: {...}}}) or the
/// bare mapping of video ids to entries. An entry with any invalid segment is
/// rejected as a whole and listed in `rejects`.
AnnotationSet parse_annotations(const std::filesystem::path& annotation_file);
AnnotationSet parse_annotations_json(const ordered_json& document);

/// "1. <sentence>\n2. <sentence>..." in temporal order.
std::string segments_to_ground_truth(const VideoAnnotation& annotation);

struct EvalItem {
    std::string item_id;
    std::string video_id;
    std::string question;
    std::string ground_truth;

    bool operator==(const EvalItem&) const = default;
};

/// One item per annotation whose video is available, in annotation order.
/// Item ids are "0", "1", ... Throws EmptyResult when nothing matches.
std::vector<EvalItem> build_eval_items(const std::vector<VideoAnnotation>& annotations,
                                       const std::set<std::string>& available_video_ids);

/// Availability from a newline-delimited id file, or from the file stems in a
/// directory.
std::set<std::string> load_available_ids(const std::filesystem::path& path);

ordered_json to_json(const EvalItem& item);
EvalItem eval_item_from_json(const ordered_json& j);

void write_eval_items(const std::filesystem::path& path, const std::vector<EvalItem>& items);
std::vector<EvalItem> read_eval_items(const std::filesystem::path& path);

std::map<std::string, double> durations_by_video(const std::vector<VideoAnnotation>& annotations);

} // namespace recipe_tune::youcook2
