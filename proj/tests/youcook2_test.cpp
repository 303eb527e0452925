// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <tuple>

#include "recipe_tune/error.hpp"
#include "recipe_tune/youcook2.hpp"
#include "test_support.hpp"

using namespace recipe_tune;
using namespace recipe_tune::youcook2;

namespace {

std::size_t line_count(const std::string& s) {
    return s.empty() ? 0 : static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) + 1;
}

using Seg = std::tuple<double, double, std::string>;

ordered_json entry(double duration, const std::vector<Seg>& segments, ordered_json recipe_type = "101") {
    ordered_json anns = ordered_json::array();
    for (const auto& [s, e, text] : segments) {
        anns.push_back({{"segment", {s, e}}, {"id", anns.size()}, {"sentence", text}});
    }
    return {{"duration", duration}, {"subset", "validation"}, {"recipe_type", recipe_type}, {"annotations", anns}};
}

} // namespace

TEST_CASE("bundled fixture parses to the expected counts") {
    auto set = parse_annotations(testing::data_dir() / "youcook2_fixture.json");
    CHECK(set.annotations.size() == 10);
    CHECK(set.recipe_type_count() == 4);
    REQUIRE(set.rejects.size() == 1);
    CHECK(set.rejects[0].video_id == "bad0Segment");
    CHECK(set.rejects[0].reason.find("duration") != std::string::npos);

    for (const auto& a : set.annotations) {
        CHECK(std::is_sorted(a.segments.begin(), a.segments.end(),
                             [](const Segment& x, const Segment& y) { return x.start_s < y.start_s; }));
        for (const auto& s : a.segments) {
            CHECK(s.start_s < s.end_s);
            CHECK(s.end_s <= a.duration_s);
        }
    }
    // The integer recipe_type in the fixture is read as its decimal string.
    auto lm = std::find_if(set.annotations.begin(), set.annotations.end(),
                           [](const VideoAnnotation& a) { return a.video_id == "Lm4Zc8Hq2Vb"; });
    REQUIRE(lm != set.annotations.end());
    CHECK(lm->recipe_type == "113");

    auto cq = std::find_if(set.annotations.begin(), set.annotations.end(),
                           [](const VideoAnnotation& a) { return a.video_id == "cQ0tLm3pQ2A"; });
    REQUIRE(cq != set.annotations.end());
    CHECK(cq->segments.front().sentence == "cream 200 g butter with 150 g sugar");
    CHECK(cq->segments.back().sentence == "bake at 180 C for 25 minutes");
}

TEST_CASE("entries with any bad segment are rejected whole") {
    ordered_json db = {
        {"ok", entry(100, {{0, 10, "a"}, {10, 20, "b"}})},
        {"inverted", entry(100, {{0, 10, "a"}, {30, 20, "b"}})},
        {"negative", entry(100, {{-1, 10, "a"}})},
        {"empty_sentence", entry(100, {{0, 10, "  "}})},
        {"no_duration", {{"recipe_type", "1"}, {"annotations", ordered_json::array()}}},
        {"zero_duration", entry(0, {{0, 0, "a"}})},
        {"bad_type", entry(100, {{0, 10, "a"}}, 1.5)},
    };
    auto set = parse_annotations_json({{"database", db}});
    REQUIRE(set.annotations.size() == 1);
    CHECK(set.annotations[0].video_id == "ok");
    CHECK(set.rejects.size() == 6);

    // Bare mapping without the "database" wrapper.
    CHECK(parse_annotations_json(db).annotations.size() == 1);
    CHECK_ERROR_CODE(parse_annotations_json(ordered_json::array()), ErrorCode::MalformedDocument);
    CHECK_ERROR_CODE(parse_annotations_json({{"database", 3}}), ErrorCode::MalformedDocument);
}

TEST_CASE("parse_annotations file errors") {
    testing::TempDir dir;
    testing::spit(dir / "broken.json", "{\"database\": ");
    CHECK_ERROR_CODE(parse_annotations(dir / "broken.json"), ErrorCode::MalformedDocument);
    CHECK_ERROR_CODE(parse_annotations(dir / "absent.json"), ErrorCode::FileUnreadable);
}

TEST_CASE("ground truth is numbered in temporal order") {
    VideoAnnotation a{"v", "1", 100, {{50, 60, "second"}, {5, 9, "first"}, {70, 80, "third"}}};
    CHECK(segments_to_ground_truth(a) == "1. first\n2. second\n3. third");
}

TEST_CASE("eval items follow the availability set") {
    auto set = parse_annotations(testing::data_dir() / "youcook2_fixture.json");
    auto available = load_available_ids(testing::data_dir() / "available.txt");
    CHECK(available.size() == 10);
    CHECK_FALSE(available.contains("# videos present in the local media folder"));

    auto items = build_eval_items(set.annotations, available);
    REQUIRE(items.size() == 9);

    // Oracle: annotations filtered by a plain set intersection, order kept.
    std::vector<std::string> expected;
    for (const auto& a : set.annotations) {
        if (std::find(available.begin(), available.end(), a.video_id) != available.end()) expected.push_back(a.video_id);
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        CHECK(items[i].item_id == std::to_string(i));
        CHECK(items[i].video_id == expected[i]);
        CHECK(items[i].question == kEvalQuestion);
        auto source = std::find_if(set.annotations.begin(), set.annotations.end(),
                                   [&](const VideoAnnotation& a) { return a.video_id == items[i].video_id; });
        CHECK(line_count(items[i].ground_truth) == source->segments.size());
    }

    CHECK_ERROR_CODE(build_eval_items(set.annotations, {"nope"}), ErrorCode::EmptyResult);
}

TEST_CASE("availability from a directory scan") {
    testing::TempDir dir;
    testing::spit(dir / "abc.mp4", "");
    testing::spit(dir / "def.webm", "");
    auto ids = load_available_ids(dir.path());
    CHECK(ids == std::set<std::string>{"abc", "def"});
}

TEST_CASE("eval item files round trip byte for byte") {
    auto set = parse_annotations(testing::data_dir() / "youcook2_fixture.json");
    auto items = build_eval_items(set.annotations, load_available_ids(testing::data_dir() / "available.txt"));
    testing::TempDir dir;
    write_eval_items(dir / "a.jsonl", items);
    write_eval_items(dir / "b.jsonl", build_eval_items(set.annotations,
                                                       load_available_ids(testing::data_dir() / "available.txt")));
    CHECK(testing::slurp(dir / "a.jsonl") == testing::slurp(dir / "b.jsonl"));
    CHECK(read_eval_items(dir / "a.jsonl") == items);

    auto durations = durations_by_video(set.annotations);
    CHECK(durations.at("xHr8X2Wpmno") == doctest::Approx(241.62));
}
