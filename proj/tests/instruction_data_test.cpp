// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>
#include <set>

#include "recipe_tune/error.hpp"
#include "recipe_tune/instruction_data.hpp"
#include "test_support.hpp"

using namespace recipe_tune;
using namespace recipe_tune::data;

namespace {

std::set<std::string> keys_of(const ordered_json& j) {
    std::set<std::string> keys;
    for (const auto& [k, _] : j.items()) keys.insert(k);
    return keys;
}

std::string random_word(std::mt19937_64& rng) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz \n\t\"\\/<>{}[]0123456789";
    std::string s;
    std::size_t n = 1 + rng() % 24;
    for (std::size_t i = 0; i < n; ++i) s += alphabet[rng() % alphabet.size()];
    s += 'x';
    return s;
}

} // namespace

TEST_CASE("class labels normalize to title case") {
    CHECK(normalize_class_label("beef_wellington") == "Beef Wellington");
    CHECK(normalize_class_label("  apple_pie ") == "Apple Pie");
    CHECK(normalize_class_label("pad__thai") == "Pad Thai");
    CHECK(normalize_class_label("CHURROS") == "Churros");
    CHECK(normalize_class_label("mac and cheese") == "Mac And Cheese");
    CHECK_ERROR_CODE(normalize_class_label(""), ErrorCode::EmptyLabel);
    CHECK_ERROR_CODE(normalize_class_label("   "), ErrorCode::EmptyLabel);
    CHECK_ERROR_CODE(normalize_class_label("___"), ErrorCode::EmptyLabel);
    CHECK_ERROR_CODE(normalize_class_label("creme-brulee"), ErrorCode::InvalidLabel);
}

TEST_CASE("class map overrides win") {
    ClassMap map(std::map<std::string, std::string>{{"dish_name", "<Dish name>"}});
    CHECK(map.resolve("dish_name") == "<Dish name>");
    CHECK(map.resolve("apple_pie") == "Apple Pie");

    testing::TempDir dir;
    testing::spit(dir / "map.csv", "label,name\nbibimbap,Bibimbap (Korean)\n\"a_b\",\"Ay, Bee\"\n");
    auto loaded = ClassMap::load_csv(dir / "map.csv");
    CHECK(loaded.size() == 2);
    CHECK(loaded.resolve("a_b") == "Ay, Bee");
    testing::spit(dir / "bad.csv", "one,two,three\n");
    CHECK_ERROR_CODE(ClassMap::load_csv(dir / "bad.csv"), ErrorCode::MalformedDocument);
}

TEST_CASE("builders fill the fixed prompts and key sets") {
    auto img = build_image_record("7", "a.jpg", "apple_pie");
    CHECK(img.turns.at(0).text == kImagePrompt);
    CHECK(img.turns.at(1).text == "Apple Pie");
    CHECK(keys_of(to_json(img)) == std::set<std::string>{"id", "image", "conversations"});

    auto vid = build_video_record("0", "v.mp4", "1. boil water");
    CHECK(vid.turns.at(0).text == kVideoPrompt);
    CHECK(keys_of(to_json(vid)) == std::set<std::string>{"id", "video", "conversations"});

    auto txt = build_text_record("0", "q?", "a.");
    auto tj = to_json(txt);
    CHECK(keys_of(tj) == std::set<std::string>{"id", "model", "conversations"});
    CHECK(tj["model"] == "");
    CHECK(tj["conversations"][0]["from"] == "human");
    CHECK(tj["conversations"][1]["from"] == "gpt");
}

TEST_CASE("builder errors") {
    CHECK_ERROR_CODE(build_image_record("1", "a.jpg", ""), ErrorCode::EmptyLabel);
    CHECK_ERROR_CODE(build_image_record("", "a.jpg", "pie"), ErrorCode::InvalidId);
    CHECK_ERROR_CODE(build_image_record("", "a.jpg", ""), ErrorCode::EmptyLabel);
    CHECK_ERROR_CODE(build_video_record("1", "v.mp4", "  \n"), ErrorCode::EmptyRecipe);
    CHECK_ERROR_CODE(build_video_record("", "v.mp4", "steps"), ErrorCode::InvalidId);
    CHECK_ERROR_CODE(build_text_record("1", "", "a"), ErrorCode::EmptyField);
    CHECK_ERROR_CODE(build_text_record("1", "q", " "), ErrorCode::EmptyField);
    CHECK_ERROR_CODE(build_text_record("", "q", "a"), ErrorCode::InvalidId);
}

TEST_CASE("serialize then parse is the identity on random datasets") {
    std::mt19937_64 rng(42);
    for (int round = 0; round < 50; ++round) {
        std::vector<InstructionRecord> records;
        std::size_t n = rng() % 12;
        for (std::size_t i = 0; i < n; ++i) {
            auto id = std::to_string(i);
            switch (rng() % 3) {
            case 0: records.push_back(build_image_record(id, random_word(rng), "label_" + std::to_string(rng() % 9))); break;
            case 1: records.push_back(build_video_record(id, random_word(rng), random_word(rng))); break;
            default: records.push_back(build_text_record(id, random_word(rng), random_word(rng))); break;
            }
        }
        auto text = serialize_dataset(records);
        CHECK(parse_dataset(text) == records);
        CHECK(serialize_dataset(parse_dataset(text)) == text);
        CHECK(validate_dataset(records, false).ok());
    }
}

TEST_CASE("record_from_json is strict") {
    auto good = to_json(build_image_record("1", "a.jpg", "pie"));
    CHECK(record_from_json(good).modality == Modality::Image);

    auto two_media = good;
    two_media["video"] = "b.mp4";
    CHECK_ERROR_CODE(record_from_json(two_media), ErrorCode::MalformedRecord);

    auto extra = good;
    extra["note"] = "x";
    CHECK_ERROR_CODE(record_from_json(extra), ErrorCode::MalformedRecord);

    auto bad_speaker = good;
    bad_speaker["conversations"][0]["from"] = "assistant";
    CHECK_ERROR_CODE(record_from_json(bad_speaker), ErrorCode::MalformedRecord);

    CHECK_ERROR_CODE(parse_dataset("{}"), ErrorCode::MalformedDocument);
    CHECK_ERROR_CODE(parse_dataset("[1,"), ErrorCode::MalformedDocument);
}

TEST_CASE("validation collects every violation") {
    std::vector<InstructionRecord> records{
        build_image_record("1", "a.jpg", "pie"),
        build_video_record("1", "v.mp4", "steps"),
        build_text_record("3", "q", "a"),
    };
    records[2].turns[1].text = "";
    auto swapped = build_text_record("4", "q", "a");
    std::swap(swapped.turns[0], swapped.turns[1]);
    records.push_back(swapped);
    auto text_with_media = build_text_record("5", "q", "a");
    text_with_media.media_path = "x.jpg";
    records.push_back(text_with_media);

    auto report = validate_dataset(records, false);
    CHECK(report.record_count == 5);
    CHECK(report.count(ViolationKind::DuplicateId) == 1);
    CHECK(report.count(ViolationKind::EmptyText) == 1);
    CHECK(report.count(ViolationKind::TurnOrder) == 1);
    CHECK(report.count(ViolationKind::ModalityField) == 1);

    testing::TempDir dir;
    testing::spit(dir / "a.jpg", "x");
    std::vector<InstructionRecord> media{build_image_record("1", "a.jpg", "pie"),
                                         build_image_record("2", "missing.jpg", "pie")};
    auto media_report = validate_dataset(media, true, dir.path());
    REQUIRE(media_report.violations.size() == 1);
    CHECK(media_report.violations[0].kind == ViolationKind::MissingMedia);
    CHECK(media_report.violations[0].index == 1);
}

TEST_CASE("validate_dataset_json reports unparseable records in place") {
    auto good = to_json(build_text_record("0", "q", "a"));
    ordered_json doc = ordered_json::array({good, ordered_json{{"id", "1"}}, good});
    auto report = validate_dataset_json(doc.dump(), false);
    CHECK(report.record_count == 3);
    CHECK(report.count(ViolationKind::Malformed) == 1);
    CHECK(report.count(ViolationKind::DuplicateId) == 1);
    CHECK(report.violations.front().index == 1);
}

TEST_CASE("dataset_stats") {
    CHECK(dataset_stats(158000, 665000).rendered == "23.76%");
    CHECK(dataset_stats(2511, 100000).rendered == "2.51%");
    CHECK(dataset_stats(0, 5).rendered == "0.00%");
    CHECK_ERROR_CODE(dataset_stats(1, 0), ErrorCode::ZeroBaseline);

    // Monotone in record_count for a fixed baseline.
    double prev = -1;
    for (std::uint64_t n = 0; n < 2000; n += 7) {
        auto s = dataset_stats(n, 1234);
        CHECK(s.ratio_percent >= prev);
        prev = s.ratio_percent;
    }
}

TEST_CASE("question replies in JSON or labelled text") {
    auto j = parse_question_reply("{\"question\": \"How hot?\", \"answer\": \"Very.\"}");
    REQUIRE(j);
    CHECK(j->question == "How hot?");
    auto t = parse_question_reply("Question: Why rest meat?\nAnswer: Juices redistribute.");
    REQUIRE(t);
    CHECK(t->answer == "Juices redistribute.");
    CHECK_FALSE(parse_question_reply("no idea"));
    CHECK(question_key("  How   DO I\tsear? ") == "how do i sear?");
}

TEST_CASE("generate_text_qa dedups and numbers sequentially") {
    auto reply = [](const std::string& q) { return ordered_json{{"question", q}, {"answer", "ans " + q}}.dump(); };
    std::vector<std::string> cycle{reply("How to sear?"), reply("How to boil?"), reply("how  to SEAR?"),
                                   reply("How to poach?"), "garbage", reply("How to braise?")};
    ScriptedChatClient client({}, cycle);
    GenerationConfig config;
    config.parallelism = 3;
    auto records = generate_text_qa(4, client, 0, config);
    REQUIRE(records.size() == 4);
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(records[i].id == std::to_string(i));
    CHECK(records[2].turns[0].text == "How to poach?");
    CHECK(records[3].turns[0].text == "How to braise?");
    CHECK(validate_dataset(records, false).ok());

    ScriptedChatClient again({}, cycle);
    auto parallel = generate_text_qa(4, again, 0, GenerationConfig{.parallelism = 1});
    CHECK(parallel == records);

    ScriptedChatClient dup({}, {reply("Same?")});
    CHECK_ERROR_CODE(generate_text_qa(2, dup, 0, GenerationConfig{.max_attempts = 5}), ErrorCode::GenerationExhausted);
    CHECK(dup.call_count() == 5);
    CHECK_ERROR_CODE(generate_text_qa(0, dup, 0, {}), ErrorCode::InvalidArgument);
}

TEST_CASE("generation messages ask for general questions") {
    auto msgs = question_generation_messages();
    REQUIRE_FALSE(msgs.empty());
    std::string all;
    for (const auto& m : msgs) all += m.content;
    CHECK(all.find("general") != std::string::npos);
}
