// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>
#include <thread>

#include "recipe_tune/decimal.hpp"
#include "recipe_tune/digest.hpp"
#include "recipe_tune/error.hpp"
#include "recipe_tune/http_transport.hpp"
#include "recipe_tune/jsonl.hpp"
#include "recipe_tune/parallel.hpp"
#include "test_support.hpp"

using namespace recipe_tune;

namespace {

// Schoolbook long division of 100*part/whole to `decimals + 1` digits, then
// string rounding on the guard digit. Kept separate from the library code.
std::string long_division_percent(std::uint64_t part, std::uint64_t whole, int decimals, bool half_up) {
    std::string integer = std::to_string((part * 100) / whole);
    std::uint64_t rem = (part * 100) % whole;
    std::string frac;
    for (int i = 0; i <= decimals; ++i) {
        rem *= 10;
        frac += static_cast<char>('0' + rem / whole);
        rem %= whole;
    }
    char guard = frac.back();
    frac.pop_back();
    std::string digits = integer + frac;
    if (half_up && guard >= '5') {
        int i = static_cast<int>(digits.size()) - 1;
        while (i >= 0 && digits[i] == '9') digits[i--] = '0';
        if (i < 0) digits.insert(digits.begin(), '1');
        else ++digits[i];
    }
    std::string int_part = digits.substr(0, digits.size() - decimals);
    return decimals ? int_part + "." + digits.substr(digits.size() - decimals) : int_part;
}

} // namespace

TEST_CASE("render_percent agrees with long division") {
    std::mt19937_64 rng(7);
    for (int n = 0; n < 2000; ++n) {
        std::uint64_t whole = 1 + rng() % 100000;
        std::uint64_t part = rng() % (whole * 2);
        int decimals = static_cast<int>(rng() % 5);
        CHECK(render_percent(part, whole, decimals) == long_division_percent(part, whole, decimals, true));
        CHECK(render_percent(part, whole, decimals, Rounding::Truncate) ==
              long_division_percent(part, whole, decimals, false));
    }
}

TEST_CASE("render_percent fixed points") {
    CHECK(render_percent(191, 408, 3) == "46.814");
    CHECK(render_percent(191, 408, 3, Rounding::Truncate) == "46.813");
    CHECK(render_percent(183, 408, 3) == "44.853");
    CHECK(render_percent(183, 408, 3, Rounding::Truncate) == "44.852");
    CHECK(render_percent(1, 1, 3) == "100.000");
    CHECK(render_percent(0, 7, 3) == "0.000");
    CHECK(render_percent(2, 3, 0) == "67");
    CHECK_ERROR_CODE(render_percent(1, 0, 2), ErrorCode::InvalidArgument);
}

TEST_CASE("render_fixed rounds the shortest decimal form") {
    CHECK(render_fixed(3.12345, 4) == "3.1235");
    CHECK(render_fixed(3.12345, 4, Rounding::Truncate) == "3.1234");
    CHECK(render_fixed(2.5, 0) == "3");
    CHECK(render_fixed(0.0, 2) == "0.00");
    CHECK(render_fixed(9.9995, 3) == "10.000");
    CHECK(render_fixed(-1.25, 1) == "-1.3");
    CHECK(render_fixed(1e-7, 3) == "0.000");
}

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("base64 known vectors") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
}

TEST_CASE("retryable statuses") {
    CHECK(is_retryable_status(429));
    CHECK(is_retryable_status(500));
    CHECK(is_retryable_status(503));
    CHECK_FALSE(is_retryable_status(400));
    CHECK_FALSE(is_retryable_status(401));
    CHECK_FALSE(is_retryable_status(200));
}

TEST_CASE("parallel_map keeps index order and reports the first failure") {
    for (std::size_t workers : {1u, 2u, 8u, 64u}) {
        auto out = parallel_map(100, workers, [](std::size_t i) {
            std::this_thread::sleep_for(std::chrono::microseconds((100 - i) % 7));
            return i * i;
        });
        REQUIRE(out.size() == 100);
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
    }
    try {
        parallel_map(20, 4, [](std::size_t i) -> int {
            if (i == 13 || i == 5) throw std::runtime_error("bad " + std::to_string(i));
            return 0;
        });
        FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "bad 5");
    }
    CHECK(parallel_map(0, 4, [](std::size_t) { return 1; }).empty());
}

TEST_CASE("jsonl read and write") {
    testing::TempDir dir;
    write_text_file(dir / "a/b.jsonl", "{\"x\":1}\n\n{\"x\":2}\n");
    auto rows = read_jsonl(dir / "a/b.jsonl");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1]["x"] == 2);
    CHECK(to_jsonl(rows) == "{\"x\":1}\n{\"x\":2}\n");

    write_text_file(dir / "bad.jsonl", "{\"x\":1}\n{oops\n");
    try {
        read_jsonl(dir / "bad.jsonl");
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedDocument);
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    CHECK_ERROR_CODE(read_text_file(dir / "missing.txt"), ErrorCode::FileUnreadable);
}
