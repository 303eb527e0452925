// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "recipe_tune/chat_client.hpp"
#include "recipe_tune/error.hpp"
#include "recipe_tune/inference.hpp"
#include "test_support.hpp"

using namespace recipe_tune;
using namespace recipe_tune::inference;

namespace {

std::vector<EvalItem> make_items(std::size_t n) {
    std::vector<EvalItem> items;
    for (std::size_t i = 0; i < n; ++i) {
        items.push_back({std::to_string(i), "vid" + std::to_string(i), std::string(youcook2::kEvalQuestion), "1. x"});
    }
    return items;
}

// Fails on every third item and answers slowly for low ids, so completion
// order differs from input order.
class FlakyBackend final : public Backend {
public:
    std::string name() const override { return "flaky"; }
    ModelResponse generate(const GenerationRequest& r) override {
        auto id = std::stoul(r.item_id);
        std::this_thread::sleep_for(std::chrono::microseconds(200 * ((40 - id % 40))));
        if (id % 3 == 2) throw Error(ErrorCode::GenerationFailed, "boom " + r.item_id);
        ++calls;
        return {r.item_id, "text for " + r.item_id, name(), 0};
    }
    std::atomic<int> calls{0};
};

class WrongIdBackend final : public Backend {
public:
    std::string name() const override { return "wrong"; }
    ModelResponse generate(const GenerationRequest& r) override {
        return {r.item_id == "1" ? "other" : r.item_id, r.item_id == "2" ? "" : "ok", name(), 0};
    }
};

class SerialBackend final : public Backend {
public:
    std::string name() const override { return "serial"; }
    std::size_t max_parallelism() const override { return 1; }
    ModelResponse generate(const GenerationRequest& r) override {
        int now = ++active;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
        --active;
        return {r.item_id, "ok", name(), 0};
    }
    std::atomic<int> active{0}, peak{0};
};

// Local HTTP server on an ephemeral port, stopped on destruction.
class LocalServer {
public:
    LocalServer() {
        port_ = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        thread_.join();
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

    httplib::Server server;

private:
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST_CASE("request validation") {
    GenerationRequest r{"0", MediaKind::Video, std::nullopt, "p", {}};
    CHECK_ERROR_CODE(validate_request(r), ErrorCode::InvalidArgument);
    r.media_ref = "v.mp4";
    validate_request(r);
    r.media_kind = MediaKind::None;
    CHECK_ERROR_CODE(validate_request(r), ErrorCode::InvalidArgument);
}

TEST_CASE("make_request resolves media paths") {
    auto item = make_items(1)[0];
    InferenceOptions o;
    auto bare = make_request(item, o);
    CHECK(bare.media_kind == MediaKind::Video);
    CHECK(bare.media_ref == "vid0");
    CHECK(bare.prompt == item.question);
    o.media_root = "/media";
    CHECK(make_request(item, o).media_ref == "/media/vid0.mp4");
}

TEST_CASE("replay and mock backends") {
    ReplayBackend replay(std::map<std::string, std::string>{{"0", "hello"}});
    auto req = make_request(make_items(1)[0], {});
    auto resp = replay.generate(req);
    CHECK(resp.text == "hello");
    CHECK(resp.latency_ms == 0);
    req.item_id = "9";
    CHECK_ERROR_CODE(replay.generate(req), ErrorCode::GenerationFailed);

    auto from_file = ReplayBackend::from_file(testing::data_dir() / "replay.jsonl");
    req.item_id = "4";
    CHECK(from_file.generate(req).text.rfind("1. Mix flour", 0) == 0);

    MockBackend mock("[{item_id}] {video_stem}");
    InferenceOptions o;
    o.media_root = "/m";
    CHECK(mock.generate(make_request(make_items(1)[0], o)).text == "[0] vid0");
}

TEST_CASE("output order equals input order at every parallelism") {
    auto items = make_items(40);
    std::string reference;
    for (std::size_t p : {1u, 2u, 5u, 16u}) {
        FlakyBackend backend;
        testing::TempDir dir;
        InferenceOptions o;
        o.parallelism = p;
        auto summary = run_inference(backend, items, dir / "out.jsonl", o);
        CHECK(summary.ok + summary.failed == items.size());
        CHECK(summary.failed == 13);
        for (std::size_t i = 0; i < items.size(); ++i) {
            CHECK(summary.rows[i].item_id == items[i].item_id);
            CHECK(summary.rows[i].ok() == (i % 3 != 2));
        }
        auto text = testing::slurp(dir / "out.jsonl");
        if (reference.empty()) reference = text;
        CHECK(text == reference);
        auto back = read_responses(dir / "out.jsonl");
        REQUIRE(back.size() == items.size());
        CHECK(back[2].error.find("boom 2") != std::string::npos);
        CHECK(back[0].response->backend_name == "flaky");
    }
}

TEST_CASE("mismatched ids and empty text become error rows") {
    WrongIdBackend backend;
    testing::TempDir dir;
    auto summary = run_inference(backend, make_items(3), dir / "o.jsonl");
    CHECK(summary.ok == 1);
    CHECK(summary.failed == 2);
    CHECK_FALSE(summary.rows[1].ok());
    CHECK_FALSE(summary.rows[2].ok());
    CHECK_ERROR_CODE(run_inference(backend, {}, dir / "e.jsonl"), ErrorCode::EmptyInput);
}

TEST_CASE("serial backends are never called concurrently") {
    SerialBackend backend;
    testing::TempDir dir;
    InferenceOptions o;
    o.parallelism = 8;
    run_inference(backend, make_items(20), dir / "o.jsonl", o);
    CHECK(backend.peak.load() == 1);
}

TEST_CASE("replay runs are byte-identical") {
    auto replay_items = make_items(9);
    testing::TempDir dir;
    auto a = ReplayBackend::from_file(testing::data_dir() / "replay.jsonl");
    auto b = ReplayBackend::from_file(testing::data_dir() / "replay.jsonl");
    run_inference(a, replay_items, dir / "a.jsonl", InferenceOptions{.parallelism = 4, .media_root = {}, .media_extension = ".mp4", .params = {}});
    run_inference(b, replay_items, dir / "b.jsonl", InferenceOptions{.parallelism = 1, .media_root = {}, .media_extension = ".mp4", .params = {}});
    CHECK(testing::slurp(dir / "a.jsonl") == testing::slurp(dir / "b.jsonl"));
}

TEST_CASE("response rows round trip") {
    ResponseRow ok{"3", ModelResponse{"3", "t", "replay", 0}, ""};
    ResponseRow bad{"4", std::nullopt, "GenerationFailed: x"};
    CHECK(to_json(ok).dump() == R"({"item_id":"3","text":"t","backend_name":"replay","latency_ms":0})");
    CHECK(to_json(bad).dump() == R"({"item_id":"4","error":"GenerationFailed: x"})");
    CHECK(response_row_from_json(to_json(ok)).response == ok.response);
    CHECK(response_row_from_json(to_json(bad)).error == bad.error);
}

TEST_CASE("http backend speaks the documented wire shape") {
    LocalServer srv;
    std::mutex mu;
    std::vector<ordered_json> seen;
    std::string auth;
    srv.server.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(mu);
        seen.push_back(ordered_json::parse(req.body));
        auth = req.get_header_value("Authorization");
        res.set_content(R"({"text": "echo"})", "application/json");
    });
    srv.server.Post("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    srv.server.Post("/notext", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"answer": 1})", "application/json");
    });

    testing::TempDir dir;
    testing::spit(dir / "vid0.mp4", "abc");
    InferenceOptions o;
    o.media_root = dir.path();
    auto request = make_request(make_items(1)[0], o);

    HttpBackend backend(srv.url("/generate"), "tok", std::chrono::seconds(5));
    auto resp = backend.generate(request);
    CHECK(resp.text == "echo");
    CHECK(resp.backend_name == "live");
    REQUIRE(seen.size() == 1);
    CHECK(seen[0]["prompt"] == youcook2::kEvalQuestion);
    CHECK(seen[0]["media_b64"] == "YWJj");
    CHECK(seen[0]["params"]["max_tokens"] == 1024);
    CHECK(auth == "Bearer tok");

    request.media_ref = "https://example.org/v.mp4";
    CHECK(HttpBackend::request_body(request)["media_url"] == "https://example.org/v.mp4");
    request.media_ref = (dir / "absent.mp4").string();
    CHECK_ERROR_CODE(backend.generate(request), ErrorCode::MediaNotFound);

    auto plain = make_request(make_items(1)[0], {});
    plain.media_kind = MediaKind::None;
    plain.media_ref.reset();
    CHECK_ERROR_CODE(HttpBackend(srv.url("/fail"), "").generate(plain), ErrorCode::GenerationFailed);
    CHECK_ERROR_CODE(HttpBackend(srv.url("/notext"), "").generate(plain), ErrorCode::GenerationFailed);
    CHECK_ERROR_CODE(HttpBackend("http://127.0.0.1:1/x", "", std::chrono::seconds(2)).generate(plain),
                     ErrorCode::BackendUnavailable);
}

TEST_CASE("http chat client") {
    LocalServer srv;
    ordered_json last;
    srv.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        last = ordered_json::parse(req.body);
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"{\"score\": 4}"}}]})",
                        "application/json");
    });
    srv.server.Post("/busy", [](const httplib::Request&, httplib::Response& res) { res.status = 429; });
    srv.server.Post("/denied", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });

    ChatRequest req{{{"system", "s"}, {"user", "u"}}, "gpt-3.5-turbo", 0.0, 7, std::nullopt, "item-1"};
    HttpChatClient client(srv.url("/v1/chat/completions"), "key");
    CHECK(client.complete(req) == "{\"score\": 4}");
    CHECK(last["model"] == "gpt-3.5-turbo");
    CHECK(last["messages"][1]["content"] == "u");
    CHECK(last["seed"] == 7);
    CHECK_FALSE(last.contains("tag"));
    CHECK_ERROR_CODE(HttpChatClient(srv.url("/busy"), "").complete(req), ErrorCode::TransportError);
    CHECK_ERROR_CODE(HttpChatClient(srv.url("/denied"), "").complete(req), ErrorCode::ClientError);
}
