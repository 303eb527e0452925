// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/config.hpp"

#include <cstdlib>
#include <set>

#include "recipe_tune/error.hpp"

namespace recipe_tune {

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
    return std::nullopt;
}

namespace {

[[noreturn]] void invalid(const std::string& why) { throw Error(ErrorCode::ConfigInvalid, why); }

// Reads known keys from one config section and rejects the rest.
class Section {
public:
    Section(const ordered_json& doc, std::string name, std::filesystem::path base)
        : name_(std::move(name)), base_(std::move(base)) {
        if (!doc.contains(name_)) return;
        node_ = &doc[name_];
        if (!node_->is_object()) invalid("\"" + name_ + "\" must be an object");
    }

    void done() const {
        if (!node_) return;
        for (const auto& [key, value] : node_->items()) {
            if (!seen_.contains(key)) invalid("unknown key \"" + name_ + "." + key + "\"");
        }
    }

    template <class T>
    void get(const std::string& key, T& field) {
        seen_.insert(key);
        if (!node_ || !node_->contains(key)) return;
        try {
            field = (*node_)[key].template get<T>();
        } catch (const nlohmann::json::exception&) {
            invalid("\"" + name_ + "." + key + "\" has the wrong type");
        }
    }

    void path(const std::string& key, std::filesystem::path& field) {
        std::string s;
        bool present = node_ && node_->contains(key);
        get(key, s);
        if (!present) return;
        field = s.empty() || std::filesystem::path(s).is_absolute() || base_.empty() ? std::filesystem::path(s)
                                                                                     : base_ / s;
    }

private:
    const ordered_json* node_ = nullptr;
    std::string name_;
    std::filesystem::path base_;
    std::set<std::string> seen_;
};

} // namespace

PipelineConfig parse_config(const ordered_json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) invalid("config must be a JSON object");
    static const std::set<std::string> kSections{"paths", "generation", "judge", "backend", "lora"};
    for (const auto& [key, value] : doc.items()) {
        if (!kSections.contains(key)) invalid("unknown config section \"" + key + "\"");
    }

    PipelineConfig c;
    {
        Section s(doc, "paths", base_dir);
        s.path("output_dir", c.paths.output_dir);
        s.path("cache_dir", c.paths.cache_dir);
        s.path("media_root", c.paths.media_root);
        s.done();
    }
    {
        Section s(doc, "generation", base_dir);
        s.get("client", c.generation.client);
        s.get("endpoint", c.generation.endpoint);
        s.get("model", c.generation.model);
        s.get("temperature", c.generation.temperature);
        s.get("max_attempts", c.generation.max_attempts);
        s.get("parallelism", c.generation.parallelism);
        s.path("script_file", c.generation.script_file);
        s.done();
    }
    {
        Section s(doc, "judge", base_dir);
        s.get("client", c.judge.client);
        s.get("endpoint", c.judge.endpoint);
        s.get("model", c.judge.model);
        s.get("parallelism", c.judge.parallelism);
        s.get("retry_cap", c.judge.retry_cap);
        s.get("backoff_ms", c.judge.backoff_ms);
        s.get("use_cache", c.judge.use_cache);
        s.path("script_file", c.judge.script_file);
        s.done();
    }
    {
        Section s(doc, "backend", base_dir);
        s.get("kind", c.backend.kind);
        s.get("url", c.backend.url);
        s.path("replay_file", c.backend.replay_file);
        s.get("mock_template", c.backend.mock_template);
        s.get("parallelism", c.backend.parallelism);
        s.get("temperature", c.backend.temperature);
        s.get("max_tokens", c.backend.max_tokens);
        s.get("timeout_s", c.backend.timeout_s);
        s.get("media_extension", c.backend.media_extension);
        s.done();
    }
    {
        Section s(doc, "lora", base_dir);
        s.get("d_in", c.lora.d_in);
        s.get("d_out", c.lora.d_out);
        s.get("rank", c.lora.rank);
        s.get("alpha", c.lora.alpha);
        s.get("learning_rate", c.lora.learning_rate);
        s.get("steps", c.lora.steps);
        s.get("seed", c.lora.seed);
        s.get("batch_size", c.lora.batch_size);
        s.get("examples", c.lora.examples);
        s.get("true_rank", c.lora.true_rank);
        s.get("layout", c.lora.layout);
        s.done();
    }
    return c;
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
    PipelineConfig c;
    if (path) {
        std::string text;
        try {
            text = read_text_file(*path);
        } catch (const Error& e) {
            invalid(e.what());
        }
        auto doc = ordered_json::parse(text, nullptr, false);
        if (doc.is_discarded()) invalid(path->string() + " is not valid JSON");
        c = parse_config(doc, path->parent_path());
    }
    if (auto v = env("JUDGE_API_KEY")) c.judge.api_key = *v;
    if (auto v = env("GENERATION_API_KEY")) {
        c.generation.api_key = *v;
    } else {
        c.generation.api_key = c.judge.api_key;
    }
    if (auto v = env("BACKEND_AUTH_TOKEN")) c.backend.auth_token = *v;
    validate_config(c);
    return c;
}

void validate_config(const PipelineConfig& c) {
    auto one_of = [](const std::string& v, std::initializer_list<const char*> allowed, const std::string& key) {
        for (const char* a : allowed) {
            if (v == a) return;
        }
        invalid("\"" + key + "\" has unsupported value \"" + v + "\"");
    };
    one_of(c.generation.client, {"live", "script"}, "generation.client");
    one_of(c.judge.client, {"live", "script"}, "judge.client");
    one_of(c.backend.kind, {"live", "replay", "mock"}, "backend.kind");
    one_of(c.lora.layout, {"per_modality", "shared"}, "lora.layout");

    if (c.generation.parallelism < 1) invalid("generation.parallelism must be at least 1");
    if (c.judge.parallelism < 1) invalid("judge.parallelism must be at least 1");
    if (c.backend.parallelism < 1) invalid("backend.parallelism must be at least 1");
    if (c.judge.retry_cap < 0) invalid("judge.retry_cap must be non-negative");
    if (c.judge.backoff_ms < 0) invalid("judge.backoff_ms must be non-negative");
    if (c.backend.max_tokens < 1) invalid("backend.max_tokens must be positive");
    if (c.backend.timeout_s < 1) invalid("backend.timeout_s must be positive");
    if (c.lora.d_in < 1 || c.lora.d_out < 1) invalid("lora dimensions must be positive");
    if (c.lora.rank < 1) invalid("lora.rank must be positive");
    if (!(c.lora.alpha > 0)) invalid("lora.alpha must be positive");
    if (c.lora.steps < 1) invalid("lora.steps must be positive");
    if (!(c.lora.learning_rate >= 0)) invalid("lora.learning_rate must be non-negative");
    if (c.lora.batch_size < 1) invalid("lora.batch_size must be positive");
    if (c.lora.examples < 1) invalid("lora.examples must be positive");
}

ordered_json to_json(const PipelineConfig& c) {
    ordered_json j;
    j["paths"] = {{"output_dir", c.paths.output_dir.string()},
                  {"cache_dir", c.paths.cache_dir.string()},
                  {"media_root", c.paths.media_root.string()}};
    j["generation"] = {{"client", c.generation.client},         {"endpoint", c.generation.endpoint},
                       {"model", c.generation.model},           {"temperature", c.generation.temperature},
                       {"max_attempts", c.generation.max_attempts}, {"parallelism", c.generation.parallelism},
                       {"script_file", c.generation.script_file.string()}};
    j["judge"] = {{"client", c.judge.client},           {"endpoint", c.judge.endpoint},
                  {"model", c.judge.model},             {"parallelism", c.judge.parallelism},
                  {"retry_cap", c.judge.retry_cap},     {"backoff_ms", c.judge.backoff_ms},
                  {"use_cache", c.judge.use_cache},     {"script_file", c.judge.script_file.string()}};
    j["backend"] = {{"kind", c.backend.kind},
                    {"url", c.backend.url},
                    {"replay_file", c.backend.replay_file.string()},
                    {"mock_template", c.backend.mock_template},
                    {"parallelism", c.backend.parallelism},
                    {"temperature", c.backend.temperature},
                    {"max_tokens", c.backend.max_tokens},
                    {"timeout_s", c.backend.timeout_s},
                    {"media_extension", c.backend.media_extension}};
    j["lora"] = {{"d_in", c.lora.d_in},
                 {"d_out", c.lora.d_out},
                 {"rank", c.lora.rank},
                 {"alpha", c.lora.alpha},
                 {"learning_rate", c.lora.learning_rate},
                 {"steps", c.lora.steps},
                 {"seed", c.lora.seed},
                 {"batch_size", c.lora.batch_size},
                 {"examples", c.lora.examples},
                 {"true_rank", c.lora.true_rank},
                 {"layout", c.lora.layout}};
    return j;
}

} // namespace recipe_tune
