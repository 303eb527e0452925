// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/cli.hpp"

#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "recipe_tune/error.hpp"
#include "recipe_tune/inference.hpp"
#include "recipe_tune/instruction_data.hpp"
#include "recipe_tune/judge.hpp"
#include "recipe_tune/lora.hpp"
#include "recipe_tune/temporal_probe.hpp"
#include "recipe_tune/youcook2.hpp"
#include "text_util.hpp"

namespace recipe_tune::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config_path;
    bool dry_run = false;
    bool verbose = false;
};

struct Context {
    const Globals& globals;
    PipelineConfig config;
    std::ostream& out;
    std::ostream& err;

    void log(const std::string& line) const {
        if (globals.verbose) err << "[recipe-tune] " << line << "\n";
    }

    // Prints the resolved plan; returns true when the command should stop there.
    bool plan(const std::string& command, const std::vector<std::pair<std::string, std::string>>& steps) const {
        if (!globals.dry_run) return false;
        out << "plan: " << command << "\n";
        for (const auto& [key, value] : steps) out << "  " << key << ": " << value << "\n";
        return true;
    }

    fs::path output(const std::string& given, const std::string& default_name) const {
        return given.empty() ? config.paths.output_dir / default_name : fs::path(given);
    }
};

void require_input(const fs::path& path, const std::string& what) {
    std::error_code ec;
    if (path.empty()) throw Error(ErrorCode::ConfigInvalid, what + " path is not set");
    if (!fs::exists(path, ec)) throw Error(ErrorCode::ConfigInvalid, what + " '" + path.string() + "' does not exist");
}

// --- client / backend factories ---------------------------------------------

std::unique_ptr<inference::Backend> make_backend(const PipelineConfig& c) {
    if (c.backend.kind == "replay") {
        require_input(c.backend.replay_file, "backend.replay_file");
        return std::make_unique<inference::ReplayBackend>(inference::ReplayBackend::from_file(c.backend.replay_file));
    }
    if (c.backend.kind == "live") {
        if (c.backend.url.empty()) throw Error(ErrorCode::ConfigInvalid, "backend.url is required for a live backend");
        return std::make_unique<inference::HttpBackend>(c.backend.url, c.backend.auth_token,
                                                        std::chrono::seconds(c.backend.timeout_s),
                                                        c.backend.parallelism);
    }
    return std::make_unique<inference::MockBackend>(c.backend.mock_template);
}

std::string describe_backend(const PipelineConfig& c) {
    if (c.backend.kind == "replay") return "replay " + c.backend.replay_file.string();
    if (c.backend.kind == "live") return "live " + c.backend.url;
    return "mock \"" + c.backend.mock_template + "\"";
}

inference::InferenceOptions inference_options(const PipelineConfig& c) {
    inference::InferenceOptions o;
    o.parallelism = c.backend.parallelism;
    o.media_root = c.paths.media_root;
    o.media_extension = c.backend.media_extension;
    o.params.temperature = c.backend.temperature;
    o.params.max_tokens = c.backend.max_tokens;
    return o;
}

std::unique_ptr<ChatClient> make_judge_client(const PipelineConfig& c) {
    if (c.judge.client == "script") {
        require_input(c.judge.script_file, "judge.script_file");
        std::map<std::string, std::string> replies;
        for (const auto& row : read_jsonl(c.judge.script_file)) {
            try {
                replies[row.at("item_id").get<std::string>()] = row.at("reply").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::ConfigInvalid, "judge script rows need item_id and reply: " + std::string(e.what()));
            }
        }
        return std::make_unique<ScriptedChatClient>(std::move(replies), std::vector<std::string>{});
    }
    return std::make_unique<HttpChatClient>(c.judge.endpoint, c.judge.api_key);
}

std::unique_ptr<ChatClient> make_generation_client(const PipelineConfig& c) {
    if (c.generation.client == "script") {
        require_input(c.generation.script_file, "generation.script_file");
        std::vector<std::string> replies;
        for (const auto& row : read_jsonl(c.generation.script_file)) {
            try {
                ordered_json reply{{"question", row.at("question").get<std::string>()},
                                   {"answer", row.at("answer").get<std::string>()}};
                replies.push_back(reply.dump());
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::ConfigInvalid,
                            "generation script rows need question and answer: " + std::string(e.what()));
            }
        }
        return std::make_unique<ScriptedChatClient>(std::map<std::string, std::string>{}, std::move(replies));
    }
    return std::make_unique<HttpChatClient>(c.generation.endpoint, c.generation.api_key);
}

void write_dataset(const fs::path& path, const std::vector<data::InstructionRecord>& records) {
    write_text_file(path, data::serialize_dataset(records));
}

// --- subcommands ------------------------------------------------------------

struct BuildImageArgs {
    std::string manifest, class_map, out;
};

int run_build_image(const Context& ctx, const BuildImageArgs& a) {
    require_input(a.manifest, "--manifest");
    if (!a.class_map.empty()) require_input(a.class_map, "--class-map");
    auto out = ctx.output(a.out, "image_instructions.json");
    if (ctx.plan("build-image", {{"manifest", a.manifest}, {"class map", a.class_map.empty() ? "(none)" : a.class_map},
                                 {"output", out.string()}})) {
        return kOk;
    }

    auto class_map = a.class_map.empty() ? data::ClassMap{} : data::ClassMap::load_csv(a.class_map);
    std::istringstream in(read_text_file(a.manifest));
    std::vector<data::InstructionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::is_blank(line)) continue;
        auto f = detail::split_csv_line(line);
        for (auto& field : f) field = std::string(detail::trim(field));
        if (line_no == 1 && (f[0] == "id" || f[0] == "image")) continue;
        if (f.size() == 2) {
            records.push_back(data::build_image_record(fs::path(f[0]).stem().string(), f[0], f[1], class_map));
        } else if (f.size() == 3) {
            records.push_back(data::build_image_record(f[0], f[1], f[2], class_map));
        } else {
            throw Error(ErrorCode::MalformedDocument,
                        a.manifest + ":" + std::to_string(line_no) + ": expected image,label or id,image,label");
        }
    }
    write_dataset(out, records);
    ctx.out << "wrote " << records.size() << " image records to " << out.string() << "\n";
    return kOk;
}

struct BuildVideoArgs {
    std::string manifest, out;
};

int run_build_video(const Context& ctx, const BuildVideoArgs& a) {
    require_input(a.manifest, "--manifest");
    auto out = ctx.output(a.out, "video_instructions.json");
    if (ctx.plan("build-video", {{"manifest", a.manifest}, {"output", out.string()}})) return kOk;

    std::vector<data::InstructionRecord> records;
    const auto base = fs::path(a.manifest).parent_path();
    for (const auto& row : read_jsonl(a.manifest)) {
        try {
            auto id = row.at("id").get<std::string>();
            auto video = row.at("video").get<std::string>();
            std::string recipe;
            if (row.contains("recipe")) {
                recipe = row["recipe"].get<std::string>();
            } else {
                fs::path recipe_file = row.at("recipe_file").get<std::string>();
                recipe = read_text_file(recipe_file.is_relative() ? base / recipe_file : recipe_file);
            }
            records.push_back(data::build_video_record(id, video, recipe));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedDocument,
                        "video manifest rows need id, video and recipe or recipe_file: " + std::string(e.what()));
        }
    }
    write_dataset(out, records);
    ctx.out << "wrote " << records.size() << " video records to " << out.string() << "\n";
    return kOk;
}

struct GenQuestionsArgs {
    std::size_t count = 4000;
    std::uint64_t seed = 0;
    std::string out;
};

int run_gen_questions(const Context& ctx, const GenQuestionsArgs& a) {
    const auto& g = ctx.config.generation;
    auto out = ctx.output(a.out, "text_instructions.json");
    if (g.client == "script") require_input(g.script_file, "generation.script_file");
    if (ctx.plan("gen-questions", {{"count", std::to_string(a.count)},
                                   {"seed", std::to_string(a.seed)},
                                   {"client", g.client == "script" ? "script " + g.script_file.string() : "live " + g.endpoint},
                                   {"model", g.model},
                                   {"output", out.string()}})) {
        return kOk;
    }
    auto client = make_generation_client(ctx.config);
    data::GenerationConfig gc{g.model, g.temperature, g.max_attempts, g.parallelism};
    auto records = data::generate_text_qa(a.count, *client, a.seed, gc);
    write_dataset(out, records);
    ctx.out << "wrote " << records.size() << " text records to " << out.string() << "\n";
    return kOk;
}

struct ValidateArgs {
    std::vector<std::string> inputs;
    bool check_files = false;
    std::string media_root;
};

int run_validate(const Context& ctx, const ValidateArgs& a) {
    for (const auto& in : a.inputs) require_input(in, "--input");
    fs::path media_root = a.media_root.empty() ? ctx.config.paths.media_root : fs::path(a.media_root);
    std::string joined;
    for (const auto& in : a.inputs) joined += (joined.empty() ? "" : ", ") + in;
    if (ctx.plan("validate", {{"inputs", joined}, {"check files", a.check_files ? "yes" : "no"},
                              {"media root", media_root.string()}})) {
        return kOk;
    }

    bool ok = true;
    for (const auto& in : a.inputs) {
        auto report = data::validate_dataset_json(read_text_file(in), a.check_files, media_root);
        ctx.out << in << ": " << report.record_count << " records, " << report.violations.size() << " violations\n";
        for (const auto& v : report.violations) {
            ctx.out << "  [" << v.index << "] " << data::to_string(v.kind) << " id=\"" << v.id << "\": " << v.detail
                    << "\n";
        }
        ok = ok && report.ok();
    }
    return ok ? kOk : kValidationFailure;
}

struct StatsArgs {
    std::uint64_t count = 0;
    std::uint64_t baseline = 0;
};

int run_stats(const Context& ctx, const StatsArgs& a) {
    if (ctx.plan("stats", {{"count", std::to_string(a.count)}, {"baseline", std::to_string(a.baseline)}})) return kOk;
    auto stats = data::dataset_stats(a.count, a.baseline);
    ctx.out << stats.rendered << "\n";
    return kOk;
}

struct BuildEvalArgs {
    std::string annotations, available, out;
};

int run_build_eval(const Context& ctx, const BuildEvalArgs& a) {
    require_input(a.annotations, "--annotations");
    require_input(a.available, "--available");
    auto out = ctx.output(a.out, "eval_items.jsonl");
    if (ctx.plan("build-eval", {{"annotations", a.annotations}, {"available", a.available}, {"output", out.string()}})) {
        return kOk;
    }
    auto set = youcook2::parse_annotations(a.annotations);
    auto available = youcook2::load_available_ids(a.available);
    auto items = youcook2::build_eval_items(set.annotations, available);
    youcook2::write_eval_items(out, items);

    std::set<std::string> types;
    std::map<std::string, std::string> type_of;
    for (const auto& ann : set.annotations) type_of[ann.video_id] = ann.recipe_type;
    for (const auto& item : items) types.insert(type_of[item.video_id]);

    ctx.out << "parsed " << set.annotations.size() << " annotations (" << set.recipe_type_count()
            << " recipe types), rejected " << set.rejects.size() << "\n";
    for (const auto& r : set.rejects) ctx.out << "  rejected " << r.video_id << ": " << r.reason << "\n";
    ctx.out << "wrote " << items.size() << " eval items covering " << types.size() << " recipe types to "
            << out.string() << "\n";
    return kOk;
}

struct InferArgs {
    std::string items, out;
    std::size_t parallelism = 0;
};

int run_infer(const Context& ctx, const InferArgs& a) {
    require_input(a.items, "--items");
    if (ctx.config.backend.kind == "replay") require_input(ctx.config.backend.replay_file, "backend.replay_file");
    auto out = ctx.output(a.out, "responses.jsonl");
    auto options = inference_options(ctx.config);
    if (a.parallelism) options.parallelism = a.parallelism;
    if (ctx.plan("infer", {{"items", a.items},
                           {"backend", describe_backend(ctx.config)},
                           {"parallelism", std::to_string(options.parallelism)},
                           {"output", out.string()}})) {
        return kOk;
    }
    auto backend = make_backend(ctx.config);
    auto items = youcook2::read_eval_items(a.items);
    auto summary = inference::run_inference(*backend, items, out, options);
    ctx.out << "responses: " << summary.ok << " ok, " << summary.failed << " failed -> " << out.string() << "\n";
    for (const auto& row : summary.rows) {
        if (!row.ok()) ctx.err << "item " << row.item_id << ": " << row.error << "\n";
    }
    return summary.failed ? kPartialFailure : kOk;
}

struct JudgeArgs {
    std::string items, responses, out;
    bool no_cache = false;
};

void print_summary(std::ostream& out, const judge::EvalReport& report) {
    out << "yes " << report.yes_count << ", no " << report.no_count << ", accuracy " << judge::render_accuracy(report)
        << ", average score " << judge::render_average(report) << "\n";
}

int run_judge(const Context& ctx, const JudgeArgs& a) {
    require_input(a.items, "--items");
    require_input(a.responses, "--responses");
    const auto& j = ctx.config.judge;
    if (j.client == "script") require_input(j.script_file, "judge.script_file");
    auto out = ctx.output(a.out, "verdicts.jsonl");
    const bool use_cache = j.use_cache && !a.no_cache;
    if (ctx.plan("judge", {{"items", a.items},
                           {"responses", a.responses},
                           {"client", j.client == "script" ? "script " + j.script_file.string() : "live " + j.endpoint},
                           {"model", j.model},
                           {"cache", use_cache ? ctx.config.paths.cache_dir.string() : "(disabled)"},
                           {"output", out.string()}})) {
        return kOk;
    }

    auto client = make_judge_client(ctx.config);
    auto items = youcook2::read_eval_items(a.items);
    auto responses = inference::read_responses(a.responses);
    judge::JudgeOptions options;
    options.model = j.model;
    options.retry_cap = j.retry_cap;
    options.initial_backoff = std::chrono::milliseconds(j.backoff_ms);

    std::optional<judge::VerdictCache> cache;
    if (use_cache) cache.emplace(ctx.config.paths.cache_dir);
    auto run = judge::judge_all(*client, items, responses, options, cache ? &*cache : nullptr, j.parallelism);
    judge::write_verdicts(out, run.verdicts);
    for (const auto& f : run.failures) ctx.err << "item " << f.item_id << ": " << f.error << "\n";

    auto report = judge::aggregate(run.verdicts); // EmptyEvaluation when nothing was judged
    print_summary(ctx.out, report);
    ctx.out << "verdicts -> " << out.string() << "\n";
    return run.failures.empty() ? kOk : kPartialFailure;
}

struct ReportArgs {
    std::string fine_tuned, baseline, out_md, out_json, rounding = "half_up";
    std::string fine_tuned_label = "Fine-Tuned", baseline_label = "Baseline";
};

int run_report(const Context& ctx, const ReportArgs& a) {
    require_input(a.fine_tuned, "--fine-tuned");
    if (!a.baseline.empty()) require_input(a.baseline, "--baseline");
    if (a.rounding != "half_up" && a.rounding != "truncate") {
        throw Error(ErrorCode::ConfigInvalid, "--rounding must be half_up or truncate");
    }
    auto md_path = ctx.output(a.out_md, "report.md");
    auto json_path = ctx.output(a.out_json, "report.json");
    if (ctx.plan("report", {{"fine-tuned", a.fine_tuned},
                            {"baseline", a.baseline.empty() ? "(none)" : a.baseline},
                            {"rounding", a.rounding},
                            {"markdown", md_path.string()},
                            {"json", json_path.string()}})) {
        return kOk;
    }

    std::vector<judge::ReportColumn> columns;
    columns.push_back({a.fine_tuned_label, judge::aggregate(judge::read_verdicts(a.fine_tuned))});
    if (!a.baseline.empty()) columns.push_back({a.baseline_label, judge::aggregate(judge::read_verdicts(a.baseline))});
    auto rendered = judge::render_report(columns, a.rounding == "truncate" ? Rounding::Truncate : Rounding::HalfUp);
    write_text_file(md_path, rendered.markdown);
    write_text_file(json_path, rendered.json.dump(2) + "\n");
    ctx.out << rendered.markdown;
    return kOk;
}

struct ProbeArgs {
    std::string items, annotations, responses, out;
};

int run_probe(const Context& ctx, const ProbeArgs& a) {
    require_input(a.items, "--items");
    require_input(a.annotations, "--annotations");
    if (!a.responses.empty()) require_input(a.responses, "--responses");
    if (ctx.config.backend.kind == "replay") require_input(ctx.config.backend.replay_file, "backend.replay_file");
    auto out = ctx.output(a.out, "temporal_probe.json");
    if (ctx.plan("probe-temporal", {{"items", a.items},
                                    {"annotations", a.annotations},
                                    {"responses", a.responses.empty() ? "(generate)" : a.responses},
                                    {"backend", describe_backend(ctx.config)},
                                    {"output", out.string()}})) {
        return kOk;
    }

    auto backend = make_backend(ctx.config);
    auto items = youcook2::read_eval_items(a.items);
    auto durations = youcook2::durations_by_video(youcook2::parse_annotations(a.annotations).annotations);
    std::map<std::string, std::string> recipes;
    if (!a.responses.empty()) {
        for (const auto& row : inference::read_responses(a.responses)) {
            if (row.ok()) recipes[row.item_id] = row.response->text;
        }
    }
    temporal::ProbeOptions options;
    options.parallelism = ctx.config.backend.parallelism;
    options.inference = inference_options(ctx.config);
    auto report = temporal::probe_backend(*backend, items, durations, recipes, options);
    write_text_file(out, temporal::to_json(report).dump(2) + "\n");

    ctx.out << "probed " << report.items_probed << " items, flagged " << report.items_flagged << " ("
            << render_fixed(100.0 * report.flagged_fraction(), 1) << "%), failed " << report.items_failed << "\n";
    for (const auto& [kind, n] : report.totals) ctx.out << "  " << temporal::to_string(kind) << ": " << n << "\n";
    return report.items_failed ? kPartialFailure : kOk;
}

struct LoraArgs {
    std::string out_dir;
};

int run_lora_demo(const Context& ctx, const LoraArgs& a) {
    const auto& l = ctx.config.lora;
    fs::path dir = a.out_dir.empty() ? ctx.config.paths.output_dir / "lora" : fs::path(a.out_dir);
    if (ctx.plan("lora-demo", {{"layout", l.layout},
                               {"dims", std::to_string(l.d_out) + "x" + std::to_string(l.d_in)},
                               {"rank", std::to_string(l.rank)},
                               {"alpha", render_fixed(l.alpha, 3)},
                               {"steps", std::to_string(l.steps)},
                               {"output", dir.string()}})) {
        return kOk;
    }

    auto slots = lora::make_adapter_slots(lora::parse_layout(l.layout), l.d_in, l.d_out, l.rank, l.alpha, l.seed);
    lora::ToyTrainConfig train{l.learning_rate, l.steps, l.seed, l.batch_size};
    std::uint64_t task_seed = l.seed;
    for (const auto& [name, adapter] : slots) {
        auto task = lora::make_low_rank_task(l.d_in, l.d_out, l.true_rank, l.examples, ++task_seed * 7919);
        auto result = lora::train_toy(task.base, adapter, task.examples, train);
        auto path = dir / (name + ".json");
        lora::save_adapter(path, result.adapter);
        ctx.out << name << ": loss " << render_fixed(result.loss_history.front(), 6) << " -> "
                << render_fixed(result.loss_history.back(), 6) << " over " << l.steps << " steps, "
                << result.adapter.parameter_count() << " adapter params vs " << l.d_in * l.d_out << " dense -> "
                << path.string() << "\n";
    }
    return kOk;
}

int status_for(const Error& e) {
    switch (e.code()) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::UnknownCommand: return kConfigError;
    default: return kValidationFailure;
    }
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"Instruction-data, LoRA and judge-evaluation toolkit for recipe generation", "recipe-tune"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals globals;
    app.add_option("--config", globals.config_path, "Pipeline config (JSON)");
    app.add_flag("--dry-run", globals.dry_run, "Print the resolved plan and exit without side effects");
    app.add_flag("--verbose", globals.verbose, "Log progress to stderr");

    std::function<int(const Context&)> action;

    BuildImageArgs image_args;
    auto* build_image = app.add_subcommand("build-image", "Compile the image instruction dataset");
    build_image->add_option("--manifest", image_args.manifest, "CSV of image,label or id,image,label")->required();
    build_image->add_option("--class-map", image_args.class_map, "CSV of label,name overrides");
    build_image->add_option("--out", image_args.out);
    build_image->callback([&] { action = [&](const Context& c) { return run_build_image(c, image_args); }; });

    BuildVideoArgs video_args;
    auto* build_video = app.add_subcommand("build-video", "Compile the video instruction dataset");
    build_video->add_option("--manifest", video_args.manifest, "JSONL of {id, video, recipe | recipe_file}")->required();
    build_video->add_option("--out", video_args.out);
    build_video->callback([&] { action = [&](const Context& c) { return run_build_video(c, video_args); }; });

    GenQuestionsArgs gen_args;
    auto* gen = app.add_subcommand("gen-questions", "Generate the text instruction dataset");
    gen->add_option("--count", gen_args.count)->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_args.seed);
    gen->add_option("--out", gen_args.out);
    gen->callback([&] { action = [&](const Context& c) { return run_gen_questions(c, gen_args); }; });

    ValidateArgs validate_args;
    auto* validate = app.add_subcommand("validate", "Check instruction dataset files");
    validate->add_option("--input", validate_args.inputs, "Dataset file (repeatable)")->required();
    validate->add_flag("--check-files", validate_args.check_files, "Also require media files to exist");
    validate->add_option("--media-root", validate_args.media_root);
    validate->callback([&] { action = [&](const Context& c) { return run_validate(c, validate_args); }; });

    StatsArgs stats_args;
    auto* stats = app.add_subcommand("stats", "Dataset size as a percentage of a baseline");
    stats->add_option("--count", stats_args.count)->required();
    stats->add_option("--baseline", stats_args.baseline)->required();
    stats->callback([&] { action = [&](const Context& c) { return run_stats(c, stats_args); }; });

    BuildEvalArgs eval_args;
    auto* build_eval = app.add_subcommand("build-eval", "Build eval items from YouCook2 annotations");
    build_eval->add_option("--annotations", eval_args.annotations)->required();
    build_eval->add_option("--available", eval_args.available, "Id list file or video directory")->required();
    build_eval->add_option("--out", eval_args.out);
    build_eval->callback([&] { action = [&](const Context& c) { return run_build_eval(c, eval_args); }; });

    InferArgs infer_args;
    auto* infer = app.add_subcommand("infer", "Generate recipes for eval items");
    infer->add_option("--items", infer_args.items)->required();
    infer->add_option("--out", infer_args.out);
    infer->add_option("--parallelism", infer_args.parallelism)->check(CLI::PositiveNumber);
    infer->callback([&] { action = [&](const Context& c) { return run_infer(c, infer_args); }; });

    JudgeArgs judge_args;
    auto* judge_cmd = app.add_subcommand("judge", "Score responses with the LLM judge");
    judge_cmd->add_option("--items", judge_args.items)->required();
    judge_cmd->add_option("--responses", judge_args.responses)->required();
    judge_cmd->add_option("--out", judge_args.out);
    judge_cmd->add_flag("--no-cache", judge_args.no_cache);
    judge_cmd->callback([&] { action = [&](const Context& c) { return run_judge(c, judge_args); }; });

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Render the comparison table");
    report->add_option("--fine-tuned", report_args.fine_tuned, "Verdicts JSONL")->required();
    report->add_option("--baseline", report_args.baseline, "Verdicts JSONL");
    report->add_option("--out-md", report_args.out_md);
    report->add_option("--out-json", report_args.out_json);
    report->add_option("--rounding", report_args.rounding, "half_up or truncate");
    report->add_option("--fine-tuned-label", report_args.fine_tuned_label);
    report->add_option("--baseline-label", report_args.baseline_label);
    report->callback([&] { action = [&](const Context& c) { return run_report(c, report_args); }; });

    ProbeArgs probe_args;
    auto* probe = app.add_subcommand("probe-temporal", "Ask for step timestamps and check them");
    probe->add_option("--items", probe_args.items)->required();
    probe->add_option("--annotations", probe_args.annotations, "YouCook2 annotations (durations)")->required();
    probe->add_option("--responses", probe_args.responses, "Reuse recipes from an infer run");
    probe->add_option("--out", probe_args.out);
    probe->callback([&] { action = [&](const Context& c) { return run_probe(c, probe_args); }; });

    LoraArgs lora_args;
    auto* lora_cmd = app.add_subcommand("lora-demo", "Train toy LoRA adapters on a synthetic low-rank task");
    lora_cmd->add_option("--out-dir", lora_args.out_dir);
    lora_cmd->callback([&] { action = [&](const Context& c) { return run_lora_demo(c, lora_args); }; });

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kConfigError;
    }

    try {
        auto config = load_config(globals.config_path.empty() ? std::nullopt
                                                              : std::optional<fs::path>(globals.config_path),
                                  env);
        Context ctx{globals, std::move(config), out, err};
        ctx.log("config: " + to_json(ctx.config).dump());
        return action(ctx);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return status_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kValidationFailure;
    }
}

} // namespace recipe_tune::cli
