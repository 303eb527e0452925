// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/temporal_probe.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "recipe_tune/error.hpp"
#include "recipe_tune/parallel.hpp"
#include "text_util.hpp"

namespace recipe_tune::temporal {

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::ExceedsDuration: return "ExceedsDuration";
    case ViolationKind::Overlap: return "Overlap";
    case ViolationKind::IdenticalSequential: return "IdenticalSequential";
    case ViolationKind::NonMonotonic: return "NonMonotonic";
    }
    return "unknown";
}

// --- extraction -------------------------------------------------------------

namespace {

constexpr const char* kUnit = R"((hours?|hrs?|minutes?|mins?|seconds?|secs?))";

const std::regex& atom_regex() {
    static const std::regex re(std::string(R"((\d{1,2}):([0-5]\d):([0-5]\d)(?![\d:])|(\d{1,3}):([0-5]\d)(?![\d:])|)") +
                                   R"((\d+(?:\.\d+)?)\s*)" + kUnit +
                                   R"(\b(?:,?\s*(?:and\s+)?(\d+(?:\.\d+)?)\s*(seconds?|secs?)\b)?)",
                               std::regex::icase | std::regex::ECMAScript | std::regex::optimize);
    return re;
}

const std::regex& bare_range_regex() {
    static const std::regex re(std::string(R"(\b(?:from|between)\s+(\d+(?:\.\d+)?)\s*(?:to|and|-|–)\s*(\d+(?:\.\d+)?)\s*)") +
                                   kUnit + R"(\b)",
                               std::regex::icase | std::regex::ECMAScript | std::regex::optimize);
    return re;
}

double unit_seconds(const std::string& unit) {
    auto u = detail::to_lower(unit);
    if (u.starts_with("h")) return 3600.0;
    if (u.starts_with("m")) return 60.0;
    return 1.0;
}

struct Atom {
    std::size_t begin = 0;
    std::size_t end = 0;
    double seconds = 0.0;
};

struct Span {
    std::size_t begin;
    std::size_t end;
    double start;
    std::optional<double> finish;
};

bool glued_before(std::string_view text, std::size_t pos) {
    if (pos == 0) return false;
    char c = text[pos - 1];
    return std::isalnum(static_cast<unsigned char>(c)) || c == ':' || c == '.';
}

std::vector<Atom> find_atoms(std::string_view text) {
    std::vector<Atom> atoms;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), atom_regex()); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        auto begin = static_cast<std::size_t>(m.position(0));
        if (glued_before(text, begin)) continue;
        Atom a{begin, begin + static_cast<std::size_t>(m.length(0)), 0.0};
        if (m[1].matched) {
            a.seconds = std::stod(m[1]) * 3600 + std::stod(m[2]) * 60 + std::stod(m[3]);
        } else if (m[4].matched) {
            a.seconds = std::stod(m[4]) * 60 + std::stod(m[5]);
        } else {
            a.seconds = std::stod(m[6]) * unit_seconds(m[7]);
            if (m[8].matched) a.seconds += std::stod(m[8]) * unit_seconds(m[9]);
        }
        atoms.push_back(a);
    }
    return atoms;
}

bool is_range_joiner(std::string_view gap, bool after_between) {
    auto g = detail::to_lower(detail::trim(gap));
    if (g == "to" || g == "-" || g == "–" || g == "—" || g == "until" || g == "till" || g == "through") return true;
    return after_between && g == "and";
}

bool ends_with_between(std::string_view prefix) {
    auto p = detail::to_lower(detail::trim(prefix));
    return p.size() >= 7 && p.ends_with("between") && (p.size() == 7 || !std::isalpha(static_cast<unsigned char>(p[p.size() - 8])));
}

} // namespace

std::vector<TimestampClaim> extract_timestamps(std::string_view text) {
    std::vector<Span> spans;
    try {
        const std::string s(text);
        for (auto it = std::sregex_iterator(s.begin(), s.end(), bare_range_regex()); it != std::sregex_iterator();
             ++it) {
            const auto& m = *it;
            double unit = unit_seconds(m[3]);
            auto begin = static_cast<std::size_t>(m.position(0));
            spans.push_back({begin, begin + static_cast<std::size_t>(m.length(0)), std::stod(m[1]) * unit,
                             std::stod(m[2]) * unit});
        }

        auto atoms = find_atoms(text);
        const auto bare_count = spans.size();
        std::erase_if(atoms, [&](const Atom& a) {
            return std::any_of(spans.begin(), spans.begin() + static_cast<std::ptrdiff_t>(bare_count),
                               [&](const Span& sp) { return a.begin < sp.end && sp.begin < a.end; });
        });

        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const auto& a = atoms[i];
            if (i + 1 < atoms.size()) {
                const auto& b = atoms[i + 1];
                auto gap = text.substr(a.end, b.begin - a.end);
                if (is_range_joiner(gap, ends_with_between(text.substr(0, a.begin)))) {
                    spans.push_back({a.begin, b.end, a.seconds, b.seconds});
                    ++i;
                    continue;
                }
            }
            spans.push_back({a.begin, a.end, a.seconds, std::nullopt});
        }
    } catch (const std::exception&) {
        // Extraction is total; anything the scanner cannot digest yields no claims.
        return {};
    }

    std::sort(spans.begin(), spans.end(), [](const Span& x, const Span& y) { return x.begin < y.begin; });
    std::vector<TimestampClaim> claims;
    claims.reserve(spans.size());
    for (const auto& sp : spans) {
        claims.push_back({static_cast<int>(claims.size()) + 1, sp.start, sp.finish,
                          std::string(text.substr(sp.begin, sp.end - sp.begin))});
    }
    return claims;
}

// --- validation -------------------------------------------------------------

namespace {

std::string fmt_seconds(double s) {
    auto r = std::round(s * 100) / 100;
    auto text = std::to_string(r);
    text.erase(text.find_last_not_of('0') + 1);
    if (text.back() == '.') text.pop_back();
    return text + "s";
}

std::string describe(const TimestampClaim& c) {
    auto out = "step " + std::to_string(c.step_index) + " [" + fmt_seconds(c.start_s);
    if (c.end_s) out += ", " + fmt_seconds(*c.end_s);
    return out + "]";
}

double claim_end(const TimestampClaim& c) { return c.end_s.value_or(c.start_s); }

} // namespace

std::vector<Violation> validate_claims(const std::vector<TimestampClaim>& claims, double video_duration_s) {
    if (!(video_duration_s > 0) || !std::isfinite(video_duration_s)) {
        throw Error(ErrorCode::NonPositiveDuration, "video duration must be positive");
    }
    std::vector<Violation> out;

    for (const auto& c : claims) {
        if (c.start_s > video_duration_s || (c.end_s && *c.end_s > video_duration_s)) {
            out.push_back({ViolationKind::ExceedsDuration, {c},
                           describe(c) + " is past the end of a " + fmt_seconds(video_duration_s) + " video"});
        }
    }

    for (std::size_t i = 0; i < claims.size(); ++i) {
        for (std::size_t j = i + 1; j < claims.size(); ++j) {
            const auto& a = claims[i];
            const auto& b = claims[j];
            if (a.step_index == b.step_index) continue;
            if (a.start_s == b.start_s && a.end_s == b.end_s) {
                out.push_back({ViolationKind::IdenticalSequential, {a, b},
                               describe(a) + " and " + describe(b) + " claim the same time"});
                continue;
            }
            double shared = std::min(claim_end(a), claim_end(b)) - std::max(a.start_s, b.start_s);
            if (shared > 0) {
                out.push_back({ViolationKind::Overlap, {a, b},
                               describe(a) + " overlaps " + describe(b) + " by " + fmt_seconds(shared)});
            }
        }
    }

    for (std::size_t i = 1; i < claims.size(); ++i) {
        const auto& prev = claims[i - 1];
        const auto& cur = claims[i];
        if (cur.step_index != prev.step_index && cur.start_s < prev.start_s) {
            out.push_back({ViolationKind::NonMonotonic, {cur},
                           describe(cur) + " starts before the previous " + describe(prev)});
        }
    }
    return out;
}

// --- probing ----------------------------------------------------------------

std::string timestamp_prompt(int step_index, const std::string& step_text) {
    return "At what timestamp in the video does step " + std::to_string(step_index) + " — '" + step_text + "' — occur?";
}

std::vector<std::string> split_recipe_steps(std::string_view recipe) {
    static const std::regex numbered(R"(^\s*(?:step\s*)?\d+\s*[.):]\s*(.*\S)\s*$)", std::regex::icase);
    std::vector<std::string> numbered_steps, plain;
    std::string text(recipe);
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        std::smatch m;
        if (std::regex_match(line, m, numbered)) {
            numbered_steps.push_back(m[1]);
        } else {
            auto t = detail::trim(line);
            for (bool stripped = true; stripped;) {
                stripped = false;
                for (std::string_view bullet : {"-", "*", "\u2022"}) {
                    if (t.starts_with(bullet)) {
                        t = detail::trim(t.substr(bullet.size()));
                        stripped = true;
                    }
                }
            }
            if (!t.empty()) plain.emplace_back(t);
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return numbered_steps.empty() ? plain : numbered_steps;
}

ProbeReport probe_backend(inference::Backend& backend, const std::vector<youcook2::EvalItem>& items,
                          const std::map<std::string, double>& durations,
                          const std::map<std::string, std::string>& recipes, const ProbeOptions& options) {
    for (const auto& item : items) {
        if (!durations.contains(item.video_id)) {
            throw Error(ErrorCode::InvalidArgument, "no duration for video '" + item.video_id + "'");
        }
    }
    const auto workers = std::min(std::max<std::size_t>(options.parallelism, 1), backend.max_parallelism());

    ProbeReport report;
    report.per_item = parallel_map(items.size(), workers, [&](std::size_t i) {
        const auto& item = items[i];
        ProbeItemResult r;
        r.item_id = item.item_id;
        r.video_id = item.video_id;
        r.duration_s = durations.at(item.video_id);
        try {
            std::string recipe;
            if (auto it = recipes.find(item.item_id); it != recipes.end()) {
                recipe = it->second;
            } else {
                recipe = backend.generate(inference::make_request(item, options.inference)).text;
            }
            r.steps = split_recipe_steps(recipe);

            for (std::size_t k = 0; k < r.steps.size(); ++k) {
                const int step = static_cast<int>(k) + 1;
                auto request = inference::make_request(item, options.inference);
                request.item_id = item.item_id + "/step-" + std::to_string(step);
                request.prompt = timestamp_prompt(step, r.steps[k]);
                auto reply = backend.generate(request);
                auto found = extract_timestamps(reply.text);
                if (found.empty()) continue;
                found.front().step_index = step;
                r.claims.push_back(std::move(found.front()));
            }
            r.violations = validate_claims(r.claims, r.duration_s);
        } catch (const std::exception& e) {
            r.error = e.what();
            r.claims.clear();
            r.violations.clear();
        }
        return r;
    });

    for (auto kind : {ViolationKind::ExceedsDuration, ViolationKind::Overlap, ViolationKind::IdenticalSequential,
                      ViolationKind::NonMonotonic}) {
        report.totals[kind] = 0;
    }
    for (const auto& r : report.per_item) {
        if (!r.ok()) {
            ++report.items_failed;
            continue;
        }
        ++report.items_probed;
        if (!r.violations.empty()) ++report.items_flagged;
        for (const auto& v : r.violations) ++report.totals[v.kind];
    }
    return report;
}

ordered_json to_json(const ProbeReport& report) {
    auto claim_json = [](const TimestampClaim& c) {
        ordered_json j{{"step_index", c.step_index}, {"start_s", c.start_s}};
        j["end_s"] = c.end_s ? ordered_json(*c.end_s) : ordered_json(nullptr);
        j["source_span"] = c.source_span;
        return j;
    };

    auto items = ordered_json::array();
    for (const auto& r : report.per_item) {
        ordered_json j{{"item_id", r.item_id}, {"video_id", r.video_id}, {"duration_s", r.duration_s}};
        if (!r.ok()) {
            j["error"] = r.error;
            items.push_back(std::move(j));
            continue;
        }
        j["steps"] = r.steps;
        auto claims = ordered_json::array();
        for (const auto& c : r.claims) claims.push_back(claim_json(c));
        j["claims"] = std::move(claims);
        auto violations = ordered_json::array();
        for (const auto& v : r.violations) {
            std::vector<int> steps;
            for (const auto& c : v.claims) steps.push_back(c.step_index);
            violations.push_back({{"kind", to_string(v.kind)}, {"steps", steps}, {"detail", v.detail}});
        }
        j["violations"] = std::move(violations);
        items.push_back(std::move(j));
    }

    ordered_json out;
    out["per_item"] = std::move(items);
    auto total = [&](ViolationKind kind) {
        auto it = report.totals.find(kind);
        return it == report.totals.end() ? std::size_t{0} : it->second;
    };
    out["totals"] = {{"exceeds", total(ViolationKind::ExceedsDuration)},
                     {"overlap", total(ViolationKind::Overlap)},
                     {"identical", total(ViolationKind::IdenticalSequential)},
                     {"nonmonotonic", total(ViolationKind::NonMonotonic)}};
    out["flagged_fraction"] = report.flagged_fraction();
    out["items_probed"] = report.items_probed;
    out["items_failed"] = report.items_failed;
    return out;
}

} // namespace recipe_tune::temporal
