// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recipe_tune/inference.hpp"
#include "recipe_tune/jsonl.hpp"

namespace recipe_tune::temporal {

struct TimestampClaim {
    int step_index = 1;
    double start_s = 0.0;
    std::optional<double> end_s; // may precede start_s; that is reported, not repaired
    std::string source_span;

    bool operator==(const TimestampClaim&) const = default;
};

enum class ViolationKind { ExceedsDuration, Overlap, IdenticalSequential, NonMonotonic };

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::vector<TimestampClaim> claims; // one for ExceedsDuration/NonMonotonic, two otherwise
    std::string detail;
};

/// Finds h:mm:ss and m:ss clock times, "<n> seconds/minutes/hours" (also
/// "1 minute 30 seconds"), and ranges written "from X to Y", "between X and
/// Y", "X to Y" or "X - Y". Claims are numbered 1, 2, ... in order of
/// appearance. Never throws.
std::vector<TimestampClaim> extract_timestamps(std::string_view text);

/// Checks claims against the video length and against each other. Intervals
/// that only touch at an endpoint do not overlap. Throws NonPositiveDuration.
std::vector<Violation> validate_claims(const std::vector<TimestampClaim>& claims, double video_duration_s);

/// Per-step question; the step text is set off by U+2014 dashes.
std::string timestamp_prompt(int step_index, const std::string& step_text);

/// Numbered lines ("1. ...", "Step 2: ...") when present, otherwise every
/// non-blank line.
std::vector<std::string> split_recipe_steps(std::string_view recipe);

struct ProbeItemResult {
    std::string item_id;
    std::string video_id;
    double duration_s = 0.0;
    std::vector<std::string> steps;
    std::vector<TimestampClaim> claims; // first claim per answered step
    std::vector<Violation> violations;
    std::string error;

    bool ok() const { return error.empty(); }
};

struct ProbeReport {
    std::vector<ProbeItemResult> per_item;
    std::map<ViolationKind, std::size_t> totals;
    std::size_t items_probed = 0;
    std::size_t items_flagged = 0;
    std::size_t items_failed = 0;

    double flagged_fraction() const {
        return items_probed ? static_cast<double>(items_flagged) / static_cast<double>(items_probed) : 0.0;
    }
};

struct ProbeOptions {
    std::size_t parallelism = 4;
    inference::InferenceOptions inference;
};

/// For each item: takes the recipe from `recipes` (item id -> text) or asks
/// the backend for one, then asks for the timestamp of every step. Step
/// queries use request ids "<item_id>/step-<k>". Backend failures become
/// per-item error rows. Throws InvalidArgument when an item has no duration.
ProbeReport probe_backend(inference::Backend& backend, const std::vector<youcook2::EvalItem>& items,
                          const std::map<std::string, double>& durations,
                          const std::map<std::string, std::string>& recipes = {}, const ProbeOptions& options = {});

ordered_json to_json(const ProbeReport& report);

} // namespace recipe_tune::temporal
