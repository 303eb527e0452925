// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/error.hpp"
#include "recipe_tune/judge.hpp"

namespace recipe_tune::judge {

namespace {

std::string row(const std::string& metric, const std::vector<std::string>& cells) {
    std::string out = "| " + metric;
    for (const auto& c : cells) out += " | " + c;
    return out + " |\n";
}

} // namespace

RenderedReport render_report(const EvalReport& fine_tuned, const std::optional<EvalReport>& baseline,
                             Rounding rounding) {
    std::vector<ReportColumn> columns{{"Fine-Tuned", fine_tuned}};
    if (baseline) columns.push_back({"Baseline", *baseline});
    return render_report(columns, rounding);
}

RenderedReport render_report(const std::vector<ReportColumn>& columns, Rounding rounding) {
    if (columns.empty()) throw Error(ErrorCode::EmptyEvaluation, "report needs at least one column");

    const Rounding other = rounding == Rounding::HalfUp ? Rounding::Truncate : Rounding::HalfUp;
    const char* rounding_name = rounding == Rounding::HalfUp ? "half_up" : "truncate";

    std::vector<std::string> labels, yes, no, accuracy, average, notes;
    auto json_columns = ordered_json::array();
    for (const auto& c : columns) {
        labels.push_back(c.label);
        yes.push_back(std::to_string(c.report.yes_count));
        no.push_back(std::to_string(c.report.no_count));
        accuracy.push_back(render_accuracy(c.report, rounding));
        average.push_back(render_average(c.report, rounding));

        auto alternative = render_accuracy(c.report, other);
        if (alternative != accuracy.back()) {
            notes.push_back(c.label + ": " + std::to_string(c.report.yes_count) + "/" +
                            std::to_string(c.report.total()) + " renders as " + accuracy.back() + " with " +
                            (rounding == Rounding::HalfUp ? "half-up rounding" : "truncation") + " and as " +
                            alternative + " with " + (rounding == Rounding::HalfUp ? "truncation" : "half-up rounding") +
                            ".");
        }

        json_columns.push_back({{"label", c.label},
                                {"yes_count", c.report.yes_count},
                                {"no_count", c.report.no_count},
                                {"accuracy", accuracy.back()},
                                {"average_score", average.back()}});
    }

    std::string md;
    md += row("Metric", labels);
    std::vector<std::string> rule(columns.size(), "---");
    md += row("---", rule);
    md += row("Yes Count", yes);
    md += row("No Count", no);
    md += row("Accuracy", accuracy);
    md += row("Average Score", average);
    if (!notes.empty()) {
        md += "\n";
        for (const auto& n : notes) md += "Note: " + n + "\n";
    }

    ordered_json json;
    json["rounding"] = rounding_name;
    json["columns"] = std::move(json_columns);
    json["notes"] = notes;
    return {std::move(md), std::move(json)};
}

} // namespace recipe_tune::judge
