// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace recipe_tune {

enum class ErrorCode {
    // instruction data
    EmptyLabel,
    InvalidLabel,
    InvalidId,
    EmptyRecipe,
    EmptyField,
    MalformedRecord,
    GenerationExhausted,
    ClientError,
    TransportError,
    ZeroBaseline,
    // youcook2
    FileUnreadable,
    MalformedDocument,
    EmptyResult,
    // lora
    RankTooLarge,
    ShapeMismatch,
    EmptyBatch,
    DivergedLoss,
    InvalidArgument,
    // inference
    BackendUnavailable,
    MediaNotFound,
    GenerationFailed,
    EmptyInput,
    OutputUnwritable,
    // judge
    EmptyPrediction,
    JudgeUnreachable,
    UnparseableVerdict,
    EmptyEvaluation,
    // temporal probe
    NonPositiveDuration,
    // cli
    UnknownCommand,
    ConfigInvalid,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Judge replies that cannot be turned into a score keep the raw text around.
class UnparseableVerdictError : public Error {
public:
    UnparseableVerdictError(const std::string& message, std::string raw);

    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

} // namespace recipe_tune
