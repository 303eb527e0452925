// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/error.hpp"

namespace recipe_tune {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptyLabel: return "EmptyLabel";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::InvalidId: return "InvalidId";
    case ErrorCode::EmptyRecipe: return "EmptyRecipe";
    case ErrorCode::EmptyField: return "EmptyField";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::GenerationExhausted: return "GenerationExhausted";
    case ErrorCode::ClientError: return "ClientError";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::FileUnreadable: return "FileUnreadable";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::MediaNotFound: return "MediaNotFound";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::OutputUnwritable: return "OutputUnwritable";
    case ErrorCode::EmptyPrediction: return "EmptyPrediction";
    case ErrorCode::JudgeUnreachable: return "JudgeUnreachable";
    case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::NonPositiveDuration: return "NonPositiveDuration";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

UnparseableVerdictError::UnparseableVerdictError(const std::string& message, std::string raw)
    : Error(ErrorCode::UnparseableVerdict, message), raw_(std::move(raw)) {}

} // namespace recipe_tune
