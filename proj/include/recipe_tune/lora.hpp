// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recipe_tune/jsonl.hpp"

namespace recipe_tune::lora {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Frozen base map y = W x, W is d_out x d_in.
struct LinearLayer {
    Matrix weight;

    Eigen::Index d_in() const { return weight.cols(); }
    Eigen::Index d_out() const { return weight.rows(); }
    Vector forward(const Vector& x) const;
};

/// Low-rank update (alpha / rank) * B * A with A: rank x d_in, B: d_out x rank.
struct LoraAdapter {
    Matrix a;
    Matrix b;
    int rank = 1;
    double alpha = 1.0;
    std::uint64_t seed = 0;

    Eigen::Index d_in() const { return a.cols(); }
    Eigen::Index d_out() const { return b.rows(); }
    double scale() const { return alpha / static_cast<double>(rank); }
    Matrix delta() const;
    std::size_t parameter_count() const { return static_cast<std::size_t>(a.size() + b.size()); }
};

/// A ~ N(0, (1/rank)^2), B = 0, so a fresh adapter leaves the base map unchanged.
LoraAdapter init_adapter(Eigen::Index d_in, Eigen::Index d_out, int rank, double alpha, std::uint64_t seed);

/// W x + scale * B (A x). The dense update is never formed.
Vector adapted_forward(const LinearLayer& layer, const LoraAdapter& adapter, const Vector& x);

/// Returns W + scale * B A as a new layer. Merging is not idempotent: merging
/// the result again applies the update a second time.
LinearLayer merge_adapter(const LinearLayer& layer, const LoraAdapter& adapter);

struct Example {
    Vector x;
    Vector y;
};

struct LossAndGrads {
    double loss = 0.0;
    Matrix grad_a;
    Matrix grad_b;
};

/// Mean over the batch of 0.5 * |adapted_forward(x) - y|^2, with gradients
/// for A and B only.
LossAndGrads loss_and_grads(const LinearLayer& layer, const LoraAdapter& adapter, std::span<const Example> batch);
double batch_loss(const LinearLayer& layer, const LoraAdapter& adapter, std::span<const Example> batch);

struct ToyTrainConfig {
    double learning_rate = 0.05;
    int steps = 500;
    std::uint64_t seed = 0;
    std::size_t batch_size = 32;
};

struct TrainResult {
    LoraAdapter adapter;
    std::vector<double> loss_history; // steps + 1 entries, full-dataset loss, initial first
};

/// Plain (minibatch) gradient descent on A and B. Batches are drawn from a
/// seeded shuffle; a batch_size >= dataset size means full-batch descent.
/// Throws DivergedLoss as soon as the loss stops being finite.
TrainResult train_toy(const LinearLayer& layer, const LoraAdapter& initial, std::span<const Example> dataset,
                      const ToyTrainConfig& config);

/// Base layer plus examples y = (W + D) x where D has rank `true_rank`.
struct SyntheticTask {
    LinearLayer base;
    Matrix true_delta;
    std::vector<Example> examples;
};

SyntheticTask make_low_rank_task(Eigen::Index d_in, Eigen::Index d_out, int true_rank, std::size_t n_examples,
                                 std::uint64_t seed);

/// rank * (d_in + d_out) < d_in * d_out
bool is_parameter_efficient(Eigen::Index d_in, Eigen::Index d_out, int rank);

enum class AdapterLayout { Shared, PerModality };

AdapterLayout parse_layout(const std::string& name);

/// Shared: one slot named "shared". PerModality: slots "image", "video",
/// "text", seeded seed, seed + 1, seed + 2.
std::map<std::string, LoraAdapter> make_adapter_slots(AdapterLayout layout, Eigen::Index d_in, Eigen::Index d_out,
                                                      int rank, double alpha, std::uint64_t seed);

// Checkpoint: {d_in, d_out, r, alpha, A, B, seed}, matrices flattened row-major.
ordered_json to_json(const LoraAdapter& adapter);
LoraAdapter adapter_from_json(const ordered_json& j);
void save_adapter(const std::filesystem::path& path, const LoraAdapter& adapter);
LoraAdapter load_adapter(const std::filesystem::path& path);

} // namespace recipe_tune::lora
