// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/lora.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "recipe_tune/error.hpp"

namespace recipe_tune::lora {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_shapes(const LinearLayer& layer, const LoraAdapter& adapter) {
    if (adapter.a.rows() != adapter.rank || adapter.b.cols() != adapter.rank || adapter.a.cols() != layer.d_in() ||
        adapter.b.rows() != layer.d_out()) {
        throw Error(ErrorCode::ShapeMismatch, "adapter A " + shape(adapter.a) + ", B " + shape(adapter.b) +
                                                  ", rank " + std::to_string(adapter.rank) + " vs layer " +
                                                  shape(layer.weight));
    }
}

void check_input(const LinearLayer& layer, const Vector& x) {
    if (x.size() != layer.d_in()) {
        throw Error(ErrorCode::ShapeMismatch,
                    "input has " + std::to_string(x.size()) + " entries, layer expects " + std::to_string(layer.d_in()));
    }
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

} // namespace

Vector LinearLayer::forward(const Vector& x) const {
    check_input(*this, x);
    return weight * x;
}

Matrix LoraAdapter::delta() const {
    return scale() * (b * a);
}

LoraAdapter init_adapter(Eigen::Index d_in, Eigen::Index d_out, int rank, double alpha, std::uint64_t seed) {
    if (d_in <= 0 || d_out <= 0) throw Error(ErrorCode::InvalidArgument, "layer dimensions must be positive");
    if (rank <= 0) throw Error(ErrorCode::InvalidArgument, "rank must be positive");
    if (rank > std::min(d_in, d_out)) {
        throw Error(ErrorCode::RankTooLarge, "rank " + std::to_string(rank) + " exceeds min(d_in, d_out) = " +
                                                 std::to_string(std::min(d_in, d_out)));
    }
    if (!(alpha > 0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");

    std::mt19937_64 rng(seed);
    LoraAdapter adapter;
    adapter.a = gaussian(rank, d_in, 1.0 / rank, rng);
    adapter.b = Matrix::Zero(d_out, rank);
    adapter.rank = rank;
    adapter.alpha = alpha;
    adapter.seed = seed;
    return adapter;
}

Vector adapted_forward(const LinearLayer& layer, const LoraAdapter& adapter, const Vector& x) {
    check_shapes(layer, adapter);
    check_input(layer, x);
    Vector projected = adapter.a * x;
    return layer.weight * x + adapter.scale() * (adapter.b * projected);
}

LinearLayer merge_adapter(const LinearLayer& layer, const LoraAdapter& adapter) {
    check_shapes(layer, adapter);
    return LinearLayer{layer.weight + adapter.delta()};
}

LossAndGrads loss_and_grads(const LinearLayer& layer, const LoraAdapter& adapter, std::span<const Example> batch) {
    if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "loss needs at least one example");
    check_shapes(layer, adapter);

    const double s = adapter.scale();
    LossAndGrads out{0.0, Matrix::Zero(adapter.a.rows(), adapter.a.cols()),
                     Matrix::Zero(adapter.b.rows(), adapter.b.cols())};

    for (const auto& ex : batch) {
        check_input(layer, ex.x);
        if (ex.y.size() != layer.d_out()) {
            throw Error(ErrorCode::ShapeMismatch, "target has " + std::to_string(ex.y.size()) +
                                                      " entries, layer produces " + std::to_string(layer.d_out()));
        }
        Vector ax = adapter.a * ex.x;                          // r
        Vector residual = layer.weight * ex.x + s * (adapter.b * ax) - ex.y; // d_out
        out.loss += 0.5 * residual.squaredNorm();
        // d/dB: s * e (Ax)^T, d/dA: s * B^T e x^T
        out.grad_b.noalias() += s * residual * ax.transpose();
        out.grad_a.noalias() += s * (adapter.b.transpose() * residual) * ex.x.transpose();
    }

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv_n;
    out.grad_a *= inv_n;
    out.grad_b *= inv_n;
    return out;
}

double batch_loss(const LinearLayer& layer, const LoraAdapter& adapter, std::span<const Example> batch) {
    if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "loss needs at least one example");
    double total = 0.0;
    for (const auto& ex : batch) {
        if (ex.y.size() != layer.d_out()) throw Error(ErrorCode::ShapeMismatch, "target size mismatch");
        total += 0.5 * (adapted_forward(layer, adapter, ex.x) - ex.y).squaredNorm();
    }
    return total / static_cast<double>(batch.size());
}

TrainResult train_toy(const LinearLayer& layer, const LoraAdapter& initial, std::span<const Example> dataset,
                      const ToyTrainConfig& config) {
    if (dataset.empty()) throw Error(ErrorCode::EmptyBatch, "training set is empty");
    if (config.steps <= 0) throw Error(ErrorCode::InvalidArgument, "steps must be positive");
    if (config.batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch_size must be positive");
    if (!(config.learning_rate >= 0) || !std::isfinite(config.learning_rate)) {
        throw Error(ErrorCode::InvalidArgument, "learning_rate must be a finite non-negative number");
    }

    TrainResult result{initial, {}};
    result.loss_history.reserve(static_cast<std::size_t>(config.steps) + 1);

    auto record = [&](int step) {
        double loss = batch_loss(layer, result.adapter, dataset);
        if (!std::isfinite(loss)) {
            throw Error(ErrorCode::DivergedLoss, "loss became non-finite at step " + std::to_string(step));
        }
        result.loss_history.push_back(loss);
    };
    record(0);

    const bool full_batch = config.batch_size >= dataset.size();
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(config.seed);
    std::size_t cursor = dataset.size();
    std::vector<Example> batch;

    for (int step = 1; step <= config.steps; ++step) {
        LossAndGrads g;
        if (full_batch) {
            g = loss_and_grads(layer, result.adapter, dataset);
        } else {
            batch.clear();
            while (batch.size() < config.batch_size) {
                if (cursor == order.size()) {
                    std::shuffle(order.begin(), order.end(), rng);
                    cursor = 0;
                }
                batch.push_back(dataset[order[cursor++]]);
            }
            g = loss_and_grads(layer, result.adapter, batch);
        }
        result.adapter.a -= config.learning_rate * g.grad_a;
        result.adapter.b -= config.learning_rate * g.grad_b;
        record(step);
    }
    return result;
}

SyntheticTask make_low_rank_task(Eigen::Index d_in, Eigen::Index d_out, int true_rank, std::size_t n_examples,
                                 std::uint64_t seed) {
    if (d_in <= 0 || d_out <= 0 || true_rank <= 0 || true_rank > std::min(d_in, d_out) || n_examples == 0) {
        throw Error(ErrorCode::InvalidArgument, "bad synthetic task dimensions");
    }
    std::mt19937_64 rng(seed);
    SyntheticTask task;
    task.base.weight = gaussian(d_out, d_in, 1.0 / std::sqrt(static_cast<double>(d_in)), rng);
    Matrix u = gaussian(d_out, true_rank, 1.0, rng);
    Matrix v = gaussian(true_rank, d_in, 1.0 / std::sqrt(static_cast<double>(d_in)), rng);
    task.true_delta = u * v;

    const Matrix target = task.base.weight + task.true_delta;
    task.examples.reserve(n_examples);
    for (std::size_t i = 0; i < n_examples; ++i) {
        Vector x = gaussian(d_in, 1, 1.0, rng);
        task.examples.push_back({x, target * x});
    }
    return task;
}

bool is_parameter_efficient(Eigen::Index d_in, Eigen::Index d_out, int rank) {
    return static_cast<long long>(rank) * (d_in + d_out) < static_cast<long long>(d_in) * d_out;
}

AdapterLayout parse_layout(const std::string& name) {
    if (name == "shared") return AdapterLayout::Shared;
    if (name == "per_modality") return AdapterLayout::PerModality;
    throw Error(ErrorCode::ConfigInvalid, "adapter layout must be \"shared\" or \"per_modality\", got \"" + name + "\"");
}

std::map<std::string, LoraAdapter> make_adapter_slots(AdapterLayout layout, Eigen::Index d_in, Eigen::Index d_out,
                                                      int rank, double alpha, std::uint64_t seed) {
    std::map<std::string, LoraAdapter> slots;
    if (layout == AdapterLayout::Shared) {
        slots.emplace("shared", init_adapter(d_in, d_out, rank, alpha, seed));
        return slots;
    }
    std::uint64_t offset = 0;
    for (const char* name : {"image", "video", "text"}) {
        slots.emplace(name, init_adapter(d_in, d_out, rank, alpha, seed + offset++));
    }
    return slots;
}

// --- checkpoints ------------------------------------------------------------

namespace {

ordered_json flatten(const Matrix& m) {
    auto arr = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    return arr;
}

Matrix unflatten(const ordered_json& arr, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols) {
        throw Error(ErrorCode::ShapeMismatch, std::string("checkpoint matrix ") + name + " should hold " +
                                                  std::to_string(rows * cols) + " numbers");
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = arr[static_cast<std::size_t>(i * cols + j)].get<double>();
    return m;
}

} // namespace

ordered_json to_json(const LoraAdapter& adapter) {
    ordered_json j;
    j["d_in"] = adapter.d_in();
    j["d_out"] = adapter.d_out();
    j["r"] = adapter.rank;
    j["alpha"] = adapter.alpha;
    j["A"] = flatten(adapter.a);
    j["B"] = flatten(adapter.b);
    j["seed"] = adapter.seed;
    return j;
}

LoraAdapter adapter_from_json(const ordered_json& j) {
    try {
        auto d_in = j.at("d_in").get<Eigen::Index>();
        auto d_out = j.at("d_out").get<Eigen::Index>();
        LoraAdapter adapter;
        adapter.rank = j.at("r").get<int>();
        adapter.alpha = j.at("alpha").get<double>();
        adapter.seed = j.at("seed").get<std::uint64_t>();
        if (d_in <= 0 || d_out <= 0 || adapter.rank <= 0) {
            throw Error(ErrorCode::MalformedDocument, "checkpoint dimensions must be positive");
        }
        adapter.a = unflatten(j.at("A"), adapter.rank, d_in, "A");
        adapter.b = unflatten(j.at("B"), d_out, adapter.rank, "B");
        return adapter;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, std::string("adapter checkpoint: ") + e.what());
    }
}

void save_adapter(const std::filesystem::path& path, const LoraAdapter& adapter) {
    write_text_file(path, to_json(adapter).dump() + "\n");
}

LoraAdapter load_adapter(const std::filesystem::path& path) {
    auto text = read_text_file(path);
    auto j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::MalformedDocument, path.string() + " is not valid JSON");
    return adapter_from_json(j);
}

} // namespace recipe_tune::lora
