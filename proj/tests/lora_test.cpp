// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "recipe_tune/error.hpp"
#include "recipe_tune/lora.hpp"
#include "test_support.hpp"

using namespace recipe_tune;
using namespace recipe_tune::lora;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

// Dense oracle: (W + (alpha/r) B A) x, with every entry summed by hand.
Vector dense_forward(const Matrix& w, const Matrix& a, const Matrix& b, double scale, const Vector& x) {
    Vector y(w.rows());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        double acc = 0;
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            double delta = 0;
            for (Eigen::Index k = 0; k < a.rows(); ++k) delta += b(i, k) * a(k, j);
            acc += (w(i, j) + scale * delta) * x(j);
        }
        y(i) = acc;
    }
    return y;
}

double loss_of(const LinearLayer& layer, const LoraAdapter& adapter, const std::vector<Example>& batch) {
    return batch_loss(layer, adapter, batch);
}

} // namespace

TEST_CASE("hand-worked forward example") {
    LinearLayer layer{Matrix::Identity(2, 2)};
    LoraAdapter adapter;
    adapter.a = Matrix{{1, 2}};
    adapter.b = Matrix{{3}, {4}};
    adapter.rank = 1;
    adapter.alpha = 1;
    Vector x{{1, 1}};
    Vector y = adapted_forward(layer, adapter, x);
    CHECK(y(0) == 10.0);
    CHECK(y(1) == 13.0);
    Vector merged = merge_adapter(layer, adapter).forward(x);
    CHECK(merged(0) == 10.0);
    CHECK(merged(1) == 13.0);
}

TEST_CASE("fresh adapters are an exact identity on the base map") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        Eigen::Index d_in = 1 + rng() % 40, d_out = 1 + rng() % 40;
        int r = 1 + static_cast<int>(rng() % std::min<Eigen::Index>(8, std::min(d_in, d_out)));
        LinearLayer layer{random_matrix(d_out, d_in, rng)};
        auto adapter = init_adapter(d_in, d_out, r, 2.0 * r, rng());
        CHECK(adapter.b.isZero(0));
        Vector x = random_matrix(d_in, 1, rng);
        CHECK((adapted_forward(layer, adapter, x).array() == layer.forward(x).array()).all());
    }
}

TEST_CASE("init is seeded and shaped") {
    auto a = init_adapter(6, 5, 3, 4.0, 99);
    auto b = init_adapter(6, 5, 3, 4.0, 99);
    CHECK(a.a == b.a);
    CHECK(a.a.rows() == 3);
    CHECK(a.a.cols() == 6);
    CHECK(a.b.rows() == 5);
    CHECK(a.b.cols() == 3);
    CHECK(a.scale() == doctest::Approx(4.0 / 3.0));
    CHECK(a.parameter_count() == 3u * (6 + 5));
    CHECK_FALSE(init_adapter(6, 5, 3, 4.0, 100).a == a.a);
    CHECK_ERROR_CODE(init_adapter(4, 4, 5, 1.0, 0), ErrorCode::RankTooLarge);
    CHECK_ERROR_CODE(init_adapter(4, 4, 0, 1.0, 0), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(init_adapter(0, 4, 1, 1.0, 0), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(init_adapter(4, 4, 1, 0.0, 0), ErrorCode::InvalidArgument);
}

TEST_CASE("adapted forward matches a dense oracle and the merged layer") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        Eigen::Index d_in = 1 + rng() % 64, d_out = 1 + rng() % 64;
        int r = 1 + static_cast<int>(rng() % std::min<Eigen::Index>(8, std::min(d_in, d_out)));
        LinearLayer layer{random_matrix(d_out, d_in, rng)};
        auto adapter = init_adapter(d_in, d_out, r, 1.0 + static_cast<double>(rng() % 16), rng());
        adapter.b = random_matrix(d_out, r, rng);
        Vector x = random_matrix(d_in, 1, rng);

        Vector fast = adapted_forward(layer, adapter, x);
        Vector oracle = dense_forward(layer.weight, adapter.a, adapter.b, adapter.scale(), x);
        Vector merged = merge_adapter(layer, adapter).forward(x);
        CHECK((fast - oracle).norm() <= 1e-9 * std::max(1.0, oracle.norm()));
        CHECK((merged - fast).norm() <= 1e-9 * std::max(1.0, fast.norm()));
    }
}

TEST_CASE("merge is not idempotent") {
    std::mt19937_64 rng(3);
    LinearLayer layer{random_matrix(4, 4, rng)};
    auto adapter = init_adapter(4, 4, 2, 2.0, 5);
    adapter.b = random_matrix(4, 2, rng);
    auto once = merge_adapter(layer, adapter);
    auto twice = merge_adapter(once, adapter);
    CHECK((twice.weight - layer.weight - 2 * adapter.scale() * adapter.b * adapter.a).norm() < 1e-12);
    CHECK_ERROR_CODE(merge_adapter(LinearLayer{Matrix::Zero(3, 4)}, adapter), ErrorCode::ShapeMismatch);
    CHECK_ERROR_CODE(adapted_forward(layer, adapter, Vector::Zero(3)), ErrorCode::ShapeMismatch);
}

TEST_CASE("analytic gradients match central differences") {
    std::mt19937_64 rng(4);
    const double h = 1e-5;
    for (int t = 0; t < 20; ++t) {
        Eigen::Index d_in = 1 + rng() % 16, d_out = 1 + rng() % 16;
        int r = 1 + static_cast<int>(rng() % std::min<Eigen::Index>(4, std::min(d_in, d_out)));
        LinearLayer layer{random_matrix(d_out, d_in, rng)};
        auto adapter = init_adapter(d_in, d_out, r, 3.0, rng());
        adapter.b = random_matrix(d_out, r, rng);
        std::vector<Example> batch;
        for (int n = 0; n < 5; ++n) batch.push_back({random_matrix(d_in, 1, rng), random_matrix(d_out, 1, rng)});

        auto g = loss_and_grads(layer, adapter, batch);
        CHECK(g.loss == doctest::Approx(loss_of(layer, adapter, batch)).epsilon(1e-12));

        auto check_param = [&](Matrix LoraAdapter::*which, const Matrix& analytic) {
            for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
                for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
                    auto plus = adapter, minus = adapter;
                    (plus.*which)(i, j) += h;
                    (minus.*which)(i, j) -= h;
                    double numeric = (loss_of(layer, plus, batch) - loss_of(layer, minus, batch)) / (2 * h);
                    double denom = std::max({std::abs(numeric), std::abs(analytic(i, j)), 1e-6});
                    CHECK(std::abs(numeric - analytic(i, j)) / denom <= 1e-4);
                }
            }
        };
        check_param(&LoraAdapter::a, g.grad_a);
        check_param(&LoraAdapter::b, g.grad_b);
    }
    CHECK_ERROR_CODE(loss_and_grads(LinearLayer{Matrix::Zero(2, 2)}, init_adapter(2, 2, 1, 1, 0), {}),
                     ErrorCode::EmptyBatch);
}

TEST_CASE("toy training reduces the loss and leaves the base frozen") {
    auto task = make_low_rank_task(16, 16, 1, 256, 11);
    const Matrix w_before = task.base.weight;
    auto adapter = init_adapter(16, 16, 4, 8.0, 3);
    ToyTrainConfig config;
    auto result = train_toy(task.base, adapter, task.examples, config);
    REQUIRE(result.loss_history.size() == static_cast<std::size_t>(config.steps) + 1);
    CHECK(result.loss_history.back() <= 0.1 * result.loss_history.front());
    CHECK((task.base.weight.array() == w_before.array()).all());
    CHECK(adapter.b.isZero(0)); // the input adapter is untouched

    auto again = train_toy(task.base, adapter, task.examples, config);
    CHECK(again.loss_history == result.loss_history);
    CHECK(again.adapter.a == result.adapter.a);
}

TEST_CASE("training detects divergence") {
    auto task = make_low_rank_task(8, 8, 1, 32, 5);
    auto adapter = init_adapter(8, 8, 2, 4.0, 1);
    ToyTrainConfig config{.learning_rate = 1e6, .steps = 200};
    CHECK_ERROR_CODE(train_toy(task.base, adapter, task.examples, config), ErrorCode::DivergedLoss);
}

TEST_CASE("parameter efficiency bound") {
    for (Eigen::Index d_in : {4, 16, 64, 4096}) {
        for (Eigen::Index d_out : {4, 16, 64, 4096}) {
            for (int r : {1, 2, 4, 8, 16, 64}) {
                bool below = static_cast<double>(r) <
                             static_cast<double>(d_in * d_out) / static_cast<double>(d_in + d_out);
                if (below) CHECK(is_parameter_efficient(d_in, d_out, r));
                CHECK(is_parameter_efficient(d_in, d_out, r) ==
                      (r * (d_in + d_out) < d_in * d_out));
            }
        }
    }
}

TEST_CASE("adapter slots") {
    auto per = make_adapter_slots(AdapterLayout::PerModality, 8, 8, 2, 4.0, 10);
    REQUIRE(per.size() == 3);
    CHECK(per.at("image").seed == 10);
    CHECK(per.at("video").seed == 11);
    CHECK(per.at("text").seed == 12);
    CHECK_FALSE(per.at("image").a == per.at("video").a);
    auto shared = make_adapter_slots(AdapterLayout::Shared, 8, 8, 2, 4.0, 10);
    REQUIRE(shared.size() == 1);
    CHECK(shared.count("shared") == 1);
    CHECK(parse_layout("shared") == AdapterLayout::Shared);
    CHECK_ERROR_CODE(parse_layout("tied"), ErrorCode::ConfigInvalid);
}

TEST_CASE("checkpoints round trip exactly") {
    std::mt19937_64 rng(6);
    auto adapter = init_adapter(5, 3, 2, 4.0, 77);
    adapter.b = random_matrix(3, 2, rng);
    testing::TempDir dir;
    save_adapter(dir / "ckpt.json", adapter);
    auto loaded = load_adapter(dir / "ckpt.json");
    CHECK(loaded.a == adapter.a);
    CHECK(loaded.b == adapter.b);
    CHECK(loaded.rank == 2);
    CHECK(loaded.alpha == 4.0);
    CHECK(loaded.seed == 77u);

    auto j = to_json(adapter);
    CHECK(j["A"].size() == 10);
    CHECK(j["A"][1] == adapter.a(0, 1)); // row-major
    j["A"].erase(0);
    CHECK_ERROR_CODE(adapter_from_json(j), ErrorCode::ShapeMismatch);
    j.erase("r");
    CHECK_ERROR_CODE(adapter_from_json(j), ErrorCode::MalformedDocument);
}
