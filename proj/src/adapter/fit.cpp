// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/adapter/fit.hpp"

#include <algorithm>
#include <cmath>

#include "viz/error.hpp"
#include "viz/prng.hpp"

namespace viz::adapter {

namespace {

void check_data(const Matrix& base, std::span<const TrainingPair> data) {
    if (data.empty()) throw Error(Errc::invalid_argument, "training set must not be empty");
    for (const auto& pair : data) {
        if (pair.input.size() != base.cols() || pair.target.size() != base.rows()) {
            throw Error(Errc::invalid_shape, "training pair does not match layer shape");
        }
    }
}

}  // namespace

double mse_loss(const Matrix& base, const LoraAdapter& adapter, std::span<const TrainingPair> data) {
    check_data(base, data);
    const std::span<const LoraAdapter> stack(&adapter, 1);
    double total = 0.0;
    for (const auto& pair : data) {
        const Vector y = apply_stack(base, stack, pair.input);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double e = y[i] - pair.target[i];
            total += e * e;
        }
    }
    return total / static_cast<double>(data.size() * base.rows());
}

Gradients mse_gradient(const Matrix& base, const LoraAdapter& adapter, std::span<const TrainingPair> data) {
    check_data(base, data);
    const std::span<const LoraAdapter> stack(&adapter, 1);
    const std::size_t r = adapter.rank();
    const double s = adapter.scaling();
    const double norm = 2.0 / static_cast<double>(data.size() * base.rows());

    Gradients g{Matrix(r, adapter.d_in()), Matrix(adapter.d_out(), r)};
    for (const auto& pair : data) {
        const Vector down = matvec(adapter.a(), pair.input);
        const Vector y = apply_stack(base, stack, pair.input);
        Vector err(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) err[i] = norm * (y[i] - pair.target[i]);

        // dL/dB = s * err * down^T ; dL/dA = s * (B^T err) * x^T
        for (std::size_t i = 0; i < adapter.d_out(); ++i)
            for (std::size_t k = 0; k < r; ++k) g.b(i, k) += s * err[i] * down[k];
        for (std::size_t k = 0; k < r; ++k) {
            double back = 0.0;
            for (std::size_t i = 0; i < adapter.d_out(); ++i) back += adapter.b()(i, k) * err[i];
            for (std::size_t j = 0; j < adapter.d_in(); ++j) g.a(k, j) += s * back * pair.input[j];
        }
    }
    return g;
}

FitResult fit_adapter(const Matrix& base, std::size_t target_layer, std::span<const TrainingPair> data,
                      std::size_t rank, double alpha, const FitConfig& cfg, std::string adapter_id) {
    if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
        throw Error(Errc::invalid_argument, "learning_rate must be > 0");
    if (cfg.epochs < 1) throw Error(Errc::invalid_argument, "epochs must be >= 1");
    if (rank < 1 || rank > std::min(base.rows(), base.cols()))
        throw Error(Errc::invalid_argument, "rank must lie in [1, min(d_in, d_out)]");
    check_data(base, data);

    Xoshiro256 rng(cfg.seed);
    Matrix a(rank, base.cols());
    for (double& v : a.data()) v = 0.01 * rng.normal();
    Matrix b(base.rows(), rank);

    LoraAdapter current(adapter_id, target_layer, alpha, a, b);
    std::vector<double> trace;
    trace.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const Gradients g = mse_gradient(base, current, data);
        auto ad = a.data();
        auto bd = b.data();
        const auto ga = g.a.data();
        const auto gb = g.b.data();
        for (std::size_t i = 0; i < ad.size(); ++i) ad[i] -= cfg.learning_rate * ga[i];
        for (std::size_t i = 0; i < bd.size(); ++i) bd[i] -= cfg.learning_rate * gb[i];

        const bool finite = std::all_of(ad.begin(), ad.end(), [](double v) { return std::isfinite(v); }) &&
                            std::all_of(bd.begin(), bd.end(), [](double v) { return std::isfinite(v); });
        if (!finite) throw Error(Errc::fit_diverged, "parameters became non-finite at epoch " + std::to_string(epoch));
        current = LoraAdapter(adapter_id, target_layer, alpha, a, b);
        const double loss = mse_loss(base, current, data);
        if (!std::isfinite(loss)) throw Error(Errc::fit_diverged, "loss became non-finite at epoch " + std::to_string(epoch));
        trace.push_back(loss);
    }
    return FitResult{std::move(current), std::move(trace)};
}

}  // namespace viz::adapter
