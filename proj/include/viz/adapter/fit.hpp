// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "viz/adapter/lora.hpp"

namespace viz::adapter {

struct FitConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
};

struct TrainingPair {
    Vector input;
    Vector target;
};

struct Gradients {
    Matrix a;
    Matrix b;
};

struct FitResult {
    LoraAdapter adapter;
    std::vector<double> loss_trace;  // loss after each epoch's update
};

// Mean over pairs and output components of (apply_stack(base, {adapter}, x) - y)^2.
double mse_loss(const Matrix& base, const LoraAdapter& adapter, std::span<const TrainingPair> data);

// Analytic gradient of mse_loss with respect to A and B.
Gradients mse_gradient(const Matrix& base, const LoraAdapter& adapter, std::span<const TrainingPair> data);

// Full-batch gradient descent from A ~ 0.01 * N(0, 1) (seeded), B = 0.
// Throws fit-diverged if the loss stops being finite.
FitResult fit_adapter(const Matrix& base, std::size_t target_layer, std::span<const TrainingPair> data,
                      std::size_t rank, double alpha, const FitConfig& cfg, std::string adapter_id = "fitted");

}  // namespace viz::adapter
