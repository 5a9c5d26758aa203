// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "viz/adapter/fit.hpp"
#include "viz/adapter/lora.hpp"
#include "viz/adapter/matrix.hpp"

namespace viz::model {

using adapter::LoraAdapter;
using adapter::Matrix;
using adapter::Vector;

// Toy multilayer base model: tanh between layers, identity after the last.
// Layer l maps dims[l] -> dims[l + 1].
class BaseModel {
public:
    const std::string& model_id() const noexcept { return model_id_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
    std::size_t layer_count() const noexcept { return layers_.size(); }
    const Matrix& layer(std::size_t l) const { return layers_.at(l); }
    std::size_t input_dim() const noexcept { return dims_.front(); }
    std::size_t output_dim() const noexcept { return dims_.back(); }

    bool operator==(const BaseModel&) const = default;

private:
    friend BaseModel generate_base_model(std::string model_id, std::uint64_t seed, std::vector<std::size_t> dims);

    std::string model_id_;
    std::uint64_t seed_ = 0;
    std::vector<std::size_t> dims_;
    std::vector<Matrix> layers_;
};

// Weights are drawn layer-major, row-major from one xoshiro256** stream:
// N(0, 1) / sqrt(d_in). Throws invalid-model on fewer than two dims or a zero dim.
BaseModel generate_base_model(std::string model_id, std::uint64_t seed, std::vector<std::size_t> dims);

// One adapter list per layer; missing trailing entries mean "no adapters".
using LayerStacks = std::vector<std::vector<LoraAdapter>>;

// Groups adapters by target layer. Throws invalid-stack if a target is out of range.
LayerStacks group_by_layer(const BaseModel& model, std::span<const LoraAdapter> adapters);

Vector forward(const BaseModel& model, const LayerStacks& stacks, std::span<const double> x);

// Activation entering `layer` (h_layer) for a base-only forward pass.
Vector layer_input(const BaseModel& model, std::size_t layer, std::span<const double> x);

adapter::FitResult fit_adapter(const BaseModel& model, std::size_t layer,
                               std::span<const adapter::TrainingPair> data, std::size_t rank, double alpha,
                               const adapter::FitConfig& cfg, std::string adapter_id = "fitted");

// Model bundle: manifest document plus little-endian f64 payload, layer-major.
struct ModelBundle {
    std::string manifest;  // JSON text
    std::vector<std::uint8_t> payload;
};

ModelBundle save_model(const BaseModel& model);
// Verifies the payload hash and that weights match (seed, dims). Throws invalid-model.
BaseModel load_model(const ModelBundle& bundle);

void write_model(const BaseModel& model, const std::filesystem::path& manifest_path);
BaseModel read_model(const std::filesystem::path& manifest_path);

}  // namespace viz::model
