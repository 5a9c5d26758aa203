// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "viz/adapter/matrix.hpp"
#include "viz/adapter/quantize.hpp"

namespace viz::adapter {

// Rank-r update delta = (alpha / r) * B * A for one target layer.
// A is (r x d_in), B is (d_out x r).
class LoraAdapter {
public:
    struct Quantized {
        QuantizedTensor a;
        QuantizedTensor b;
    };

    // Throws invalid-adapter when the factor shapes or alpha are inconsistent.
    LoraAdapter(std::string adapter_id, std::size_t target_layer, double alpha, Matrix a, Matrix b);

    const std::string& adapter_id() const noexcept { return adapter_id_; }
    std::size_t target_layer() const noexcept { return target_layer_; }
    std::size_t rank() const noexcept { return a_.rows(); }
    double alpha() const noexcept { return alpha_; }
    double scaling() const noexcept { return alpha_ / static_cast<double>(rank()); }
    std::size_t d_in() const noexcept { return a_.cols(); }
    std::size_t d_out() const noexcept { return b_.rows(); }
    const Matrix& a() const noexcept { return a_; }
    const Matrix& b() const noexcept { return b_; }
    const std::optional<Quantized>& quantized() const noexcept { return quantized_; }

    // Copy whose factors are replaced by their NormalFloat round-trip, keeping the
    // coded forms alongside.
    LoraAdapter quantize(const Codebook& cb, std::size_t block_size = kDefaultBlockSize, bool use_dq = true,
                         std::size_t chunk_size = kDefaultChunkSize) const;

    // Rebuilds an adapter from coded factors.
    static LoraAdapter from_quantized(std::string adapter_id, std::size_t target_layer, double alpha,
                                      Quantized q, const Codebook& cb);

private:
    std::string adapter_id_;
    std::size_t target_layer_ = 0;
    double alpha_ = 1.0;
    Matrix a_;
    Matrix b_;
    std::optional<Quantized> quantized_;
};

Matrix lora_delta(const LoraAdapter& a);

// Indices of `adapters` sorted by adapter_id. Throws invalid-stack on duplicate ids.
std::vector<std::size_t> canonical_order(std::span<const LoraAdapter> adapters);

// y = base*x + sum_i (alpha_i / r_i) * B_i * (A_i * x), summed in canonical order
// without forming merged weights. Throws invalid-stack on shape mismatch.
Vector apply_stack(const Matrix& base, std::span<const LoraAdapter> adapters, std::span<const double> x);

// base + sum_i lora_delta(a_i) in canonical order.
Matrix merge_adapters(const Matrix& base, std::span<const LoraAdapter> adapters);

}  // namespace viz::adapter
