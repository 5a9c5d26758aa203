// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/adapter/lora.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "viz/error.hpp"

namespace viz::adapter {

LoraAdapter::LoraAdapter(std::string adapter_id, std::size_t target_layer, double alpha, Matrix a, Matrix b)
    : adapter_id_(std::move(adapter_id)),
      target_layer_(target_layer),
      alpha_(alpha),
      a_(std::move(a)),
      b_(std::move(b)) {
    if (adapter_id_.empty()) throw Error(Errc::invalid_adapter, "adapter_id must not be empty");
    if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw Error(Errc::invalid_adapter, "alpha must be > 0");
    if (a_.rows() == 0) throw Error(Errc::invalid_adapter, "rank must be >= 1");
    if (a_.cols() == 0 || b_.rows() == 0) throw Error(Errc::invalid_adapter, "adapter dimensions must be >= 1");
    if (b_.cols() != a_.rows()) {
        throw Error(Errc::invalid_adapter, "B has " + std::to_string(b_.cols()) + " columns but A has " +
                                               std::to_string(a_.rows()) + " rows");
    }
}

LoraAdapter LoraAdapter::quantize(const Codebook& cb, std::size_t block_size, bool use_dq,
                                  std::size_t chunk_size) const {
    Quantized q{quantize_blockwise(a_, block_size, cb, use_dq, chunk_size),
                quantize_blockwise(b_, block_size, cb, use_dq, chunk_size)};
    return from_quantized(adapter_id_, target_layer_, alpha_, std::move(q), cb);
}

LoraAdapter LoraAdapter::from_quantized(std::string adapter_id, std::size_t target_layer, double alpha,
                                        Quantized q, const Codebook& cb) {
    LoraAdapter out(std::move(adapter_id), target_layer, alpha, dequantize(q.a, cb), dequantize(q.b, cb));
    out.quantized_ = std::move(q);
    return out;
}

Matrix lora_delta(const LoraAdapter& a) {
    Matrix delta = matmul(a.b(), a.a());
    const double s = a.scaling();
    for (double& v : delta.data()) v *= s;
    return delta;
}

std::vector<std::size_t> canonical_order(std::span<const LoraAdapter> adapters) {
    std::vector<std::size_t> order(adapters.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return adapters[l].adapter_id() < adapters[r].adapter_id(); });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (adapters[order[i]].adapter_id() == adapters[order[i - 1]].adapter_id()) {
            throw Error(Errc::invalid_stack, "adapter " + adapters[order[i]].adapter_id() + " appears twice");
        }
    }
    return order;
}

namespace {

void check_stack_shapes(const Matrix& base, std::span<const LoraAdapter> adapters) {
    for (const auto& a : adapters) {
        if (a.d_in() != base.cols() || a.d_out() != base.rows()) {
            throw Error(Errc::invalid_stack, "adapter " + a.adapter_id() + " is " + std::to_string(a.d_out()) +
                                                 "x" + std::to_string(a.d_in()) + " but layer is " +
                                                 std::to_string(base.rows()) + "x" + std::to_string(base.cols()));
        }
    }
}

}  // namespace

Vector apply_stack(const Matrix& base, std::span<const LoraAdapter> adapters, std::span<const double> x) {
    check_stack_shapes(base, adapters);
    if (x.size() != base.cols()) {
        throw Error(Errc::invalid_shape, "input length " + std::to_string(x.size()) + " does not match layer width " +
                                             std::to_string(base.cols()));
    }
    Vector y = matvec(base, x);
    for (std::size_t idx : canonical_order(adapters)) {
        const auto& adapter = adapters[idx];
        const Vector down = matvec(adapter.a(), x);
        const Vector up = matvec(adapter.b(), down);
        const double s = adapter.scaling();
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * up[i];
    }
    return y;
}

Matrix merge_adapters(const Matrix& base, std::span<const LoraAdapter> adapters) {
    check_stack_shapes(base, adapters);
    Matrix merged = base;
    for (std::size_t idx : canonical_order(adapters)) {
        const Matrix delta = lora_delta(adapters[idx]);
        auto out = merged.data();
        const auto d = delta.data();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
    }
    return merged;
}

}  // namespace viz::adapter
