// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "viz/adapter/codebook.hpp"
#include "viz/adapter/matrix.hpp"

namespace viz::adapter {

inline constexpr std::size_t kDefaultBlockSize = 64;
inline constexpr std::size_t kDefaultChunkSize = 256;
inline constexpr int kDqLevels = 127;

// Second-level quantization of the per-block absmax scales.
struct DQScales {
    std::size_t chunk_size = kDefaultChunkSize;
    std::vector<std::int8_t> codes;   // one per first-level scale, in [-127, 127]
    std::vector<float> chunk_absmax;  // max |s - global_mean| per chunk, rounded toward +inf
    double global_mean = 0.0;

    bool operator==(const DQScales&) const = default;
};

DQScales double_quantize_scales(std::span<const float> scales, std::size_t chunk_size = kDefaultChunkSize);

// s = global_mean + chunk_absmax * code / 127, floored at 0.
std::vector<double> dequantize_scales(const DQScales& dq);

// Blockwise absmax NormalFloat tensor. Blocks are contiguous runs of block_size
// elements in row-major order; the last block may be short.
class QuantizedTensor {
public:
    struct Parts {
        std::size_t rows = 0;
        std::size_t cols = 0;
        std::size_t block_size = kDefaultBlockSize;
        int codebook_bits = 4;
        std::vector<std::uint8_t> packed_codes;
        std::vector<float> scales;        // plain form
        std::optional<DQScales> dq;       // double-quantized form; excludes `scales`
    };

    // Validates counts; throws corrupt-tensor on any inconsistency.
    static QuantizedTensor from_parts(Parts parts);

    std::size_t rows() const noexcept { return parts_.rows; }
    std::size_t cols() const noexcept { return parts_.cols; }
    std::size_t element_count() const noexcept { return parts_.rows * parts_.cols; }
    std::size_t block_size() const noexcept { return parts_.block_size; }
    std::size_t block_count() const noexcept;
    int codebook_bits() const noexcept { return parts_.codebook_bits; }
    bool double_quantized() const noexcept { return parts_.dq.has_value(); }

    std::uint8_t code(std::size_t i) const noexcept;
    std::span<const std::uint8_t> packed_codes() const noexcept { return parts_.packed_codes; }
    std::span<const float> plain_scales() const noexcept { return parts_.scales; }
    const std::optional<DQScales>& dq_scales() const noexcept { return parts_.dq; }

    // First-level scales as used by dequantize (reconstructed when double-quantized).
    std::vector<double> effective_scales() const;

    bool operator==(const QuantizedTensor& other) const { return parts_equal(other); }

private:
    explicit QuantizedTensor(Parts parts) : parts_(std::move(parts)) {}
    bool parts_equal(const QuantizedTensor& other) const;

    Parts parts_;
};

// Bytes needed to hold `count` codes of the given width. 4-bit codes pack two per
// byte (low nibble first); every other width takes one byte per code.
std::size_t packed_code_bytes(std::size_t count, int bits) noexcept;

QuantizedTensor quantize_blockwise(const Matrix& m, std::size_t block_size, const Codebook& cb, bool use_dq,
                                   std::size_t chunk_size = kDefaultChunkSize);

Matrix dequantize(const QuantizedTensor& q, const Codebook& cb);

double memory_footprint_bits_per_param(int bits, std::size_t block_size, bool use_dq,
                                       std::size_t chunk_size = kDefaultChunkSize);

// Little-endian payload: packed codes, then either float32 scales or
// (int8 DQ codes, float32 chunk absmax). Shape, block/chunk sizes and the DQ
// global mean travel in the enclosing manifest.
std::vector<std::uint8_t> serialize_payload(const QuantizedTensor& q);

struct PayloadHeader {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t block_size = kDefaultBlockSize;
    int codebook_bits = 4;
    bool double_quantized = false;
    std::size_t chunk_size = kDefaultChunkSize;
    double global_mean = 0.0;
};

std::size_t payload_size(const PayloadHeader& header) noexcept;

// Throws corrupt-tensor when the byte count does not match the header.
QuantizedTensor parse_payload(std::span<const std::uint8_t> bytes, const PayloadHeader& header);

PayloadHeader header_of(const QuantizedTensor& q) noexcept;

}  // namespace viz::adapter
