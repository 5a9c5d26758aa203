// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/adapter/quantize.hpp"

#include <algorithm>
#include <bit>
#include <cfenv>
#include <cmath>
#include <limits>
#include <string>

#include "viz/error.hpp"

namespace viz::adapter {

namespace {

std::size_t ceil_div(std::size_t value, std::size_t block) { return (value + block - 1) / block; }

// Smallest float >= v. Scales are stored as binary32 so that |x / s| <= 1 still holds.
float round_up_to_float(double v) {
    if (v > static_cast<double>(std::numeric_limits<float>::max())) {
        throw Error(Errc::invalid_shape, "value magnitude exceeds binary32 scale range");
    }
    float f = static_cast<float>(v);
    if (static_cast<double>(f) < v) f = std::nextafter(f, std::numeric_limits<float>::infinity());
    return f;
}

void put_code(std::vector<std::uint8_t>& packed, std::size_t i, std::uint8_t code, int bits) {
    if (bits == 4) {
        auto& byte = packed[i / 2];
        byte = (i % 2 == 0) ? static_cast<std::uint8_t>((byte & 0xF0) | (code & 0x0F))
                            : static_cast<std::uint8_t>((byte & 0x0F) | ((code & 0x0F) << 4));
    } else {
        packed[i] = code;
    }
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t read_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
    return v;
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(Errc::corrupt_tensor, what); }

}  // namespace

std::size_t packed_code_bytes(std::size_t count, int bits) noexcept {
    return bits == 4 ? ceil_div(count, 2) : count;
}

DQScales double_quantize_scales(std::span<const float> scales, std::size_t chunk_size) {
    if (chunk_size == 0) throw Error(Errc::invalid_argument, "chunk_size must be >= 1");
    DQScales dq;
    dq.chunk_size = chunk_size;
    if (scales.empty()) return dq;

    double sum = 0.0;
    for (float s : scales) {
        if (!(s >= 0.0f)) throw Error(Errc::invalid_argument, "scales must be non-negative");
        sum += static_cast<double>(s);
    }
    dq.global_mean = sum / static_cast<double>(scales.size());
    dq.codes.resize(scales.size(), 0);

    // Rounding mode may have been changed by the caller; codes must be half-even.
    const int saved_mode = std::fegetround();
    std::fesetround(FE_TONEAREST);
    for (std::size_t begin = 0; begin < scales.size(); begin += chunk_size) {
        const std::size_t end = std::min(scales.size(), begin + chunk_size);
        double absmax = 0.0;
        for (std::size_t i = begin; i < end; ++i)
            absmax = std::max(absmax, std::fabs(static_cast<double>(scales[i]) - dq.global_mean));
        const float stored = round_up_to_float(absmax);
        dq.chunk_absmax.push_back(stored);
        if (stored == 0.0f) continue;
        for (std::size_t i = begin; i < end; ++i) {
            const double ratio = (static_cast<double>(scales[i]) - dq.global_mean) / static_cast<double>(stored);
            dq.codes[i] = static_cast<std::int8_t>(std::nearbyint(kDqLevels * ratio));
        }
    }
    std::fesetround(saved_mode);
    return dq;
}

std::vector<double> dequantize_scales(const DQScales& dq) {
    std::vector<double> out(dq.codes.size());
    for (std::size_t i = 0; i < dq.codes.size(); ++i) {
        const double a = static_cast<double>(dq.chunk_absmax[i / dq.chunk_size]);
        const double s = dq.global_mean + a * static_cast<double>(dq.codes[i]) / kDqLevels;
        out[i] = std::max(0.0, s);
    }
    return out;
}

QuantizedTensor QuantizedTensor::from_parts(Parts parts) {
    const std::size_t n = parts.rows * parts.cols;
    if (n == 0) corrupt("quantized tensor has no elements");
    if (parts.block_size == 0) corrupt("block_size must be >= 1");
    if (parts.codebook_bits < kMinCodebookBits || parts.codebook_bits > kMaxCodebookBits)
        corrupt("codebook bit width out of range");
    if (parts.packed_codes.size() != packed_code_bytes(n, parts.codebook_bits))
        corrupt("packed code length does not match element count");
    const std::size_t blocks = ceil_div(n, parts.block_size);
    if (parts.dq) {
        if (!parts.scales.empty()) corrupt("tensor carries both plain and double-quantized scales");
        const auto& dq = *parts.dq;
        if (dq.chunk_size == 0) corrupt("chunk_size must be >= 1");
        if (dq.codes.size() != blocks) corrupt("DQ code count does not match block count");
        if (dq.chunk_absmax.size() != ceil_div(blocks, dq.chunk_size)) corrupt("DQ chunk count mismatch");
        if (std::any_of(dq.codes.begin(), dq.codes.end(), [](std::int8_t c) { return c < -kDqLevels; }))
            corrupt("DQ code outside [-127, 127]");
        if (std::any_of(dq.chunk_absmax.begin(), dq.chunk_absmax.end(),
                        [](float a) { return !(a >= 0.0f) || !std::isfinite(a); }))
            corrupt("DQ chunk absmax must be finite and non-negative");
        if (!std::isfinite(dq.global_mean)) corrupt("DQ global mean must be finite");
    } else {
        if (parts.scales.size() != blocks) corrupt("scale count does not match block count");
        if (std::any_of(parts.scales.begin(), parts.scales.end(),
                        [](float s) { return !(s >= 0.0f) || !std::isfinite(s); }))
            corrupt("block scales must be finite and non-negative");
    }
    return QuantizedTensor(std::move(parts));
}

std::size_t QuantizedTensor::block_count() const noexcept { return ceil_div(element_count(), parts_.block_size); }

std::uint8_t QuantizedTensor::code(std::size_t i) const noexcept {
    if (parts_.codebook_bits == 4) {
        const std::uint8_t byte = parts_.packed_codes[i / 2];
        return (i % 2 == 0) ? (byte & 0x0F) : (byte >> 4);
    }
    return parts_.packed_codes[i];
}

std::vector<double> QuantizedTensor::effective_scales() const {
    if (parts_.dq) return dequantize_scales(*parts_.dq);
    return {parts_.scales.begin(), parts_.scales.end()};
}

bool QuantizedTensor::parts_equal(const QuantizedTensor& other) const {
    const auto& a = parts_;
    const auto& b = other.parts_;
    return a.rows == b.rows && a.cols == b.cols && a.block_size == b.block_size &&
           a.codebook_bits == b.codebook_bits && a.packed_codes == b.packed_codes && a.scales == b.scales &&
           a.dq == b.dq;
}

QuantizedTensor quantize_blockwise(const Matrix& m, std::size_t block_size, const Codebook& cb, bool use_dq,
                                   std::size_t chunk_size) {
    if (m.empty()) throw Error(Errc::invalid_shape, "cannot quantize an empty matrix");
    if (block_size == 0) throw Error(Errc::invalid_argument, "block_size must be >= 1");

    const auto data = m.data();
    const std::size_t n = data.size();
    QuantizedTensor::Parts parts;
    parts.rows = m.rows();
    parts.cols = m.cols();
    parts.block_size = block_size;
    parts.codebook_bits = cb.bits();
    parts.packed_codes.assign(packed_code_bytes(n, cb.bits()), 0);

    std::vector<float> scales;
    scales.reserve(ceil_div(n, block_size));
    for (std::size_t begin = 0; begin < n; begin += block_size) {
        const std::size_t end = std::min(n, begin + block_size);
        const float scale = round_up_to_float(max_abs(data.subspan(begin, end - begin)));
        scales.push_back(scale);
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint8_t code =
                scale == 0.0f ? cb.zero_code() : cb.nearest(data[i] / static_cast<double>(scale));
            put_code(parts.packed_codes, i, code, cb.bits());
        }
    }

    if (use_dq) {
        parts.dq = double_quantize_scales(scales, chunk_size);
    } else {
        parts.scales = std::move(scales);
    }
    return QuantizedTensor::from_parts(std::move(parts));
}

Matrix dequantize(const QuantizedTensor& q, const Codebook& cb) {
    if (q.codebook_bits() != cb.bits()) {
        corrupt("tensor was coded with " + std::to_string(q.codebook_bits()) + "-bit codebook, got " +
                std::to_string(cb.bits()));
    }
    const auto scales = q.effective_scales();
    const std::size_t n = q.element_count();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t code = q.code(i);
        if (code >= cb.size()) corrupt("code index " + std::to_string(code) + " outside codebook");
        out[i] = scales[i / q.block_size()] * cb[code];
    }
    return Matrix(q.rows(), q.cols(), std::move(out));
}

double memory_footprint_bits_per_param(int bits, std::size_t block_size, bool use_dq, std::size_t chunk_size) {
    if (block_size == 0 || (use_dq && chunk_size == 0)) {
        throw Error(Errc::invalid_argument, "block_size and chunk_size must be >= 1");
    }
    const double block = static_cast<double>(block_size);
    if (use_dq) return bits + 8.0 / block + 32.0 / (block * static_cast<double>(chunk_size));
    return bits + 32.0 / block;
}

PayloadHeader header_of(const QuantizedTensor& q) noexcept {
    PayloadHeader h;
    h.rows = q.rows();
    h.cols = q.cols();
    h.block_size = q.block_size();
    h.codebook_bits = q.codebook_bits();
    h.double_quantized = q.double_quantized();
    if (q.double_quantized()) {
        h.chunk_size = q.dq_scales()->chunk_size;
        h.global_mean = q.dq_scales()->global_mean;
    }
    return h;
}

std::size_t payload_size(const PayloadHeader& h) noexcept {
    const std::size_t n = h.rows * h.cols;
    if (h.block_size == 0 || (h.double_quantized && h.chunk_size == 0)) return 0;
    const std::size_t blocks = ceil_div(n, h.block_size);
    std::size_t bytes = packed_code_bytes(n, h.codebook_bits);
    if (h.double_quantized) {
        bytes += blocks + 4 * ceil_div(blocks, h.chunk_size);
    } else {
        bytes += 4 * blocks;
    }
    return bytes;
}

std::vector<std::uint8_t> serialize_payload(const QuantizedTensor& q) {
    std::vector<std::uint8_t> out(q.packed_codes().begin(), q.packed_codes().end());
    if (const auto& dq = q.dq_scales()) {
        for (std::int8_t c : dq->codes) out.push_back(static_cast<std::uint8_t>(c));
        for (float a : dq->chunk_absmax) append_u32(out, std::bit_cast<std::uint32_t>(a));
    } else {
        for (float s : q.plain_scales()) append_u32(out, std::bit_cast<std::uint32_t>(s));
    }
    return out;
}

QuantizedTensor parse_payload(std::span<const std::uint8_t> bytes, const PayloadHeader& h) {
    if (h.rows * h.cols == 0 || h.block_size == 0) corrupt("payload header describes an empty tensor");
    if (h.codebook_bits < kMinCodebookBits || h.codebook_bits > kMaxCodebookBits)
        corrupt("payload header has invalid codebook bits");
    if (bytes.size() != payload_size(h)) {
        corrupt("payload is " + std::to_string(bytes.size()) + " bytes, expected " +
                std::to_string(payload_size(h)));
    }
    const std::size_t n = h.rows * h.cols;
    const std::size_t blocks = ceil_div(n, h.block_size);
    const std::size_t code_bytes = packed_code_bytes(n, h.codebook_bits);

    QuantizedTensor::Parts parts;
    parts.rows = h.rows;
    parts.cols = h.cols;
    parts.block_size = h.block_size;
    parts.codebook_bits = h.codebook_bits;
    parts.packed_codes.assign(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(code_bytes));

    std::size_t offset = code_bytes;
    if (h.double_quantized) {
        DQScales dq;
        dq.chunk_size = h.chunk_size;
        dq.global_mean = h.global_mean;
        dq.codes.reserve(blocks);
        for (std::size_t i = 0; i < blocks; ++i) dq.codes.push_back(static_cast<std::int8_t>(bytes[offset++]));
        const std::size_t chunks = ceil_div(blocks, h.chunk_size);
        for (std::size_t i = 0; i < chunks; ++i, offset += 4)
            dq.chunk_absmax.push_back(std::bit_cast<float>(read_u32(bytes, offset)));
        parts.dq = std::move(dq);
    } else {
        for (std::size_t i = 0; i < blocks; ++i, offset += 4)
            parts.scales.push_back(std::bit_cast<float>(read_u32(bytes, offset)));
    }
    return QuantizedTensor::from_parts(std::move(parts));
}

}  // namespace viz::adapter
