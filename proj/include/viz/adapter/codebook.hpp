// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace viz::adapter {

inline constexpr int kMinCodebookBits = 2;
inline constexpr int kMaxCodebookBits = 8;

// Sorted NormalFloat code values in [-1, 1]. Always holds -1, 0 and +1 exactly.
class Codebook {
public:
    int bits() const noexcept { return bits_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    // Index of the code value closest to x. Ties go to the lower index.
    std::uint8_t nearest(double x) const noexcept;

    // Largest distance between two adjacent code values.
    double max_gap() const noexcept;

    // Index of the exact-zero entry.
    std::uint8_t zero_code() const noexcept { return zero_code_; }

private:
    friend Codebook build_nf4_codebook(int bits);
    Codebook(int bits, std::vector<double> values);

    int bits_ = 0;
    std::vector<double> values_;
    std::uint8_t zero_code_ = 0;
};

// NormalFloat codebook for 2 <= bits <= 8. The 4-bit table is a frozen constant;
// other widths are computed from standard-normal quantiles at evenly spaced
// probability levels. Throws invalid-bit-width otherwise.
Codebook build_nf4_codebook(int bits = 4);

// Standard-normal quantile function.
double normal_quantile(double p);

}  // namespace viz::adapter
