// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/adapter/codebook.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "viz/error.hpp"

namespace viz::adapter {

namespace {

// 4-bit NormalFloat table: 8 negative quantiles, exact zero, 7 positive quantiles,
// probability offset 1/32, normalized to [-1, 1]. Computed once at 50-digit precision.
constexpr std::array<double, 16> kNf4Table = {
    -1.0,
    -0.7202957465571399,
    -0.5600152558523457,
    -0.4384771794588117,
    -0.33611869925919735,
    -0.2447662616328304,
    -0.160035063631092,
    -0.07913367682724462,
    0.0,
    0.09053941965284126,
    0.1837497147661373,
    0.2829017987223386,
    0.3928681828332967,
    0.5225630031519742,
    0.6934942158972336,
    1.0,
};

std::vector<double> compute_normal_float(int bits) {
    const std::size_t n = std::size_t{1} << bits;
    const std::size_t half = n / 2;
    const double offset = 1.0 / (2.0 * static_cast<double>(n));

    std::vector<double> values;
    values.reserve(n);
    for (std::size_t i = 0; i < half; ++i) {
        const double p = offset + (0.5 - offset) * static_cast<double>(i) / static_cast<double>(half);
        values.push_back(normal_quantile(p));
    }
    values.push_back(0.0);
    for (std::size_t i = 0; i + 1 < half; ++i) {
        const double p =
            (1.0 - offset) - ((1.0 - offset) - 0.5) * static_cast<double>(i) / static_cast<double>(half - 1);
        values.push_back(normal_quantile(p));
    }
    std::sort(values.begin(), values.end());
    const double scale = std::max(std::fabs(values.front()), std::fabs(values.back()));
    for (double& v : values) v /= scale;
    values.front() = -1.0;
    values.back() = 1.0;
    return values;
}

}  // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error(Errc::invalid_argument, "normal_quantile: p must lie in (0, 1)");
    }
    // Acklam's rational approximation followed by Halley refinement against erfc.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int iter = 0; iter < 2; ++iter) {
        const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

Codebook::Codebook(int bits, std::vector<double> values) : bits_(bits), values_(std::move(values)) {
    const auto zero = std::find(values_.begin(), values_.end(), 0.0);
    zero_code_ = static_cast<std::uint8_t>(zero - values_.begin());
}

Codebook build_nf4_codebook(int bits) {
    if (bits < kMinCodebookBits || bits > kMaxCodebookBits) {
        throw Error(Errc::invalid_bit_width, "codebook bit width must be in [2, 8], got " + std::to_string(bits));
    }
    if (bits == 4) {
        return Codebook(bits, std::vector<double>(kNf4Table.begin(), kNf4Table.end()));
    }
    return Codebook(bits, compute_normal_float(bits));
}

std::uint8_t Codebook::nearest(double x) const noexcept {
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    if (it == values_.begin()) return 0;
    if (it == values_.end()) return static_cast<std::uint8_t>(values_.size() - 1);
    const auto hi = static_cast<std::size_t>(it - values_.begin());
    const std::size_t lo = hi - 1;
    const double d_lo = std::fabs(x - values_[lo]);
    const double d_hi = std::fabs(x - values_[hi]);
    return static_cast<std::uint8_t>(d_hi < d_lo ? hi : lo);
}

double Codebook::max_gap() const noexcept {
    double gap = 0.0;
    for (std::size_t i = 1; i < values_.size(); ++i) gap = std::max(gap, values_[i] - values_[i - 1]);
    return gap;
}

}  // namespace viz::adapter
