// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace viz {

// xoshiro256** seeded through splitmix64. The algorithm is fixed so that base
// models and adapter initializations reproduce bit-for-bit everywhere.
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed) noexcept;

    std::uint64_t next() noexcept;

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() noexcept;

    // Unit normal via Box-Muller; consumes exactly two draws per call.
    double normal() noexcept;

private:
    std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

}  // namespace viz
