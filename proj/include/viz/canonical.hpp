// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "viz/sha256.hpp"

namespace viz {

// Byte encoding used for every chained hash: fields in a fixed order, 64-bit
// big-endian integers, UTF-8 strings prefixed by their 64-bit big-endian length,
// digests as 32 raw bytes.
class CanonicalWriter {
public:
    CanonicalWriter& u64(std::uint64_t v);
    CanonicalWriter& i64(std::int64_t v);
    CanonicalWriter& str(std::string_view s);
    CanonicalWriter& digest(const Digest& d);

    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
    Digest sha256() const;

private:
    std::vector<std::uint8_t> bytes_;
};

// SHA-256 of the 12-byte ASCII tag "viz-genesis0"; prev_hash of every chain's first record.
const Digest& genesis_hash();

}  // namespace viz
