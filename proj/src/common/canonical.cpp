// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/canonical.hpp"

namespace viz {

CanonicalWriter& CanonicalWriter::u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) bytes_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
}

CanonicalWriter& CanonicalWriter::i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }

CanonicalWriter& CanonicalWriter::str(std::string_view s) {
    u64(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
    return *this;
}

CanonicalWriter& CanonicalWriter::digest(const Digest& d) {
    bytes_.insert(bytes_.end(), d.begin(), d.end());
    return *this;
}

Digest CanonicalWriter::sha256() const { return viz::sha256(bytes_); }

const Digest& genesis_hash() {
    static const Digest genesis = viz::sha256(std::string_view("viz-genesis0"));
    return genesis;
}

}  // namespace viz
