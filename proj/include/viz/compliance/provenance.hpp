// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "viz/sha256.hpp"

namespace viz::compliance {

struct ProvenanceRecord {
    std::uint64_t seq = 0;
    std::string adapter_id;
    std::string base_model_id;
    Digest manifest_hash{};
    std::int64_t timestamp = 0;  // UTC seconds
    Digest prev_hash{};
    Digest record_hash{};

    bool operator==(const ProvenanceRecord&) const = default;
};

// SHA-256 over the canonical encoding of every field before record_hash.
Digest compute_record_hash(const ProvenanceRecord& r);

// True iff seq runs 0..n-1, every prev_hash links to its predecessor (genesis for
// the first record) and every record_hash recomputes.
bool verify_chain(std::span<const ProvenanceRecord> log);

// One record per line, fixed field order, lowercase hex digests.
std::string to_line(const ProvenanceRecord& r);
// Strict: the line must be exactly the canonical rendering of the record it decodes to.
std::optional<ProvenanceRecord> from_line(std::string_view line);

// Hash-chained publication log with a single appender.
class ProvenanceLog {
public:
    ProvenanceLog() = default;
    // Adopts records as-is; they are only checked on the next append or verify().
    explicit ProvenanceLog(std::vector<ProvenanceRecord> records) : records_(std::move(records)) {}

    // Throws refuse-append unless the existing chain verifies.
    const ProvenanceRecord& append(std::string adapter_id, std::string base_model_id, const Digest& manifest_hash,
                                   std::int64_t timestamp);

    bool verify() const { return verify_chain(records_); }
    std::span<const ProvenanceRecord> records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    const ProvenanceRecord* find_adapter(std::string_view adapter_id) const;

    // Whole-file rewrite / append-one-line persistence.
    void save(const std::filesystem::path& path) const;
    static void append_line(const std::filesystem::path& path, const ProvenanceRecord& r);
    // Throws io-error when a line does not parse; the chain itself is not checked.
    static ProvenanceLog load(const std::filesystem::path& path);

private:
    std::vector<ProvenanceRecord> records_;
};

// Loads and verifies a persisted log; false on any parse or chain failure.
bool verify_log_file(const std::filesystem::path& path);

}  // namespace viz::compliance
