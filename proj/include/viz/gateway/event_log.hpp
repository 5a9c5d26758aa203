// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "viz/sha256.hpp"

namespace viz::gateway {

enum class EventKind { publish, price_update, license_grant, usage, period_close, delist };

// "publish", "price-update", "license-grant", "usage", "period-close", "delist".
std::string_view kind_token(EventKind k) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view token);

struct LogEntry {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::publish;
    std::int64_t timestamp = 0;
    nlohmann::ordered_json payload;
    Digest prev_hash{};
    Digest hash{};

    bool operator==(const LogEntry&) const = default;
};

// SHA-256 over seq, kind token, timestamp, compact payload text and prev_hash.
Digest compute_entry_hash(const LogEntry& e);
bool verify_entries(std::span<const LogEntry> entries);

std::string to_line(const LogEntry& e);
// Strict: the line must be the exact rendering of the entry it decodes to.
std::optional<LogEntry> entry_from_line(std::string_view line);

// Append-only JSONL file of chained entries. One writer at a time.
class EventLog {
public:
    // Reads and verifies an existing file (creating an empty one otherwise).
    // Throws refuse-start on a malformed line, a missing final newline or a broken chain.
    explicit EventLog(std::filesystem::path path);
    ~EventLog();
    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    // Builds the next entry without writing it.
    LogEntry next(EventKind kind, std::int64_t timestamp, nlohmann::ordered_json payload) const;
    // Writes and syncs the entry produced by next(). Throws io-error.
    const LogEntry& commit(LogEntry entry);

    std::span<const LogEntry> entries() const noexcept { return entries_; }
    const std::filesystem::path& path() const noexcept { return path_; }

    // Loads and verifies without opening for append; false on any failure.
    static bool verify_file(const std::filesystem::path& path);

private:
    static std::vector<LogEntry> read(const std::filesystem::path& path);

    std::filesystem::path path_;
    std::vector<LogEntry> entries_;
    std::FILE* out_ = nullptr;
};

}  // namespace viz::gateway
