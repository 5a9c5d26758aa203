// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/gateway/event_log.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>

#include "viz/canonical.hpp"
#include "viz/error.hpp"

namespace viz::gateway {

std::string_view kind_token(EventKind k) noexcept {
    switch (k) {
        case EventKind::publish: return "publish";
        case EventKind::price_update: return "price-update";
        case EventKind::license_grant: return "license-grant";
        case EventKind::usage: return "usage";
        case EventKind::period_close: return "period-close";
        case EventKind::delist: return "delist";
    }
    return "publish";
}

std::optional<EventKind> parse_event_kind(std::string_view token) {
    for (auto k : {EventKind::publish, EventKind::price_update, EventKind::license_grant, EventKind::usage,
                   EventKind::period_close, EventKind::delist}) {
        if (kind_token(k) == token) return k;
    }
    return std::nullopt;
}

Digest compute_entry_hash(const LogEntry& e) {
    return CanonicalWriter()
        .u64(e.seq)
        .str(kind_token(e.kind))
        .i64(e.timestamp)
        .str(e.payload.dump())
        .digest(e.prev_hash)
        .sha256();
}

bool verify_entries(std::span<const LogEntry> entries) {
    Digest prev = genesis_hash();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (e.seq != i || e.prev_hash != prev || compute_entry_hash(e) != e.hash) return false;
        prev = e.hash;
    }
    return true;
}

std::string to_line(const LogEntry& e) {
    nlohmann::ordered_json j;
    j["seq"] = e.seq;
    j["kind"] = kind_token(e.kind);
    j["timestamp"] = e.timestamp;
    j["payload"] = e.payload;
    j["prev_hash"] = to_hex(e.prev_hash);
    j["hash"] = to_hex(e.hash);
    return j.dump();
}

std::optional<LogEntry> entry_from_line(std::string_view line) {
    try {
        const auto j = nlohmann::ordered_json::parse(line);
        LogEntry e;
        e.seq = j.at("seq").get<std::uint64_t>();
        const auto kind = parse_event_kind(j.at("kind").get<std::string>());
        const auto prev = digest_from_hex(j.at("prev_hash").get<std::string>());
        const auto self = digest_from_hex(j.at("hash").get<std::string>());
        if (!kind || !prev || !self || !j.at("payload").is_object()) return std::nullopt;
        e.kind = *kind;
        e.timestamp = j.at("timestamp").get<std::int64_t>();
        e.payload = j.at("payload");
        e.prev_hash = *prev;
        e.hash = *self;
        if (to_line(e) != line) return std::nullopt;
        return e;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

std::vector<LogEntry> EventLog::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (!text.empty() && text.back() != '\n') {
        throw Error(Errc::refuse_start, path.string() + " does not end with a complete entry");
    }
    std::vector<LogEntry> entries;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        auto e = entry_from_line(std::string_view(text).substr(pos, nl - pos));
        if (!e) {
            throw Error(Errc::refuse_start,
                        path.string() + ": entry " + std::to_string(entries.size()) + " is malformed");
        }
        entries.push_back(std::move(*e));
        pos = nl + 1;
    }
    if (!verify_entries(entries)) throw Error(Errc::refuse_start, path.string() + ": hash chain does not verify");
    return entries;
}

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)), entries_(read(path_)) {
    out_ = std::fopen(path_.c_str(), "ab");
    if (!out_) throw Error(Errc::refuse_start, "cannot open " + path_.string() + " for appending");
}

EventLog::~EventLog() {
    if (out_) std::fclose(out_);
}

LogEntry EventLog::next(EventKind kind, std::int64_t timestamp, nlohmann::ordered_json payload) const {
    LogEntry e;
    e.seq = entries_.size();
    e.kind = kind;
    e.timestamp = timestamp;
    e.payload = std::move(payload);
    e.prev_hash = entries_.empty() ? genesis_hash() : entries_.back().hash;
    e.hash = compute_entry_hash(e);
    return e;
}

const LogEntry& EventLog::commit(LogEntry entry) {
    const Digest& head = entries_.empty() ? genesis_hash() : entries_.back().hash;
    if (entry.seq != entries_.size() || entry.prev_hash != head || entry.hash != compute_entry_hash(entry)) {
        throw Error(Errc::refuse_append, "entry does not extend the log");
    }
    const std::string line = to_line(entry) + '\n';
    if (std::fwrite(line.data(), 1, line.size(), out_) != line.size() || std::fflush(out_) != 0 ||
        ::fsync(::fileno(out_)) != 0) {
        throw Error(Errc::io_error, "cannot append to " + path_.string());
    }
    entries_.push_back(std::move(entry));
    return entries_.back();
}

bool EventLog::verify_file(const std::filesystem::path& path) {
    try {
        read(path);
        return true;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace viz::gateway
