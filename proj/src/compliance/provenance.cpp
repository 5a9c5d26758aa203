// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/compliance/provenance.hpp"

#include <fstream>

#include <json.hpp>

#include "viz/canonical.hpp"
#include "viz/error.hpp"

namespace viz::compliance {

Digest compute_record_hash(const ProvenanceRecord& r) {
    return CanonicalWriter()
        .u64(r.seq)
        .str(r.adapter_id)
        .str(r.base_model_id)
        .digest(r.manifest_hash)
        .i64(r.timestamp)
        .digest(r.prev_hash)
        .sha256();
}

bool verify_chain(std::span<const ProvenanceRecord> log) {
    Digest prev = genesis_hash();
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& r = log[i];
        if (r.seq != i || r.prev_hash != prev || compute_record_hash(r) != r.record_hash) return false;
        prev = r.record_hash;
    }
    return true;
}

std::string to_line(const ProvenanceRecord& r) {
    nlohmann::ordered_json j;
    j["seq"] = r.seq;
    j["adapter_id"] = r.adapter_id;
    j["base_model_id"] = r.base_model_id;
    j["manifest_hash"] = to_hex(r.manifest_hash);
    j["timestamp"] = r.timestamp;
    j["prev_hash"] = to_hex(r.prev_hash);
    j["record_hash"] = to_hex(r.record_hash);
    return j.dump();
}

std::optional<ProvenanceRecord> from_line(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        ProvenanceRecord r;
        r.seq = j.at("seq").get<std::uint64_t>();
        r.adapter_id = j.at("adapter_id").get<std::string>();
        r.base_model_id = j.at("base_model_id").get<std::string>();
        r.timestamp = j.at("timestamp").get<std::int64_t>();
        const auto manifest = digest_from_hex(j.at("manifest_hash").get<std::string>());
        const auto prev = digest_from_hex(j.at("prev_hash").get<std::string>());
        const auto self = digest_from_hex(j.at("record_hash").get<std::string>());
        if (!manifest || !prev || !self) return std::nullopt;
        r.manifest_hash = *manifest;
        r.prev_hash = *prev;
        r.record_hash = *self;
        if (to_line(r) != line) return std::nullopt;
        return r;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

const ProvenanceRecord& ProvenanceLog::append(std::string adapter_id, std::string base_model_id,
                                              const Digest& manifest_hash, std::int64_t timestamp) {
    if (!verify()) throw Error(Errc::refuse_append, "provenance chain fails verification; refusing to append");
    ProvenanceRecord r;
    r.seq = records_.size();
    r.adapter_id = std::move(adapter_id);
    r.base_model_id = std::move(base_model_id);
    r.manifest_hash = manifest_hash;
    r.timestamp = timestamp;
    r.prev_hash = records_.empty() ? genesis_hash() : records_.back().record_hash;
    r.record_hash = compute_record_hash(r);
    records_.push_back(std::move(r));
    return records_.back();
}

const ProvenanceRecord* ProvenanceLog::find_adapter(std::string_view adapter_id) const {
    for (const auto& r : records_)
        if (r.adapter_id == adapter_id) return &r;
    return nullptr;
}

void ProvenanceLog::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    for (const auto& r : records_) out << to_line(r) << '\n';
    if (!out) throw Error(Errc::io_error, "cannot write provenance log " + path.string());
}

void ProvenanceLog::append_line(const std::filesystem::path& path, const ProvenanceRecord& r) {
    std::ofstream out(path, std::ios::app);
    out << to_line(r) << '\n';
    out.flush();
    if (!out) throw Error(Errc::io_error, "cannot append to provenance log " + path.string());
}

ProvenanceLog ProvenanceLog::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return ProvenanceLog();
    std::vector<ProvenanceRecord> records;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        auto r = from_line(line);
        if (!r) throw Error(Errc::io_error, "provenance log line " + std::to_string(number) + " is malformed");
        records.push_back(std::move(*r));
    }
    return ProvenanceLog(std::move(records));
}

bool verify_log_file(const std::filesystem::path& path) {
    // A file that does not end in a newline has a truncated or altered final line.
    {
        std::ifstream in(path, std::ios::binary | std::ios::ate);
        if (in && in.tellg() > 0) {
            in.seekg(-1, std::ios::end);
            if (in.get() != '\n') return false;
        }
    }
    try {
        return ProvenanceLog::load(path).verify();
    } catch (const Error&) {
        return false;
    }
}

}  // namespace viz::compliance
