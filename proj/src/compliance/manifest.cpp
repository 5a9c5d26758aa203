// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/compliance/manifest.hpp"

#include "viz/canonical.hpp"

namespace viz::compliance {

const Allowlist& default_allowlist() {
    static const Allowlist allowlist = {"CC0-1.0", "CC-BY-4.0", "Apache-2.0", "MIT", "public-domain"};
    return allowlist;
}

ValidationResult validate_manifest(const LicenseManifest& m, const Allowlist& allowlist) {
    if (m.sources.empty()) throw Error(Errc::invalid_manifest, "license manifest lists no data sources");
    ValidationResult result;
    for (std::size_t i = 0; i < m.sources.size(); ++i) {
        const auto& src = m.sources[i];
        if (src.license_id.empty()) {
            throw Error(Errc::invalid_manifest, "source " + std::to_string(i) + " has an empty license_id");
        }
        if (!digest_from_hex(src.content_hash)) {
            throw Error(Errc::invalid_manifest, "source " + std::to_string(i) + " content_hash is not SHA-256 hex");
        }
        if (!allowlist.contains(src.license_id)) result.violations.push_back({i, src.license_id});
    }
    return result;
}

Digest manifest_hash(const LicenseManifest& m) {
    CanonicalWriter w;
    w.u64(m.sources.size());
    for (const auto& src : m.sources) w.str(src.uri).str(src.license_id).str(src.content_hash);
    w.str(m.data_usage_disclosure);
    return w.sha256();
}

nlohmann::ordered_json to_json(const LicenseManifest& m) {
    nlohmann::ordered_json j;
    j["sources"] = nlohmann::ordered_json::array();
    for (const auto& src : m.sources) {
        nlohmann::ordered_json s;
        s["uri"] = src.uri;
        s["license_id"] = src.license_id;
        s["content_hash"] = src.content_hash;
        j["sources"].push_back(std::move(s));
    }
    j["data_usage_disclosure"] = m.data_usage_disclosure;
    return j;
}

LicenseManifest manifest_from_json(const nlohmann::json& j) {
    try {
        LicenseManifest m;
        for (const auto& s : j.at("sources")) {
            m.sources.push_back({s.at("uri").get<std::string>(), s.at("license_id").get<std::string>(),
                                 s.at("content_hash").get<std::string>()});
        }
        m.data_usage_disclosure = j.value("data_usage_disclosure", std::string());
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_manifest, std::string("malformed license manifest: ") + e.what());
    }
}

}  // namespace viz::compliance
