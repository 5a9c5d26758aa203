// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "viz/error.hpp"
#include "viz/sha256.hpp"

namespace viz::compliance {

struct DataSource {
    std::string uri;
    std::string license_id;
    std::string content_hash;  // lowercase SHA-256 hex of the source content
};

// A provider's attestation of the data an adapter was trained on.
struct LicenseManifest {
    std::vector<DataSource> sources;
    std::string data_usage_disclosure;
};

using Allowlist = std::set<std::string, std::less<>>;

// CC0-1.0, CC-BY-4.0, Apache-2.0, MIT, public-domain.
const Allowlist& default_allowlist();

struct ValidationResult {
    std::vector<PublicationRefused::Violation> violations;
    bool ok() const noexcept { return violations.empty(); }
};

// Throws invalid-manifest when there are no sources, a license_id is empty, or a
// content hash is not a lowercase SHA-256 hex digest.
ValidationResult validate_manifest(const LicenseManifest& m, const Allowlist& allowlist = default_allowlist());

// Hash over the canonical encoding of every field.
Digest manifest_hash(const LicenseManifest& m);

nlohmann::ordered_json to_json(const LicenseManifest& m);
// Throws invalid-manifest on malformed documents.
LicenseManifest manifest_from_json(const nlohmann::json& j);

}  // namespace viz::compliance
