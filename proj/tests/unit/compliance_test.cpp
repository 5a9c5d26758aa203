// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "viz/canonical.hpp"
#include "viz/compliance/manifest.hpp"
#include "viz/compliance/provenance.hpp"
#include "viz/prng.hpp"

namespace viz::compliance {
namespace {

std::string hash_of(std::string_view text) { return to_hex(sha256(text)); }

LicenseManifest manifest_with(std::initializer_list<const char*> licenses) {
    LicenseManifest m;
    int i = 0;
    for (const char* id : licenses) {
        const std::string uri = "https://corpus.example/doc/" + std::to_string(i++);
        m.sources.push_back({uri, id, hash_of(uri)});
    }
    m.data_usage_disclosure = "Adapter trained on the listed public documents only.";
    return m;
}

ProvenanceLog build_log(std::size_t n) {
    ProvenanceLog log;
    for (std::size_t i = 0; i < n; ++i) {
        log.append("adapter-" + std::to_string(i), "toy-base", sha256("manifest" + std::to_string(i)),
                   1'700'000'000 + static_cast<std::int64_t>(i) * 60);
    }
    return log;
}

TEST(ValidateManifest, AllowlistedSourcesPass) {
    EXPECT_TRUE(validate_manifest(manifest_with({"CC0-1.0", "CC0-1.0"})).ok());
    EXPECT_TRUE(validate_manifest(manifest_with({"MIT", "Apache-2.0", "CC-BY-4.0", "public-domain"})).ok());
}

TEST(ValidateManifest, ReportsOffendingIndices) {
    const auto result = validate_manifest(manifest_with({"CC0-1.0", "proprietary", "MIT", "GPL-3.0"}));
    ASSERT_EQ(result.violations.size(), 2u);
    EXPECT_EQ(result.violations[0].index, 1u);
    EXPECT_EQ(result.violations[0].license_id, "proprietary");
    EXPECT_EQ(result.violations[1].index, 3u);
}

TEST(ValidateManifest, CustomAllowlist) {
    const Allowlist only_mit = {"MIT"};
    EXPECT_FALSE(validate_manifest(manifest_with({"CC0-1.0"}), only_mit).ok());
    EXPECT_TRUE(validate_manifest(manifest_with({"MIT"}), only_mit).ok());
}

TEST(ValidateManifest, MalformedManifestsAreInvalid) {
    auto expect_invalid = [](const LicenseManifest& m) {
        try {
            validate_manifest(m);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::invalid_manifest);
        }
    };
    expect_invalid(LicenseManifest{});
    auto empty_id = manifest_with({"MIT"});
    empty_id.sources[0].license_id.clear();
    expect_invalid(empty_id);
    auto bad_hash = manifest_with({"MIT"});
    bad_hash.sources[0].content_hash = "ABC";
    expect_invalid(bad_hash);
}

TEST(ManifestHash, CoversEveryField) {
    const auto base = manifest_with({"MIT", "CC0-1.0"});
    const Digest h = manifest_hash(base);
    auto changed = base;
    changed.data_usage_disclosure += ".";
    EXPECT_NE(manifest_hash(changed), h);
    changed = base;
    changed.sources[1].license_id = "MIT";
    EXPECT_NE(manifest_hash(changed), h);
    EXPECT_EQ(manifest_hash(manifest_from_json(nlohmann::json::parse(to_json(base).dump()))), h);
}

TEST(Provenance, GenesisVector) {
    EXPECT_EQ(to_hex(genesis_hash()), "30177669d9f8f0b3eac3989be3c5cfea457aac3b796c61910fee118a09bddc1b");
}

TEST(Provenance, FirstRecordLinksToGenesis) {
    ProvenanceLog log;
    const auto& r = log.append("a", "m", sha256("x"), 10);
    EXPECT_EQ(r.seq, 0u);
    EXPECT_EQ(r.prev_hash, genesis_hash());
    EXPECT_EQ(r.record_hash, compute_record_hash(r));
}

TEST(Provenance, SecondRecordLinksToFirst) {
    const auto log = build_log(2);
    EXPECT_EQ(log.records()[1].prev_hash, log.records()[0].record_hash);
    EXPECT_EQ(log.records()[1].seq, 1u);
}

TEST(Provenance, CanonicalEncodingIsPinned) {
    ProvenanceRecord r;
    r.seq = 1;
    r.adapter_id = "ab";
    r.base_model_id = "";
    r.timestamp = -1;
    const auto bytes = CanonicalWriter().u64(r.seq).str(r.adapter_id).str(r.base_model_id).bytes();
    const std::vector<std::uint8_t> expected = {0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 2, 'a', 'b',
                                                0, 0, 0, 0, 0, 0, 0, 0};
    EXPECT_EQ(bytes, expected);
    EXPECT_EQ(CanonicalWriter().i64(-1).bytes(), std::vector<std::uint8_t>(8, 0xFF));
}

TEST(Provenance, AppendAfterTamperIsRefused) {
    const auto log = build_log(3);
    std::vector<ProvenanceRecord> records(log.records().begin(), log.records().end());
    records[1].timestamp += 1;
    ProvenanceLog tampered(records);
    EXPECT_FALSE(tampered.verify());
    try {
        tampered.append("x", "m", sha256("y"), 5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::refuse_append);
    }
}

TEST(VerifyChain, EmptyAndLongLogsVerify) {
    EXPECT_TRUE(verify_chain({}));
    EXPECT_TRUE(build_log(100).verify());
}

TEST(VerifyChain, AnySingleByteFlipIsDetected) {
    const auto log = build_log(20);
    const std::vector<ProvenanceRecord> clean(log.records().begin(), log.records().end());
    Xoshiro256 rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        auto records = clean;
        auto& r = records[rng.next() % records.size()];
        const auto mask = static_cast<std::uint8_t>(1 + rng.next() % 255);
        switch (rng.next() % 7) {
            case 0: r.seq ^= mask; break;
            case 1: r.adapter_id[rng.next() % r.adapter_id.size()] ^= static_cast<char>(mask); break;
            case 2: r.base_model_id[rng.next() % r.base_model_id.size()] ^= static_cast<char>(mask); break;
            case 3: r.manifest_hash[rng.next() % 32] ^= mask; break;
            case 4: r.timestamp ^= static_cast<std::int64_t>(mask) << (8 * (rng.next() % 8)); break;
            case 5: r.prev_hash[rng.next() % 32] ^= mask; break;
            default: r.record_hash[rng.next() % 32] ^= mask; break;
        }
        ASSERT_FALSE(verify_chain(records)) << "trial " << trial;
    }
}

TEST(ProvenanceFile, RoundTripAndByteTamper) {
    const auto dir = std::filesystem::temp_directory_path() / "viz_provenance_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "provenance.log";
    const auto log = build_log(25);
    log.save(path);
    ASSERT_TRUE(verify_log_file(path));
    const auto loaded = ProvenanceLog::load(path);
    EXPECT_TRUE(std::equal(loaded.records().begin(), loaded.records().end(), log.records().begin(),
                           log.records().end()));

    std::string text;
    {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    Xoshiro256 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        std::string mutated = text;
        mutated[rng.next() % mutated.size()] ^= static_cast<char>(1 + rng.next() % 255);
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            out << mutated;
        }
        ASSERT_FALSE(verify_log_file(path)) << "trial " << trial;
    }
    std::filesystem::remove_all(dir);
}

TEST(ProvenanceFile, UppercaseHexIsRejected) {
    const auto log = build_log(1);
    std::string line = to_line(log.records()[0]);
    ASSERT_TRUE(from_line(line).has_value());
    const auto pos = line.find_first_of("abcdef", line.find("record_hash"));
    line[pos] = static_cast<char>(std::toupper(line[pos]));
    EXPECT_FALSE(from_line(line).has_value());
}

}  // namespace
}  // namespace viz::compliance
