// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

// Shared builders for gateway-level tests.

#pragma once

#include <atomic>
#include <filesystem>
#include <initializer_list>
#include <memory>
#include <random>
#include <string>

#include "viz/adapter/bundle.hpp"
#include "viz/adapter/codebook.hpp"
#include "viz/compliance/manifest.hpp"
#include "viz/gateway/config.hpp"
#include "viz/gateway/marketplace.hpp"
#include "viz/model/base_model.hpp"
#include "viz/prng.hpp"

namespace viz::testing {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("viz-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Settable clock shared between a test and the marketplace it drives.
class ManualClock {
public:
    explicit ManualClock(std::int64_t start) : t_(std::make_shared<std::atomic<std::int64_t>>(start)) {}
    gateway::Clock clock() const {
        return [t = t_] { return t->load(); };
    }
    void set(std::int64_t v) { t_->store(v); }
    void advance(std::int64_t dt) { t_->fetch_add(dt); }
    std::int64_t now() const { return t_->load(); }

private:
    std::shared_ptr<std::atomic<std::int64_t>> t_;
};

inline constexpr const char* kModelId = "toy";

// Accounts: admin (tok-admin), prov-0..prov-(p-1) (tok-prov-i), cons-0..cons-(c-1) (tok-cons-i).
inline gateway::GatewayConfig demo_config(const std::filesystem::path& data_dir, int providers = 2,
                                          int consumers = 2) {
    gateway::GatewayConfig cfg;
    cfg.port = 0;
    cfg.data_dir = data_dir;
    cfg.accounts.push_back({"admin", gateway::Role::admin, "Operator", "tok-admin"});
    for (int i = 0; i < providers; ++i) {
        const auto n = std::to_string(i);
        cfg.accounts.push_back({"prov-" + n, gateway::Role::provider, "Provider " + n, "tok-prov-" + n});
    }
    for (int i = 0; i < consumers; ++i) {
        const auto n = std::to_string(i);
        cfg.accounts.push_back({"cons-" + n, gateway::Role::consumer, "Consumer " + n, "tok-cons-" + n});
    }
    cfg.models.push_back({kModelId, 11, {8, 16, 4}, std::nullopt});
    return cfg;
}

inline model::BaseModel demo_model() { return model::generate_base_model(kModelId, 11, {8, 16, 4}); }

inline adapter::AdapterBundle adapter_bundle(const std::string& adapter_id, std::size_t layer, std::uint64_t seed,
                                             std::size_t rank = 2, double alpha = 4.0) {
    const auto m = demo_model();
    const auto& w = m.layer(layer);
    Xoshiro256 rng(seed);
    adapter::Matrix a(rank, w.cols());
    adapter::Matrix b(w.rows(), rank);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = 0.3 * rng.normal();
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) = 0.3 * rng.normal();
    adapter::LoraAdapter ad(adapter_id, layer, alpha, a, b);
    return adapter::make_bundle(ad.quantize(adapter::build_nf4_codebook()), kModelId);
}

inline compliance::LicenseManifest license_manifest(std::initializer_list<const char*> licenses) {
    compliance::LicenseManifest m;
    int i = 0;
    for (const char* id : licenses) {
        const std::string uri = "https://corpus.example/item/" + std::to_string(i++);
        m.sources.push_back({uri, id, to_hex(sha256(uri))});
    }
    m.data_usage_disclosure = "Trained only on the listed sources.";
    return m;
}

inline gateway::PublishRequest publish_request(const std::string& adapter_id, std::size_t layer, std::uint64_t seed,
                                               registry::PricingTerms terms, double perf = 0.5,
                                               std::initializer_list<const char*> licenses = {"CC0-1.0"}) {
    return {adapter_bundle(adapter_id, layer, seed), license_manifest(licenses), {"medical", "en", perf}, terms};
}

}  // namespace viz::testing
