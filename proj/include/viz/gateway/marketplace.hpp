// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "viz/billing/billing.hpp"
#include "viz/gateway/config.hpp"
#include "viz/gateway/event_log.hpp"
#include "viz/registry/registry.hpp"

namespace viz::gateway {

// Reader/writer lock that lets a waiting writer in ahead of readers arriving after it.
class WriterFirstMutex {
public:
    void lock() {
        std::lock_guard gate(gate_);
        mu_.lock();
    }
    void unlock() { mu_.unlock(); }
    void lock_shared() {
        { std::lock_guard gate(gate_); }
        mu_.lock_shared();
    }
    void unlock_shared() { mu_.unlock_shared(); }

private:
    std::mutex gate_;
    std::shared_mutex mu_;
};

// UTC seconds.
using Clock = std::function<std::int64_t()>;
Clock system_clock();

struct PublishRequest {
    adapter::AdapterBundle bundle;
    compliance::LicenseManifest manifest;
    registry::Category category;
    registry::PricingTerms terms;
};

struct InferRequest {
    std::string model_id;
    std::vector<std::string> adapter_ids;
    std::vector<std::vector<double>> inputs;
};

struct InferReceipt {
    std::vector<std::vector<double>> outputs;
    std::uint64_t units = 0;
    std::vector<std::string> adapter_ids;  // canonical (sorted) order
    std::vector<std::string> listing_ids;
    std::vector<billing::Money> charges;   // aligned with adapter_ids
    std::uint64_t usage_seq = 0;
};

// The whole marketplace: registry, billing and provenance state rebuilt from the
// event log in data_dir, plus the commands that extend it. Every state change is
// exactly one log entry. Commands take an exclusive lock, queries a shared one.
class Marketplace {
public:
    // Replays data_dir/events.log. Throws refuse-start when the log, a referenced
    // payload blob or the replayed results do not check out.
    explicit Marketplace(GatewayConfig cfg, Clock clock = system_clock());

    const GatewayConfig& config() const noexcept { return cfg_; }

    // Throws unauthorized.
    const Account& authenticate(std::string_view token) const;
    const Account& account(std::string_view account_id) const;

    // Commands.
    registry::AdapterListing publish(const Account& who, const PublishRequest& req);
    registry::AdapterListing update_price(const Account& who, const std::string& listing_id,
                                          const registry::PricingTerms& terms);
    registry::AdapterListing delist(const Account& who, const std::string& listing_id);
    billing::License grant_license(const Account& who, const std::string& listing_id, billing::LicenseKind kind,
                                   std::uint32_t months);
    InferReceipt infer(const Account& who, const InferRequest& req);
    // Admin only. Throws too-early before the period has ended.
    void close_period(const Account& who, const billing::Period& p);

    // Queries.
    std::vector<registry::AdapterListing> search(const registry::SearchFilter& f) const;
    registry::AdapterListing listing(const std::string& listing_id) const;
    // Provider of the listing or admin.
    billing::Money suggest_price(const Account& who, const std::string& listing_id) const;
    // `subject` lets an admin look at another account or provider.
    std::vector<billing::UsageEvent> usage(const Account& who, const billing::Period& p,
                                           const std::optional<std::string>& subject = {}) const;
    // Closes an elapsed period on first access; too-early otherwise.
    billing::Invoice invoice(const Account& who, const billing::Period& p,
                             const std::optional<std::string>& subject = {});
    billing::PayoutStatement payout(const Account& who, const billing::Period& p,
                                    const std::optional<std::string>& subject = {});
    std::vector<billing::LeaderboardEntry> leaderboard(const billing::Period& p, std::size_t n) const;
    nlohmann::ordered_json health() const;

    // Registry, provenance, licenses, usage and every closed-period document, in a
    // fixed order. Two replays of the same log render identical text.
    nlohmann::ordered_json export_state() const;

    std::size_t event_count() const;
    std::int64_t now() const;

private:
    // Applies one event to the in-memory state; the returned result is what the
    // log records next to the request. Leaves state untouched when it throws.
    // Publish events read their payload from `bundle` when given, else from the blob store.
    nlohmann::ordered_json apply(EventKind kind, std::int64_t timestamp, const nlohmann::ordered_json& request,
                                 const adapter::AdapterBundle* bundle = nullptr);
    // Applies and appends; the caller holds the writer lock.
    nlohmann::ordered_json commit(EventKind kind, const nlohmann::ordered_json& request,
                                  const adapter::AdapterBundle* bundle = nullptr);
    void replay();
    void project_provenance() const;

    std::vector<registry::AdapterListing> resolve_stack(const std::vector<std::string>& adapter_ids) const;
    std::filesystem::path blob_path(const std::string& sha) const;
    void store_blob(const adapter::AdapterBundle& bundle) const;
    adapter::AdapterBundle load_bundle(const nlohmann::json& manifest) const;
    std::int64_t next_timestamp() const;
    void close_if_elapsed(const billing::Period& p);
    std::string subject_of(const Account& who, const std::optional<std::string>& subject) const;

    GatewayConfig cfg_;
    Clock clock_;
    registry::ModelCatalog models_;
    std::map<std::string, Account, std::less<>> accounts_;
    std::map<std::string, std::string, std::less<>> tokens_;  // token -> account_id

    mutable WriterFirstMutex mu_;
    registry::Registry registry_;
    billing::Billing billing_;
    std::unique_ptr<EventLog> log_;
    std::int64_t last_ts_ = 0;
    // Set when memory ran ahead of disk; every later command fails until restart.
    bool poisoned_ = false;
};

}  // namespace viz::gateway
