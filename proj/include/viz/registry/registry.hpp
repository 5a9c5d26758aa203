// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "viz/adapter/bundle.hpp"
#include "viz/compliance/manifest.hpp"
#include "viz/compliance/provenance.hpp"
#include "viz/model/base_model.hpp"
#include "viz/registry/pricing.hpp"

namespace viz::registry {

using ModelCatalog = std::map<std::string, model::BaseModel, std::less<>>;

struct Category {
    std::string domain;
    std::string language;
    double perf_score = 0.0;  // provider-declared, in [0, 1]

    bool operator==(const Category&) const = default;
};

enum class ListingStatus { active, delisted };

struct AdapterListing {
    std::string listing_id;
    std::string adapter_id;
    std::string provider_id;
    std::string base_model_id;
    Category category;
    PricingTerms terms;
    Digest manifest_hash{};
    std::uint64_t provenance_seq = 0;
    std::int64_t published_at = 0;
    ListingStatus status = ListingStatus::active;

    bool operator==(const AdapterListing&) const = default;
};

// What a provider supplies besides the bundle and manifest.
struct ListingDraft {
    std::string provider_id;
    Category category;
    PricingTerms terms;
};

struct SearchFilter {
    std::optional<std::string> domain;
    std::optional<std::string> language;
    std::optional<double> min_perf;
    std::optional<PricingMode> mode;
};

struct PriceChange {
    std::string listing_id;
    std::int64_t timestamp = 0;
    PricingTerms terms;
};

class Registry {
public:
    explicit Registry(compliance::Allowlist allowlist = compliance::default_allowlist());

    // Checks, in order: manifest (invalid-manifest, publication-refused), listing
    // draft (invalid-argument), base model (not-found), bundle integrity
    // (corrupt-bundle), shapes against the base model (invalid-shape), and
    // adapter_id uniqueness (conflict). Nothing changes unless every check passes.
    const AdapterListing& publish(const adapter::AdapterBundle& bundle, const ListingDraft& draft,
                                  const compliance::LicenseManifest& manifest, const ModelCatalog& models,
                                  std::int64_t timestamp);

    // Active listings matching every supplied predicate, by (perf_score desc, listing_id asc).
    std::vector<AdapterListing> search(const SearchFilter& filter) const;

    // forbidden for another provider, gone once delisted.
    const AdapterListing& update_price(std::string_view listing_id, std::string_view provider_id,
                                       const PricingTerms& terms, std::int64_t timestamp);
    const AdapterListing& delist(std::string_view listing_id, std::string_view provider_id);

    // not-found for unknown ids.
    const AdapterListing& listing(std::string_view listing_id) const;
    const AdapterListing* find_by_adapter(std::string_view adapter_id) const;
    const adapter::LoraAdapter& adapter(std::string_view listing_id) const;

    // not-applicable unless metered; only windows for this listing are considered.
    Money suggest_price(std::string_view listing_id, std::span<const DemandWindow> history,
                        std::int64_t as_of_day) const;

    std::vector<AdapterListing> all() const;
    const compliance::ProvenanceLog& provenance() const noexcept { return provenance_; }
    std::span<const PriceChange> price_history() const noexcept { return price_history_; }
    const compliance::Allowlist& allowlist() const noexcept { return allowlist_; }

private:
    AdapterListing& mutable_listing(std::string_view listing_id, std::string_view provider_id);

    compliance::Allowlist allowlist_;
    std::map<std::string, AdapterListing, std::less<>> listings_;
    std::map<std::string, adapter::LoraAdapter, std::less<>> adapters_;  // by listing_id
    std::map<std::string, std::string, std::less<>> by_adapter_;         // adapter_id -> listing_id
    compliance::ProvenanceLog provenance_;
    std::vector<PriceChange> price_history_;
    std::uint64_t next_listing_ = 1;
};

// "lst-000001" style, in publication order.
std::string format_listing_id(std::uint64_t n);

std::string_view status_token(ListingStatus s) noexcept;

nlohmann::ordered_json to_json(const Category& c);
// Throws invalid-argument, including for perf_score outside [0, 1].
Category category_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const AdapterListing& l);

}  // namespace viz::registry
