// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/registry/registry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "viz/error.hpp"

namespace viz::registry {
namespace {

void validate_category(const Category& c) {
    if (!std::isfinite(c.perf_score) || c.perf_score < 0.0 || c.perf_score > 1.0) {
        throw Error(Errc::invalid_argument, "perf_score must lie in [0, 1]");
    }
}

std::string refusal_message(const std::vector<PublicationRefused::Violation>& violations) {
    std::ostringstream os;
    os << "license manifest has disallowed sources:";
    for (const auto& v : violations) os << " [" << v.index << "] " << v.license_id;
    return os.str();
}

}  // namespace

std::string format_listing_id(std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "lst-%06llu", static_cast<unsigned long long>(n));
    return buf;
}

std::string_view status_token(ListingStatus s) noexcept {
    return s == ListingStatus::active ? "active" : "delisted";
}

Registry::Registry(compliance::Allowlist allowlist) : allowlist_(std::move(allowlist)) {}

const AdapterListing& Registry::publish(const adapter::AdapterBundle& bundle, const ListingDraft& draft,
                                        const compliance::LicenseManifest& manifest, const ModelCatalog& models,
                                        std::int64_t timestamp) {
    const auto result = compliance::validate_manifest(manifest, allowlist_);
    if (!result.ok()) throw PublicationRefused(result.violations, refusal_message(result.violations));

    if (draft.provider_id.empty()) throw Error(Errc::invalid_argument, "listing has no provider");
    validate_category(draft.category);
    validate_terms(draft.terms);

    const auto& bm = bundle.manifest;
    const auto model = models.find(bm.base_model_id);
    if (model == models.end()) throw Error(Errc::not_found, "unknown base model " + bm.base_model_id);

    adapter::LoraAdapter decoded = adapter::open_bundle(bundle);
    const auto& base = model->second;
    if (decoded.target_layer() >= base.layer_count()) {
        throw Error(Errc::invalid_shape, "target layer " + std::to_string(decoded.target_layer()) +
                                             " does not exist in " + base.model_id());
    }
    const auto& w = base.layer(decoded.target_layer());
    if (decoded.d_in() != w.cols() || decoded.d_out() != w.rows()) {
        throw Error(Errc::invalid_shape, "adapter shape does not match the target layer");
    }
    if (by_adapter_.contains(decoded.adapter_id())) {
        throw Error(Errc::conflict, "adapter " + decoded.adapter_id() + " is already listed");
    }

    const auto mhash = compliance::manifest_hash(manifest);
    const auto& record = provenance_.append(decoded.adapter_id(), bm.base_model_id, mhash, timestamp);

    AdapterListing l;
    l.listing_id = format_listing_id(next_listing_++);
    l.adapter_id = decoded.adapter_id();
    l.provider_id = draft.provider_id;
    l.base_model_id = bm.base_model_id;
    l.category = draft.category;
    l.terms = draft.terms;
    l.manifest_hash = mhash;
    l.provenance_seq = record.seq;
    l.published_at = timestamp;

    by_adapter_.emplace(l.adapter_id, l.listing_id);
    adapters_.emplace(l.listing_id, std::move(decoded));
    return listings_.emplace(l.listing_id, std::move(l)).first->second;
}

std::vector<AdapterListing> Registry::search(const SearchFilter& f) const {
    std::vector<AdapterListing> out;
    for (const auto& [id, l] : listings_) {
        if (l.status != ListingStatus::active) continue;
        if (f.domain && l.category.domain != *f.domain) continue;
        if (f.language && l.category.language != *f.language) continue;
        if (f.min_perf && l.category.perf_score < *f.min_perf) continue;
        if (f.mode && l.terms.mode != *f.mode) continue;
        out.push_back(l);
    }
    std::stable_sort(out.begin(), out.end(), [](const AdapterListing& a, const AdapterListing& b) {
        if (a.category.perf_score != b.category.perf_score) return a.category.perf_score > b.category.perf_score;
        return a.listing_id < b.listing_id;
    });
    return out;
}

AdapterListing& Registry::mutable_listing(std::string_view listing_id, std::string_view provider_id) {
    const auto it = listings_.find(listing_id);
    if (it == listings_.end()) throw Error(Errc::not_found, "unknown listing " + std::string(listing_id));
    if (it->second.provider_id != provider_id) {
        throw Error(Errc::forbidden, "listing " + std::string(listing_id) + " belongs to another provider");
    }
    if (it->second.status == ListingStatus::delisted) {
        throw Error(Errc::gone, "listing " + std::string(listing_id) + " has been delisted");
    }
    return it->second;
}

const AdapterListing& Registry::update_price(std::string_view listing_id, std::string_view provider_id,
                                             const PricingTerms& terms, std::int64_t timestamp) {
    auto& l = mutable_listing(listing_id, provider_id);
    validate_terms(terms);
    l.terms = terms;
    price_history_.push_back({l.listing_id, timestamp, terms});
    return l;
}

const AdapterListing& Registry::delist(std::string_view listing_id, std::string_view provider_id) {
    auto& l = mutable_listing(listing_id, provider_id);
    l.status = ListingStatus::delisted;
    return l;
}

const AdapterListing& Registry::listing(std::string_view listing_id) const {
    const auto it = listings_.find(listing_id);
    if (it == listings_.end()) throw Error(Errc::not_found, "unknown listing " + std::string(listing_id));
    return it->second;
}

const AdapterListing* Registry::find_by_adapter(std::string_view adapter_id) const {
    const auto it = by_adapter_.find(adapter_id);
    return it == by_adapter_.end() ? nullptr : &listings_.find(it->second)->second;
}

const adapter::LoraAdapter& Registry::adapter(std::string_view listing_id) const {
    const auto it = adapters_.find(listing_id);
    if (it == adapters_.end()) throw Error(Errc::not_found, "unknown listing " + std::string(listing_id));
    return it->second;
}

Money Registry::suggest_price(std::string_view listing_id, std::span<const DemandWindow> history,
                              std::int64_t as_of_day) const {
    const auto& l = listing(listing_id);
    std::vector<DemandWindow> own;
    for (const auto& w : history)
        if (w.listing_id == listing_id) own.push_back(w);
    return registry::suggest_price(l.terms, own, as_of_day);
}

std::vector<AdapterListing> Registry::all() const {
    std::vector<AdapterListing> out;
    out.reserve(listings_.size());
    for (const auto& [id, l] : listings_) out.push_back(l);
    return out;
}

nlohmann::ordered_json to_json(const Category& c) {
    nlohmann::ordered_json j;
    j["domain"] = c.domain;
    j["language"] = c.language;
    j["perf_score"] = c.perf_score;
    return j;
}

Category category_from_json(const nlohmann::json& j) {
    try {
        Category c;
        c.domain = j.at("domain").get<std::string>();
        c.language = j.at("language").get<std::string>();
        c.perf_score = j.at("perf_score").get<double>();
        validate_category(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_argument, std::string("malformed category: ") + e.what());
    }
}

nlohmann::ordered_json to_json(const AdapterListing& l) {
    nlohmann::ordered_json j;
    j["listing_id"] = l.listing_id;
    j["adapter_id"] = l.adapter_id;
    j["provider_id"] = l.provider_id;
    j["base_model_id"] = l.base_model_id;
    j["category"] = to_json(l.category);
    j["terms"] = to_json(l.terms);
    j["manifest_hash"] = to_hex(l.manifest_hash);
    j["provenance_seq"] = l.provenance_seq;
    j["published_at"] = l.published_at;
    j["status"] = status_token(l.status);
    return j;
}

}  // namespace viz::registry
