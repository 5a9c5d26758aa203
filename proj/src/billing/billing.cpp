// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/billing/billing.hpp"

#include <algorithm>
#include <cstdio>

#include "viz/error.hpp"

namespace viz::billing {

std::string_view kind_token(LicenseKind k) noexcept {
    return k == LicenseKind::outright ? "outright" : "subscription";
}

std::optional<LicenseKind> parse_kind(std::string_view token) {
    if (token == "outright") return LicenseKind::outright;
    if (token == "subscription") return LicenseKind::subscription;
    return std::nullopt;
}

Billing::Billing(RevenueShare share) : share_(share) { validate_share(share_); }

void Billing::add_provider(const std::string& provider_id) { providers_.insert(provider_id); }

void Billing::register_listing(const std::string& listing_id, const std::string& provider_id) {
    listing_provider_[listing_id] = provider_id;
    providers_.insert(provider_id);
}

void Billing::check_time(std::int64_t t) const {
    if (t < last_ts_) {
        throw Error(Errc::invalid_argument, "timestamp " + std::to_string(t) + " precedes " + std::to_string(last_ts_));
    }
}

const License* Billing::active_license(std::string_view account_id, std::string_view listing_id,
                                       std::int64_t t) const {
    for (const auto& l : licenses_) {
        if (l.account_id == account_id && l.listing_id == listing_id && l.covers(t)) return &l;
    }
    return nullptr;
}

const License& Billing::grant_license(const std::string& account_id, const AdapterListing& listing,
                                      LicenseKind kind, std::uint32_t months, std::int64_t timestamp) {
    using registry::PricingMode;
    if (account_id.empty()) throw Error(Errc::invalid_argument, "license needs an account");
    if (listing.status != registry::ListingStatus::active) {
        throw Error(Errc::gone, "listing " + listing.listing_id + " has been delisted");
    }
    const bool outright_listing = listing.terms.mode == PricingMode::outright;
    if (outright_listing != (kind == LicenseKind::outright)) {
        throw Error(Errc::invalid_argument, "listing " + listing.listing_id + " is sold as " +
                                                std::string(registry::mode_token(listing.terms.mode)) +
                                                ", not by " + std::string(kind_token(kind)) + " license");
    }
    if (kind == LicenseKind::subscription && (months < 1 || months > 120)) {
        throw Error(Errc::invalid_argument, "subscription length must be 1..120 months");
    }
    check_time(timestamp);
    if (active_license(account_id, listing.listing_id, timestamp)) {
        throw Error(Errc::conflict, account_id + " already holds a license for " + listing.listing_id);
    }
    last_ts_ = timestamp;

    License l;
    char key[32];
    std::snprintf(key, sizeof key, "lic-%06zu", licenses_.size() + 1);
    l.license_key = key;
    l.account_id = account_id;
    l.listing_id = listing.listing_id;
    l.kind = kind;
    l.granted_at = timestamp;
    if (kind == LicenseKind::outright) {
        l.outright_price = listing.terms.outright_price;
    } else {
        l.months = months;
        l.period_start = timestamp;
        l.period_end = Period::containing(timestamp).plus_months(static_cast<int>(months)).start();
        l.monthly_fee = listing.terms.monthly_fee;
    }
    licenses_.push_back(std::move(l));
    return licenses_.back();
}

std::vector<Money> Billing::charge_for_request(std::string_view account_id, std::span<const AdapterListing> stack,
                                               std::uint64_t units, std::int64_t t) const {
    std::vector<Money> charges;
    charges.reserve(stack.size());
    for (const auto& listing : stack) {
        const License* lic = active_license(account_id, listing.listing_id, t);
        if (!lic) {
            throw Error(Errc::payment_required,
                        std::string(account_id) + " holds no current license for " + listing.listing_id);
        }
        const bool metered = lic->kind == LicenseKind::subscription && registry::charges_metered(listing.terms.mode);
        charges.push_back(metered ? metered_charge(units, listing.terms.per_1k_units) : 0);
    }
    return charges;
}

const UsageEvent& Billing::record_usage(UsageEvent event) {
    if (event.charges.size() != event.adapter_ids.size() || event.listing_ids.size() != event.adapter_ids.size()) {
        throw Error(Errc::invalid_argument, "charges must align with adapter_ids");
    }
    check_time(event.timestamp);
    last_ts_ = event.timestamp;
    event.seq = usage_.size();
    usage_.push_back(std::move(event));
    return usage_.back();
}

void Billing::close_period(const Period& p, std::int64_t now) {
    if (closed_.contains(p)) return;
    if (now < p.end()) throw Error(Errc::too_early, "period " + p.str() + " has not ended");
    check_time(now);
    last_ts_ = now;
    closed_.emplace(p, Boundary{usage_.size(), licenses_.size()});
}

std::vector<Period> Billing::closed_periods() const {
    std::vector<Period> out;
    for (const auto& [p, b] : closed_) out.push_back(p);
    return out;
}

const Billing::Boundary& Billing::boundary(const Period& p) const {
    const auto it = closed_.find(p);
    if (it == closed_.end()) throw Error(Errc::too_early, "period " + p.str() + " is not closed");
    return it->second;
}

std::map<std::string, InvoiceLine> Billing::lines_for(const Period& p, const Boundary& b,
                                                      std::string_view account_id) const {
    std::map<std::string, InvoiceLine> lines;
    auto line = [&](const std::string& id) -> InvoiceLine& {
        auto& l = lines[id];
        l.listing_id = id;
        return l;
    };
    const bool all = account_id.empty();
    for (std::size_t i = 0; i < b.usage; ++i) {
        const auto& e = usage_[i];
        if ((!all && e.account_id != account_id) || !p.contains(e.timestamp)) continue;
        for (std::size_t k = 0; k < e.listing_ids.size(); ++k) {
            auto& l = line(e.listing_ids[k]);
            l.units += e.units;
            l.metered += e.charges[k];
        }
    }
    for (std::size_t i = 0; i < b.licenses; ++i) {
        const auto& lic = licenses_[i];
        if (!all && lic.account_id != account_id) continue;
        const Period first = Period::containing(lic.granted_at);
        if (lic.kind == LicenseKind::outright) {
            if (first == p) line(lic.listing_id).outright_purchases += lic.outright_price;
        } else if (first <= p && p < first.plus_months(static_cast<int>(lic.months))) {
            line(lic.listing_id).subscription_fees += lic.monthly_fee;
        }
    }
    for (auto& [id, l] : lines) l.total = l.metered + l.subscription_fees + l.outright_purchases;
    return lines;
}

Invoice Billing::invoice(const std::string& account_id, const Period& p) const {
    if (account_id.empty()) throw Error(Errc::invalid_argument, "invoice needs an account");
    Invoice inv;
    inv.account_id = account_id;
    inv.period = p;
    for (auto& [id, l] : lines_for(p, boundary(p), account_id)) {
        inv.total += l.total;
        inv.lines.push_back(std::move(l));
    }
    return inv;
}

PayoutStatement Billing::payout(const std::string& provider_id, const Period& p) const {
    if (!providers_.contains(provider_id)) throw Error(Errc::not_found, "unknown provider " + provider_id);
    PayoutStatement s;
    s.provider_id = provider_id;
    s.period = p;
    s.share = share_;
    for (const auto& [id, l] : lines_for(p, boundary(p), {})) {
        const auto owner = listing_provider_.find(id);
        if (owner == listing_provider_.end() || owner->second != provider_id) continue;
        PayoutLine pl;
        pl.listing_id = id;
        pl.gross = l.total;
        pl.platform_cut = platform_cut(pl.gross, share_);
        pl.net = pl.gross - pl.platform_cut;
        s.total_gross += pl.gross;
        s.total_platform_cut += pl.platform_cut;
        s.total_net += pl.net;
        s.lines.push_back(std::move(pl));
    }
    return s;
}

std::vector<LeaderboardEntry> Billing::leaderboard(const Period& p, std::size_t n) const {
    std::map<std::string, std::uint64_t> units;
    for (const auto& e : usage_) {
        if (!p.contains(e.timestamp) || e.units == 0) continue;
        for (const auto& id : e.listing_ids) units[id] += e.units;
    }
    std::vector<LeaderboardEntry> board;
    for (const auto& [id, u] : units) board.push_back({id, u});
    std::stable_sort(board.begin(), board.end(),
                     [](const LeaderboardEntry& a, const LeaderboardEntry& b) { return a.units > b.units; });
    if (board.size() > n) board.resize(n);
    return board;
}

std::vector<UsageEvent> Billing::usage(std::string_view account_id, const Period& p) const {
    std::vector<UsageEvent> out;
    for (const auto& e : usage_)
        if ((account_id.empty() || e.account_id == account_id) && p.contains(e.timestamp)) out.push_back(e);
    return out;
}

std::vector<std::string> Billing::accounts() const {
    std::set<std::string> ids;
    for (const auto& l : licenses_) ids.insert(l.account_id);
    for (const auto& e : usage_) ids.insert(e.account_id);
    return {ids.begin(), ids.end()};
}

std::vector<registry::DemandWindow> Billing::demand_history(std::string_view listing_id) const {
    std::map<std::int64_t, std::uint64_t> per_day;
    for (const auto& e : usage_) {
        if (std::find(e.listing_ids.begin(), e.listing_ids.end(), listing_id) != e.listing_ids.end()) {
            per_day[day_of(e.timestamp)] += e.units;
        }
    }
    std::vector<registry::DemandWindow> out;
    for (const auto& [day, u] : per_day) out.push_back({std::string(listing_id), day, u});
    return out;
}

nlohmann::ordered_json to_json(const License& l) {
    nlohmann::ordered_json j;
    j["license_key"] = l.license_key;
    j["account_id"] = l.account_id;
    j["listing_id"] = l.listing_id;
    j["kind"] = kind_token(l.kind);
    j["granted_at"] = l.granted_at;
    j["period_start"] = l.period_start;
    j["period_end"] = l.period_end;
    j["months"] = l.months;
    j["outright_price"] = l.outright_price;
    j["monthly_fee"] = l.monthly_fee;
    return j;
}

nlohmann::ordered_json to_json(const UsageEvent& e) {
    nlohmann::ordered_json j;
    j["seq"] = e.seq;
    j["timestamp"] = e.timestamp;
    j["account_id"] = e.account_id;
    j["model_id"] = e.model_id;
    j["adapter_ids"] = e.adapter_ids;
    j["listing_ids"] = e.listing_ids;
    j["units"] = e.units;
    j["charges"] = e.charges;
    return j;
}

nlohmann::ordered_json to_json(const Invoice& inv) {
    nlohmann::ordered_json j;
    j["account_id"] = inv.account_id;
    j["period"] = inv.period.str();
    j["line_items"] = nlohmann::ordered_json::array();
    for (const auto& l : inv.lines) {
        nlohmann::ordered_json li;
        li["listing_id"] = l.listing_id;
        li["units"] = l.units;
        li["metered_charges"] = l.metered;
        li["subscription_fees"] = l.subscription_fees;
        li["outright_purchases"] = l.outright_purchases;
        li["total"] = l.total;
        j["line_items"].push_back(std::move(li));
    }
    j["total"] = inv.total;
    return j;
}

nlohmann::ordered_json to_json(const PayoutStatement& s) {
    nlohmann::ordered_json j;
    j["provider_id"] = s.provider_id;
    j["period"] = s.period.str();
    j["revenue_share"] = {{"num", s.share.num}, {"den", s.share.den}};
    j["lines"] = nlohmann::ordered_json::array();
    for (const auto& l : s.lines) {
        nlohmann::ordered_json pl;
        pl["listing_id"] = l.listing_id;
        pl["gross"] = l.gross;
        pl["platform_cut"] = l.platform_cut;
        pl["net"] = l.net;
        j["lines"].push_back(std::move(pl));
    }
    j["total_gross"] = s.total_gross;
    j["total_platform_cut"] = s.total_platform_cut;
    j["total_net"] = s.total_net;
    return j;
}

nlohmann::ordered_json to_json(std::span<const LeaderboardEntry> board) {
    auto j = nlohmann::ordered_json::array();
    for (const auto& e : board) {
        nlohmann::ordered_json row;
        row["listing_id"] = e.listing_id;
        row["units"] = e.units;
        j.push_back(std::move(row));
    }
    return j;
}

}  // namespace viz::billing
