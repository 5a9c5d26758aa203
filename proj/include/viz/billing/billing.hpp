// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "viz/billing/money.hpp"
#include "viz/registry/registry.hpp"

namespace viz::billing {

using registry::AdapterListing;

enum class LicenseKind { outright, subscription };

std::string_view kind_token(LicenseKind k) noexcept;
std::optional<LicenseKind> parse_kind(std::string_view token);

struct License {
    std::string license_key;
    std::string account_id;
    std::string listing_id;
    LicenseKind kind = LicenseKind::subscription;
    std::int64_t granted_at = 0;
    // Subscription validity [period_start, period_end); both 0 for outright licenses.
    std::int64_t period_start = 0;
    std::int64_t period_end = 0;
    std::uint32_t months = 0;
    // Prices fixed at grant time.
    Money outright_price = 0;
    Money monthly_fee = 0;

    bool covers(std::int64_t t) const {
        return kind == LicenseKind::outright || (t >= period_start && t < period_end);
    }
    bool operator==(const License&) const = default;
};

struct UsageEvent {
    std::uint64_t seq = 0;
    std::int64_t timestamp = 0;
    std::string account_id;
    std::string model_id;
    std::vector<std::string> adapter_ids;
    std::vector<std::string> listing_ids;  // aligned with adapter_ids
    std::uint64_t units = 0;
    std::vector<Money> charges;            // aligned with adapter_ids

    bool operator==(const UsageEvent&) const = default;
};

struct InvoiceLine {
    std::string listing_id;
    std::uint64_t units = 0;
    Money metered = 0;
    Money subscription_fees = 0;
    Money outright_purchases = 0;
    Money total = 0;
};

struct Invoice {
    std::string account_id;
    Period period;
    std::vector<InvoiceLine> lines;  // by listing_id
    Money total = 0;
};

struct PayoutLine {
    std::string listing_id;
    Money gross = 0;
    Money platform_cut = 0;
    Money net = 0;
};

struct PayoutStatement {
    std::string provider_id;
    Period period;
    RevenueShare share;
    std::vector<PayoutLine> lines;  // by listing_id
    Money total_gross = 0;
    Money total_platform_cut = 0;
    Money total_net = 0;
};

struct LeaderboardEntry {
    std::string listing_id;
    std::uint64_t units = 0;
};

// Licenses, metering and period aggregates. Timestamps passed to mutating calls
// must be non-decreasing.
class Billing {
public:
    explicit Billing(RevenueShare share = {});

    const RevenueShare& share() const noexcept { return share_; }

    void add_provider(const std::string& provider_id);
    // Payout attribution for a listing.
    void register_listing(const std::string& listing_id, const std::string& provider_id);

    // Outright listings take outright licenses, every other mode takes a
    // subscription running from `timestamp` to the end of the (months - 1)-th
    // following calendar month. Throws invalid-argument on a kind/mode mismatch or
    // a bad month count, gone for a delisted listing, conflict when the account
    // already holds a license covering `timestamp`.
    const License& grant_license(const std::string& account_id, const AdapterListing& listing, LicenseKind kind,
                                 std::uint32_t months, std::int64_t timestamp);

    const License* active_license(std::string_view account_id, std::string_view listing_id, std::int64_t t) const;

    // One charge per listing, in order. Throws payment-required when any listing
    // lacks a license covering `t`.
    std::vector<Money> charge_for_request(std::string_view account_id, std::span<const AdapterListing> stack,
                                          std::uint64_t units, std::int64_t t) const;

    // Assigns the next seq. Throws invalid-argument on misaligned charges.
    const UsageEvent& record_usage(UsageEvent event);

    // Throws too-early until `now` reaches the end of the period. Closing again is a no-op.
    void close_period(const Period& p, std::int64_t now);
    bool is_closed(const Period& p) const { return closed_.contains(p); }
    std::vector<Period> closed_periods() const;

    // Both throw too-early for a period that is not closed.
    Invoice invoice(const std::string& account_id, const Period& p) const;
    // not-found for an unknown provider.
    PayoutStatement payout(const std::string& provider_id, const Period& p) const;

    // Top n listings by units in the period; listings with no units are left out.
    std::vector<LeaderboardEntry> leaderboard(const Period& p, std::size_t n) const;

    std::vector<UsageEvent> usage(std::string_view account_id, const Period& p) const;
    std::span<const UsageEvent> all_usage() const noexcept { return usage_; }
    std::span<const License> licenses() const noexcept { return licenses_; }
    // Accounts with any license or usage, sorted.
    std::vector<std::string> accounts() const;
    const std::set<std::string, std::less<>>& providers() const noexcept { return providers_; }

    // Units per day for one listing, for price suggestions.
    std::vector<registry::DemandWindow> demand_history(std::string_view listing_id) const;

    std::int64_t last_timestamp() const noexcept { return last_ts_; }

private:
    struct Boundary {
        std::size_t usage = 0;
        std::size_t licenses = 0;
    };

    void check_time(std::int64_t t) const;
    std::map<std::string, InvoiceLine> lines_for(const Period& p, const Boundary& b,
                                                 std::string_view account_id) const;
    const Boundary& boundary(const Period& p) const;

    RevenueShare share_;
    std::vector<License> licenses_;
    std::vector<UsageEvent> usage_;
    std::map<std::string, std::string, std::less<>> listing_provider_;
    std::set<std::string, std::less<>> providers_;
    std::map<Period, Boundary> closed_;
    std::int64_t last_ts_ = 0;
};

nlohmann::ordered_json to_json(const License& l);
nlohmann::ordered_json to_json(const UsageEvent& e);
nlohmann::ordered_json to_json(const Invoice& inv);
nlohmann::ordered_json to_json(const PayoutStatement& s);
nlohmann::ordered_json to_json(std::span<const LeaderboardEntry> board);

}  // namespace viz::billing
