// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

namespace viz::registry {

// Integer micro-USD.
using Money = std::int64_t;

enum class PricingMode { outright, subscription, metered, subscription_metered };

// "outright", "subscription", "metered", "subscription+metered".
std::string_view mode_token(PricingMode mode) noexcept;
std::optional<PricingMode> parse_mode(std::string_view token);

bool charges_monthly(PricingMode mode) noexcept;
bool charges_metered(PricingMode mode) noexcept;

struct PricingTerms {
    PricingMode mode = PricingMode::metered;
    Money outright_price = 0;
    Money monthly_fee = 0;
    Money per_1k_units = 0;  // per 1000 metered units

    bool operator==(const PricingTerms&) const = default;
};

// Throws invalid-argument on a negative price or a nonzero price the mode does not use.
void validate_terms(const PricingTerms& t);

nlohmann::ordered_json to_json(const PricingTerms& t);
// Throws invalid-argument. Fields the mode does not use may be omitted.
PricingTerms terms_from_json(const nlohmann::json& j);

inline constexpr double kEmaLambda = 0.3;
inline constexpr double kPriceSensitivity = 0.5;
inline constexpr double kMinMultiplier = 0.5;
inline constexpr double kMaxMultiplier = 2.0;
inline constexpr std::int64_t kDemandWindowDays = 30;
inline constexpr Money kPriceQuantum = 1000;

// Units billed to one listing on one UTC day (days since 1970-01-01).
struct DemandWindow {
    std::string listing_id;
    std::int64_t day = 0;
    std::uint64_t units = 0;
};

struct DemandStats {
    double ema = 0.0;
    double reference = 0.0;
};

// Over the 30 days ending at as_of_day, with days lacking a window counted as
// zero: ema seeded with the oldest day, reference = plain mean. nullopt when no
// window falls inside the range.
std::optional<DemandStats> demand_stats(std::span<const DemandWindow> history, std::int64_t as_of_day);

// clamp(1 + 0.5 * (ema - reference) / reference, 0.5, 2.0); 1 when reference is 0.
double price_multiplier(const DemandStats& s);

// price * multiplier rounded half-even to a multiple of 1000. A multiplier of
// exactly 1 leaves the price as it is.
Money scale_price(Money price, double multiplier);

// Throws not-applicable unless the mode is metered.
Money suggest_price(const PricingTerms& terms, std::span<const DemandWindow> history, std::int64_t as_of_day);

}  // namespace viz::registry
