// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/registry/pricing.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <vector>

#include "viz/error.hpp"

namespace viz::registry {

std::string_view mode_token(PricingMode mode) noexcept {
    switch (mode) {
        case PricingMode::outright: return "outright";
        case PricingMode::subscription: return "subscription";
        case PricingMode::metered: return "metered";
        case PricingMode::subscription_metered: return "subscription+metered";
    }
    return "metered";
}

std::optional<PricingMode> parse_mode(std::string_view token) {
    for (auto m : {PricingMode::outright, PricingMode::subscription, PricingMode::metered,
                   PricingMode::subscription_metered}) {
        if (mode_token(m) == token) return m;
    }
    return std::nullopt;
}

bool charges_monthly(PricingMode mode) noexcept {
    return mode == PricingMode::subscription || mode == PricingMode::subscription_metered;
}

bool charges_metered(PricingMode mode) noexcept {
    return mode == PricingMode::metered || mode == PricingMode::subscription_metered;
}

void validate_terms(const PricingTerms& t) {
    if (t.outright_price < 0 || t.monthly_fee < 0 || t.per_1k_units < 0) {
        throw Error(Errc::invalid_argument, "prices must be non-negative");
    }
    const bool outright = t.mode == PricingMode::outright;
    if ((!outright && t.outright_price != 0) || (!charges_monthly(t.mode) && t.monthly_fee != 0) ||
        (!charges_metered(t.mode) && t.per_1k_units != 0)) {
        throw Error(Errc::invalid_argument,
                    "pricing mode " + std::string(mode_token(t.mode)) + " sets a price it does not use");
    }
}

nlohmann::ordered_json to_json(const PricingTerms& t) {
    nlohmann::ordered_json j;
    j["mode"] = mode_token(t.mode);
    j["outright_price"] = t.outright_price;
    j["monthly_fee"] = t.monthly_fee;
    j["per_1k_units"] = t.per_1k_units;
    return j;
}

PricingTerms terms_from_json(const nlohmann::json& j) {
    try {
        PricingTerms t;
        const auto mode = parse_mode(j.at("mode").get<std::string>());
        if (!mode) throw Error(Errc::invalid_argument, "unknown pricing mode");
        t.mode = *mode;
        t.outright_price = j.value("outright_price", Money{0});
        t.monthly_fee = j.value("monthly_fee", Money{0});
        t.per_1k_units = j.value("per_1k_units", Money{0});
        validate_terms(t);
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_argument, std::string("malformed pricing terms: ") + e.what());
    }
}

std::optional<DemandStats> demand_stats(std::span<const DemandWindow> history, std::int64_t as_of_day) {
    const std::int64_t first = as_of_day - kDemandWindowDays + 1;
    std::vector<double> daily(kDemandWindowDays, 0.0);
    bool any = false;
    for (const auto& w : history) {
        if (w.day < first || w.day > as_of_day) continue;
        daily[static_cast<std::size_t>(w.day - first)] += static_cast<double>(w.units);
        any = true;
    }
    if (!any) return std::nullopt;

    DemandStats s;
    s.ema = daily.front();
    double sum = 0.0;
    for (double d : daily) {
        s.ema += kEmaLambda * (d - s.ema);
        sum += d;
    }
    s.reference = sum / static_cast<double>(kDemandWindowDays);
    return s;
}

double price_multiplier(const DemandStats& s) {
    if (s.reference == 0.0) return 1.0;
    const double m = 1.0 + kPriceSensitivity * (s.ema - s.reference) / s.reference;
    return std::clamp(m, kMinMultiplier, kMaxMultiplier);
}

Money scale_price(Money price, double multiplier) {
    if (multiplier == 1.0) return price;
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double quanta = std::nearbyint(static_cast<double>(price) * multiplier / static_cast<double>(kPriceQuantum));
    std::fesetround(saved);
    return static_cast<Money>(quanta) * kPriceQuantum;
}

Money suggest_price(const PricingTerms& terms, std::span<const DemandWindow> history, std::int64_t as_of_day) {
    if (!charges_metered(terms.mode)) {
        throw Error(Errc::not_applicable, "price suggestions apply to metered listings only");
    }
    const auto stats = demand_stats(history, as_of_day);
    if (!stats) return terms.per_1k_units;
    return scale_price(terms.per_1k_units, price_multiplier(*stats));
}

}  // namespace viz::registry
