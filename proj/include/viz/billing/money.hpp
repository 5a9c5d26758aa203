// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "viz/registry/pricing.hpp"

namespace viz::billing {

using registry::Money;

// round-half-even(units * per_1k / 1000), exact.
Money metered_charge(std::uint64_t units, Money per_1k);

// Platform fraction of gross as an exact rational.
struct RevenueShare {
    std::int64_t num = 30;
    std::int64_t den = 100;

    bool operator==(const RevenueShare&) const = default;
};

// Throws invalid-argument unless 0 <= num <= den and den > 0.
void validate_share(const RevenueShare& share);

// floor(num * gross / den); the remainder stays with the provider.
Money platform_cut(Money gross, const RevenueShare& share);

// A UTC calendar month, written "YYYY-MM".
class Period {
public:
    Period() = default;
    Period(int year, int month);

    // Throws invalid-argument.
    static Period parse(std::string_view text);
    static Period containing(std::int64_t unix_seconds);

    int year() const noexcept { return year_; }
    int month() const noexcept { return month_; }
    std::string str() const;

    // [start, end) in UTC seconds.
    std::int64_t start() const;
    std::int64_t end() const;
    bool contains(std::int64_t t) const { return t >= start() && t < end(); }
    Period plus_months(int n) const;

    auto operator<=>(const Period&) const = default;

private:
    int year_ = 1970;
    int month_ = 1;
};

inline constexpr std::int64_t kSecondsPerDay = 86400;

// Days since 1970-01-01 for a UTC timestamp.
std::int64_t day_of(std::int64_t unix_seconds);

}  // namespace viz::billing
