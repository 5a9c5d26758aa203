// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/billing/money.hpp"

#include <charconv>
#include <cstdio>

#include "viz/error.hpp"

namespace viz::billing {
namespace {

__extension__ typedef __int128 i128;
__extension__ typedef unsigned __int128 u128;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    const std::int64_t q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

// Proleptic Gregorian day count, after H. Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = floor_div(y, 400);
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m) {
    z += 719468;
    const std::int64_t era = floor_div(z, 146097);
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    m = mp < 10 ? mp + 3 : mp - 9;
    y = static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2);
}

}  // namespace

Money metered_charge(std::uint64_t units, Money per_1k) {
    if (per_1k < 0) throw Error(Errc::invalid_argument, "negative unit price");
    const u128 n = static_cast<u128>(units) * static_cast<u128>(per_1k);
    u128 q = n / 1000;
    const auto r = static_cast<unsigned>(n % 1000);
    if (r > 500 || (r == 500 && (q & 1) != 0)) ++q;
    if (q > static_cast<u128>(INT64_MAX)) throw Error(Errc::invalid_argument, "charge overflows");
    return static_cast<Money>(q);
}

void validate_share(const RevenueShare& s) {
    if (s.den <= 0 || s.num < 0 || s.num > s.den) {
        throw Error(Errc::invalid_argument, "revenue share must be a fraction in [0, 1]");
    }
}

Money platform_cut(Money gross, const RevenueShare& s) {
    validate_share(s);
    const i128 p = static_cast<i128>(gross) * s.num;
    i128 q = p / s.den;
    if (p % s.den != 0 && p < 0) --q;
    return static_cast<Money>(q);
}

Period::Period(int year, int month) : year_(year), month_(month) {
    if (month < 1 || month > 12 || year < 1970 || year > 9999) {
        throw Error(Errc::invalid_argument, "period out of range");
    }
}

Period Period::parse(std::string_view text) {
    int y = 0;
    int m = 0;
    const bool shape = text.size() == 7 && text[4] == '-';
    if (shape) {
        const auto ry = std::from_chars(text.data(), text.data() + 4, y);
        const auto rm = std::from_chars(text.data() + 5, text.data() + 7, m);
        if (ry.ec == std::errc() && ry.ptr == text.data() + 4 && rm.ec == std::errc() &&
            rm.ptr == text.data() + 7 && text[5] >= '0' && text[0] >= '0' && m >= 1 && m <= 12 && y >= 1970) {
            return Period(y, m);
        }
    }
    throw Error(Errc::invalid_argument, "period must be written YYYY-MM, got '" + std::string(text) + "'");
}

Period Period::containing(std::int64_t t) {
    std::int64_t y = 0;
    unsigned m = 0;
    civil_from_days(day_of(t), y, m);
    return Period(static_cast<int>(y), static_cast<int>(m));
}

std::string Period::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year_, month_);
    return buf;
}

std::int64_t Period::start() const {
    return days_from_civil(year_, static_cast<unsigned>(month_), 1) * kSecondsPerDay;
}

std::int64_t Period::end() const { return plus_months(1).start(); }

Period Period::plus_months(int n) const {
    const int idx = year_ * 12 + (month_ - 1) + n;
    return Period(idx / 12, idx % 12 + 1);
}

std::int64_t day_of(std::int64_t t) { return floor_div(t, kSecondsPerDay); }

}  // namespace viz::billing
