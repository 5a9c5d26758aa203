// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "viz/adapter/codebook.hpp"
#include "viz/error.hpp"
#include "viz/prng.hpp"
#include "viz/registry/registry.hpp"

namespace viz::registry {
namespace {

using adapter::Matrix;

Matrix random_matrix(std::size_t rows, std::size_t cols, Xoshiro256& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

adapter::AdapterBundle bundle_for(const std::string& id, std::size_t layer, std::size_t d_in, std::size_t d_out,
                                  std::uint64_t seed = 1, const std::string& model = "toy") {
    Xoshiro256 rng(seed);
    adapter::LoraAdapter a(id, layer, 2.0, random_matrix(2, d_in, rng), random_matrix(d_out, 2, rng));
    return adapter::make_bundle(a.quantize(adapter::build_nf4_codebook()), model);
}

compliance::LicenseManifest manifest_of(std::initializer_list<const char*> licenses) {
    compliance::LicenseManifest m;
    int i = 0;
    for (const char* id : licenses) {
        const std::string uri = "https://data.example/" + std::to_string(i++);
        m.sources.push_back({uri, id, to_hex(sha256(uri))});
    }
    m.data_usage_disclosure = "public corpus";
    return m;
}

ListingDraft draft(const std::string& provider, double perf, const std::string& domain = "medical",
                   PricingTerms terms = {PricingMode::metered, 0, 0, 5000}) {
    return {provider, {domain, "en", perf}, terms};
}

class RegistryTest : public ::testing::Test {
protected:
    void SetUp() override {
        auto m = model::generate_base_model("toy", 7, {4, 6, 3});
        models.emplace(m.model_id(), std::move(m));
    }

    template <typename F>
    static Errc code_of(F&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.code();
        }
        ADD_FAILURE() << "no error thrown";
        return Errc::io_error;
    }

    ModelCatalog models;
    Registry reg;
};

TEST_F(RegistryTest, PublishCreatesActiveSearchableListing) {
    const auto& l = reg.publish(bundle_for("ad-1", 0, 4, 6), draft("prov-a", 0.8), manifest_of({"CC0-1.0"}), models, 100);
    EXPECT_EQ(l.listing_id, "lst-000001");
    EXPECT_EQ(l.status, ListingStatus::active);
    EXPECT_EQ(l.base_model_id, "toy");
    ASSERT_EQ(reg.provenance().size(), 1u);
    EXPECT_TRUE(reg.provenance().verify());
    EXPECT_EQ(reg.provenance().records()[0].adapter_id, "ad-1");
    EXPECT_EQ(reg.provenance().records()[0].manifest_hash, l.manifest_hash);
    EXPECT_EQ(reg.search({}).size(), 1u);
    EXPECT_EQ(reg.find_by_adapter("ad-1")->listing_id, l.listing_id);
    EXPECT_EQ(reg.adapter(l.listing_id).d_in(), 4u);
}

TEST_F(RegistryTest, DisallowedLicenseIsRefusedWithIndices) {
    try {
        reg.publish(bundle_for("ad-1", 0, 4, 6), draft("p", 0.5), manifest_of({"CC0-1.0", "proprietary"}), models, 1);
        FAIL();
    } catch (const PublicationRefused& e) {
        ASSERT_EQ(e.violations().size(), 1u);
        EXPECT_EQ(e.violations()[0].index, 1u);
        EXPECT_EQ(e.violations()[0].license_id, "proprietary");
    }
    EXPECT_TRUE(reg.all().empty());
    EXPECT_EQ(reg.provenance().size(), 0u);
}

TEST_F(RegistryTest, PublishErrors) {
    auto tampered = bundle_for("ad-1", 0, 4, 6);
    tampered.payload[3] ^= 0x10;
    EXPECT_EQ(code_of([&] { reg.publish(tampered, draft("p", 0.5), manifest_of({"MIT"}), models, 1); }),
              Errc::corrupt_bundle);
    EXPECT_EQ(code_of([&] {
                  reg.publish(bundle_for("ad-1", 0, 4, 6, 1, "ghost"), draft("p", 0.5), manifest_of({"MIT"}), models, 1);
              }),
              Errc::not_found);
    EXPECT_EQ(code_of([&] { reg.publish(bundle_for("ad-1", 1, 4, 6), draft("p", 0.5), manifest_of({"MIT"}), models, 1); }),
              Errc::invalid_shape);
    EXPECT_EQ(code_of([&] { reg.publish(bundle_for("ad-1", 2, 3, 3), draft("p", 0.5), manifest_of({"MIT"}), models, 1); }),
              Errc::invalid_shape);
    EXPECT_EQ(code_of([&] { reg.publish(bundle_for("ad-1", 0, 4, 6), draft("p", 1.5), manifest_of({"MIT"}), models, 1); }),
              Errc::invalid_argument);
    EXPECT_EQ(code_of([&] {
                  reg.publish(bundle_for("ad-1", 0, 4, 6), draft("p", 0.5, "x", {PricingMode::outright, 0, 10, 0}),
                              manifest_of({"MIT"}), models, 1);
              }),
              Errc::invalid_argument);
    EXPECT_EQ(code_of([&] { reg.publish(bundle_for("ad-1", 0, 4, 6), draft("p", 0.5), compliance::LicenseManifest{}, models, 1); }),
              Errc::invalid_manifest);
    EXPECT_TRUE(reg.all().empty());
    EXPECT_EQ(reg.provenance().size(), 0u);

    reg.publish(bundle_for("ad-1", 0, 4, 6), draft("p", 0.5), manifest_of({"MIT"}), models, 1);
    EXPECT_EQ(code_of([&] { reg.publish(bundle_for("ad-1", 1, 6, 3), draft("p", 0.5), manifest_of({"MIT"}), models, 2); }),
              Errc::conflict);
    EXPECT_EQ(reg.provenance().size(), 1u);
}

TEST_F(RegistryTest, SearchExamples) {
    reg.publish(bundle_for("hi", 0, 4, 6), draft("p", 0.95), manifest_of({"MIT"}), models, 1);
    reg.publish(bundle_for("lo", 1, 6, 3), draft("p", 0.5), manifest_of({"MIT"}), models, 2);
    EXPECT_EQ(reg.search({}).size(), 2u);
    SearchFilter f;
    f.min_perf = 0.9;
    const auto hits = reg.search(f);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].adapter_id, "hi");
    SearchFilter legal;
    legal.domain = "legal";
    EXPECT_TRUE(reg.search(legal).empty());
}

TEST_F(RegistryTest, SearchIsADeterministicTotalOrder) {
    Xoshiro256 rng(5);
    const char* domains[] = {"legal", "medical", "code"};
    const PricingTerms modes[] = {{PricingMode::outright, 90000, 0, 0},
                                  {PricingMode::subscription, 0, 20000, 0},
                                  {PricingMode::metered, 0, 0, 3000},
                                  {PricingMode::subscription_metered, 0, 1000, 1000}};
    for (int i = 0; i < 40; ++i) {
        // Coarse scores force ties that the listing_id must break.
        const double perf = static_cast<double>(rng.next() % 5) / 4.0;
        reg.publish(bundle_for("ad-" + std::to_string(i), 0, 4, 6, static_cast<std::uint64_t>(i)),
                    draft("p" + std::to_string(i % 3), perf, domains[rng.next() % 3], modes[rng.next() % 4]),
                    manifest_of({"CC0-1.0"}), models, i);
    }
    reg.delist("lst-000007", "p0");
    for (int trial = 0; trial < 50; ++trial) {
        SearchFilter f;
        if (rng.next() % 2) f.domain = domains[rng.next() % 3];
        if (rng.next() % 2) f.min_perf = static_cast<double>(rng.next() % 5) / 4.0;
        if (rng.next() % 2) f.mode = modes[rng.next() % 4].mode;
        const auto hits = reg.search(f);
        EXPECT_EQ(hits, reg.search(f));
        std::size_t expected = 0;
        for (const auto& l : reg.all()) {
            expected += l.status == ListingStatus::active && (!f.domain || l.category.domain == *f.domain) &&
                        (!f.min_perf || l.category.perf_score >= *f.min_perf) && (!f.mode || l.terms.mode == *f.mode);
        }
        EXPECT_EQ(hits.size(), expected);
        for (std::size_t i = 1; i < hits.size(); ++i) {
            const auto& a = hits[i - 1];
            const auto& b = hits[i];
            EXPECT_TRUE(a.category.perf_score > b.category.perf_score ||
                        (a.category.perf_score == b.category.perf_score && a.listing_id < b.listing_id));
        }
        for (const auto& l : hits) EXPECT_NE(l.listing_id, "lst-000007");
    }
}

TEST_F(RegistryTest, UpdatePriceRules) {
    const auto id = reg.publish(bundle_for("ad", 0, 4, 6), draft("owner", 0.5), manifest_of({"MIT"}), models, 1).listing_id;
    const PricingTerms next{PricingMode::metered, 0, 0, 7000};
    EXPECT_EQ(reg.update_price(id, "owner", next, 50).terms, next);
    ASSERT_EQ(reg.price_history().size(), 1u);
    EXPECT_EQ(reg.price_history()[0].timestamp, 50);
    EXPECT_EQ(code_of([&] { reg.update_price(id, "intruder", next, 51); }), Errc::forbidden);
    EXPECT_EQ(code_of([&] { reg.update_price(id, "owner", {PricingMode::metered, 0, 0, -1}, 51); }),
              Errc::invalid_argument);
    EXPECT_EQ(code_of([&] { reg.update_price("lst-999999", "owner", next, 51); }), Errc::not_found);
    reg.delist(id, "owner");
    EXPECT_EQ(code_of([&] { reg.update_price(id, "owner", next, 52); }), Errc::gone);
    EXPECT_TRUE(reg.search({}).empty());
    EXPECT_EQ(reg.price_history().size(), 1u);
}

TEST(PricingTerms, ModeRules) {
    EXPECT_NO_THROW(validate_terms({PricingMode::outright, 100, 0, 0}));
    EXPECT_NO_THROW(validate_terms({PricingMode::subscription_metered, 0, 5, 6}));
    EXPECT_THROW(validate_terms({PricingMode::subscription, 0, 5, 6}), Error);
    EXPECT_THROW(validate_terms({PricingMode::metered, 1, 0, 6}), Error);
    for (auto m : {PricingMode::outright, PricingMode::subscription, PricingMode::metered,
                   PricingMode::subscription_metered}) {
        EXPECT_EQ(parse_mode(mode_token(m)), m);
    }
    EXPECT_FALSE(parse_mode("rent").has_value());
    const PricingTerms t{PricingMode::subscription_metered, 0, 100000, 2500};
    EXPECT_EQ(terms_from_json(nlohmann::json::parse(to_json(t).dump())), t);
    EXPECT_EQ(terms_from_json(nlohmann::json::parse(R"({"mode":"metered","per_1k_units":3})")).per_1k_units, 3);
}

std::vector<DemandWindow> series(const std::vector<std::uint64_t>& units, std::int64_t last_day) {
    std::vector<DemandWindow> out;
    const auto first = last_day - static_cast<std::int64_t>(units.size()) + 1;
    for (std::size_t i = 0; i < units.size(); ++i) out.push_back({"l", first + static_cast<std::int64_t>(i), units[i]});
    return out;
}

TEST(SuggestPrice, ExactExamples) {
    EXPECT_EQ(scale_price(10000, price_multiplier({2.0, 1.0})), 15000);
    EXPECT_EQ(scale_price(10000, price_multiplier({0.0, 1.0})), 5000);
    EXPECT_EQ(scale_price(10000, price_multiplier({400.0, 100.0})), 20000);
    EXPECT_DOUBLE_EQ(price_multiplier({7.0, 7.0}), 1.0);
    EXPECT_DOUBLE_EQ(price_multiplier({5.0, 0.0}), 1.0);
}

TEST(SuggestPrice, ConstantDemandKeepsPrice) {
    const PricingTerms t{PricingMode::metered, 0, 0, 12345};
    EXPECT_EQ(suggest_price(t, series(std::vector<std::uint64_t>(30, 17), 500), 500), 12345);
}

TEST(SuggestPrice, DoubledAndVanishedDemand) {
    const PricingTerms t{PricingMode::metered, 0, 0, 10000};
    std::vector<std::uint64_t> doubled(15, 0);
    doubled.resize(30, 40);
    EXPECT_EQ(suggest_price(t, series(doubled, 100), 100), 15000);
    std::vector<std::uint64_t> vanished(10, 90);
    vanished.resize(30, 0);
    EXPECT_EQ(suggest_price(t, series(vanished, 100), 100), 5000);
}

TEST(SuggestPrice, EmptyOrZeroHistoryKeepsPrice) {
    const PricingTerms t{PricingMode::subscription_metered, 0, 100, 9999};
    EXPECT_EQ(suggest_price(t, {}, 10), 9999);
    EXPECT_EQ(suggest_price(t, series(std::vector<std::uint64_t>(30, 0), 10), 10), 9999);
    EXPECT_EQ(suggest_price(t, series({5, 5, 5}, 10), 200), 9999);  // all outside the window
}

TEST(SuggestPrice, NonMeteredIsNotApplicable) {
    try {
        suggest_price({PricingMode::subscription, 0, 100, 0}, {}, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::not_applicable);
    }
}

TEST(SuggestPrice, StatsMatchClosedForm) {
    Xoshiro256 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint64_t> units(30);
        for (auto& u : units) u = rng.next() % 1000;
        const auto s = demand_stats(series(units, 1000), 1000);
        ASSERT_TRUE(s.has_value());
        double ema = std::pow(1.0 - kEmaLambda, 29) * static_cast<double>(units[0]);
        double sum = static_cast<double>(units[0]);
        for (int i = 1; i < 30; ++i) {
            ema += kEmaLambda * std::pow(1.0 - kEmaLambda, 29 - i) * static_cast<double>(units[i]);
            sum += static_cast<double>(units[i]);
        }
        EXPECT_NEAR(s->ema, ema, 1e-9 * (1.0 + ema));
        EXPECT_NEAR(s->reference, sum / 30.0, 1e-9 * (1.0 + sum));
    }
}

TEST(SuggestPrice, MultiplierBoundsAndQuantum) {
    Xoshiro256 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<DemandWindow> history;
        const auto n = rng.next() % 40;
        for (std::uint64_t i = 0; i < n; ++i) history.push_back({"l", static_cast<std::int64_t>(rng.next() % 45), rng.next() % 50});
        const PricingTerms t{PricingMode::metered, 0, 0, static_cast<Money>(rng.next() % 100000)};
        const auto stats = demand_stats(history, 40);
        if (stats) {
            const double m = price_multiplier(*stats);
            EXPECT_GE(m, 0.5);
            EXPECT_LE(m, 2.0);
        }
        const Money p = suggest_price(t, history, 40);
        EXPECT_TRUE(p == t.per_1k_units || p % 1000 == 0) << p;
    }
}

TEST_F(RegistryTest, SuggestFiltersByListing) {
    const auto id = reg.publish(bundle_for("ad", 0, 4, 6), draft("p", 0.5, "x", {PricingMode::metered, 0, 0, 10000}),
                                manifest_of({"MIT"}), models, 1)
                        .listing_id;
    std::vector<std::uint64_t> doubled(15, 0);
    doubled.resize(30, 8);
    auto history = series(doubled, 60);
    for (auto& w : history) w.listing_id = id;
    history.push_back({"lst-000099", 60, 100000});
    EXPECT_EQ(reg.suggest_price(id, history, 60), 15000);
}

}  // namespace
}  // namespace viz::registry
