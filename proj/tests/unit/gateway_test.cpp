// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "viz/canonical.hpp"
#include "viz/compliance/provenance.hpp"
#include "viz/error.hpp"
#include "viz/gateway/event_log.hpp"
#include "viz/gateway/marketplace.hpp"
#include "viz/model/base_model.hpp"

namespace viz::gateway {
namespace {

using registry::PricingMode;
using viz::testing::ManualClock;
using viz::testing::TempDir;

const std::int64_t kJan2026 = 1767225600;

template <typename F>
Errc code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::io_error;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

TEST(EventLogTest, AppendReopenAndVerify) {
    TempDir dir("evlog");
    const auto path = dir.path() / "events.log";
    {
        EventLog log(path);
        EXPECT_TRUE(log.entries().empty());
        for (int i = 0; i < 5; ++i) {
            nlohmann::ordered_json p;
            p["i"] = i;
            p["x"] = 0.1 * i;
            log.commit(log.next(EventKind::usage, 100 + i, p));
        }
        EXPECT_EQ(log.entries()[0].prev_hash, genesis_hash());
        EXPECT_EQ(log.entries()[1].prev_hash, log.entries()[0].hash);
    }
    EventLog reopened(path);
    ASSERT_EQ(reopened.entries().size(), 5u);
    EXPECT_EQ(reopened.entries()[3].payload["i"], 3);
    EXPECT_TRUE(EventLog::verify_file(path));
    auto stale = reopened.next(EventKind::delist, 1, nlohmann::ordered_json::object());
    reopened.commit(reopened.next(EventKind::delist, 1, nlohmann::ordered_json::object()));
    EXPECT_EQ(code_of([&] { reopened.commit(stale); }), Errc::refuse_append);
}

TEST(EventLogTest, EveryByteFlipRefusesStart) {
    TempDir dir("evflip");
    const auto path = dir.path() / "events.log";
    {
        EventLog log(path);
        for (int i = 0; i < 8; ++i) {
            nlohmann::ordered_json p;
            p["account"] = "cons-" + std::to_string(i);
            log.commit(log.next(i % 2 ? EventKind::usage : EventKind::license_grant, 1000 + i, p));
        }
    }
    const auto clean = slurp(path);
    Xoshiro256 rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        auto text = clean;
        text[rng.next() % text.size()] ^= static_cast<char>(1 + rng.next() % 255);
        spit(path, text);
        ASSERT_FALSE(EventLog::verify_file(path)) << trial;
        ASSERT_EQ(code_of([&] { EventLog reopened(path); }), Errc::refuse_start);
    }
    spit(path, clean.substr(0, clean.size() - 1));
    EXPECT_FALSE(EventLog::verify_file(path));
    spit(path, clean);
    EXPECT_TRUE(EventLog::verify_file(path));
}

class MarketplaceTest : public ::testing::Test {
protected:
    std::unique_ptr<Marketplace> open() {
        return std::make_unique<Marketplace>(viz::testing::demo_config(dir.path()), clock.clock());
    }
    const Account& who(Marketplace& m, const char* token) { return m.authenticate(token); }

    TempDir dir{"market"};
    ManualClock clock{kJan2026 + 3600};
};

TEST_F(MarketplaceTest, FreshDirectoryIsEmptyAndHealthy) {
    auto m = open();
    EXPECT_EQ(m->health()["status"], "ok");
    EXPECT_EQ(m->health()["events"], 0);
    EXPECT_TRUE(m->search({}).empty());
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "events.log"));
    EXPECT_EQ(code_of([&] { m->authenticate("nope"); }), Errc::unauthorized);
}

TEST_F(MarketplaceTest, PublishLicenseInferFlow) {
    auto m = open();
    const auto& prov = who(*m, "tok-prov-0");
    const auto& cons = who(*m, "tok-cons-0");
    const auto l = m->publish(prov, viz::testing::publish_request("ad-med", 0, 1, {PricingMode::metered, 0, 0, 5000}));
    EXPECT_EQ(l.listing_id, "lst-000001");
    EXPECT_EQ(l.provider_id, "prov-0");
    EXPECT_EQ(m->event_count(), 1u);

    InferRequest req{viz::testing::kModelId, {"ad-med"}, {std::vector<double>(8, 0.5)}};
    const auto before = m->event_count();
    EXPECT_EQ(code_of([&] { m->infer(cons, req); }), Errc::payment_required);
    EXPECT_EQ(m->event_count(), before);

    m->grant_license(cons, l.listing_id, billing::LicenseKind::subscription, 1);
    clock.advance(10);
    req.inputs.assign(3, std::vector<double>(8, 0.25));
    const auto r = m->infer(cons, req);
    EXPECT_EQ(r.units, 3u);
    ASSERT_EQ(r.charges.size(), 1u);
    EXPECT_EQ(r.charges[0], 15);  // 3 * 5000 / 1000
    EXPECT_EQ(r.usage_seq, 0u);
    ASSERT_EQ(r.outputs.size(), 3u);

    // The response equals a local forward pass through the decoded adapter.
    const auto model = viz::testing::demo_model();
    const auto decoded = adapter::open_bundle(viz::testing::adapter_bundle("ad-med", 0, 1));
    const std::vector<adapter::LoraAdapter> stack = {decoded};
    const auto expected = model::forward(model, model::group_by_layer(model, stack), req.inputs[0]);
    EXPECT_EQ(r.outputs[0], expected);
}

TEST_F(MarketplaceTest, EmptyStackIsBaseInferenceWithUsage) {
    auto m = open();
    const auto r = m->infer(who(*m, "tok-cons-1"), {viz::testing::kModelId, {}, {std::vector<double>(8, 1.0)}});
    EXPECT_TRUE(r.charges.empty());
    EXPECT_EQ(r.units, 1u);
    const auto model = viz::testing::demo_model();
    EXPECT_EQ(r.outputs[0], model::forward(model, {}, std::vector<double>(8, 1.0)));
    EXPECT_EQ(m->usage(who(*m, "tok-cons-1"), billing::Period::containing(clock.now())).size(), 1u);
}

TEST_F(MarketplaceTest, InferErrors) {
    auto m = open();
    const auto& prov = who(*m, "tok-prov-0");
    const auto& cons = who(*m, "tok-cons-0");
    m->publish(prov, viz::testing::publish_request("a", 0, 1, {PricingMode::metered, 0, 0, 1000}));
    m->grant_license(cons, "lst-000001", billing::LicenseKind::subscription, 1);
    const auto events = m->event_count();
    EXPECT_EQ(code_of([&] { m->infer(cons, {"ghost", {}, {std::vector<double>(8)}}); }), Errc::not_found);
    EXPECT_EQ(code_of([&] { m->infer(cons, {"toy", {"b"}, {std::vector<double>(8)}}); }), Errc::not_found);
    EXPECT_EQ(code_of([&] { m->infer(cons, {"toy", {"a"}, {std::vector<double>(7)}}); }), Errc::invalid_shape);
    EXPECT_EQ(code_of([&] { m->infer(cons, {"toy", {"a", "a"}, {std::vector<double>(8)}}); }), Errc::invalid_stack);
    EXPECT_EQ(code_of([&] { m->infer(cons, {"toy", {"a"}, {}}); }), Errc::invalid_argument);
    EXPECT_EQ(m->event_count(), events);
}

TEST_F(MarketplaceTest, RefusedPublicationLeavesNoTrace) {
    auto m = open();
    const auto& prov = who(*m, "tok-prov-0");
    try {
        m->publish(prov, viz::testing::publish_request("bad", 0, 1, {PricingMode::metered, 0, 0, 1}, 0.5,
                                                       {"MIT", "proprietary", "CC0-1.0"}));
        FAIL();
    } catch (const PublicationRefused& e) {
        ASSERT_EQ(e.violations().size(), 1u);
        EXPECT_EQ(e.violations()[0].index, 1u);
    }
    EXPECT_EQ(m->event_count(), 0u);
    EXPECT_TRUE(m->search({}).empty());
    EXPECT_EQ(code_of([&] {
                  m->publish(who(*m, "tok-cons-0"),
                             viz::testing::publish_request("x", 0, 1, {PricingMode::metered, 0, 0, 1}));
              }),
              Errc::forbidden);
}

TEST_F(MarketplaceTest, PeriodsCloseOnlyAfterTheyEnd) {
    auto m = open();
    const auto& admin = who(*m, "tok-admin");
    const auto jan = billing::Period::containing(clock.now());
    EXPECT_EQ(code_of([&] { m->invoice(who(*m, "tok-cons-0"), jan); }), Errc::too_early);
    EXPECT_EQ(code_of([&] { m->close_period(admin, jan); }), Errc::too_early);
    EXPECT_EQ(code_of([&] { m->close_period(who(*m, "tok-cons-0"), jan); }), Errc::forbidden);
    clock.set(jan.end());
    EXPECT_EQ(m->invoice(who(*m, "tok-cons-0"), jan).total, 0);
    const auto events = m->event_count();
    m->close_period(admin, jan);
    EXPECT_EQ(m->event_count(), events);
    EXPECT_EQ(code_of([&] { m->payout(who(*m, "tok-cons-0"), jan); }), Errc::forbidden);
    EXPECT_EQ(code_of([&] { m->invoice(who(*m, "tok-cons-0"), jan, "cons-1"); }), Errc::forbidden);
    EXPECT_EQ(m->payout(admin, jan, "prov-1").total_net, 0);
}

TEST_F(MarketplaceTest, RestartReplaysToIdenticalState) {
    std::string before;
    {
        auto m = open();
        const auto& cons = who(*m, "tok-cons-0");
        m->publish(who(*m, "tok-prov-0"),
                   viz::testing::publish_request("a", 0, 1, {PricingMode::subscription_metered, 0, 70000, 3000}, 0.9));
        m->publish(who(*m, "tok-prov-1"),
                   viz::testing::publish_request("b", 1, 2, {PricingMode::outright, 400000, 0, 0}, 0.4));
        m->grant_license(cons, "lst-000001", billing::LicenseKind::subscription, 2);
        m->grant_license(cons, "lst-000002", billing::LicenseKind::outright, 0);
        for (int i = 0; i < 5; ++i) {
            clock.advance(86400);
            m->infer(cons, {"toy", {"b", "a"}, std::vector<std::vector<double>>(i + 1, std::vector<double>(8, 0.1 * i))});
        }
        m->update_price(who(*m, "tok-prov-0"), "lst-000001", {PricingMode::subscription_metered, 0, 70000, 4000});
        clock.set(billing::Period::containing(clock.now()).end() + 5);
        m->invoice(cons, billing::Period::containing(kJan2026));
        before = m->export_state().dump();
    }
    auto again = open();
    EXPECT_EQ(again->export_state().dump(), before);
    EXPECT_TRUE(compliance::verify_log_file(dir.path() / "provenance.log"));
    EXPECT_EQ(compliance::ProvenanceLog::load(dir.path() / "provenance.log").size(), 2u);
}

TEST_F(MarketplaceTest, TamperedLogOrMissingBlobRefusesStart) {
    {
        auto m = open();
        m->publish(who(*m, "tok-prov-0"), viz::testing::publish_request("a", 0, 1, {PricingMode::metered, 0, 0, 10}));
        m->infer(who(*m, "tok-cons-0"), {"toy", {}, {std::vector<double>(8)}});
    }
    const auto log_path = dir.path() / "events.log";
    const auto clean = slurp(log_path);
    auto text = clean;
    text[text.size() / 2] ^= 0x01;
    spit(log_path, text);
    EXPECT_EQ(code_of([&] { open(); }), Errc::refuse_start);
    spit(log_path, clean);
    EXPECT_NO_THROW(open());

    for (const auto& f : std::filesystem::directory_iterator(dir.path() / "blobs")) {
        auto blob = slurp(f.path());
        blob[0] ^= 0x40;
        spit(f.path(), blob);
    }
    EXPECT_EQ(code_of([&] { open(); }), Errc::refuse_start);
}

TEST_F(MarketplaceTest, ReadersNeverSeePartialWrites) {
    auto m = open();
    const auto& cons = who(*m, "tok-cons-0");
    m->publish(who(*m, "tok-prov-0"), viz::testing::publish_request("a", 0, 1, {PricingMode::metered, 0, 0, 777}));
    m->grant_license(cons, "lst-000001", billing::LicenseKind::subscription, 1);
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::vector<std::thread> readers;
    for (int t = 0; t < 3; ++t) {
        readers.emplace_back([&] {
            while (!done) {
                const auto s = m->export_state();
                const auto& usage = s["usage"];
                for (std::size_t i = 0; i < usage.size(); ++i) {
                    if (usage[i]["seq"] != i || usage[i]["charges"].size() != usage[i]["adapter_ids"].size()) ++bad;
                }
                if (s["listings"].size() != s["provenance"].size()) ++bad;
            }
        });
    }
    std::thread writer([&] {
        for (int i = 0; i < 150; ++i) {
            m->infer(cons, {"toy", {"a"}, {std::vector<double>(8, 0.01 * i)}});
            if (i % 50 == 0) {
                m->publish(who(*m, "tok-prov-1"),
                           viz::testing::publish_request("w" + std::to_string(i), 1, 100 + i, {PricingMode::metered, 0, 0, 5}));
            }
        }
    });
    writer.join();
    done = true;
    for (auto& r : readers) r.join();
    EXPECT_EQ(bad.load(), 0);
    EXPECT_EQ(m->export_state()["usage"].size(), 150u);
}

TEST(GatewayConfigTest, ParsesAndValidates) {
    const auto j = nlohmann::json::parse(R"({
        "port": 9000, "revenue_share": {"num": 1, "den": 4},
        "allowlist": ["MIT"],
        "accounts": [{"account_id": "p", "role": "provider", "token": "t1"},
                     {"account_id": "c", "role": "consumer", "token": "t2"}],
        "models": [{"model_id": "toy", "seed": 3, "layer_dims": [4, 4]}]})");
    const auto cfg = config_from_json(j);
    EXPECT_EQ(cfg.port, 9000);
    EXPECT_EQ(cfg.revenue_share.den, 4);
    EXPECT_EQ(cfg.allowlist.size(), 1u);
    EXPECT_EQ(cfg.accounts[1].role, Role::consumer);
    EXPECT_EQ(config_from_json(nlohmann::json::parse(to_json(cfg).dump())).accounts.size(), 2u);

    auto dup = j;
    dup["accounts"][1]["token"] = "t1";
    EXPECT_THROW(config_from_json(dup), Error);
    auto role = j;
    role["accounts"][0]["role"] = "root";
    EXPECT_THROW(config_from_json(role), Error);
    auto share = j;
    share["revenue_share"]["num"] = 5;
    EXPECT_THROW(config_from_json(share), Error);
}

}  // namespace
}  // namespace viz::gateway
