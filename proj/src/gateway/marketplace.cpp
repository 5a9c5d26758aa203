// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/gateway/marketplace.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>

#include "viz/canonical.hpp"
#include "viz/error.hpp"
#include "viz/model/base_model.hpp"

namespace viz::gateway {

using nlohmann::ordered_json;
using registry::AdapterListing;

Clock system_clock() {
    return [] {
        return static_cast<std::int64_t>(
            std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
                .count());
    };
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(Errc::corrupt_bundle, "missing payload blob " + p.filename().string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ordered_json string_list(const std::vector<std::string>& v) {
    auto j = ordered_json::array();
    for (const auto& s : v) j.push_back(s);
    return j;
}

}  // namespace

Marketplace::Marketplace(GatewayConfig cfg, Clock clock)
    : cfg_(std::move(cfg)), clock_(std::move(clock)), registry_(cfg_.allowlist), billing_(cfg_.revenue_share) {
    for (const auto& spec : cfg_.models) {
        model::BaseModel m = spec.bundle_path ? model::read_model(*spec.bundle_path)
                                              : model::generate_base_model(spec.model_id, spec.seed, spec.layer_dims);
        if (m.model_id() != spec.model_id) {
            throw Error(Errc::refuse_start, "model bundle " + spec.bundle_path->string() + " holds " + m.model_id());
        }
        models_.emplace(spec.model_id, std::move(m));
    }
    for (const auto& a : cfg_.accounts) {
        accounts_.emplace(a.account_id, a);
        tokens_.emplace(a.token, a.account_id);
        if (a.role == Role::provider) billing_.add_provider(a.account_id);
    }
    std::error_code ec;
    std::filesystem::create_directories(cfg_.data_dir / "blobs", ec);
    if (ec) throw Error(Errc::refuse_start, "cannot create data directory " + cfg_.data_dir.string());
    log_ = std::make_unique<EventLog>(cfg_.data_dir / "events.log");
    replay();
    project_provenance();
}

void Marketplace::replay() {
    for (const auto& e : log_->entries()) {
        try {
            const auto result = apply(e.kind, e.timestamp, e.payload.at("request"));
            if (result.dump() != e.payload.at("result").dump()) {
                throw Error(Errc::refuse_start, "replayed result differs from the recorded one");
            }
        } catch (const std::exception& ex) {
            throw Error(Errc::refuse_start, "cannot replay event " + std::to_string(e.seq) + " (" +
                                                std::string(kind_token(e.kind)) + "): " + ex.what());
        }
        last_ts_ = std::max(last_ts_, e.timestamp);
    }
}

void Marketplace::project_provenance() const {
    registry_.provenance().save(cfg_.data_dir / "provenance.log");
}

const Account& Marketplace::authenticate(std::string_view token) const {
    const auto it = tokens_.find(token);
    if (token.empty() || it == tokens_.end()) throw Error(Errc::unauthorized, "missing or unknown bearer token");
    return accounts_.find(it->second)->second;
}

const Account& Marketplace::account(std::string_view account_id) const {
    const auto it = accounts_.find(account_id);
    if (it == accounts_.end()) throw Error(Errc::not_found, "unknown account " + std::string(account_id));
    return it->second;
}

std::int64_t Marketplace::next_timestamp() const { return std::max(last_ts_, clock_()); }

std::int64_t Marketplace::now() const {
    std::shared_lock lock(mu_);
    return next_timestamp();
}

std::size_t Marketplace::event_count() const {
    std::shared_lock lock(mu_);
    return log_->entries().size();
}

std::filesystem::path Marketplace::blob_path(const std::string& sha) const {
    return cfg_.data_dir / "blobs" / (sha + ".bin");
}

void Marketplace::store_blob(const adapter::AdapterBundle& bundle) const {
    const auto path = blob_path(bundle.manifest.payload_sha256);
    if (std::filesystem::exists(path)) return;
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bundle.payload.data()),
                  static_cast<std::streamsize>(bundle.payload.size()));
        if (!out) throw Error(Errc::io_error, "cannot write payload blob");
    }
    std::filesystem::rename(tmp, path);
}

adapter::AdapterBundle Marketplace::load_bundle(const nlohmann::json& manifest) const {
    adapter::AdapterBundle b;
    b.manifest = adapter::manifest_from_json(manifest);
    if (!digest_from_hex(b.manifest.payload_sha256)) throw Error(Errc::corrupt_bundle, "bad payload digest");
    b.payload = read_file(blob_path(b.manifest.payload_sha256));
    return b;
}

std::vector<AdapterListing> Marketplace::resolve_stack(const std::vector<std::string>& adapter_ids) const {
    std::vector<AdapterListing> stack;
    for (const auto& id : adapter_ids) {
        const AdapterListing* l = registry_.find_by_adapter(id);
        if (!l) throw Error(Errc::not_found, "unknown adapter " + id);
        if (l->status != registry::ListingStatus::active) throw Error(Errc::gone, "adapter " + id + " is delisted");
        stack.push_back(*l);
    }
    return stack;
}

ordered_json Marketplace::apply(EventKind kind, std::int64_t ts, const ordered_json& req,
                                const adapter::AdapterBundle* bundle) {
    ordered_json result = ordered_json::object();
    switch (kind) {
        case EventKind::publish: {
            const auto loaded = bundle ? adapter::AdapterBundle{} : load_bundle(req.at("bundle"));
            const auto& b = bundle ? *bundle : loaded;
            registry::ListingDraft draft{req.at("provider_id").get<std::string>(),
                                         registry::category_from_json(req.at("category")),
                                         registry::terms_from_json(req.at("terms"))};
            const auto manifest = compliance::manifest_from_json(req.at("license_manifest"));
            const auto& l = registry_.publish(b, draft, manifest, models_, ts);
            billing_.register_listing(l.listing_id, l.provider_id);
            result["listing_id"] = l.listing_id;
            result["provenance_seq"] = l.provenance_seq;
            result["record_hash"] = to_hex(registry_.provenance().records().back().record_hash);
            break;
        }
        case EventKind::price_update: {
            const auto& l = registry_.update_price(req.at("listing_id").get<std::string>(),
                                                   req.at("provider_id").get<std::string>(),
                                                   registry::terms_from_json(req.at("terms")), ts);
            result["terms"] = registry::to_json(l.terms);
            break;
        }
        case EventKind::delist: {
            registry_.delist(req.at("listing_id").get<std::string>(), req.at("provider_id").get<std::string>());
            break;
        }
        case EventKind::license_grant: {
            const auto kind_token = req.at("kind").get<std::string>();
            const auto lk = billing::parse_kind(kind_token);
            if (!lk) throw Error(Errc::invalid_argument, "unknown license kind " + kind_token);
            const auto& l = billing_.grant_license(req.at("account_id").get<std::string>(),
                                                   registry_.listing(req.at("listing_id").get<std::string>()), *lk,
                                                   req.at("months").get<std::uint32_t>(), ts);
            result["license_key"] = l.license_key;
            result["period_end"] = l.period_end;
            break;
        }
        case EventKind::usage: {
            billing::UsageEvent e;
            e.timestamp = ts;
            e.account_id = req.at("account_id").get<std::string>();
            e.model_id = req.at("model_id").get<std::string>();
            e.adapter_ids = req.at("adapter_ids").get<std::vector<std::string>>();
            e.units = req.at("units").get<std::uint64_t>();
            if (!models_.contains(e.model_id)) throw Error(Errc::not_found, "unknown model " + e.model_id);
            const auto stack = resolve_stack(e.adapter_ids);
            for (const auto& l : stack) e.listing_ids.push_back(l.listing_id);
            e.charges = billing_.charge_for_request(e.account_id, stack, e.units, ts);
            const auto& recorded = billing_.record_usage(std::move(e));
            result["usage_seq"] = recorded.seq;
            result["listing_ids"] = string_list(recorded.listing_ids);
            result["charges"] = recorded.charges;
            break;
        }
        case EventKind::period_close: {
            const auto p = billing::Period::parse(req.at("period").get<std::string>());
            if (billing_.is_closed(p)) throw Error(Errc::conflict, "period " + p.str() + " is already closed");
            billing_.close_period(p, ts);
            break;
        }
    }
    return result;
}

ordered_json Marketplace::commit(EventKind kind, const ordered_json& request, const adapter::AdapterBundle* bundle) {
    if (poisoned_) throw Error(Errc::io_error, "state is ahead of the event log; restart the gateway");
    const std::int64_t ts = next_timestamp();
    auto result = apply(kind, ts, request, bundle);
    try {
        if (bundle) store_blob(*bundle);
        ordered_json payload;
        payload["request"] = request;
        payload["result"] = result;
        log_->commit(log_->next(kind, ts, std::move(payload)));
        last_ts_ = ts;
        if (kind == EventKind::publish) {
            compliance::ProvenanceLog::append_line(cfg_.data_dir / "provenance.log",
                                                   registry_.provenance().records().back());
        }
    } catch (...) {
        poisoned_ = true;
        throw;
    }
    return result;
}

AdapterListing Marketplace::publish(const Account& who, const PublishRequest& req) {
    if (who.role != Role::provider) throw Error(Errc::forbidden, "only providers publish adapters");
    ordered_json request;
    request["provider_id"] = who.account_id;
    request["bundle"] = adapter::manifest_to_json(req.bundle.manifest);
    request["license_manifest"] = compliance::to_json(req.manifest);
    request["category"] = registry::to_json(req.category);
    request["terms"] = registry::to_json(req.terms);
    std::unique_lock lock(mu_);
    const auto result = commit(EventKind::publish, request, &req.bundle);
    return registry_.listing(result.at("listing_id").get<std::string>());
}

AdapterListing Marketplace::update_price(const Account& who, const std::string& listing_id,
                                         const registry::PricingTerms& terms) {
    ordered_json request;
    request["listing_id"] = listing_id;
    request["provider_id"] = who.account_id;
    request["terms"] = registry::to_json(terms);
    std::unique_lock lock(mu_);
    commit(EventKind::price_update, request);
    return registry_.listing(listing_id);
}

AdapterListing Marketplace::delist(const Account& who, const std::string& listing_id) {
    ordered_json request;
    request["listing_id"] = listing_id;
    request["provider_id"] = who.account_id;
    std::unique_lock lock(mu_);
    commit(EventKind::delist, request);
    return registry_.listing(listing_id);
}

billing::License Marketplace::grant_license(const Account& who, const std::string& listing_id,
                                            billing::LicenseKind kind, std::uint32_t months) {
    ordered_json request;
    request["account_id"] = who.account_id;
    request["listing_id"] = listing_id;
    request["kind"] = billing::kind_token(kind);
    request["months"] = kind == billing::LicenseKind::outright ? 0u : months;
    std::unique_lock lock(mu_);
    commit(EventKind::license_grant, request);
    return billing_.licenses().back();
}

InferReceipt Marketplace::infer(const Account& who, const InferRequest& req) {
    if (req.inputs.empty()) throw Error(Errc::invalid_argument, "no input vectors");
    std::vector<std::string> ids = req.adapter_ids;
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw Error(Errc::invalid_stack, "an adapter appears twice in the stack");
    }

    InferReceipt receipt;
    {
        std::shared_lock lock(mu_);
        const auto m = models_.find(req.model_id);
        if (m == models_.end()) throw Error(Errc::not_found, "unknown model " + req.model_id);
        const auto stack = resolve_stack(ids);
        std::vector<adapter::LoraAdapter> adapters;
        for (const auto& l : stack) {
            if (l.base_model_id != req.model_id) {
                throw Error(Errc::invalid_stack, "adapter " + l.adapter_id + " targets " + l.base_model_id);
            }
            adapters.push_back(registry_.adapter(l.listing_id));
        }
        billing_.charge_for_request(who.account_id, stack, req.inputs.size(), next_timestamp());
        for (const auto& x : req.inputs) {
            if (x.size() != m->second.input_dim()) {
                throw Error(Errc::invalid_shape, "input vectors must have length " +
                                                     std::to_string(m->second.input_dim()));
            }
        }
        const auto stacks = model::group_by_layer(m->second, adapters);
        for (const auto& x : req.inputs) receipt.outputs.push_back(model::forward(m->second, stacks, x));
    }

    ordered_json request;
    request["account_id"] = who.account_id;
    request["model_id"] = req.model_id;
    request["adapter_ids"] = string_list(ids);
    request["units"] = req.inputs.size();
    std::unique_lock lock(mu_);
    const auto result = commit(EventKind::usage, request);
    receipt.units = req.inputs.size();
    receipt.adapter_ids = ids;
    receipt.listing_ids = result.at("listing_ids").get<std::vector<std::string>>();
    receipt.charges = result.at("charges").get<std::vector<billing::Money>>();
    receipt.usage_seq = result.at("usage_seq").get<std::uint64_t>();
    return receipt;
}

void Marketplace::close_period(const Account& who, const billing::Period& p) {
    if (who.role != Role::admin) throw Error(Errc::forbidden, "only admins close billing periods");
    std::unique_lock lock(mu_);
    if (billing_.is_closed(p)) return;
    if (next_timestamp() < p.end()) throw Error(Errc::too_early, "period " + p.str() + " has not ended");
    ordered_json request;
    request["period"] = p.str();
    commit(EventKind::period_close, request);
}

void Marketplace::close_if_elapsed(const billing::Period& p) {
    {
        std::shared_lock lock(mu_);
        if (billing_.is_closed(p)) return;
    }
    std::unique_lock lock(mu_);
    if (billing_.is_closed(p)) return;
    if (next_timestamp() < p.end()) throw Error(Errc::too_early, "period " + p.str() + " has not ended");
    ordered_json request;
    request["period"] = p.str();
    commit(EventKind::period_close, request);
}

std::string Marketplace::subject_of(const Account& who, const std::optional<std::string>& subject) const {
    if (!subject || *subject == who.account_id) return who.account_id;
    if (who.role != Role::admin) throw Error(Errc::forbidden, "only admins may look at other accounts");
    return *subject;
}

std::vector<AdapterListing> Marketplace::search(const registry::SearchFilter& f) const {
    std::shared_lock lock(mu_);
    return registry_.search(f);
}

AdapterListing Marketplace::listing(const std::string& listing_id) const {
    std::shared_lock lock(mu_);
    return registry_.listing(listing_id);
}

billing::Money Marketplace::suggest_price(const Account& who, const std::string& listing_id) const {
    std::shared_lock lock(mu_);
    const auto& l = registry_.listing(listing_id);
    if (who.role != Role::admin && l.provider_id != who.account_id) {
        throw Error(Errc::forbidden, "price suggestions are for the listing's provider");
    }
    const auto history = billing_.demand_history(listing_id);
    return registry_.suggest_price(listing_id, history, billing::day_of(next_timestamp()));
}

std::vector<billing::UsageEvent> Marketplace::usage(const Account& who, const billing::Period& p,
                                                    const std::optional<std::string>& subject) const {
    const auto id = subject_of(who, subject);
    std::shared_lock lock(mu_);
    return billing_.usage(id, p);
}

billing::Invoice Marketplace::invoice(const Account& who, const billing::Period& p,
                                      const std::optional<std::string>& subject) {
    const auto id = subject_of(who, subject);
    close_if_elapsed(p);
    std::shared_lock lock(mu_);
    return billing_.invoice(id, p);
}

billing::PayoutStatement Marketplace::payout(const Account& who, const billing::Period& p,
                                             const std::optional<std::string>& subject) {
    if (who.role == Role::consumer) throw Error(Errc::forbidden, "payout statements are for providers");
    const auto id = subject_of(who, subject);
    close_if_elapsed(p);
    std::shared_lock lock(mu_);
    return billing_.payout(id, p);
}

std::vector<billing::LeaderboardEntry> Marketplace::leaderboard(const billing::Period& p, std::size_t n) const {
    std::shared_lock lock(mu_);
    return billing_.leaderboard(p, n);
}

ordered_json Marketplace::health() const {
    std::shared_lock lock(mu_);
    ordered_json j;
    j["status"] = poisoned_ ? "degraded" : "ok";
    j["events"] = log_->entries().size();
    j["listings"] = registry_.all().size();
    j["head_hash"] = to_hex(log_->entries().empty() ? genesis_hash() : log_->entries().back().hash);
    return j;
}

ordered_json Marketplace::export_state() const {
    std::shared_lock lock(mu_);
    ordered_json j;
    j["listings"] = ordered_json::array();
    for (const auto& l : registry_.all()) j["listings"].push_back(registry::to_json(l));
    j["provenance"] = ordered_json::array();
    for (const auto& r : registry_.provenance().records()) {
        j["provenance"].push_back(ordered_json::parse(compliance::to_line(r)));
    }
    j["price_history"] = ordered_json::array();
    for (const auto& c : registry_.price_history()) {
        ordered_json row;
        row["listing_id"] = c.listing_id;
        row["timestamp"] = c.timestamp;
        row["terms"] = registry::to_json(c.terms);
        j["price_history"].push_back(std::move(row));
    }
    j["licenses"] = ordered_json::array();
    for (const auto& l : billing_.licenses()) j["licenses"].push_back(billing::to_json(l));
    j["usage"] = ordered_json::array();
    for (const auto& e : billing_.all_usage()) j["usage"].push_back(billing::to_json(e));
    j["periods"] = ordered_json::array();
    for (const auto& p : billing_.closed_periods()) {
        ordered_json period;
        period["period"] = p.str();
        period["invoices"] = ordered_json::array();
        for (const auto& a : billing_.accounts()) period["invoices"].push_back(billing::to_json(billing_.invoice(a, p)));
        period["payouts"] = ordered_json::array();
        for (const auto& prov : billing_.providers()) {
            period["payouts"].push_back(billing::to_json(billing_.payout(prov, p)));
        }
        j["periods"].push_back(std::move(period));
    }
    return j;
}

}  // namespace viz::gateway
