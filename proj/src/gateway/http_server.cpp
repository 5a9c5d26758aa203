// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/gateway/http_server.hpp"

#include <httplib.h>

#include <charconv>

namespace viz::gateway {

using nlohmann::ordered_json;

int http_status(Errc code) noexcept {
    switch (code) {
        case Errc::unauthorized: return 401;
        case Errc::payment_required: return 402;
        case Errc::forbidden: return 403;
        case Errc::not_found: return 404;
        case Errc::conflict:
        case Errc::not_applicable: return 409;
        case Errc::gone: return 410;
        case Errc::publication_refused: return 422;
        case Errc::too_early: return 425;
        case Errc::refuse_append:
        case Errc::refuse_start:
        case Errc::io_error: return 500;
        default: return 400;
    }
}

ordered_json error_body(const Error& e) {
    ordered_json j;
    j["error"] = errc_token(e.code());
    j["message"] = e.what();
    if (const auto* refused = dynamic_cast<const PublicationRefused*>(&e)) {
        j["violations"] = ordered_json::array();
        for (const auto& v : refused->violations()) {
            ordered_json row;
            row["index"] = v.index;
            row["license_id"] = v.license_id;
            j["violations"].push_back(std::move(row));
        }
    }
    return j;
}

namespace {

void send(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

nlohmann::json parse_body(const std::string& text, const char* what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_argument, std::string(what) + " is not valid JSON: " + e.what());
    }
}

std::optional<std::string> param(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    auto v = req.get_param_value(key);
    if (v.empty()) return std::nullopt;
    return v;
}

std::uint64_t parse_count(const std::string& text, const char* what) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
        throw Error(Errc::invalid_argument, std::string(what) + " must be a non-negative integer");
    }
    return v;
}

template <typename T>
T field(const nlohmann::json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(Errc::invalid_argument, std::string("missing or ill-typed field '") + key + "'");
    }
}

ordered_json listing_array(const std::vector<registry::AdapterListing>& listings) {
    auto j = ordered_json::array();
    for (const auto& l : listings) j.push_back(registry::to_json(l));
    return j;
}

}  // namespace

HttpServer::HttpServer(Marketplace& market) : market_(market), srv_(std::make_unique<httplib::Server>()) {
    routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = srv_->bind_to_any_port(host);
        if (bound < 0) throw Error(Errc::io_error, "cannot bind " + host);
        return bound;
    }
    if (!srv_->bind_to_port(host, port)) {
        throw Error(Errc::io_error, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::listen() { srv_->listen_after_bind(); }

void HttpServer::stop() {
    if (srv_) srv_->stop();
}

bool HttpServer::running() const { return srv_->is_running(); }

void HttpServer::routes() {
    using Req = const httplib::Request&;
    using Res = httplib::Response&;

    // Every handler runs inside this wrapper so errors map to one body shape.
    auto guarded = [](auto handler) {
        return [handler](Req req, Res res) {
            try {
                handler(req, res);
            } catch (const Error& e) {
                send(res, http_status(e.code()), error_body(e));
            } catch (const std::exception& e) {
                send(res, 500, error_body(Error(Errc::io_error, e.what())));
            }
        };
    };
    auto caller = [&m = market_](Req req) -> const Account& {
        const auto header = req.get_header_value("Authorization");
        constexpr std::string_view prefix = "Bearer ";
        if (header.compare(0, prefix.size(), prefix) != 0) {
            throw Error(Errc::unauthorized, "expected an Authorization: Bearer header");
        }
        return m.authenticate(std::string_view(header).substr(prefix.size()));
    };
    auto period_or_now = [&m = market_](const std::optional<std::string>& p) {
        return p ? billing::Period::parse(*p) : billing::Period::containing(m.now());
    };

    srv_->Get("/v1/healthz", guarded([&m = market_](Req, Res res) { send(res, 200, m.health()); }));

    srv_->Post("/v1/adapters", guarded([&m = market_, caller](Req req, Res res) {
        const auto& who = caller(req);
        if (!req.is_multipart_form_data()) {
            throw Error(Errc::invalid_argument, "publish expects multipart/form-data");
        }
        for (const char* part : {"bundle", "payload", "license_manifest", "listing"}) {
            if (!req.has_file(part)) throw Error(Errc::invalid_argument, std::string("missing part '") + part + "'");
        }
        PublishRequest p;
        p.bundle.manifest = adapter::manifest_from_json(parse_body(req.get_file_value("bundle").content, "bundle"));
        const auto& payload = req.get_file_value("payload").content;
        p.bundle.payload.assign(payload.begin(), payload.end());
        p.manifest = compliance::manifest_from_json(
            parse_body(req.get_file_value("license_manifest").content, "license_manifest"));
        const auto listing = parse_body(req.get_file_value("listing").content, "listing");
        if (!listing.contains("category") || !listing.contains("terms")) {
            throw Error(Errc::invalid_argument, "listing needs category and terms");
        }
        p.category = registry::category_from_json(listing.at("category"));
        p.terms = registry::terms_from_json(listing.at("terms"));
        const auto l = m.publish(who, p);
        ordered_json body;
        body["listing_id"] = l.listing_id;
        body["listing"] = registry::to_json(l);
        send(res, 201, body);
    }));

    srv_->Get("/v1/adapters", guarded([&m = market_, caller](Req req, Res res) {
        caller(req);
        registry::SearchFilter f;
        f.domain = param(req, "domain");
        f.language = param(req, "language");
        if (const auto v = param(req, "min_perf")) {
            double d = 0;
            const auto r = std::from_chars(v->data(), v->data() + v->size(), d);
            if (r.ec != std::errc() || r.ptr != v->data() + v->size()) {
                throw Error(Errc::invalid_argument, "min_perf must be a number");
            }
            f.min_perf = d;
        }
        if (const auto v = param(req, "mode")) {
            f.mode = registry::parse_mode(*v);
            if (!f.mode) throw Error(Errc::invalid_argument, "unknown pricing mode " + *v);
        }
        send(res, 200, listing_array(m.search(f)));
    }));

    srv_->Get(R"(/v1/adapters/([^/]+))", guarded([&m = market_, caller](Req req, Res res) {
        caller(req);
        send(res, 200, registry::to_json(m.listing(req.matches[1])));
    }));

    srv_->Delete(R"(/v1/adapters/([^/]+))", guarded([&m = market_, caller](Req req, Res res) {
        send(res, 200, registry::to_json(m.delist(caller(req), req.matches[1])));
    }));

    srv_->Put(R"(/v1/adapters/([^/]+)/price)", guarded([&m = market_, caller](Req req, Res res) {
        const auto& who = caller(req);
        const auto terms = registry::terms_from_json(parse_body(req.body, "request body"));
        const auto l = m.update_price(who, req.matches[1], terms);
        ordered_json body;
        body["listing_id"] = l.listing_id;
        body["terms"] = registry::to_json(l.terms);
        send(res, 200, body);
    }));

    srv_->Get(R"(/v1/adapters/([^/]+)/price-suggestion)", guarded([&m = market_, caller](Req req, Res res) {
        const auto& who = caller(req);
        const std::string id = req.matches[1];
        ordered_json body;
        body["listing_id"] = id;
        body["suggested_per_1k_units"] = m.suggest_price(who, id);
        body["current_per_1k_units"] = m.listing(id).terms.per_1k_units;
        send(res, 200, body);
    }));

    srv_->Post("/v1/licenses", guarded([&m = market_, caller](Req req, Res res) {
        const auto& who = caller(req);
        const auto j = parse_body(req.body, "request body");
        const auto kind_text = field<std::string>(j, "kind");
        const auto kind = billing::parse_kind(kind_text);
        if (!kind) throw Error(Errc::invalid_argument, "kind must be outright or subscription");
        const auto months = j.contains("months") ? field<std::uint32_t>(j, "months") : 1u;
        send(res, 201, billing::to_json(m.grant_license(who, field<std::string>(j, "listing_id"), *kind, months)));
    }));

    srv_->Post("/v1/infer", guarded([&m = market_, caller](Req req, Res res) {
        const auto& who = caller(req);
        const auto j = parse_body(req.body, "request body");
        InferRequest r;
        r.model_id = field<std::string>(j, "model_id");
        r.adapter_ids = j.contains("adapter_ids") ? field<std::vector<std::string>>(j, "adapter_ids")
                                                  : std::vector<std::string>{};
        r.inputs = field<std::vector<std::vector<double>>>(j, "inputs");
        const auto receipt = m.infer(who, r);
        ordered_json body;
        body["outputs"] = receipt.outputs;
        body["units"] = receipt.units;
        body["adapter_ids"] = receipt.adapter_ids;
        body["listing_ids"] = receipt.listing_ids;
        body["charges"] = receipt.charges;
        body["usage_seq"] = receipt.usage_seq;
        send(res, 200, body);
    }));

    srv_->Get("/v1/usage", guarded([&m = market_, caller, period_or_now](Req req, Res res) {
        const auto& who = caller(req);
        const auto p = period_or_now(param(req, "period"));
        const auto subject = param(req, "account");
        ordered_json body;
        body["account_id"] = subject.value_or(who.account_id);
        body["period"] = p.str();
        body["events"] = ordered_json::array();
        for (const auto& e : m.usage(who, p, subject)) body["events"].push_back(billing::to_json(e));
        send(res, 200, body);
    }));

    srv_->Get(R"(/v1/invoices/([^/]+))", guarded([&m = market_, caller](Req req, Res res) {
        const auto& who = caller(req);
        send(res, 200, billing::to_json(m.invoice(who, billing::Period::parse(req.matches[1].str()),
                                                  param(req, "account"))));
    }));

    srv_->Get(R"(/v1/payouts/([^/]+))", guarded([&m = market_, caller](Req req, Res res) {
        const auto& who = caller(req);
        send(res, 200, billing::to_json(m.payout(who, billing::Period::parse(req.matches[1].str()),
                                                 param(req, "provider"))));
    }));

    srv_->Post(R"(/v1/periods/([^/]+)/close)", guarded([&m = market_, caller](Req req, Res res) {
        const auto& who = caller(req);
        const auto p = billing::Period::parse(req.matches[1].str());
        m.close_period(who, p);
        ordered_json body;
        body["period"] = p.str();
        body["closed"] = true;
        send(res, 200, body);
    }));

    srv_->Get("/v1/leaderboard", guarded([&m = market_, caller, period_or_now](Req req, Res res) {
        caller(req);
        const auto p = period_or_now(param(req, "period"));
        const auto n = param(req, "n");
        ordered_json body;
        body["period"] = p.str();
        const auto board = m.leaderboard(p, n ? parse_count(*n, "n") : 10);
        body["entries"] = billing::to_json(board);
        send(res, 200, body);
    }));

    srv_->set_error_handler([](Req, Res res) {
        if (!res.body.empty()) return;
        if (res.status == 404) send(res, 404, error_body(Error(Errc::not_found, "no such endpoint")));
    });
}

}  // namespace viz::gateway
