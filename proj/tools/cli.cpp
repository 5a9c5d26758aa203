// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <pthread.h>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <thread>

#include "viz/adapter/bundle.hpp"
#include "viz/adapter/codebook.hpp"
#include "viz/compliance/provenance.hpp"
#include "viz/error.hpp"
#include "viz/gateway/config.hpp"
#include "viz/gateway/event_log.hpp"
#include "viz/gateway/http_server.hpp"
#include "viz/gateway/marketplace.hpp"
#include "viz/model/base_model.hpp"
#include "viz/prng.hpp"

namespace viz::cli {
namespace {

using nlohmann::json;

enum class Format { text, machine };

struct Remote {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string token;
};

// Thrown for failures reported by the gateway; carries the decoded error body.
struct Refused {
    int status;
    json body;
};

std::string usd(std::int64_t micros) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%lld.%06lld", static_cast<long long>(micros / 1000000),
                  static_cast<long long>(micros % 1000000));
    return buf;
}

std::string utc(std::int64_t t) {
    const auto secs = static_cast<std::time_t>(t);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%d %H:%M:%SZ", &tm);
    return buf;
}

json parse_reply(const httplib::Result& r) {
    if (!r) throw Error(Errc::io_error, "gateway unreachable: " + httplib::to_string(r.error()));
    json body;
    try {
        body = json::parse(r->body);
    } catch (const json::exception&) {
        throw Error(Errc::io_error, "gateway sent a non-JSON reply (HTTP " + std::to_string(r->status) + ")");
    }
    if (r->status >= 400) throw Refused{r->status, body};
    return body;
}

class Client {
public:
    explicit Client(const Remote& r) : cli_(r.host, r.port) {
        if (!r.token.empty()) cli_.set_bearer_token_auth(r.token);
        cli_.set_read_timeout(120);
    }
    json get(const std::string& path, const httplib::Params& q = {}) {
        return parse_reply(cli_.Get(path, q, httplib::Headers{}));
    }
    json post(const std::string& path, const json& body) {
        return parse_reply(cli_.Post(path, body.dump(), "application/json"));
    }
    json post(const std::string& path, const httplib::MultipartFormDataItems& form) {
        return parse_reply(cli_.Post(path, form));
    }

private:
    httplib::Client cli_;
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::not_found, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_argument, path + " is not valid JSON: " + e.what());
    }
}

std::vector<double> parse_vector(const std::string& text) {
    std::vector<double> v;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = std::min(text.find(',', pos), text.size());
        const auto item = text.substr(pos, comma - pos);
        std::size_t used = 0;
        double d = 0;
        try {
            d = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw Error(Errc::invalid_argument, "bad number '" + item + "'");
        v.push_back(d);
        pos = comma + 1;
    }
    return v;
}

void print_listing(std::ostream& out, const json& l) {
    const auto& c = l["category"];
    const auto& t = l["terms"];
    out << l["listing_id"].get<std::string>() << "  " << l["adapter_id"].get<std::string>() << "  "
        << l["provider_id"].get<std::string>() << "  " << c["domain"].get<std::string>() << "/"
        << c["language"].get<std::string>() << "  perf " << std::fixed << std::setprecision(3)
        << c["perf_score"].get<double>() << std::defaultfloat << "  " << t["mode"].get<std::string>();
    if (t["outright_price"].get<std::int64_t>() > 0) out << "  outright " << usd(t["outright_price"]);
    if (t["monthly_fee"].get<std::int64_t>() > 0) out << "  monthly " << usd(t["monthly_fee"]);
    if (t["per_1k_units"].get<std::int64_t>() > 0) out << "  per-1k " << usd(t["per_1k_units"]);
    if (l["status"] != "active") out << "  [" << l["status"].get<std::string>() << "]";
    out << '\n';
}

void emit(std::ostream& out, Format f, const json& body, const std::function<void()>& text) {
    if (f == Format::machine) {
        out << body.dump() << '\n';
    } else {
        text();
    }
}

// Blocks SIGINT and SIGTERM, serves on a worker thread and stops on the first signal.
int serve(gateway::GatewayConfig cfg, std::ostream& out) {
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    gateway::Marketplace market(cfg);
    gateway::HttpServer server(market);
    const int port = server.bind(cfg.host, cfg.port);
    out << "serving on " << cfg.host << ":" << port << " from " << cfg.data_dir.string() << " ("
        << market.event_count() << " events replayed)" << std::endl;
    std::thread worker([&] { server.listen(); });
    int sig = 0;
    sigwait(&stop_signals, &sig);
    server.stop();
    worker.join();
    out << "stopped" << std::endl;
    return 0;
}

int verify_log(const std::filesystem::path& data_dir, Format f, std::ostream& out, std::ostream& err) {
    const auto events = data_dir / "events.log";
    const auto provenance = data_dir / "provenance.log";
    if (!std::filesystem::exists(events)) throw Error(Errc::not_found, "no event log at " + events.string());
    const bool events_ok = gateway::EventLog::verify_file(events);
    const bool prov_ok = !std::filesystem::exists(provenance) || compliance::verify_log_file(provenance);
    json body;
    body["events_log"] = events_ok ? "ok" : "broken";
    body["provenance_log"] = prov_ok ? "ok" : "broken";
    emit(out, f, body, [&] {
        out << events.string() << ": " << (events_ok ? "ok" : "BROKEN") << '\n';
        if (std::filesystem::exists(provenance)) {
            out << provenance.string() << ": " << (prov_ok ? "ok" : "BROKEN") << '\n';
        }
    });
    if (events_ok && prov_ok) return 0;
    err << "error: refuse-start: hash chain verification failed\n";
    return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"vizctl: operate and use a Viz adapter marketplace"};
    app.name("vizctl");
    app.require_subcommand(1);
    app.fallthrough();

    Remote remote;
    std::string format_text = "text";
    std::string data_dir;
    app.add_option("--host", remote.host, "Gateway host")->capture_default_str();
    app.add_option("--port", remote.port, "Gateway port")->capture_default_str();
    app.add_option("--token", remote.token, "Bearer token")->envname("VIZ_TOKEN");
    app.add_option("--format", format_text, "Output format")->check(CLI::IsMember({"text", "machine"}))
        ->capture_default_str();
    app.add_option("--data-dir", data_dir, "Data directory (serve, verify-log)")->envname("VIZ_DATA_DIR");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Replay the event log and serve the HTTP API");
    std::string config_path;
    serve_cmd->add_option("--config", config_path, "Gateway configuration file")->required();

    // verify-log
    auto* verify_cmd = app.add_subcommand("verify-log", "Check the hash chains under the data directory");

    // publish
    auto* publish_cmd = app.add_subcommand("publish", "Publish an adapter bundle");
    std::string bundle_path, manifest_path, domain, language, mode = "metered";
    double perf = 0.0;
    std::int64_t outright = 0, monthly = 0, per_1k = 0;
    publish_cmd->add_option("--bundle", bundle_path, "Bundle manifest (payload alongside as .bin)")->required();
    publish_cmd->add_option("--license-manifest", manifest_path, "License manifest JSON")->required();
    publish_cmd->add_option("--domain", domain)->required();
    publish_cmd->add_option("--language", language)->required();
    publish_cmd->add_option("--perf", perf, "Performance score in [0, 1]")->required();
    publish_cmd->add_option("--mode", mode)->capture_default_str();
    publish_cmd->add_option("--outright-price", outright, "micro-USD");
    publish_cmd->add_option("--monthly-fee", monthly, "micro-USD");
    publish_cmd->add_option("--per-1k", per_1k, "micro-USD per 1000 units");

    // list
    auto* list_cmd = app.add_subcommand("list", "Search the catalog");
    std::string f_domain, f_language, f_min_perf, f_mode;
    list_cmd->add_option("--domain", f_domain);
    list_cmd->add_option("--language", f_language);
    list_cmd->add_option("--min-perf", f_min_perf);
    list_cmd->add_option("--mode", f_mode);

    // subscribe, buy
    auto* subscribe_cmd = app.add_subcommand("subscribe", "Subscribe to a listing");
    std::string listing_id;
    std::uint32_t months = 1;
    subscribe_cmd->add_option("listing_id", listing_id)->required();
    subscribe_cmd->add_option("--months", months)->capture_default_str();
    auto* buy_cmd = app.add_subcommand("buy", "Buy a listing outright");
    buy_cmd->add_option("listing_id", listing_id)->required();

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "Run inference through an adapter stack");
    std::string model_id;
    std::vector<std::string> adapter_ids, inputs;
    infer_cmd->add_option("--model", model_id)->required();
    infer_cmd->add_option("--adapter", adapter_ids, "Adapter id (repeatable)");
    infer_cmd->add_option("--input", inputs, "Comma-separated input vector (repeatable)")->required();

    // usage, payouts, invoice
    auto* usage_cmd = app.add_subcommand("usage", "Show usage events for a period");
    std::string period, subject;
    usage_cmd->add_option("--period", period, "YYYY-MM, default current");
    usage_cmd->add_option("--account", subject);
    auto* payouts_cmd = app.add_subcommand("payouts", "Show a provider payout statement");
    payouts_cmd->add_option("period", period)->required();
    payouts_cmd->add_option("--provider", subject);
    auto* invoice_cmd = app.add_subcommand("invoice", "Show a consumer invoice");
    invoice_cmd->add_option("period", period)->required();
    invoice_cmd->add_option("--account", subject);

    // make-adapter
    auto* make_cmd = app.add_subcommand("make-adapter", "Write a random quantized adapter bundle for a configured model");
    std::string out_path;
    std::size_t layer = 0, rank = 4;
    double alpha = 8.0, scale = 0.3;
    std::uint64_t seed = 1;
    make_cmd->add_option("--config", config_path)->required();
    make_cmd->add_option("--model", model_id)->required();
    make_cmd->add_option("--id", listing_id, "Adapter id")->required();
    make_cmd->add_option("--layer", layer)->capture_default_str();
    make_cmd->add_option("--rank", rank)->capture_default_str();
    make_cmd->add_option("--alpha", alpha)->capture_default_str();
    make_cmd->add_option("--scale", scale, "Standard deviation of factor entries")->capture_default_str();
    make_cmd->add_option("--seed", seed)->capture_default_str();
    make_cmd->add_option("--out", out_path, "Bundle manifest path")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    const Format fmt = format_text == "machine" ? Format::machine : Format::text;

    try {
        if (serve_cmd->parsed()) {
            auto cfg = gateway::load_config(config_path);
            if (!data_dir.empty()) cfg.data_dir = data_dir;
            if (app.get_option("--port")->count() > 0) cfg.port = remote.port;
            if (app.get_option("--host")->count() > 0) cfg.host = remote.host;
            return serve(std::move(cfg), out);
        }
        if (verify_cmd->parsed()) {
            if (data_dir.empty()) throw Error(Errc::invalid_argument, "--data-dir or VIZ_DATA_DIR is required");
            return verify_log(data_dir, fmt, out, err);
        }
        if (make_cmd->parsed()) {
            const auto cfg = gateway::load_config(config_path);
            const auto spec = std::find_if(cfg.models.begin(), cfg.models.end(),
                                           [&](const auto& m) { return m.model_id == model_id; });
            if (spec == cfg.models.end()) throw Error(Errc::not_found, "model " + model_id + " is not configured");
            const auto base = spec->bundle_path ? model::read_model(*spec->bundle_path)
                                                : model::generate_base_model(model_id, spec->seed, spec->layer_dims);
            if (layer >= base.layer_count()) throw Error(Errc::invalid_argument, "layer out of range");
            const auto& w = base.layer(layer);
            Xoshiro256 rng(seed);
            adapter::Matrix a(rank, w.cols());
            adapter::Matrix b(w.rows(), rank);
            for (std::size_t i = 0; i < a.rows(); ++i)
                for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = scale * rng.normal();
            for (std::size_t i = 0; i < b.rows(); ++i)
                for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) = scale * rng.normal();
            const adapter::LoraAdapter ad(listing_id, layer, alpha, a, b);
            const auto bundle = adapter::make_bundle(ad.quantize(adapter::build_nf4_codebook()), model_id);
            adapter::write_bundle(bundle, out_path);
            json body;
            body["adapter_id"] = listing_id;
            body["manifest"] = out_path;
            body["payload_bytes"] = bundle.payload.size();
            emit(out, fmt, body, [&] { out << "wrote " << out_path << " (" << bundle.payload.size() << " payload bytes)\n"; });
            return 0;
        }

        Client client(remote);
        if (publish_cmd->parsed()) {
            const auto bundle = adapter::read_bundle(bundle_path);
            const auto license = read_json_file(manifest_path);
            const auto parsed_mode = registry::parse_mode(mode);
            if (!parsed_mode) throw Error(Errc::invalid_argument, "unknown pricing mode " + mode);
            json listing;
            listing["category"] = registry::to_json(registry::Category{domain, language, perf});
            listing["terms"] = registry::to_json(registry::PricingTerms{*parsed_mode, outright, monthly, per_1k});
            const httplib::MultipartFormDataItems form = {
                {"bundle", adapter::manifest_to_json(bundle.manifest).dump(), "bundle.json", "application/json"},
                {"payload", std::string(bundle.payload.begin(), bundle.payload.end()), "bundle.bin",
                 "application/octet-stream"},
                {"license_manifest", license.dump(), "license.json", "application/json"},
                {"listing", listing.dump(), "listing.json", "application/json"},
            };
            const auto body = client.post("/v1/adapters", form);
            emit(out, fmt, body, [&] { out << body["listing_id"].get<std::string>() << '\n'; });
        } else if (list_cmd->parsed()) {
            httplib::Params q;
            if (!f_domain.empty()) q.emplace("domain", f_domain);
            if (!f_language.empty()) q.emplace("language", f_language);
            if (!f_min_perf.empty()) q.emplace("min_perf", f_min_perf);
            if (!f_mode.empty()) q.emplace("mode", f_mode);
            const auto body = client.get("/v1/adapters", q);
            emit(out, fmt, body, [&] {
                for (const auto& l : body) print_listing(out, l);
                if (body.empty()) out << "no listings\n";
            });
        } else if (subscribe_cmd->parsed() || buy_cmd->parsed()) {
            json req;
            req["listing_id"] = listing_id;
            req["kind"] = buy_cmd->parsed() ? "outright" : "subscription";
            if (subscribe_cmd->parsed()) req["months"] = months;
            const auto body = client.post("/v1/licenses", req);
            emit(out, fmt, body, [&] {
                out << body["license_key"].get<std::string>() << "  " << body["kind"].get<std::string>() << "  "
                    << body["listing_id"].get<std::string>();
                if (body["kind"] == "subscription") out << "  until " << utc(body["period_end"]);
                out << '\n';
            });
        } else if (infer_cmd->parsed()) {
            json req;
            req["model_id"] = model_id;
            req["adapter_ids"] = adapter_ids;
            req["inputs"] = json::array();
            for (const auto& text : inputs) req["inputs"].push_back(parse_vector(text));
            const auto body = client.post("/v1/infer", req);
            emit(out, fmt, body, [&] {
                for (const auto& row : body["outputs"]) {
                    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " " : "") << row[i].get<double>();
                    out << '\n';
                }
                out << "units " << body["units"] << "  usage-seq " << body["usage_seq"] << '\n';
                for (std::size_t i = 0; i < body["adapter_ids"].size(); ++i) {
                    out << "  " << body["adapter_ids"][i].get<std::string>() << "  "
                        << body["listing_ids"][i].get<std::string>() << "  " << usd(body["charges"][i]) << '\n';
                }
            });
        } else if (usage_cmd->parsed()) {
            httplib::Params q;
            if (!period.empty()) q.emplace("period", period);
            if (!subject.empty()) q.emplace("account", subject);
            const auto body = client.get("/v1/usage", q);
            emit(out, fmt, body, [&] {
                out << body["account_id"].get<std::string>() << "  " << body["period"].get<std::string>() << "  "
                    << body["events"].size() << " events\n";
                for (const auto& e : body["events"]) {
                    std::int64_t total = 0;
                    for (const auto& c : e["charges"]) total += c.get<std::int64_t>();
                    out << "  #" << e["seq"] << "  t=" << e["timestamp"] << "  " << e["model_id"].get<std::string>()
                        << "  units " << e["units"] << "  adapters " << e["adapter_ids"].size() << "  " << usd(total)
                        << '\n';
                }
            });
        } else if (payouts_cmd->parsed()) {
            httplib::Params q;
            if (!subject.empty()) q.emplace("provider", subject);
            const auto body = client.get("/v1/payouts/" + period, q);
            emit(out, fmt, body, [&] {
                out << body["provider_id"].get<std::string>() << "  " << body["period"].get<std::string>()
                    << "  platform share " << body["revenue_share"]["num"] << "/" << body["revenue_share"]["den"]
                    << '\n';
                for (const auto& l : body["lines"]) {
                    out << "  " << l["listing_id"].get<std::string>() << "  gross " << usd(l["gross"]) << "  cut "
                        << usd(l["platform_cut"]) << "  net " << usd(l["net"]) << '\n';
                }
                out << "  total net " << usd(body["total_net"]) << '\n';
            });
        } else if (invoice_cmd->parsed()) {
            httplib::Params q;
            if (!subject.empty()) q.emplace("account", subject);
            const auto body = client.get("/v1/invoices/" + period, q);
            emit(out, fmt, body, [&] {
                out << body["account_id"].get<std::string>() << "  " << body["period"].get<std::string>() << '\n';
                for (const auto& l : body["line_items"]) {
                    out << "  " << l["listing_id"].get<std::string>() << "  units " << l["units"] << "  "
                        << usd(l["total"]) << '\n';
                }
                out << "  total " << usd(body["total"]) << '\n';
            });
        }
        return 0;
    } catch (const Refused& r) {
        if (fmt == Format::machine) out << r.body.dump() << '\n';
        err << "error: " << r.body.value("error", "http-" + std::to_string(r.status)) << ": "
            << r.body.value("message", "") << '\n';
        if (r.body.contains("violations")) {
            for (const auto& v : r.body["violations"]) {
                err << "  source " << v["index"] << ": " << v["license_id"].get<std::string>() << " is not allowed\n";
            }
        }
        return 1;
    } catch (const Error& e) {
        err << "error: " << errc_token(e.code()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace viz::cli
