// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/gateway/config.hpp"

#include <fstream>
#include <set>

#include "viz/error.hpp"

namespace viz::gateway {

std::string_view role_token(Role r) noexcept {
    switch (r) {
        case Role::provider: return "provider";
        case Role::consumer: return "consumer";
        case Role::admin: return "admin";
    }
    return "consumer";
}

std::optional<Role> parse_role(std::string_view token) {
    for (auto r : {Role::provider, Role::consumer, Role::admin})
        if (role_token(r) == token) return r;
    return std::nullopt;
}

GatewayConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    try {
        GatewayConfig cfg;
        cfg.host = j.value("host", cfg.host);
        cfg.port = j.value("port", cfg.port);
        if (j.contains("data_dir")) cfg.data_dir = j.at("data_dir").get<std::string>();
        if (j.contains("allowlist")) {
            cfg.allowlist.clear();
            for (const auto& id : j.at("allowlist")) cfg.allowlist.insert(id.get<std::string>());
        }
        if (j.contains("revenue_share")) {
            cfg.revenue_share.num = j.at("revenue_share").at("num").get<std::int64_t>();
            cfg.revenue_share.den = j.at("revenue_share").at("den").get<std::int64_t>();
        }
        billing::validate_share(cfg.revenue_share);
        if (cfg.port < 0 || cfg.port > 65535) throw Error(Errc::invalid_argument, "port out of range");

        std::set<std::string> ids;
        std::set<std::string> tokens;
        for (const auto& a : j.value("accounts", nlohmann::json::array())) {
            Account acct;
            acct.account_id = a.at("account_id").get<std::string>();
            const auto role = parse_role(a.at("role").get<std::string>());
            if (!role) throw Error(Errc::invalid_argument, "account " + acct.account_id + " has an unknown role");
            acct.role = *role;
            acct.display_name = a.value("display_name", acct.account_id);
            acct.token = a.at("token").get<std::string>();
            if (acct.account_id.empty() || acct.token.empty()) {
                throw Error(Errc::invalid_argument, "accounts need a non-empty id and token");
            }
            if (!ids.insert(acct.account_id).second) {
                throw Error(Errc::invalid_argument, "duplicate account " + acct.account_id);
            }
            if (!tokens.insert(acct.token).second) {
                throw Error(Errc::invalid_argument, "two accounts share a token");
            }
            cfg.accounts.push_back(std::move(acct));
        }

        std::set<std::string> models;
        for (const auto& m : j.value("models", nlohmann::json::array())) {
            ModelSpec spec;
            spec.model_id = m.at("model_id").get<std::string>();
            if (m.contains("bundle")) {
                std::filesystem::path p = m.at("bundle").get<std::string>();
                spec.bundle_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
            } else {
                spec.seed = m.at("seed").get<std::uint64_t>();
                spec.layer_dims = m.at("layer_dims").get<std::vector<std::size_t>>();
            }
            if (!models.insert(spec.model_id).second) {
                throw Error(Errc::invalid_argument, "duplicate model " + spec.model_id);
            }
            cfg.models.push_back(std::move(spec));
        }
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_argument, std::string("malformed gateway config: ") + e.what());
    }
}

GatewayConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot read config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_argument, "config " + path.string() + " is not JSON: " + e.what());
    }
    auto cfg = config_from_json(j, path.parent_path());
    if (cfg.data_dir.is_relative() && j.contains("data_dir")) cfg.data_dir = path.parent_path() / cfg.data_dir;
    return cfg;
}

nlohmann::ordered_json to_json(const GatewayConfig& cfg) {
    nlohmann::ordered_json j;
    j["host"] = cfg.host;
    j["port"] = cfg.port;
    j["data_dir"] = cfg.data_dir.string();
    j["allowlist"] = std::vector<std::string>(cfg.allowlist.begin(), cfg.allowlist.end());
    j["revenue_share"] = {{"num", cfg.revenue_share.num}, {"den", cfg.revenue_share.den}};
    j["accounts"] = nlohmann::ordered_json::array();
    for (const auto& a : cfg.accounts) {
        nlohmann::ordered_json aj;
        aj["account_id"] = a.account_id;
        aj["role"] = role_token(a.role);
        aj["display_name"] = a.display_name;
        aj["token"] = a.token;
        j["accounts"].push_back(std::move(aj));
    }
    j["models"] = nlohmann::ordered_json::array();
    for (const auto& m : cfg.models) {
        nlohmann::ordered_json mj;
        mj["model_id"] = m.model_id;
        if (m.bundle_path) {
            mj["bundle"] = m.bundle_path->string();
        } else {
            mj["seed"] = m.seed;
            mj["layer_dims"] = m.layer_dims;
        }
        j["models"].push_back(std::move(mj));
    }
    return j;
}

}  // namespace viz::gateway
