// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "viz/billing/money.hpp"
#include "viz/compliance/manifest.hpp"

namespace viz::gateway {

enum class Role { provider, consumer, admin };

std::string_view role_token(Role r) noexcept;
std::optional<Role> parse_role(std::string_view token);

struct Account {
    std::string account_id;
    Role role = Role::consumer;
    std::string display_name;
    std::string token;  // static bearer token
};

// A base model is either regenerated from (seed, layer_dims) or read from a
// model bundle on disk.
struct ModelSpec {
    std::string model_id;
    std::uint64_t seed = 0;
    std::vector<std::size_t> layer_dims;
    std::optional<std::filesystem::path> bundle_path;
};

struct GatewayConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path data_dir = "viz-data";
    compliance::Allowlist allowlist = compliance::default_allowlist();
    billing::RevenueShare revenue_share;
    std::vector<Account> accounts;
    std::vector<ModelSpec> models;
};

// Throws invalid-argument on duplicate ids or tokens, an unknown role, or a bad
// revenue share. Relative bundle paths resolve against base_dir.
GatewayConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
GatewayConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const GatewayConfig& cfg);

}  // namespace viz::gateway
