// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "viz/adapter/lora.hpp"

namespace viz::adapter {

enum class PayloadEncoding { nf, f64 };

// Metadata half of an adapter bundle. The layout of the payload it describes is
// documented in docs/formats.md.
struct BundleManifest {
    std::string adapter_id;
    std::string base_model_id;
    std::size_t target_layer = 0;
    std::size_t rank = 0;
    double alpha = 1.0;
    std::size_t d_in = 0;
    std::size_t d_out = 0;
    PayloadEncoding encoding = PayloadEncoding::nf;
    int codebook_bits = 4;
    std::size_t block_size = kDefaultBlockSize;
    bool double_quant = true;
    std::size_t chunk_size = kDefaultChunkSize;
    double global_mean_a = 0.0;
    double global_mean_b = 0.0;
    std::size_t payload_bytes = 0;
    std::string payload_sha256;
};

struct AdapterBundle {
    BundleManifest manifest;
    std::vector<std::uint8_t> payload;
};

// Coded factors are used when the adapter carries them; otherwise raw 64-bit reals.
AdapterBundle make_bundle(const LoraAdapter& adapter, const std::string& base_model_id);

// Verifies size and SHA-256 of the payload, then decodes. Throws corrupt-bundle.
LoraAdapter open_bundle(const AdapterBundle& bundle);

nlohmann::ordered_json manifest_to_json(const BundleManifest& m);
// Throws corrupt-bundle on missing or ill-typed fields.
BundleManifest manifest_from_json(const nlohmann::json& j);

// Writes <path> (manifest) and the payload next to it with a .bin extension.
void write_bundle(const AdapterBundle& bundle, const std::filesystem::path& manifest_path);
AdapterBundle read_bundle(const std::filesystem::path& manifest_path);

}  // namespace viz::adapter
