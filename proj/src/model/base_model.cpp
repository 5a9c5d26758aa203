// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/model/base_model.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "viz/error.hpp"
#include "viz/prng.hpp"
#include "viz/sha256.hpp"

namespace viz::model {

namespace {

constexpr const char* kFormat = "viz-model-bundle";

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::invalid_model, what); }

}  // namespace

BaseModel generate_base_model(std::string model_id, std::uint64_t seed, std::vector<std::size_t> dims) {
    if (model_id.empty()) invalid("model_id must not be empty");
    if (dims.size() < 2) invalid("a base model needs at least two layer dims");
    for (auto d : dims)
        if (d == 0) invalid("layer dims must be >= 1");

    BaseModel model;
    model.model_id_ = std::move(model_id);
    model.seed_ = seed;
    model.dims_ = std::move(dims);

    Xoshiro256 rng(seed);
    for (std::size_t l = 0; l + 1 < model.dims_.size(); ++l) {
        const std::size_t d_in = model.dims_[l];
        const std::size_t d_out = model.dims_[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(d_in));
        std::vector<double> w(d_out * d_in);
        for (double& v : w) v = rng.normal() * scale;
        model.layers_.emplace_back(d_out, d_in, std::move(w));
    }
    return model;
}

LayerStacks group_by_layer(const BaseModel& model, std::span<const LoraAdapter> adapters) {
    LayerStacks stacks(model.layer_count());
    for (const auto& a : adapters) {
        if (a.target_layer() >= model.layer_count()) {
            throw Error(Errc::invalid_stack, "adapter " + a.adapter_id() + " targets layer " +
                                                 std::to_string(a.target_layer()) + " of a " +
                                                 std::to_string(model.layer_count()) + "-layer model");
        }
        stacks[a.target_layer()].push_back(a);
    }
    return stacks;
}

Vector forward(const BaseModel& model, const LayerStacks& stacks, std::span<const double> x) {
    if (x.size() != model.input_dim()) {
        throw Error(Errc::invalid_shape, "input length " + std::to_string(x.size()) + " but model expects " +
                                             std::to_string(model.input_dim()));
    }
    if (stacks.size() > model.layer_count()) throw Error(Errc::invalid_stack, "more adapter stacks than layers");
    Vector h(x.begin(), x.end());
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        const std::span<const LoraAdapter> stack =
            l < stacks.size() ? std::span<const LoraAdapter>(stacks[l]) : std::span<const LoraAdapter>();
        h = adapter::apply_stack(model.layer(l), stack, h);
        if (l + 1 < model.layer_count()) {
            for (double& v : h) v = std::tanh(v);
        }
    }
    return h;
}

Vector layer_input(const BaseModel& model, std::size_t layer, std::span<const double> x) {
    if (layer >= model.layer_count()) throw Error(Errc::invalid_argument, "layer index out of range");
    if (x.size() != model.input_dim()) throw Error(Errc::invalid_shape, "input length does not match model");
    Vector h(x.begin(), x.end());
    for (std::size_t l = 0; l < layer; ++l) {
        h = adapter::matvec(model.layer(l), h);
        for (double& v : h) v = std::tanh(v);
    }
    return h;
}

adapter::FitResult fit_adapter(const BaseModel& model, std::size_t layer,
                               std::span<const adapter::TrainingPair> data, std::size_t rank, double alpha,
                               const adapter::FitConfig& cfg, std::string adapter_id) {
    if (layer >= model.layer_count()) throw Error(Errc::invalid_argument, "layer index out of range");
    return adapter::fit_adapter(model.layer(layer), layer, data, rank, alpha, cfg, std::move(adapter_id));
}

ModelBundle save_model(const BaseModel& model) {
    ModelBundle bundle;
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        for (double v : model.layer(l).data()) {
            const auto bits = std::bit_cast<std::uint64_t>(v);
            for (int shift = 0; shift < 64; shift += 8) bundle.payload.push_back(static_cast<std::uint8_t>(bits >> shift));
        }
    }
    nlohmann::ordered_json j;
    j["format"] = kFormat;
    j["version"] = 1;
    j["model_id"] = model.model_id();
    j["seed"] = model.seed();
    j["layer_dims"] = model.layer_dims();
    j["payload_bytes"] = bundle.payload.size();
    j["payload_sha256"] = to_hex(sha256(bundle.payload));
    bundle.manifest = j.dump(2);
    return bundle;
}

BaseModel load_model(const ModelBundle& bundle) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bundle.manifest);
        if (j.at("format").get<std::string>() != kFormat) invalid("not a model bundle manifest");
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("malformed model manifest: ") + e.what());
    }
    std::string model_id;
    std::uint64_t seed = 0;
    std::vector<std::size_t> dims;
    std::string digest;
    try {
        model_id = j.at("model_id").get<std::string>();
        seed = j.at("seed").get<std::uint64_t>();
        dims = j.at("layer_dims").get<std::vector<std::size_t>>();
        digest = j.at("payload_sha256").get<std::string>();
        if (j.at("payload_bytes").get<std::size_t>() != bundle.payload.size()) invalid("payload length mismatch");
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("malformed model manifest: ") + e.what());
    }
    if (to_hex(sha256(bundle.payload)) != digest) invalid("model payload SHA-256 mismatch");

    BaseModel model = generate_base_model(model_id, seed, dims);
    std::size_t offset = 0;
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        for (double expected : model.layer(l).data()) {
            if (offset + 8 > bundle.payload.size()) invalid("model payload too short");
            std::uint64_t bits = 0;
            for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bundle.payload[offset + i]) << (8 * i);
            offset += 8;
            if (std::bit_cast<std::uint64_t>(expected) != bits) invalid("model weights do not match (seed, dims)");
        }
    }
    if (offset != bundle.payload.size()) invalid("model payload too long");
    return model;
}

void write_model(const BaseModel& model, const std::filesystem::path& manifest_path) {
    const auto bundle = save_model(model);
    auto payload_path = manifest_path;
    payload_path.replace_extension(".bin");
    std::ofstream payload(payload_path, std::ios::binary | std::ios::trunc);
    payload.write(reinterpret_cast<const char*>(bundle.payload.data()),
                  static_cast<std::streamsize>(bundle.payload.size()));
    std::ofstream manifest(manifest_path, std::ios::trunc);
    manifest << bundle.manifest << '\n';
    if (!payload || !manifest) throw Error(Errc::io_error, "cannot write model " + manifest_path.string());
}

BaseModel read_model(const std::filesystem::path& manifest_path) {
    std::ifstream manifest(manifest_path);
    auto payload_path = manifest_path;
    payload_path.replace_extension(".bin");
    std::ifstream payload(payload_path, std::ios::binary);
    if (!manifest || !payload) throw Error(Errc::not_found, "cannot open model bundle " + manifest_path.string());
    std::stringstream text;
    text << manifest.rdbuf();
    ModelBundle bundle{text.str(), {std::istreambuf_iterator<char>(payload), std::istreambuf_iterator<char>()}};
    return load_model(bundle);
}

}  // namespace viz::model
