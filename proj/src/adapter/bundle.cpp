// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/adapter/bundle.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "viz/error.hpp"
#include "viz/sha256.hpp"

namespace viz::adapter {

namespace {

constexpr const char* kFormat = "viz-adapter-bundle";
constexpr int kVersion = 1;

[[noreturn]] void corrupt(const std::string& what) { throw Error(Errc::corrupt_bundle, what); }

void append_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int shift = 0; shift < 64; shift += 8) out.push_back(static_cast<std::uint8_t>(bits >> shift));
}

Matrix read_f64_matrix(std::span<const std::uint8_t> bytes, std::size_t& offset, std::size_t rows,
                       std::size_t cols) {
    std::vector<double> data(rows * cols);
    for (double& v : data) {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
        offset += 8;
        v = std::bit_cast<double>(bits);
    }
    try {
        return Matrix(rows, cols, std::move(data));
    } catch (const Error& e) {
        corrupt(std::string("payload matrix invalid: ") + e.what());
    }
}

PayloadHeader tensor_header(const BundleManifest& m, std::size_t rows, std::size_t cols, double global_mean) {
    PayloadHeader h;
    h.rows = rows;
    h.cols = cols;
    h.block_size = m.block_size;
    h.codebook_bits = m.codebook_bits;
    h.double_quantized = m.double_quant;
    h.chunk_size = m.chunk_size;
    h.global_mean = global_mean;
    return h;
}

std::string digest_hex(std::span<const std::uint8_t> bytes) { return to_hex(sha256(bytes)); }

}  // namespace

AdapterBundle make_bundle(const LoraAdapter& adapter, const std::string& base_model_id) {
    AdapterBundle bundle;
    auto& m = bundle.manifest;
    m.adapter_id = adapter.adapter_id();
    m.base_model_id = base_model_id;
    m.target_layer = adapter.target_layer();
    m.rank = adapter.rank();
    m.alpha = adapter.alpha();
    m.d_in = adapter.d_in();
    m.d_out = adapter.d_out();

    if (const auto& q = adapter.quantized()) {
        m.encoding = PayloadEncoding::nf;
        const auto ha = header_of(q->a);
        m.codebook_bits = ha.codebook_bits;
        m.block_size = ha.block_size;
        m.double_quant = ha.double_quantized;
        m.chunk_size = ha.chunk_size;
        m.global_mean_a = ha.global_mean;
        m.global_mean_b = header_of(q->b).global_mean;
        bundle.payload = serialize_payload(q->a);
        const auto pb = serialize_payload(q->b);
        bundle.payload.insert(bundle.payload.end(), pb.begin(), pb.end());
    } else {
        m.encoding = PayloadEncoding::f64;
        for (double v : adapter.a().data()) append_f64(bundle.payload, v);
        for (double v : adapter.b().data()) append_f64(bundle.payload, v);
    }
    m.payload_bytes = bundle.payload.size();
    m.payload_sha256 = digest_hex(bundle.payload);
    return bundle;
}

LoraAdapter open_bundle(const AdapterBundle& bundle) {
    const auto& m = bundle.manifest;
    if (bundle.payload.size() != m.payload_bytes) corrupt("payload length does not match manifest");
    if (digest_hex(bundle.payload) != m.payload_sha256) corrupt("payload SHA-256 does not match manifest");
    if (m.rank == 0 || m.d_in == 0 || m.d_out == 0) corrupt("manifest declares an empty adapter");

    const std::span<const std::uint8_t> bytes = bundle.payload;
    try {
        if (m.encoding == PayloadEncoding::f64) {
            const std::size_t expected = 8 * (m.rank * m.d_in + m.d_out * m.rank);
            if (bytes.size() != expected) corrupt("f64 payload has the wrong length");
            std::size_t offset = 0;
            Matrix a = read_f64_matrix(bytes, offset, m.rank, m.d_in);
            Matrix b = read_f64_matrix(bytes, offset, m.d_out, m.rank);
            return LoraAdapter(m.adapter_id, m.target_layer, m.alpha, std::move(a), std::move(b));
        }
        const auto ha = tensor_header(m, m.rank, m.d_in, m.global_mean_a);
        const auto hb = tensor_header(m, m.d_out, m.rank, m.global_mean_b);
        const std::size_t size_a = payload_size(ha);
        if (size_a + payload_size(hb) != bytes.size()) corrupt("quantized payload has the wrong length");
        LoraAdapter::Quantized q{parse_payload(bytes.first(size_a), ha), parse_payload(bytes.subspan(size_a), hb)};
        return LoraAdapter::from_quantized(m.adapter_id, m.target_layer, m.alpha, std::move(q),
                                           build_nf4_codebook(m.codebook_bits));
    } catch (const Error& e) {
        if (e.code() == Errc::corrupt_bundle) throw;
        corrupt(std::string("bundle does not decode: ") + e.what());
    }
}

nlohmann::ordered_json manifest_to_json(const BundleManifest& m) {
    nlohmann::ordered_json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["adapter_id"] = m.adapter_id;
    j["base_model_id"] = m.base_model_id;
    j["target_layer"] = m.target_layer;
    j["rank"] = m.rank;
    j["alpha"] = m.alpha;
    j["d_in"] = m.d_in;
    j["d_out"] = m.d_out;
    j["encoding"] = m.encoding == PayloadEncoding::nf ? "nf" : "f64";
    if (m.encoding == PayloadEncoding::nf) {
        j["codebook_bits"] = m.codebook_bits;
        j["block_size"] = m.block_size;
        j["double_quant"] = m.double_quant;
        if (m.double_quant) {
            j["chunk_size"] = m.chunk_size;
            j["global_mean_a"] = m.global_mean_a;
            j["global_mean_b"] = m.global_mean_b;
        }
    }
    j["payload_bytes"] = m.payload_bytes;
    j["payload_sha256"] = m.payload_sha256;
    return j;
}

BundleManifest manifest_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kFormat) corrupt("not an adapter bundle manifest");
        if (j.at("version").get<int>() != kVersion) corrupt("unsupported bundle version");
        BundleManifest m;
        m.adapter_id = j.at("adapter_id").get<std::string>();
        m.base_model_id = j.at("base_model_id").get<std::string>();
        m.target_layer = j.at("target_layer").get<std::size_t>();
        m.rank = j.at("rank").get<std::size_t>();
        m.alpha = j.at("alpha").get<double>();
        m.d_in = j.at("d_in").get<std::size_t>();
        m.d_out = j.at("d_out").get<std::size_t>();
        const auto encoding = j.at("encoding").get<std::string>();
        if (encoding == "nf") {
            m.encoding = PayloadEncoding::nf;
            m.codebook_bits = j.at("codebook_bits").get<int>();
            m.block_size = j.at("block_size").get<std::size_t>();
            m.double_quant = j.at("double_quant").get<bool>();
            if (m.double_quant) {
                m.chunk_size = j.at("chunk_size").get<std::size_t>();
                m.global_mean_a = j.at("global_mean_a").get<double>();
                m.global_mean_b = j.at("global_mean_b").get<double>();
            }
        } else if (encoding == "f64") {
            m.encoding = PayloadEncoding::f64;
        } else {
            corrupt("unknown payload encoding '" + encoding + "'");
        }
        m.payload_bytes = j.at("payload_bytes").get<std::size_t>();
        m.payload_sha256 = j.at("payload_sha256").get<std::string>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        corrupt(std::string("malformed bundle manifest: ") + e.what());
    }
}

void write_bundle(const AdapterBundle& bundle, const std::filesystem::path& manifest_path) {
    auto payload_path = manifest_path;
    payload_path.replace_extension(".bin");
    std::ofstream payload(payload_path, std::ios::binary | std::ios::trunc);
    payload.write(reinterpret_cast<const char*>(bundle.payload.data()),
                  static_cast<std::streamsize>(bundle.payload.size()));
    std::ofstream manifest(manifest_path, std::ios::trunc);
    manifest << manifest_to_json(bundle.manifest).dump(2) << '\n';
    if (!payload || !manifest) throw Error(Errc::io_error, "cannot write bundle " + manifest_path.string());
}

AdapterBundle read_bundle(const std::filesystem::path& manifest_path) {
    std::ifstream manifest(manifest_path);
    if (!manifest) throw Error(Errc::not_found, "cannot open bundle manifest " + manifest_path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(manifest);
    } catch (const nlohmann::json::exception& e) {
        corrupt(std::string("bundle manifest is not valid JSON: ") + e.what());
    }
    auto payload_path = manifest_path;
    payload_path.replace_extension(".bin");
    std::ifstream payload(payload_path, std::ios::binary);
    if (!payload) throw Error(Errc::not_found, "cannot open bundle payload " + payload_path.string());
    AdapterBundle bundle;
    bundle.manifest = manifest_from_json(j);
    bundle.payload.assign(std::istreambuf_iterator<char>(payload), std::istreambuf_iterator<char>());
    return bundle;
}

}  // namespace viz::adapter
