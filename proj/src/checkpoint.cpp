// SPDX-License-Identifier: Apache-2.0
#include "axbxp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace axbxp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int checkpoint_version = 1;

std::string layer_file_stem(int index) {
    std::ostringstream s;
    s << "layer" << std::setw(2) << std::setfill('0') << index;
    return s.str();
}

void write_file(const fs::path& path, const void* bytes, std::size_t count) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(Errc::io_error, "cannot write '" + path.string() + "'");
    out.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(count));
    if (!out)
        raise(Errc::io_error, "short write to '" + path.string() + "'");
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in)
        raise(Errc::io_error, "cannot read '" + path.string() + "'");
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in)
        raise(Errc::io_error, "short read from '" + path.string() + "'");
    return bytes;
}

json config_to_json(const AxbxpConfig& c) {
    return json{{"k", c.k}, {"kept_w", c.kept_w}, {"kept_a", c.kept_a}, {"mode", mode_name(c.mode)}};
}

AxbxpConfig config_from_json(const json& j) {
    AxbxpConfig c;
    c.k = j.at("k").get<int>();
    c.kept_w = j.at("kept_w").get<int>();
    c.kept_a = j.at("kept_a").get<int>();
    c.mode = parse_mode(j.at("mode").get<std::string>());
    validate_config(c);
    return c;
}

std::vector<double> floats_from_bytes(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() % 8)
        raise(Errc::format_error, "float payload size is not a multiple of 8");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b)
            v |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
        out[i] = std::bit_cast<double>(v);
    }
    return out;
}

std::vector<std::uint8_t> floats_to_bytes(const std::vector<double>& values) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(values.size() * 8);
    for (double f : values) {
        const auto v = std::bit_cast<std::uint64_t>(f);
        for (int b = 0; b < 8; ++b)
            bytes.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
    }
    return bytes;
}

} // namespace

void save_checkpoint(const std::string& dir, const Checkpoint& ckpt) {
    if (ckpt.model.layers.size() != ckpt.float_model.layers.size())
        raise(Errc::shape_error, "quantized and float layer lists differ");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        raise(Errc::io_error, "cannot create checkpoint directory '" + dir + "'");

    json manifest;
    manifest["format"] = "axbxp-checkpoint";
    manifest["version"] = checkpoint_version;
    manifest["input"] = {{"channels", ckpt.model.input.channels},
                         {"height", ckpt.model.input.height},
                         {"width", ckpt.model.input.width}};
    manifest["classes"] = ckpt.model.classes;
    manifest["input_scale"] = ckpt.model.input_scale;
    manifest["layers"] = json::array();

    for (int li = 0; li < static_cast<int>(ckpt.model.layers.size()); ++li) {
        const QuantLayer& q = ckpt.model.layers[static_cast<std::size_t>(li)];
        const FloatLayer& f = ckpt.float_model.layers[static_cast<std::size_t>(li)];
        json layer;
        layer["kind"] = layer_kind_name(q.kind);
        layer["stride"] = q.stride;
        layer["pad"] = q.pad;
        layer["pool"] = q.pool;
        if (q.is_mac()) {
            const std::string stem = layer_file_stem(li);
            layer["wshape"] = q.weights.shape;
            layer["w_scale"] = q.weights.scale;
            layer["in_scale"] = q.in_scale;
            layer["out_scale"] = q.out_scale;
            layer["bias"] = q.bias;
            layer["float_bias"] = f.b;
            layer["weights_file"] = stem + ".int8.bin";
            layer["float_weights_file"] = stem + ".f64.bin";
            layer["config"] = q.config ? config_to_json(*q.config) : json(nullptr);
            write_file(fs::path(dir) / (stem + ".int8.bin"), q.weights.values.data(),
                       q.weights.values.size());
            const auto fbytes = floats_to_bytes(f.w);
            write_file(fs::path(dir) / (stem + ".f64.bin"), fbytes.data(), fbytes.size());
        }
        manifest["layers"].push_back(std::move(layer));
    }

    const std::string text = manifest.dump(2);
    write_file(fs::path(dir) / "manifest.json", text.data(), text.size());
}

Checkpoint load_checkpoint(const std::string& dir) {
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        raise(Errc::format_error, std::string("bad checkpoint manifest: ") + e.what());
    }
    if (manifest.value("format", "") != "axbxp-checkpoint")
        raise(Errc::format_error, "not an axbxp checkpoint manifest");
    if (manifest.value("version", 0) != checkpoint_version)
        raise(Errc::format_error, "unsupported checkpoint version");

    Checkpoint ckpt;
    try {
        ckpt.model.input = Geometry{manifest.at("input").at("channels").get<int>(),
                                    manifest.at("input").at("height").get<int>(),
                                    manifest.at("input").at("width").get<int>()};
        ckpt.model.classes = manifest.at("classes").get<int>();
        ckpt.model.input_scale = manifest.at("input_scale").get<double>();
        ckpt.float_model.input = ckpt.model.input;
        ckpt.float_model.classes = ckpt.model.classes;

        for (const json& layer : manifest.at("layers")) {
            QuantLayer q;
            FloatLayer f;
            q.kind = f.kind = parse_layer_kind(layer.at("kind").get<std::string>());
            q.stride = f.stride = layer.value("stride", 1);
            q.pad = f.pad = layer.value("pad", 0);
            q.pool = f.pool = layer.value("pool", 2);
            if (q.is_mac()) {
                q.weights.shape = layer.at("wshape").get<std::vector<std::uint32_t>>();
                q.weights.scale = layer.at("w_scale").get<double>();
                q.in_scale = layer.at("in_scale").get<double>();
                q.out_scale = layer.at("out_scale").get<double>();
                q.bias = layer.at("bias").get<std::vector<std::int32_t>>();
                f.b = layer.at("float_bias").get<std::vector<double>>();
                f.wshape = q.weights.shape;

                std::uint64_t expected = 1;
                for (std::uint32_t d : q.weights.shape)
                    expected *= d;

                const std::string wfile = layer.at("weights_file").get<std::string>();
                const auto bytes = read_file(fs::path(dir) / wfile);
                if (wfile.size() > 5 && wfile.substr(wfile.size() - 5) == ".axbp") {
                    const AxbxpTensor t = AxbxpTensor::deserialize(bytes);
                    q.weights.values = t.reconstruct();
                } else {
                    q.weights.values.resize(bytes.size());
                    std::memcpy(q.weights.values.data(), bytes.data(), bytes.size());
                }
                if (q.weights.values.size() != expected)
                    raise(Errc::format_error, "weight payload does not match its shape");

                f.w = floats_from_bytes(
                    read_file(fs::path(dir) / layer.at("float_weights_file").get<std::string>()));
                if (f.w.size() != expected)
                    raise(Errc::format_error, "float weight payload does not match its shape");

                if (!layer.at("config").is_null())
                    q.config = config_from_json(layer.at("config"));
            }
            ckpt.model.layers.push_back(std::move(q));
            ckpt.float_model.layers.push_back(std::move(f));
        }
    } catch (const json::exception& e) {
        raise(Errc::format_error, std::string("bad checkpoint manifest: ") + e.what());
    }
    return ckpt;
}

} // namespace axbxp
