#include "plane2depth/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

using nlohmann::json;

namespace p2d {

namespace {

constexpr char kMagic[8] = {'P', '2', 'D', 'T', 'N', 'S', 'R', '1'};

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw IoError("truncated tensor blob: " + path);
    return v;
}

json config_to_json(const net::NetConfig& cfg) {
    return json{{"queries", cfg.queries},
                {"channels", cfg.channels},
                {"query_dim", cfg.query_dim},
                {"layers_per_scale", cfg.layers_per_scale},
                {"heads", cfg.heads},
                {"af_modulators", cfg.af_modulators},
                {"max_depth", cfg.max_depth}};
}

net::NetConfig config_from_json(const json& j) {
    net::NetConfig cfg;
    cfg.queries = j.at("queries").get<int>();
    cfg.channels = j.at("channels").get<int>();
    cfg.query_dim = j.at("query_dim").get<int>();
    cfg.layers_per_scale = j.at("layers_per_scale").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.af_modulators = j.at("af_modulators").get<bool>();
    cfg.max_depth = j.at("max_depth").get<double>();
    return cfg;
}

}  // namespace

void write_tensor_blob(const std::string& path, const RawTensors& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<std::uint32_t>(tensors.entries.size()));
    for (const auto& [name, value] : tensors.entries) {
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(out, static_cast<std::uint32_t>(value.rows()));
        write_u32(out, static_cast<std::uint32_t>(value.cols()));
        out.write(reinterpret_cast<const char*>(value.data()),
                  static_cast<std::streamsize>(sizeof(double) * value.size()));
    }
    if (!out) throw IoError("short write: " + path);
}

RawTensors read_tensor_blob(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("not a plane2depth tensor blob: " + path);
    }
    const std::uint32_t count = read_u32(in, path);
    RawTensors out;
    out.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t rows = read_u32(in, path);
        const std::uint32_t cols = read_u32(in, path);
        Eigen::MatrixXd value(rows, cols);
        in.read(reinterpret_cast<char*>(value.data()),
                static_cast<std::streamsize>(sizeof(double) * value.size()));
        if (!in) throw IoError("truncated tensor blob: " + path);
        out.entries.emplace_back(std::move(name), std::move(value));
    }
    return out;
}

void write_checkpoint(const std::string& base, const CheckpointMeta& meta,
                      const RawTensors& tensors) {
    write_tensor_blob(base + ".bin", tensors);
    json j{{"format", 1},
           {"arch", config_to_json(meta.config)},
           {"iteration", meta.iteration},
           {"dtype", meta.dtype},
           {"optimizer", json{{"present", meta.has_optimizer}, {"step", meta.adam_step}}},
           {"train_seed", meta.train_seed}};
    std::ofstream out(base + ".json");
    if (!out) throw IoError("cannot open for writing: " + base + ".json");
    out << j.dump(2) << "\n";
}

CheckpointMeta read_checkpoint_meta(const std::string& base) {
    std::ifstream in(base + ".json");
    if (!in) throw IoError("cannot open: " + base + ".json");
    json j;
    try {
        in >> j;
        CheckpointMeta meta;
        meta.config = config_from_json(j.at("arch"));
        meta.iteration = j.at("iteration").get<long>();
        meta.dtype = j.at("dtype").get<std::string>();
        meta.has_optimizer = j.at("optimizer").at("present").get<bool>();
        meta.adam_step = j.at("optimizer").at("step").get<long>();
        meta.train_seed = j.value("train_seed", std::uint64_t{0});
        return meta;
    } catch (const json::exception& e) {
        throw IoError("malformed checkpoint sidecar " + base + ".json: " + e.what());
    }
}

RawTensors read_checkpoint_tensors(const std::string& base) {
    return read_tensor_blob(base + ".bin");
}

std::string net_config_json(const net::NetConfig& cfg) { return config_to_json(cfg).dump(); }

net::NetConfig net_config_from_json_text(const std::string& text) {
    return config_from_json(json::parse(text));
}

}  // namespace p2d
