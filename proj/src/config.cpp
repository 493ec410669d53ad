#include "plane2depth/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

using nlohmann::json;

namespace p2d {

void RunConfig::validate() const {
    if (dataset_dir.empty()) throw ConfigError("dataset_dir: must not be empty");
    if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
    if (image_width < 4 || image_width % 4 != 0)
        throw ConfigError("image_width: must be a positive multiple of 4");
    if (image_height < 4 || image_height % 4 != 0)
        throw ConfigError("image_height: must be a positive multiple of 4");
    if (queries < 1) throw ConfigError("queries: must be >= 1");
    if (channels < 4) throw ConfigError("channels: must be >= 4");
    if (query_dim < 4) throw ConfigError("query_dim: must be >= 4");
    if (heads < 1 || query_dim % heads != 0)
        throw ConfigError("heads: must be >= 1 and divide query_dim");
    if (layers_per_scale < 0 || layers_per_scale > 4)
        throw ConfigError("layers_per_scale: must be in [0, 4]");
    if (weights.lambda < 0.0 || weights.lambda > 1.0)
        throw ConfigError("weights.lambda: must be in [0, 1]");
    if (weights.alpha < 0.0) throw ConfigError("weights.alpha: must be >= 0");
    if (weights.beta < 0.0) throw ConfigError("weights.beta: must be >= 0");
    if (weights.gamma < 0.0) throw ConfigError("weights.gamma: must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate: must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1: must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2: must be in [0, 1)");
    if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
    if (iterations < 1) throw ConfigError("iterations: must be >= 1");
    if (checkpoint_interval < 1) throw ConfigError("checkpoint_interval: must be >= 1");
    if (dtype != "float32" && dtype != "float64")
        throw ConfigError("dtype: must be float32 or float64");
}

namespace {

json to_json(const RunConfig& c) {
    return json{{"dataset_dir", c.dataset_dir},
                {"eval_dataset_dir", c.eval_dataset_dir},
                {"output_dir", c.output_dir},
                {"image_width", c.image_width},
                {"image_height", c.image_height},
                {"queries", c.queries},
                {"channels", c.channels},
                {"query_dim", c.query_dim},
                {"layers_per_scale", c.layers_per_scale},
                {"heads", c.heads},
                {"af_modulators", c.af_modulators},
                {"supervise_all_layers", c.supervise_all_layers},
                {"lambda", c.weights.lambda},
                {"alpha", c.weights.alpha},
                {"beta", c.weights.beta},
                {"gamma", c.weights.gamma},
                {"learning_rate", c.learning_rate},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"lr_linear_decay", c.lr_linear_decay},
                {"batch_size", c.batch_size},
                {"iterations", c.iterations},
                {"seed", c.seed},
                {"checkpoint_interval", c.checkpoint_interval},
                {"flip_augmentation", c.flip_augmentation},
                {"dtype", c.dtype}};
}

}  // namespace

namespace {

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Flat TOML subset: `key = value` lines, # comments, quoted strings, booleans,
// numbers. Sections are not needed for this config and are rejected.
json parse_flat_toml(std::istream& in, const std::string& path) {
    json j = json::object();
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = strip(line);
        if (line.empty()) continue;
        const auto where = path + ":" + std::to_string(line_no);
        if (line.front() == '[') throw ConfigError("config: sections not supported at " + where);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config: expected key = value at " + where);
        const std::string key = strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("config: empty key or value at " + where);
        }
        if (value.front() == '"' && value.back() == '"' && value.size() >= 2) {
            j[key] = value.substr(1, value.size() - 2);
        } else if (value == "true" || value == "false") {
            j[key] = (value == "true");
        } else {
            try {
                if (value.find_first_of(".eE") != std::string::npos) {
                    j[key] = std::stod(value);
                } else {
                    j[key] = std::stoll(value);
                }
            } catch (const std::exception&) {
                throw ConfigError("config: cannot parse value '" + value + "' at " + where);
            }
        }
    }
    return j;
}

}  // namespace

RunConfig run_config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    json j;
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config JSON parse error: ") + e.what());
        }
    } else {
        j = parse_flat_toml(in, path);
    }

    RunConfig c;
    const json defaults = to_json(c);
    for (const auto& [key, value] : j.items()) {
        if (!defaults.contains(key)) {
            throw ConfigError("config: unknown key '" + key + "'");
        }
        (void)value;
    }
    try {
        c.dataset_dir = j.value("dataset_dir", c.dataset_dir);
        c.eval_dataset_dir = j.value("eval_dataset_dir", c.eval_dataset_dir);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.image_width = j.value("image_width", c.image_width);
        c.image_height = j.value("image_height", c.image_height);
        c.queries = j.value("queries", c.queries);
        c.channels = j.value("channels", c.channels);
        c.query_dim = j.value("query_dim", c.query_dim);
        c.layers_per_scale = j.value("layers_per_scale", c.layers_per_scale);
        c.heads = j.value("heads", c.heads);
        c.af_modulators = j.value("af_modulators", c.af_modulators);
        c.supervise_all_layers = j.value("supervise_all_layers", c.supervise_all_layers);
        c.weights.lambda = j.value("lambda", c.weights.lambda);
        c.weights.alpha = j.value("alpha", c.weights.alpha);
        c.weights.beta = j.value("beta", c.weights.beta);
        c.weights.gamma = j.value("gamma", c.weights.gamma);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.lr_linear_decay = j.value("lr_linear_decay", c.lr_linear_decay);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.iterations = j.value("iterations", c.iterations);
        c.seed = j.value("seed", c.seed);
        c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
        c.flip_augmentation = j.value("flip_augmentation", c.flip_augmentation);
        c.dtype = j.value("dtype", c.dtype);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

std::string run_config_json(const RunConfig& cfg) { return to_json(cfg).dump(2); }

}  // namespace p2d
