#include "plane2depth/ablate.hpp"
#include "plane2depth/colormap.hpp"
#include "plane2depth/config.hpp"
#include "plane2depth/dataset.hpp"
#include "plane2depth/geometry.hpp"
#include "plane2depth/metrics.hpp"
#include "plane2depth/pfm.hpp"
#include "plane2depth/png_io.hpp"
#include "plane2depth/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string one_line(std::string msg) {
    for (char& c : msg) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return msg;
}

int fail(int code, const std::string& msg) {
    std::cerr << "plane2depth: error: " << one_line(msg) << std::endl;
    return code;
}

std::pair<int, int> parse_size(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos) {
        throw p2d::UsageError("size must look like WIDTHxHEIGHT, e.g. 64x64");
    }
    try {
        return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
    } catch (const std::exception&) {
        throw p2d::UsageError("cannot parse size: " + text);
    }
}

std::uint64_t env_seed_or(std::uint64_t fallback) {
    if (const char* env = std::getenv("PLANE2DEPTH_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw p2d::UsageError("PLANE2DEPTH_SEED is not a number");
        }
    }
    return fallback;
}

struct GenDataCli {
    std::string out;
    int count = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string size = "64x64";
    p2d::synth::GenerationParams params;
};

int cmd_gen_data(GenDataCli& o) {
    if (o.count <= 0) throw p2d::ConfigError("--count must be positive");
    std::tie(o.params.width, o.params.height) = parse_size(o.size);
    if (!o.seed_given) o.seed = env_seed_or(o.seed);
    const int misses = p2d::generate_dataset(o.out, o.count, o.seed, o.params);
    std::cout << "wrote " << o.count << " samples to " << o.out;
    if (misses > 0) std::cout << " (warning: " << misses << " missed rays)";
    std::cout << "\n";
    return 0;
}

struct RunCli {
    std::string config_path;
    std::string data, eval_data, out, resume, dtype, supervise, size;
    long iterations = 0;
    int batch = 0, queries = 0, channels = 0, query_dim = 0, lps = 0, heads = 0, ckpt = 0;
    double lr = 0, alpha = 0, beta = 0, gamma = 0, lambda = 0, beta1 = 0, beta2 = 0;
    std::uint64_t seed = 0;
    bool afm = false, no_afm = false, no_flip = false, lr_decay = false;
};

void add_run_options(CLI::App* cmd, RunCli& o) {
    cmd->add_option("--config", o.config_path, "run config file (.json or flat TOML)");
    cmd->add_option("--data", o.data, "training dataset directory");
    cmd->add_option("--eval-data", o.eval_data, "held-out dataset directory");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--size", o.size, "image size WIDTHxHEIGHT");
    cmd->add_option("--iterations", o.iterations, "iteration budget");
    cmd->add_option("--batch-size", o.batch, "minibatch size");
    cmd->add_option("--seed", o.seed, "run seed");
    cmd->add_option("--queries", o.queries, "plane query count L");
    cmd->add_option("--channels", o.channels, "feature width C");
    cmd->add_option("--query-dim", o.query_dim, "query embedding width");
    cmd->add_option("--layers-per-scale", o.lps, "transformer layers per scale");
    cmd->add_option("--heads", o.heads, "attention heads");
    cmd->add_flag("--afm", o.afm, "enable adaptive feature modulators");
    cmd->add_flag("--no-afm", o.no_afm, "disable adaptive feature modulators");
    cmd->add_option("--supervise-layers", o.supervise, "last|all")
        ->check(CLI::IsMember({"last", "all"}));
    cmd->add_option("--lr", o.lr, "learning rate");
    cmd->add_flag("--lr-decay", o.lr_decay, "linear learning-rate decay");
    cmd->add_option("--alpha", o.alpha, "depth loss weight");
    cmd->add_option("--beta", o.beta, "normal loss weight");
    cmd->add_option("--gamma", o.gamma, "distance loss weight");
    cmd->add_option("--lambda", o.lambda, "SI variance factor");
    cmd->add_option("--beta1", o.beta1, "Adam first-moment coefficient");
    cmd->add_option("--beta2", o.beta2, "Adam second-moment coefficient");
    cmd->add_flag("--no-flip", o.no_flip, "disable horizontal-flip augmentation");
    cmd->add_option("--dtype", o.dtype, "float32|float64")
        ->check(CLI::IsMember({"float32", "float64"}));
    cmd->add_option("--checkpoint-interval", o.ckpt, "iterations between checkpoints");
}

p2d::RunConfig build_run_config(const CLI::App* cmd, const RunCli& o) {
    p2d::RunConfig cfg;
    if (cmd->count("--config")) cfg = p2d::run_config_from_file(o.config_path);
    auto set = [&](const char* flag, auto fn) {
        if (cmd->count(flag)) fn();
    };
    set("--data", [&] { cfg.dataset_dir = o.data; });
    set("--eval-data", [&] { cfg.eval_dataset_dir = o.eval_data; });
    set("--out", [&] { cfg.output_dir = o.out; });
    set("--size", [&] {
        std::tie(cfg.image_width, cfg.image_height) = parse_size(o.size);
    });
    set("--iterations", [&] { cfg.iterations = o.iterations; });
    set("--batch-size", [&] { cfg.batch_size = o.batch; });
    set("--queries", [&] { cfg.queries = o.queries; });
    set("--channels", [&] { cfg.channels = o.channels; });
    set("--query-dim", [&] { cfg.query_dim = o.query_dim; });
    set("--layers-per-scale", [&] { cfg.layers_per_scale = o.lps; });
    set("--heads", [&] { cfg.heads = o.heads; });
    set("--supervise-layers", [&] { cfg.supervise_all_layers = o.supervise == "all"; });
    set("--lr", [&] { cfg.learning_rate = o.lr; });
    set("--lr-decay", [&] { cfg.lr_linear_decay = true; });
    set("--alpha", [&] { cfg.weights.alpha = o.alpha; });
    set("--beta", [&] { cfg.weights.beta = o.beta; });
    set("--gamma", [&] { cfg.weights.gamma = o.gamma; });
    set("--lambda", [&] { cfg.weights.lambda = o.lambda; });
    set("--beta1", [&] { cfg.beta1 = o.beta1; });
    set("--beta2", [&] { cfg.beta2 = o.beta2; });
    set("--no-flip", [&] { cfg.flip_augmentation = false; });
    set("--dtype", [&] { cfg.dtype = o.dtype; });
    set("--checkpoint-interval", [&] { cfg.checkpoint_interval = o.ckpt; });
    if (cmd->count("--afm") && cmd->count("--no-afm")) {
        throw p2d::UsageError("--afm and --no-afm are mutually exclusive");
    }
    set("--afm", [&] { cfg.af_modulators = true; });
    set("--no-afm", [&] { cfg.af_modulators = false; });
    if (cmd->count("--seed")) {
        cfg.seed = o.seed;
    } else if (!cmd->count("--config")) {
        cfg.seed = env_seed_or(cfg.seed);
    }
    return cfg;
}

int cmd_train(const CLI::App* cmd, const RunCli& o) {
    const p2d::RunConfig cfg = build_run_config(cmd, o);
    const p2d::TrainResult result = p2d::train(cfg, o.resume);
    std::cout << "trained " << result.iterations_run << " iterations, final loss "
              << result.final_loss << "\ncheckpoint: " << result.checkpoint_base << "\n";

    const std::string eval_dir =
        cfg.eval_dataset_dir.empty() ? cfg.dataset_dir : cfg.eval_dataset_dir;
    const p2d::Predictor predictor = p2d::load_predictor(result.checkpoint_base);
    const p2d::EvalResult eval = p2d::evaluate_dataset(&predictor, eval_dir);
    std::cout << p2d::metric_table({"aggregate"}, {eval.aggregate});
    return 0;
}

struct EvalCli {
    std::string checkpoint, data, out = "eval_out";
    bool export_maps = false, oracle = false;
    double error_cap = 0.5;
};

int cmd_eval(const EvalCli& o) {
    p2d::EvalOptions opts;
    opts.export_maps = o.export_maps;
    opts.oracle_gt_planes = o.oracle;
    opts.error_cap = o.error_cap;
    opts.export_dir = o.out + "/maps";

    std::optional<p2d::Predictor> predictor;
    if (!o.oracle) {
        if (o.checkpoint.empty()) {
            throw p2d::UsageError("--checkpoint is required unless --oracle-gt-planes");
        }
        predictor = p2d::load_predictor(o.checkpoint);
        const auto manifest = p2d::read_manifest(o.data);
        if (manifest.width % 4 != 0 || manifest.height % 4 != 0) {
            throw p2d::UsageError("dataset image size must be a multiple of 4");
        }
    }
    const p2d::EvalResult result =
        p2d::evaluate_dataset(predictor ? &*predictor : nullptr, o.data, opts);

    fs::create_directories(o.out);
    std::ofstream per_image(o.out + "/metrics_per_image.jsonl");
    for (size_t i = 0; i < result.per_image.size(); ++i) {
        per_image << "{\"name\":\"" << result.names[i]
                  << "\",\"metrics\":" << p2d::metric_report_json(result.per_image[i]) << "}\n";
    }
    std::ofstream agg(o.out + "/metrics.json");
    agg << p2d::metric_report_json(result.aggregate) << "\n";
    const std::string table = p2d::metric_table({"aggregate"}, {result.aggregate});
    std::ofstream tab(o.out + "/metrics.txt");
    tab << table;
    std::cout << table;
    return 0;
}

struct InferCli {
    std::string checkpoint, image, intrinsics, out = "infer_out", gt;
    double error_cap = 0.5;
    double max_depth = 0.0;
};

int cmd_infer(const CLI::App* cmd, const InferCli& o) {
    if (!fs::exists(o.intrinsics)) {
        throw p2d::UsageError("intrinsics file not found: " + o.intrinsics);
    }
    json j;
    {
        std::ifstream in(o.intrinsics);
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw p2d::UsageError("bad intrinsics JSON: " + std::string(e.what()));
        }
    }
    p2d::CameraIntrinsics K;
    try {
        K.fx = j.at("fx").get<double>();
        K.fy = j.at("fy").get<double>();
        K.cx = j.at("cx").get<double>();
        K.cy = j.at("cy").get<double>();
    } catch (const json::exception& e) {
        throw p2d::UsageError("bad intrinsics JSON: " + std::string(e.what()));
    }

    const p2d::Grid<p2d::Rgb8> image8 = p2d::read_png_rgb8(o.image);
    if (image8.width() % 32 != 0 || image8.height() % 32 != 0) {
        throw p2d::UsageError("image size must be divisible by 32");
    }
    const p2d::Predictor predictor = p2d::load_predictor(o.checkpoint);
    double max_depth = predictor.config.max_depth;
    if (cmd->count("--max-depth")) max_depth = o.max_depth;
    if (j.contains("max_depth") && !cmd->count("--max-depth")) {
        max_depth = j.at("max_depth").get<double>();
    }

    const p2d::PredictedMaps maps =
        predictor.run(p2d::dequantize_rgb(image8), K, max_depth);

    fs::create_directories(o.out);
    p2d::write_pfm(o.out + "/depth.pfm", p2d::to_float_grid(maps.depth.values));
    for (int c = 0; c < 3; ++c) {
        p2d::Grid<float> ch(maps.normals.vectors.height(), maps.normals.vectors.width(), 0.0f);
        for (size_t i = 0; i < ch.size(); ++i) {
            ch[i] = static_cast<float>(maps.normals.vectors[i][c]);
        }
        const char* names[3] = {"/normal_x.pfm", "/normal_y.pfm", "/normal_z.pfm"};
        p2d::write_pfm(o.out + names[c], ch);
    }
    p2d::write_pfm(o.out + "/distance.pfm", p2d::to_float_grid(maps.distance.values));
    p2d::write_png_rgb8(o.out + "/depth.png",
                        p2d::colorize_map(maps.depth.values, maps.depth.valid, max_depth,
                                          p2d::rainbow_color));

    if (!o.gt.empty()) {
        const p2d::Grid<float> gt = p2d::read_pfm(o.gt);
        if (gt.height() != image8.height() || gt.width() != image8.width()) {
            throw p2d::UsageError("--gt depth size does not match the image");
        }
        p2d::Grid<double> err(gt.height(), gt.width(), 0.0);
        p2d::Mask valid(gt.height(), gt.width(), 0);
        for (size_t i = 0; i < err.size(); ++i) {
            if (gt[i] > 0.0f) {
                err[i] = std::abs(maps.depth.values[i] - static_cast<double>(gt[i]));
                valid[i] = 1;
            }
        }
        p2d::write_png_rgb8(o.out + "/error.png",
                            p2d::colorize_map(err, valid, o.error_cap, p2d::coolwarm_color));
    }
    std::cout << "wrote inference outputs to " << o.out << "\n";
    return 0;
}

struct AblateCli {
    RunCli run;
    std::string study;
    std::string queries_list = "8,32,64";
    std::string out = "ablate_out";
};

int cmd_ablate(const CLI::App* cmd, AblateCli& o) {
    p2d::RunConfig base = build_run_config(cmd, o.run);
    if (!cmd->count("--out") && !cmd->count("--config")) base.output_dir = o.out;

    std::vector<int> query_counts;
    std::stringstream ss(o.queries_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) query_counts.push_back(std::stoi(tok));
    }

    const p2d::AblationTable table = p2d::run_ablation(o.study, base, query_counts);
    fs::create_directories(base.output_dir);
    std::ofstream txt(base.output_dir + "/ablation.txt");
    txt << table.text;
    std::ofstream js(base.output_dir + "/ablation.json");
    js << p2d::ablation_json(table) << "\n";
    std::cout << "study: " << table.study << "\n" << table.text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plane2depth: plane-guided monocular depth estimation toolkit"};
    app.require_subcommand(1);

    GenDataCli gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen_cmd->add_option("--out", gen.out, "output directory")->required();
    gen_cmd->add_option("--count", gen.count, "number of samples")->required();
    CLI::Option* gen_seed = gen_cmd->add_option("--seed", gen.seed, "base seed");
    gen_cmd->add_option("--size", gen.size, "image size WIDTHxHEIGHT");
    gen_cmd->add_option("--deception-frac", gen.params.deception_frac,
                        "fraction of planes with a split-color texture");
    gen_cmd->add_option("--max-depth", gen.params.max_depth, "depth cap in meters");
    gen_cmd->add_option("--min-panels", gen.params.min_panels, "min interior panels");
    gen_cmd->add_option("--max-panels", gen.params.max_panels, "max interior panels");
    gen_cmd->add_option("--fov", gen.params.fov_deg, "horizontal field of view, degrees");

    RunCli train_cli;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    add_run_options(train_cmd, train_cli);
    train_cmd->add_option("--resume", train_cli.resume, "checkpoint base to resume from");

    EvalCli eval_cli;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval_cmd->add_option("--checkpoint", eval_cli.checkpoint, "checkpoint base path");
    eval_cmd->add_option("--data", eval_cli.data, "dataset directory")->required();
    eval_cmd->add_option("--out", eval_cli.out, "report directory");
    eval_cmd->add_flag("--export-maps", eval_cli.export_maps, "write depth and error maps");
    eval_cmd->add_flag("--oracle-gt-planes", eval_cli.oracle,
                       "evaluate GT plane fields through the depth conversion");
    eval_cmd->add_option("--error-cap", eval_cli.error_cap, "error-map clip in meters");

    InferCli infer_cli;
    CLI::App* infer_cmd = app.add_subcommand("infer", "run inference on one image");
    infer_cmd->add_option("--checkpoint", infer_cli.checkpoint, "checkpoint base")->required();
    infer_cmd->add_option("--image", infer_cli.image, "input RGB PNG")->required();
    infer_cmd->add_option("--intrinsics", infer_cli.intrinsics, "intrinsics JSON")->required();
    infer_cmd->add_option("--out", infer_cli.out, "output directory");
    infer_cmd->add_option("--gt", infer_cli.gt, "ground-truth depth PFM for an error map");
    infer_cmd->add_option("--error-cap", infer_cli.error_cap, "error-map clip in meters");
    infer_cmd->add_option("--max-depth", infer_cli.max_depth, "depth cap override");

    AblateCli ablate_cli;
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "train and compare config arms");
    add_run_options(ablate_cmd, ablate_cli.run);
    ablate_cmd->add_option("--study", ablate_cli.study, "afm|ncdc|queries")->required();
    ablate_cmd->add_option("--queries-list", ablate_cli.queries_list,
                           "comma-separated query counts for the queries study");

    try {
        app.parse(argc, argv);
        gen.seed_given = gen_seed->count() > 0;
        if (gen_cmd->parsed()) return cmd_gen_data(gen);
        if (train_cmd->parsed()) return cmd_train(train_cmd, train_cli);
        if (eval_cmd->parsed()) return cmd_eval(eval_cli);
        if (infer_cmd->parsed()) return cmd_infer(infer_cmd, infer_cli);
        if (ablate_cmd->parsed()) return cmd_ablate(ablate_cmd, ablate_cli);
        return fail(kExitUsage, "no subcommand given");
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        return fail(kExitUsage, e.what());
    } catch (const p2d::UsageError& e) {
        return fail(kExitUsage, e.what());
    } catch (const std::exception& e) {
        return fail(kExitRuntime, e.what());
    }
}
