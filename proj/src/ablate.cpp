#include "plane2depth/ablate.hpp"

#include <json.hpp>

namespace p2d {

namespace {

struct Arm {
    std::string name;
    RunConfig config;
};

std::string arm_dir_name(std::string name) {
    for (char& c : name) {
        if (c == '=' || c == ' ' || c == ',') c = '_';
    }
    return name;
}

}  // namespace

AblationTable run_ablation(const std::string& study, const RunConfig& base,
                           const std::vector<int>& query_counts) {
    std::vector<Arm> arms;
    if (study == "afm") {
        Arm off{"afm=off", base};
        off.config.af_modulators = false;
        Arm on{"afm=on", base};
        on.config.af_modulators = true;
        arms = {off, on};
    } else if (study == "ncdc") {
        // 4-row constraint grid: normal (beta) and distance (gamma) terms on/off.
        for (const bool nc : {false, true}) {
            for (const bool dc : {false, true}) {
                Arm arm{std::string("nc=") + (nc ? "on" : "off") + " dc=" + (dc ? "on" : "off"),
                        base};
                if (!nc) arm.config.weights.beta = 0.0;
                if (!dc) arm.config.weights.gamma = 0.0;
                arms.push_back(arm);
            }
        }
    } else if (study == "queries") {
        if (query_counts.empty()) throw ConfigError("queries study needs a query count list");
        for (const int L : query_counts) {
            Arm arm{"L=" + std::to_string(L), base};
            arm.config.queries = L;
            arms.push_back(arm);
        }
    } else {
        throw ConfigError("unknown ablation study: " + study + " (afm|ncdc|queries)");
    }

    AblationTable table;
    table.study = study;
    const std::string eval_dir =
        base.eval_dataset_dir.empty() ? base.dataset_dir : base.eval_dataset_dir;
    std::vector<std::string> names;
    std::vector<MetricReport> reports;
    for (Arm& arm : arms) {
        arm.config.output_dir = base.output_dir + "/" + arm_dir_name(arm.name);
        const TrainResult trained = train(arm.config);
        const Predictor predictor = load_predictor(trained.checkpoint_base);
        const EvalResult eval = evaluate_dataset(&predictor, eval_dir);
        table.rows.push_back({arm.name, eval.aggregate});
        names.push_back(arm.name);
        reports.push_back(eval.aggregate);
    }
    table.text = metric_table(names, reports);
    return table;
}

std::string ablation_json(const AblationTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
        rows.push_back(nlohmann::json{{"name", row.name},
                                      {"metrics", nlohmann::json::parse(
                                                      metric_report_json(row.metrics))}});
    }
    return nlohmann::json{{"study", table.study}, {"rows", rows}}.dump(2);
}

}  // namespace p2d
