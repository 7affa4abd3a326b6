// Command-line front end: simulate | ingest | train | ablate | heatmap.
// One JSON configuration document drives everything; each command writes its
// artifacts plus a resolved-config sidecar into --out and prints the artifact
// paths, one per line.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tempnet/ablation.hpp"
#include "tempnet/config.hpp"
#include "tempnet/dataset.hpp"
#include "tempnet/heatmap.hpp"
#include "tempnet/model_io.hpp"
#include "tempnet/nn.hpp"

namespace fs = std::filesystem;
using namespace tempnet;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
};

RunConfig resolve_config(const GlobalOptions& opts) {
    RunConfig cfg = opts.config_path.empty() ? RunConfig{} : load_config_file(opts.config_path);
    if (opts.seed_override) cfg.dataset_seed = *opts.seed_override;
    if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
    return cfg;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

// Sidecar first, so a rerun can always be reproduced from the output dir.
// Metadata lives under run_metadata, which the config parser ignores, so the
// sidecar itself is a valid --config document.
fs::path write_sidecar(const RunConfig& cfg, const fs::path& out_dir,
                       const nlohmann::json& extra = {}) {
    fs::create_directories(out_dir);
    nlohmann::json doc = config_to_json(cfg);
    nlohmann::json meta = {{"config_hash", config_hash(cfg)}};
    for (const auto& [key, value] : extra.items()) meta[key] = value;
    doc["run_metadata"] = meta;
    const fs::path path = out_dir / "resolved_config.json";
    write_text_file(path, doc.dump(2) + "\n");
    return path;
}

void print_artifact(const fs::path& path) { std::cout << path.string() << '\n'; }

int cmd_simulate(const GlobalOptions& opts) {
    const RunConfig cfg = resolve_config(opts);
    const fs::path out_dir = cfg.output_dir;
    const ThermistorCoefficients coeffs = coefficients_from(cfg);
    const ArraySpec array = build_array(cfg.array_seed, cfg.array_defaults);
    Dataset ds = generate(array, cfg.profile, cfg.protocol, coeffs, cfg.dataset_seed);
    ds.provenance.config_hash = config_hash(cfg);

    print_artifact(write_sidecar(cfg, out_dir));
    const fs::path csv_path = out_dir / "dataset.csv";
    write_csv_file(ds, csv_path.string());
    print_artifact(csv_path);
    return 0;
}

int cmd_ingest(const GlobalOptions& opts, const std::string& log_path) {
    const RunConfig cfg = resolve_config(opts);
    const fs::path out_dir = cfg.output_dir;
    IngestResult result = ingest_serial_log_file(log_path);
    if (cfg.subsample_per_setpoint > 0) {
        result.dataset =
            subsample_per_setpoint(result.dataset, cfg.subsample_per_setpoint, cfg.subsample_seed);
    }
    std::cerr << "ingest: " << result.dataset.samples.size() << " samples, "
              << result.dropped_frames << " incomplete frames dropped\n";

    print_artifact(write_sidecar(cfg, out_dir,
                                 {{"ingest_source", log_path},
                                  {"ingest_dropped_frames", result.dropped_frames},
                                  {"ingest_samples", result.dataset.samples.size()}}));
    const fs::path csv_path = out_dir / "dataset.csv";
    write_csv_file(result.dataset, csv_path.string());
    print_artifact(csv_path);
    return 0;
}

int cmd_train(const GlobalOptions& opts, const std::string& dataset_path) {
    const RunConfig cfg = resolve_config(opts);
    const fs::path out_dir = cfg.output_dir;
    const Dataset ds = read_csv_file(dataset_path);
    const MlpArchitecture arch{ds.width(), cfg.hidden_layers, 1};
    const auto [train_ds, test_ds] = split(ds, cfg.train_fraction, cfg.split_seed);
    const TrainedModel model = train(train_ds, test_ds, arch, cfg.train);
    const Metrics metrics = evaluate(model.params, model.scaler, arch, test_ds);

    print_artifact(write_sidecar(cfg, out_dir, {{"dataset_path", dataset_path}}));

    const fs::path model_path = out_dir / "model.json";
    save_model_file({arch, model.params, model.scaler}, model_path.string());
    print_artifact(model_path);

    const fs::path history_path = out_dir / "history.json";
    write_text_file(history_path, history_to_json(model.history).dump(2) + "\n");
    print_artifact(history_path);

    nlohmann::json mj = {{"schema_version", 1},
                         {"loss", loss_name(cfg.train.loss_kind)},
                         {"mae_c", metrics.mae_c},
                         {"rmse_c", metrics.rmse_c},
                         {"max_abs_err_c", metrics.max_abs_err_c},
                         {"mse_normalized", metrics.mse_normalized},
                         {"final_train_loss", model.history.train_loss.back()},
                         {"final_test_loss", model.history.test_loss.back()}};
    nlohmann::json per_setpoint = nlohmann::json::array();
    for (const auto& [label, mean] : metrics.per_setpoint_mean_prediction_c) {
        per_setpoint.push_back({{"set_temp_c", label}, {"mean_prediction_c", mean}});
    }
    mj["per_setpoint_mean_prediction_c"] = per_setpoint;
    const fs::path metrics_path = out_dir / "metrics.json";
    write_text_file(metrics_path, mj.dump(2) + "\n");
    print_artifact(metrics_path);

    const std::vector<double> predictions = predict_celsius(model.params, model.scaler, arch, test_ds);
    const fs::path scatter_path = out_dir / "scatter.svg";
    write_text_file(scatter_path, emit_prediction_scatter_svg(test_ds, predictions));
    print_artifact(scatter_path);

    const fs::path curves_path = out_dir / "loss_curves.svg";
    write_text_file(curves_path, emit_loss_curves_svg({{"train_run", model.history}}, true));
    print_artifact(curves_path);
    return 0;
}

int cmd_ablate(const GlobalOptions& opts, const std::string& dataset_path) {
    const RunConfig cfg = resolve_config(opts);
    const fs::path out_dir = cfg.output_dir;
    const Dataset ds = read_csv_file(dataset_path);
    AblationReport report =
        run_ablation(ds, cfg.ablation_variants, cfg.train, architecture_from(cfg),
                     cfg.train_fraction, cfg.split_seed, cfg.component_shuffle_seed);

    print_artifact(write_sidecar(cfg, out_dir, {{"dataset_path", dataset_path}}));
    std::vector<fs::path> artifacts;
    for (VariantResult& v : report.variants) {
        if (v.diverged) continue;
        const fs::path history_path = out_dir / ("history_" + v.name + ".json");
        write_text_file(history_path, history_to_json(v.history).dump(2) + "\n");
        v.history_path = history_path.string();
        artifacts.push_back(history_path);
        const fs::path svg_path = out_dir / ("loss_" + v.name + ".svg");
        write_text_file(svg_path, emit_loss_curves_svg({{v.name, v.history}}, true));
        artifacts.push_back(svg_path);
    }
    const fs::path report_path = out_dir / "report.json";
    write_text_file(report_path, report_to_json(report).dump(2) + "\n");
    print_artifact(report_path);
    const fs::path table_path = out_dir / "report.txt";
    write_text_file(table_path, render_report_text(report));
    print_artifact(table_path);
    for (const fs::path& p : artifacts) print_artifact(p);
    return 0;
}

int cmd_heatmap(const GlobalOptions& opts, const std::string& dataset_path) {
    const RunConfig cfg = resolve_config(opts);
    const fs::path out_dir = cfg.output_dir;
    const Dataset ds = read_csv_file(dataset_path);
    const ArraySpec array = build_array(cfg.array_seed, cfg.array_defaults);
    const std::vector<ReadingGrid> grids = mean_grids(ds, array);

    print_artifact(write_sidecar(cfg, out_dir, {{"dataset_path", dataset_path}}));
    const fs::path svg_path = out_dir / "heatmap.svg";
    write_text_file(svg_path, emit_heatmap_svg(grids));
    print_artifact(svg_path);
    const fs::path json_path = out_dir / "heatmap.json";
    write_text_file(json_path, grids_to_json(grids).dump(2) + "\n");
    print_artifact(json_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sensor-array temperature simulator, trainer and ablation harness"};
    app.require_subcommand(1);

    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "run configuration JSON (defaults built in)");
    app.add_option("--out", opts.out_dir, "output directory (overrides config output.dir)");
    std::uint64_t seed_override = 0;
    CLI::Option* seed_opt = app.add_option("--seed-override", seed_override,
                                           "replace the dataset generation seed");

    std::string log_path, dataset_path;
    CLI::App* simulate = app.add_subcommand("simulate", "generate a simulated dataset CSV");
    CLI::App* ingest = app.add_subcommand("ingest", "convert a serial log into a dataset CSV");
    ingest->add_option("--log", log_path, "serial log file")->required();
    CLI::App* train_cmd = app.add_subcommand("train", "train the regression model on a dataset");
    train_cmd->add_option("--dataset", dataset_path, "dataset CSV")->required();
    CLI::App* ablate = app.add_subcommand("ablate", "run the ablation variants and compare");
    ablate->add_option("--dataset", dataset_path, "dataset CSV")->required();
    CLI::App* heatmap_cmd = app.add_subcommand("heatmap", "per-setpoint mean reading heatmaps");
    heatmap_cmd->add_option("--dataset", dataset_path, "dataset CSV")->required();
    // global flags may appear after the subcommand
    for (CLI::App* sub : {simulate, ingest, train_cmd, ablate, heatmap_cmd}) {
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count() > 0) opts.seed_override = seed_override;

    try {
        if (simulate->parsed()) return cmd_simulate(opts);
        if (ingest->parsed()) return cmd_ingest(opts, log_path);
        if (train_cmd->parsed()) return cmd_train(opts, dataset_path);
        if (ablate->parsed()) return cmd_ablate(opts, dataset_path);
        if (heatmap_cmd->parsed()) return cmd_heatmap(opts, dataset_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
