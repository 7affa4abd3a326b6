#pragma once

#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempnet/dataset.hpp"
#include "tempnet/nn.hpp"

namespace tempnet {

constexpr int kReportSchemaVersion = 1;

inline const std::vector<std::string>& ablation_variant_names() {
    static const std::vector<std::string> names = {
        "baseline",     "loss_mae",      "loss_rmse",    "loss_msle",   "epochs_600",
        "extra_layer_12", "shuffled_test", "shuffled_train", "digital_only", "analog_only"};
    return names;
}

// A named single-aspect deviation from the baseline recipe.
struct AblationVariant {
    std::string name;
    TrainConfig config;
    MlpArchitecture arch;
    bool shuffle_train = false;
    bool shuffle_test = false;
    // column restriction; empty = all columns
    std::vector<std::size_t> columns;
};

inline AblationVariant make_variant(const std::string& name, const TrainConfig& base,
                                    const MlpArchitecture& base_arch) {
    AblationVariant v{name, base, base_arch, false, false, {}};
    if (name == "baseline") {
        return v;
    } else if (name == "loss_mae") {
        v.config.loss_kind = LossKind::mae;
    } else if (name == "loss_rmse") {
        v.config.loss_kind = LossKind::rmse;
    } else if (name == "loss_msle") {
        v.config.loss_kind = LossKind::msle;
    } else if (name == "epochs_600") {
        // same seeds as baseline: the first 300 epochs replay its trajectory
        v.config.epochs = 600;
    } else if (name == "extra_layer_12") {
        v.arch.hidden.push_back(12);
    } else if (name == "shuffled_test") {
        v.shuffle_test = true;
    } else if (name == "shuffled_train") {
        v.shuffle_train = true;
        v.shuffle_test = true;
    } else if (name == "digital_only" || name == "analog_only") {
        // array layout: ids 0..15 analog, 16..31 digital
        const std::size_t begin = name == "digital_only" ? kArraySensors / 2 : 0;
        for (std::size_t c = begin; c < begin + kArraySensors / 2; ++c) v.columns.push_back(c);
        v.arch.input_dim = kArraySensors / 2;
    } else {
        throw std::invalid_argument("unknown ablation variant '" + name + "'");
    }
    return v;
}

struct VariantResult {
    std::string name;
    TrainConfig config;
    MlpArchitecture arch;
    bool diverged = false;
    std::size_t diverged_epoch = 0;
    std::string error;
    double final_train_loss = 0.0;
    double final_test_loss = 0.0;
    double mae_c = 0.0;
    double rmse_c = 0.0;
    double ratio_vs_baseline = 0.0;
    double wall_time_s = 0.0;
    TrainHistory history;
    std::string history_path;  // filled in once the history is persisted
};

struct AblationReport {
    int schema_version = kReportSchemaVersion;
    std::string dataset_hash;
    std::string split_hash;
    std::uint64_t split_seed = 0;
    std::uint64_t component_shuffle_seed = 0;
    std::vector<VariantResult> variants;
};

// Every variant consumes the identical train/test partition; the shuffled
// variants transform copies of it with per-sample keyed permutations, so a
// test vector is scrambled the same way in both shuffled variants.
inline AblationReport run_ablation(const Dataset& ds, const std::vector<std::string>& names,
                                   const TrainConfig& base, const MlpArchitecture& base_arch,
                                   double train_fraction, std::uint64_t split_seed,
                                   std::uint64_t component_shuffle_seed) {
    if (names.empty()) throw std::invalid_argument("ablation: variant list is empty");
    if (names.front() != "baseline") {
        throw std::invalid_argument("ablation: variant list must start with 'baseline'");
    }
    AblationReport report;
    report.dataset_hash = fnv1a_hex(to_csv(ds));
    report.split_seed = split_seed;
    report.component_shuffle_seed = component_shuffle_seed;

    const auto [train_ds, test_ds] = split(ds, train_fraction, split_seed);
    report.split_hash = fnv1a_hex(to_csv(train_ds) + "|" + to_csv(test_ds));

    double baseline_test_loss = 0.0;
    for (const std::string& name : names) {
        const AblationVariant variant = make_variant(name, base, base_arch);
        VariantResult result;
        result.name = variant.name;
        result.config = variant.config;
        result.arch = variant.arch;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            Dataset train_view = variant.columns.empty() ? train_ds
                                                         : select_columns(train_ds, variant.columns);
            Dataset test_view = variant.columns.empty() ? test_ds
                                                        : select_columns(test_ds, variant.columns);
            if (variant.shuffle_train) {
                train_view = shuffle_components(train_view, component_shuffle_seed);
            }
            if (variant.shuffle_test) {
                test_view = shuffle_components(test_view, component_shuffle_seed);
            }
            // shuffled_test trains on clean data and is only evaluated on
            // scrambled vectors, so training sees train_view (clean there).
            const TrainedModel model = train(train_view, test_view, variant.arch, variant.config);
            result.history = model.history;
            result.final_train_loss = model.history.train_loss.back();
            result.final_test_loss = model.history.test_loss.back();
            const Metrics metrics = evaluate(model.params, model.scaler, variant.arch, test_view);
            result.mae_c = metrics.mae_c;
            result.rmse_c = metrics.rmse_c;
        } catch (const DivergenceError& e) {
            result.diverged = true;
            result.diverged_epoch = e.epoch;
            result.error = e.what();
        }
        result.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (result.name == "baseline" && !result.diverged) {
            baseline_test_loss = result.final_test_loss;
        }
        if (!result.diverged && baseline_test_loss > 0.0) {
            result.ratio_vs_baseline = result.final_test_loss / baseline_test_loss;
        }
        report.variants.push_back(std::move(result));
    }
    return report;
}

inline nlohmann::json report_to_json(const AblationReport& report) {
    nlohmann::json j;
    j["schema_version"] = report.schema_version;
    j["dataset_hash"] = report.dataset_hash;
    j["split_hash"] = report.split_hash;
    j["split_seed"] = report.split_seed;
    j["component_shuffle_seed"] = report.component_shuffle_seed;
    j["variants"] = nlohmann::json::array();
    for (const VariantResult& v : report.variants) {
        nlohmann::json c = {{"loss", loss_name(v.config.loss_kind)},
                            {"learning_rate", v.config.learning_rate},
                            {"epochs", v.config.epochs},
                            {"batch_size", v.config.batch_size},
                            {"init_seed", v.config.init_seed},
                            {"shuffle_seed", v.config.shuffle_seed},
                            {"hidden_layers", v.arch.hidden},
                            {"input_dim", v.arch.input_dim}};
        nlohmann::json entry = {{"name", v.name},
                                {"config", c},
                                {"diverged", v.diverged},
                                {"wall_time_s", v.wall_time_s},
                                {"history_path", v.history_path}};
        if (v.diverged) {
            entry["diverged_epoch"] = v.diverged_epoch;
            entry["error"] = v.error;
            entry["final_train_loss"] = nullptr;
            entry["final_test_loss"] = nullptr;
            entry["mae_c"] = nullptr;
            entry["rmse_c"] = nullptr;
            entry["ratio_vs_baseline"] = nullptr;
        } else {
            entry["final_train_loss"] = v.final_train_loss;
            entry["final_test_loss"] = v.final_test_loss;
            entry["mae_c"] = v.mae_c;
            entry["rmse_c"] = v.rmse_c;
            entry["ratio_vs_baseline"] = v.ratio_vs_baseline;
        }
        j["variants"].push_back(entry);
    }
    return j;
}

inline AblationReport report_from_json(const nlohmann::json& j) {
    AblationReport report;
    report.schema_version = j.at("schema_version").get<int>();
    if (report.schema_version != kReportSchemaVersion) {
        throw std::runtime_error("report: unsupported schema_version");
    }
    report.dataset_hash = j.at("dataset_hash").get<std::string>();
    report.split_hash = j.at("split_hash").get<std::string>();
    report.split_seed = j.at("split_seed").get<std::uint64_t>();
    report.component_shuffle_seed = j.at("component_shuffle_seed").get<std::uint64_t>();
    for (const auto& entry : j.at("variants")) {
        VariantResult v;
        v.name = entry.at("name").get<std::string>();
        const auto& c = entry.at("config");
        v.config.loss_kind = loss_from_name(c.at("loss").get<std::string>());
        v.config.learning_rate = c.at("learning_rate").get<double>();
        v.config.epochs = c.at("epochs").get<std::size_t>();
        v.config.batch_size = c.at("batch_size").get<std::size_t>();
        v.config.init_seed = c.at("init_seed").get<std::uint64_t>();
        v.config.shuffle_seed = c.at("shuffle_seed").get<std::uint64_t>();
        v.arch.hidden = c.at("hidden_layers").get<std::vector<std::size_t>>();
        v.arch.input_dim = c.at("input_dim").get<std::size_t>();
        v.diverged = entry.at("diverged").get<bool>();
        v.wall_time_s = entry.at("wall_time_s").get<double>();
        v.history_path = entry.at("history_path").get<std::string>();
        if (v.diverged) {
            v.diverged_epoch = entry.at("diverged_epoch").get<std::size_t>();
            v.error = entry.at("error").get<std::string>();
        } else {
            v.final_train_loss = entry.at("final_train_loss").get<double>();
            v.final_test_loss = entry.at("final_test_loss").get<double>();
            v.mae_c = entry.at("mae_c").get<double>();
            v.rmse_c = entry.at("rmse_c").get<double>();
            v.ratio_vs_baseline = entry.at("ratio_vs_baseline").get<double>();
        }
        report.variants.push_back(std::move(v));
    }
    return report;
}

// Aligned text table, stable column order, diff-friendly.
inline std::string render_report_text(const AblationReport& report) {
    std::string out;
    out += "ablation report (dataset " + report.dataset_hash + ", split " + report.split_hash +
           ")\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-16s %-5s %12s %12s %9s %9s %10s\n", "variant", "loss",
                  "train_loss", "test_loss", "mae_c", "rmse_c", "ratio");
    out += line;
    for (const VariantResult& v : report.variants) {
        if (v.diverged) {
            std::snprintf(line, sizeof(line), "%-16s %-5s %12s %12s %9s %9s %10s  diverged@%zu\n",
                          v.name.c_str(), loss_name(v.config.loss_kind).c_str(), "-", "-", "-",
                          "-", "-", v.diverged_epoch);
        } else {
            std::snprintf(line, sizeof(line), "%-16s %-5s %12.4e %12.4e %9.4f %9.4f %10.3f\n",
                          v.name.c_str(), loss_name(v.config.loss_kind).c_str(),
                          v.final_train_loss, v.final_test_loss, v.mae_c, v.rmse_c,
                          v.ratio_vs_baseline);
        }
        out += line;
    }
    return out;
}

inline nlohmann::json history_to_json(const TrainHistory& h) {
    return {{"train_loss", h.train_loss}, {"test_loss", h.test_loss}};
}

}  // namespace tempnet
