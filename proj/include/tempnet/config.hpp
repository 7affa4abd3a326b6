#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tempnet/ablation.hpp"
#include "tempnet/dataset.hpp"
#include "tempnet/nn.hpp"
#include "tempnet/plate.hpp"
#include "tempnet/sensor.hpp"
#include "tempnet/thermistor.hpp"

namespace tempnet {

constexpr int kConfigSchemaVersion = 1;

struct ValidationError : std::runtime_error {
    explicit ValidationError(std::vector<std::string> list)
        : std::runtime_error(join(list)), violations(std::move(list)) {}
    std::vector<std::string> violations;

  private:
    static std::string join(const std::vector<std::string>& list) {
        std::string s = "invalid configuration:";
        for (const auto& item : list) s += "\n  - " + item;
        return s;
    }
};

// Everything a run needs, in one document. Every random choice made anywhere
// in the pipeline traces back to one of the named seeds below.
struct RunConfig {
    int schema_version = kConfigSchemaVersion;
    PlateProfile profile;
    Protocol protocol;
    ArrayDefaults array_defaults;
    std::uint64_t array_seed = 2025;
    std::array<std::pair<double, double>, 3> calibration_points_r_t = {
        {{280e3, 278.15}, {100e3, 298.15}, {39e3, 318.15}}};
    std::pair<double, double> resistance_range_ohms = {1.5e3, 1.2e6};
    std::uint64_t dataset_seed = 42;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 7;
    std::size_t subsample_per_setpoint = 0;  // 0 = keep every ingested frame
    std::uint64_t subsample_seed = 11;
    std::uint64_t component_shuffle_seed = 99;
    TrainConfig train;
    std::vector<std::size_t> hidden_layers = {20};
    std::vector<std::string> ablation_variants = ablation_variant_names();
    std::string output_dir = "out";
};

inline MlpArchitecture architecture_from(const RunConfig& cfg) {
    return MlpArchitecture{static_cast<std::size_t>(kArraySensors), cfg.hidden_layers, 1};
}

inline ThermistorCoefficients coefficients_from(const RunConfig& cfg) {
    return fit_coefficients(cfg.calibration_points_r_t, cfg.resistance_range_ohms);
}

namespace detail {

class StrictObject {
  public:
    StrictObject(const nlohmann::json& j, std::string path, std::vector<std::string>& violations)
        : j_(j), path_(std::move(path)), violations_(violations) {
        if (!j_.is_object()) violations_.push_back(path_ + ": expected an object");
    }

    ~StrictObject() {
        if (!j_.is_object()) return;
        for (const auto& [key, value] : j_.items()) {
            (void)value;
            bool known = false;
            for (const auto& k : consumed_) {
                if (k == key) {
                    known = true;
                    break;
                }
            }
            if (!known) violations_.push_back(path_ + ": unknown key '" + key + "'");
        }
    }

    bool has(const std::string& key) {
        consumed_.push_back(key);
        return j_.is_object() && j_.contains(key);
    }

    template <typename T>
    void get(const std::string& key, T& target) {
        if (!has(key)) return;
        try {
            target = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            violations_.push_back(path_ + "." + key + ": wrong type");
        }
    }

    const nlohmann::json* child(const std::string& key) {
        if (!has(key)) return nullptr;
        return &j_.at(key);
    }

  private:
    const nlohmann::json& j_;
    std::string path_;
    std::vector<std::string>& violations_;
    std::vector<std::string> consumed_;
};

}  // namespace detail

// Strict parse: unknown keys and type mismatches are collected, semantic
// checks run afterwards, and everything is reported at once.
inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig cfg;
    std::vector<std::string> violations;
    {
        detail::StrictObject root(j, "config", violations);
        root.get("schema_version", cfg.schema_version);
        root.has("run_metadata");  // sidecar provenance block, ignored on load
        if (const nlohmann::json* plate = root.child("plate")) {
            detail::StrictObject p(*plate, "plate", violations);
            if (const nlohmann::json* profile = p.child("profile")) {
                detail::StrictObject o(*profile, "plate.profile", violations);
                o.get("ambient_c", cfg.profile.ambient_c);
                o.get("nonuniformity_base", cfg.profile.nonuniformity_base);
                o.get("nonuniformity_slope_per_c", cfg.profile.nonuniformity_slope);
                o.get("plate_radius_mm", cfg.profile.plate_radius_mm);
            }
            if (const nlohmann::json* protocol = p.child("protocol")) {
                detail::StrictObject o(*protocol, "plate.protocol", violations);
                o.get("start_c", cfg.protocol.start_c);
                o.get("end_c", cfg.protocol.end_c);
                o.get("step_c", cfg.protocol.step_c);
                o.get("samples_per_setpoint", cfg.protocol.samples_per_setpoint);
                o.get("set_accuracy_c", cfg.protocol.set_accuracy_c);
            }
        }
        if (const nlohmann::json* array = root.child("array")) {
            detail::StrictObject o(*array, "array", violations);
            o.get("seed", cfg.array_seed);
            std::array<double, 2> range{};
            if (o.has("analog_bias_range_c")) {
                try {
                    range = array->at("analog_bias_range_c").get<std::array<double, 2>>();
                    cfg.array_defaults.analog_bias_min_c = range[0];
                    cfg.array_defaults.analog_bias_max_c = range[1];
                } catch (const nlohmann::json::exception&) {
                    violations.push_back("array.analog_bias_range_c: wrong type");
                }
            }
            if (o.has("digital_bias_range_c")) {
                try {
                    range = array->at("digital_bias_range_c").get<std::array<double, 2>>();
                    cfg.array_defaults.digital_bias_min_c = range[0];
                    cfg.array_defaults.digital_bias_max_c = range[1];
                } catch (const nlohmann::json::exception&) {
                    violations.push_back("array.digital_bias_range_c: wrong type");
                }
            }
            o.get("analog_noise_sigma_c", cfg.array_defaults.analog_noise_sigma_c);
            o.get("digital_noise_sigma_c", cfg.array_defaults.digital_noise_sigma_c);
            o.get("digital_step_c", cfg.array_defaults.digital_step_c);
            o.get("adc_bits", cfg.array_defaults.adc_bits);
            o.get("divider_ref_ohms", cfg.array_defaults.divider_ref_ohms);
            o.get("pitch_mm", cfg.array_defaults.pitch_mm);
        }
        if (const nlohmann::json* thermistor = root.child("thermistor")) {
            detail::StrictObject o(*thermistor, "thermistor", violations);
            if (o.has("calibration_points_r_t")) {
                try {
                    const auto pts = thermistor->at("calibration_points_r_t")
                                         .get<std::array<std::array<double, 2>, 3>>();
                    for (std::size_t i = 0; i < 3; ++i) {
                        cfg.calibration_points_r_t[i] = {pts[i][0], pts[i][1]};
                    }
                } catch (const nlohmann::json::exception&) {
                    violations.push_back("thermistor.calibration_points_r_t: wrong type");
                }
            }
            if (o.has("resistance_range_ohms")) {
                try {
                    const auto r =
                        thermistor->at("resistance_range_ohms").get<std::array<double, 2>>();
                    cfg.resistance_range_ohms = {r[0], r[1]};
                } catch (const nlohmann::json::exception&) {
                    violations.push_back("thermistor.resistance_range_ohms: wrong type");
                }
            }
        }
        if (const nlohmann::json* dataset = root.child("dataset")) {
            detail::StrictObject o(*dataset, "dataset", violations);
            o.get("seed", cfg.dataset_seed);
            o.get("train_fraction", cfg.train_fraction);
            o.get("split_seed", cfg.split_seed);
            o.get("subsample_per_setpoint", cfg.subsample_per_setpoint);
            o.get("subsample_seed", cfg.subsample_seed);
            o.get("component_shuffle_seed", cfg.component_shuffle_seed);
        }
        if (const nlohmann::json* train = root.child("train")) {
            detail::StrictObject o(*train, "train", violations);
            std::string loss = loss_name(cfg.train.loss_kind);
            o.get("loss", loss);
            try {
                cfg.train.loss_kind = loss_from_name(loss);
            } catch (const std::invalid_argument& e) {
                violations.push_back(std::string("train.loss: ") + e.what());
            }
            o.get("learning_rate", cfg.train.learning_rate);
            o.get("epochs", cfg.train.epochs);
            o.get("batch_size", cfg.train.batch_size);
            o.get("beta1", cfg.train.beta1);
            o.get("beta2", cfg.train.beta2);
            o.get("epsilon", cfg.train.epsilon);
            o.get("init_seed", cfg.train.init_seed);
            o.get("shuffle_seed", cfg.train.shuffle_seed);
            o.get("hidden_layers", cfg.hidden_layers);
        }
        if (const nlohmann::json* ablation = root.child("ablation")) {
            detail::StrictObject o(*ablation, "ablation", violations);
            o.get("variants", cfg.ablation_variants);
        }
        if (const nlohmann::json* output = root.child("output")) {
            detail::StrictObject o(*output, "output", violations);
            o.get("dir", cfg.output_dir);
        }
    }

    if (cfg.schema_version != kConfigSchemaVersion) {
        violations.push_back("schema_version: expected " + std::to_string(kConfigSchemaVersion));
    }
    for (const auto& v : profile_violations(cfg.profile)) violations.push_back(v);
    for (const auto& v : protocol_violations(cfg.protocol)) violations.push_back(v);
    for (const auto& v : profile_protocol_violations(cfg.profile, cfg.protocol))
        violations.push_back(v);
    for (const auto& v : array_defaults_violations(cfg.array_defaults)) violations.push_back(v);
    for (const auto& v : train_config_violations(cfg.train)) violations.push_back(v);
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
        violations.push_back("dataset.train_fraction: must lie in (0, 1)");
    }
    for (std::size_t w : cfg.hidden_layers) {
        if (w < 1) violations.push_back("train.hidden_layers: widths must be >= 1");
    }
    if (cfg.ablation_variants.empty() || cfg.ablation_variants.front() != "baseline") {
        violations.push_back("ablation.variants: must be non-empty and start with 'baseline'");
    } else {
        for (const auto& name : cfg.ablation_variants) {
            try {
                make_variant(name, cfg.train, architecture_from(cfg));
            } catch (const std::invalid_argument& e) {
                violations.push_back(std::string("ablation.variants: ") + e.what());
            }
        }
    }
    if (violations.empty()) {
        try {
            coefficients_from(cfg);
        } catch (const std::exception& e) {
            violations.push_back(std::string("thermistor: ") + e.what());
        }
    }
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return cfg;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = cfg.schema_version;
    j["plate"] = {{"profile",
                   {{"ambient_c", cfg.profile.ambient_c},
                    {"nonuniformity_base", cfg.profile.nonuniformity_base},
                    {"nonuniformity_slope_per_c", cfg.profile.nonuniformity_slope},
                    {"plate_radius_mm", cfg.profile.plate_radius_mm}}},
                  {"protocol",
                   {{"start_c", cfg.protocol.start_c},
                    {"end_c", cfg.protocol.end_c},
                    {"step_c", cfg.protocol.step_c},
                    {"samples_per_setpoint", cfg.protocol.samples_per_setpoint},
                    {"set_accuracy_c", cfg.protocol.set_accuracy_c}}}};
    j["array"] = {
        {"seed", cfg.array_seed},
        {"analog_bias_range_c",
         {cfg.array_defaults.analog_bias_min_c, cfg.array_defaults.analog_bias_max_c}},
        {"digital_bias_range_c",
         {cfg.array_defaults.digital_bias_min_c, cfg.array_defaults.digital_bias_max_c}},
        {"analog_noise_sigma_c", cfg.array_defaults.analog_noise_sigma_c},
        {"digital_noise_sigma_c", cfg.array_defaults.digital_noise_sigma_c},
        {"digital_step_c", cfg.array_defaults.digital_step_c},
        {"adc_bits", cfg.array_defaults.adc_bits},
        {"divider_ref_ohms", cfg.array_defaults.divider_ref_ohms},
        {"pitch_mm", cfg.array_defaults.pitch_mm}};
    j["thermistor"] = {
        {"calibration_points_r_t",
         {{cfg.calibration_points_r_t[0].first, cfg.calibration_points_r_t[0].second},
          {cfg.calibration_points_r_t[1].first, cfg.calibration_points_r_t[1].second},
          {cfg.calibration_points_r_t[2].first, cfg.calibration_points_r_t[2].second}}},
        {"resistance_range_ohms",
         {cfg.resistance_range_ohms.first, cfg.resistance_range_ohms.second}}};
    j["dataset"] = {{"seed", cfg.dataset_seed},
                    {"train_fraction", cfg.train_fraction},
                    {"split_seed", cfg.split_seed},
                    {"subsample_per_setpoint", cfg.subsample_per_setpoint},
                    {"subsample_seed", cfg.subsample_seed},
                    {"component_shuffle_seed", cfg.component_shuffle_seed}};
    j["train"] = {{"loss", loss_name(cfg.train.loss_kind)},
                  {"learning_rate", cfg.train.learning_rate},
                  {"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"beta1", cfg.train.beta1},
                  {"beta2", cfg.train.beta2},
                  {"epsilon", cfg.train.epsilon},
                  {"init_seed", cfg.train.init_seed},
                  {"shuffle_seed", cfg.train.shuffle_seed},
                  {"hidden_layers", cfg.hidden_layers}};
    j["ablation"] = {{"variants", cfg.ablation_variants}};
    j["output"] = {{"dir", cfg.output_dir}};
    return j;
}

inline std::string config_hash(const RunConfig& cfg) { return fnv1a_hex(config_to_json(cfg).dump()); }

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config " + path + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace tempnet
