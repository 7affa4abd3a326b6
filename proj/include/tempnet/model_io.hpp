#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "tempnet/nn.hpp"

namespace tempnet {

constexpr int kModelSchemaVersion = 1;

struct ModelDocument {
    MlpArchitecture arch;
    MlpParams params;
    Scaler scaler;
};

inline nlohmann::json model_to_json(const ModelDocument& doc) {
    nlohmann::json j;
    j["schema_version"] = kModelSchemaVersion;
    j["architecture"] = {{"input_dim", doc.arch.input_dim},
                         {"hidden_layers", doc.arch.hidden},
                         {"output_dim", doc.arch.output_dim}};
    j["scaler"] = {{"feature_means", doc.scaler.means},
                   {"feature_stds", doc.scaler.stds},
                   {"label_offset_c", doc.scaler.label_offset_c},
                   {"label_scale_c", doc.scaler.label_scale_c}};
    j["parameters"] = doc.params.values;
    return j;
}

inline ModelDocument model_from_json(const nlohmann::json& j) {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
        throw std::runtime_error("model: unsupported schema_version");
    }
    ModelDocument doc;
    const auto& a = j.at("architecture");
    doc.arch.input_dim = a.at("input_dim").get<std::size_t>();
    doc.arch.hidden = a.at("hidden_layers").get<std::vector<std::size_t>>();
    doc.arch.output_dim = a.at("output_dim").get<std::size_t>();
    const auto& s = j.at("scaler");
    doc.scaler.means = s.at("feature_means").get<std::vector<double>>();
    doc.scaler.stds = s.at("feature_stds").get<std::vector<double>>();
    doc.scaler.label_offset_c = s.at("label_offset_c").get<double>();
    doc.scaler.label_scale_c = s.at("label_scale_c").get<double>();
    doc.params.values = j.at("parameters").get<std::vector<double>>();
    if (doc.params.values.size() != doc.arch.param_count()) {
        throw std::runtime_error("model: parameter count does not match architecture");
    }
    if (doc.scaler.means.size() != doc.arch.input_dim ||
        doc.scaler.stds.size() != doc.arch.input_dim) {
        throw std::runtime_error("model: scaler width does not match architecture");
    }
    return doc;
}

inline void save_model_file(const ModelDocument& doc, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << model_to_json(doc).dump(2) << '\n';
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline ModelDocument load_model_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open model: " + path);
    nlohmann::json j;
    is >> j;
    return model_from_json(j);
}

}  // namespace tempnet
