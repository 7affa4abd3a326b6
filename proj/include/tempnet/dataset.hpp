#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tempnet/sensor.hpp"

namespace tempnet {

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line_no)
        : std::runtime_error(what + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    std::size_t line;
};

// One reading vector and its supervision label. The label is the nominal
// setpoint, never the jittered plate state.
struct Sample {
    std::vector<double> readings;  // degC
    double label_c = 0.0;
    int setpoint_index = 0;  // rank of label among the dataset's setpoints
    int sample_index = 0;    // occurrence within its setpoint

    friend bool operator==(const Sample&, const Sample&) = default;
};

enum class ProvenanceKind { simulated, ingested };

struct Provenance {
    ProvenanceKind kind = ProvenanceKind::simulated;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string source_path;
};

struct Dataset {
    std::vector<Sample> samples;
    Provenance provenance;
    int schema_version = 1;

    std::size_t width() const { return samples.empty() ? 0 : samples.front().readings.size(); }
};

inline bool same_samples(const Dataset& a, const Dataset& b) { return a.samples == b.samples; }

// Readings are kept at 4-decimal precision from birth so the in-memory
// dataset and its CSV serialization are the same value exactly.
inline double round4(double v) {
    return std::round(v * 1e4) / 1e4 + 0.0;  // +0.0 normalizes -0
}

inline std::vector<double> sorted_unique_labels(const std::vector<Sample>& samples) {
    std::vector<double> labels;
    for (const Sample& s : samples) labels.push_back(s.label_c);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
}

namespace detail {

// Canonical index assignment shared by ingest and CSV reads: setpoint_index
// ranks labels ascending, sample_index counts occurrences in sample order.
inline void assign_indices(std::vector<Sample>& samples) {
    const std::vector<double> labels = sorted_unique_labels(samples);
    std::map<double, int> counters;
    for (Sample& s : samples) {
        const auto it = std::lower_bound(labels.begin(), labels.end(), s.label_c);
        s.setpoint_index = static_cast<int>(it - labels.begin());
        s.sample_index = counters[s.label_c]++;
    }
}

inline std::string fixed4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline double parse_double(std::string_view text, std::size_t line_no) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw ParseError("malformed numeric field '" + std::string(text) + "'", line_no);
    }
    return value;
}

}  // namespace detail

inline Dataset generate(const ArraySpec& array, const PlateProfile& profile,
                        const Protocol& protocol, const ThermistorCoefficients& coeffs,
                        std::uint64_t seed) {
    const std::vector<double> setpoints = staircase_setpoints(protocol);
    Dataset ds;
    ds.provenance = {ProvenanceKind::simulated, seed, "", ""};
    ds.samples.reserve(setpoints.size() * static_cast<std::size_t>(protocol.samples_per_setpoint));
    for (std::size_t sp = 0; sp < setpoints.size(); ++sp) {
        for (int i = 0; i < protocol.samples_per_setpoint; ++i) {
            // sample-keyed stream: reproducible regardless of generation order
            Rng rng(derive_seed(seed, sp, static_cast<std::uint64_t>(i)));
            Sample s;
            s.readings =
                read_array(array, profile, setpoints[sp], protocol.set_accuracy_c, coeffs, rng);
            for (double& r : s.readings) r = round4(r);
            s.label_c = setpoints[sp];
            s.setpoint_index = static_cast<int>(sp);
            s.sample_index = i;
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                         std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split: train_fraction must lie in (0, 1)");
    }
    const std::size_t n = ds.samples.size();
    const std::size_t n_train =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
    if (n_train == 0 || n_train == n) {
        throw std::invalid_argument("split: both sides must be non-empty (n = " +
                                    std::to_string(n) + ", fraction = " +
                                    std::to_string(train_fraction) + ")");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    shuffle(order, rng);
    Dataset train{{}, ds.provenance, ds.schema_version};
    Dataset test{{}, ds.provenance, ds.schema_version};
    for (std::size_t i = 0; i < n; ++i) {
        (i < n_train ? train : test).samples.push_back(ds.samples[order[i]]);
    }
    return {std::move(train), std::move(test)};
}

// Per-vector permutation of the components, labels untouched. Permutations
// are keyed by the sample's identity so the transform is order-independent
// and identical whether a sample sits in the train or the test side.
inline Dataset shuffle_components(const Dataset& ds, std::uint64_t seed) {
    Dataset out = ds;
    for (Sample& s : out.samples) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s.setpoint_index),
                            static_cast<std::uint64_t>(s.sample_index)));
        shuffle(s.readings, rng);
    }
    return out;
}

inline std::string csv_header(std::size_t width) {
    std::string h = "set_temp_c";
    for (std::size_t i = 0; i < width; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), ",s%02zu", i);
        h += buf;
    }
    return h;
}

inline void write_csv(const Dataset& ds, std::ostream& os) {
    os << csv_header(ds.width()) << '\n';
    for (const Sample& s : ds.samples) {
        os << detail::fixed4(s.label_c);
        for (double r : s.readings) os << ',' << detail::fixed4(r);
        os << '\n';
    }
}

inline std::string to_csv(const Dataset& ds) {
    std::ostringstream os;
    write_csv(ds, os);
    return os.str();
}

inline void write_csv_file(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);  // binary keeps LF on every platform
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_csv(ds, os);
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline Dataset read_csv(std::istream& is, const std::string& source_name = "<stream>") {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line)) throw ParseError("empty CSV: " + source_name, 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t width = 0;
    {
        std::size_t commas = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
        if (line.rfind("set_temp_c", 0) != 0 || commas == 0) {
            throw ParseError("bad CSV header '" + line + "'", line_no);
        }
        width = commas;
        if (line != csv_header(width)) throw ParseError("bad CSV header '" + line + "'", line_no);
    }
    Dataset ds;
    ds.provenance = {ProvenanceKind::ingested, 0, "", source_name};
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Sample s;
        s.readings.reserve(width);
        std::size_t start = 0;
        std::size_t field = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string_view cell =
                std::string_view(line).substr(start, comma == std::string::npos
                                                         ? std::string::npos
                                                         : comma - start);
            const double v = detail::parse_double(cell, line_no);
            if (field == 0) {
                s.label_c = v;
            } else {
                s.readings.push_back(v);
            }
            ++field;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (s.readings.size() != width) {
            throw ParseError("expected " + std::to_string(width) + " readings, found " +
                             std::to_string(s.readings.size()), line_no);
        }
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw ParseError("CSV has no data rows: " + source_name, line_no);
    detail::assign_indices(ds.samples);
    return ds;
}

inline Dataset read_csv_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open dataset: " + path);
    return read_csv(is, path);
}

struct IngestResult {
    Dataset dataset;
    std::size_t dropped_frames = 0;
};

// Line protocol: data lines `<epoch_ms>,<S00..S31>,<reading_c>`, setpoint
// markers `# SET <value_c>`. Readings between markers are grouped into
// frames of one reading per sensor inside a 1.5 s window; incomplete frames
// are dropped and counted.
inline IngestResult ingest_serial_log(std::istream& is,
                                      const std::string& source_name = "<stream>") {
    constexpr std::int64_t kFrameWindowMs = 1500;
    IngestResult result;
    result.dataset.provenance = {ProvenanceKind::ingested, 0, "", source_name};

    std::optional<double> active_set;
    std::vector<std::optional<double>> frame(kArraySensors);
    std::size_t frame_fill = 0;
    std::int64_t frame_start_ms = 0;

    auto close_frame = [&](std::optional<double> label) {
        if (frame_fill == 0) return;
        if (frame_fill == static_cast<std::size_t>(kArraySensors) && label) {
            Sample s;
            s.readings.reserve(kArraySensors);
            for (const auto& r : frame) s.readings.push_back(round4(*r));
            s.label_c = *label;
            result.dataset.samples.push_back(std::move(s));
        } else {
            ++result.dropped_frames;
        }
        std::fill(frame.begin(), frame.end(), std::nullopt);
        frame_fill = 0;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::istringstream marker(line.substr(1));
            std::string word;
            marker >> word;
            if (word == "SET") {
                std::string value;
                marker >> value;
                if (value.empty()) throw ParseError("SET marker missing value", line_no);
                close_frame(active_set);
                active_set = detail::parse_double(value, line_no);
            }
            continue;  // other # lines are comments
        }
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw ParseError("expected '<epoch_ms>,<sensor_id>,<reading_c>'", line_no);
        }
        const std::int64_t epoch_ms = static_cast<std::int64_t>(
            detail::parse_double(std::string_view(line).substr(0, c1), line_no));
        const std::string sid = line.substr(c1 + 1, c2 - c1 - 1);
        const double reading = detail::parse_double(std::string_view(line).substr(c2 + 1), line_no);

        if (!active_set) throw ParseError("reading before any '# SET' marker", line_no);
        if (sid.size() != 3 || sid[0] != 'S' ||
            !std::isdigit(static_cast<unsigned char>(sid[1])) ||
            !std::isdigit(static_cast<unsigned char>(sid[2]))) {
            throw ParseError("unknown sensor id '" + sid + "'", line_no);
        }
        const int sensor = (sid[1] - '0') * 10 + (sid[2] - '0');
        if (sensor >= kArraySensors) throw ParseError("unknown sensor id '" + sid + "'", line_no);

        const bool expired = frame_fill > 0 && epoch_ms - frame_start_ms >= kFrameWindowMs;
        const bool duplicate = frame[static_cast<std::size_t>(sensor)].has_value();
        if (expired || duplicate) close_frame(active_set);
        if (frame_fill == 0) frame_start_ms = epoch_ms;
        frame[static_cast<std::size_t>(sensor)] = reading;
        ++frame_fill;
        if (frame_fill == static_cast<std::size_t>(kArraySensors)) close_frame(active_set);
    }
    close_frame(active_set);
    if (result.dataset.samples.empty()) {
        throw ParseError("log yields no complete frames: " + source_name, line_no == 0 ? 1 : line_no);
    }
    detail::assign_indices(result.dataset.samples);
    return result;
}

inline IngestResult ingest_serial_log_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open log: " + path);
    return ingest_serial_log(is, path);
}

// Uniform without-replacement selection of n samples per setpoint; relative
// order inside each setpoint is preserved and indices are re-canonicalized.
inline Dataset subsample_per_setpoint(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    std::map<double, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        by_label[ds.samples[i].label_c].push_back(i);
    }
    Dataset out{{}, ds.provenance, ds.schema_version};
    std::size_t setpoint_rank = 0;
    for (auto& [label, indices] : by_label) {
        if (indices.size() < n) {
            throw std::invalid_argument("subsample: setpoint " + detail::fixed4(label) + " has " +
                                        std::to_string(indices.size()) + " samples, need " +
                                        std::to_string(n));
        }
        Rng rng(derive_seed(seed, setpoint_rank));
        std::vector<std::size_t> pool = indices;
        shuffle(pool, rng);
        pool.resize(n);
        std::sort(pool.begin(), pool.end());  // preserve original order within the setpoint
        for (std::size_t i : pool) out.samples.push_back(ds.samples[i]);
        ++setpoint_rank;
    }
    detail::assign_indices(out.samples);
    return out;
}

// Column projection (e.g. one sensor family only); indices/labels unchanged.
inline Dataset select_columns(const Dataset& ds, const std::vector<std::size_t>& columns) {
    Dataset out{{}, ds.provenance, ds.schema_version};
    out.samples.reserve(ds.samples.size());
    for (const Sample& s : ds.samples) {
        Sample projected = s;
        projected.readings.clear();
        for (std::size_t c : columns) projected.readings.push_back(s.readings.at(c));
        out.samples.push_back(std::move(projected));
    }
    return out;
}

}  // namespace tempnet
