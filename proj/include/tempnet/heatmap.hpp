#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempnet/dataset.hpp"
#include "tempnet/nn.hpp"

namespace tempnet {

// Per-setpoint mean of every sensor's readings, arranged by grid position.
struct ReadingGrid {
    double setpoint_c = 0.0;
    std::array<std::array<double, kArrayCols>, kArrayRows> values{};
    std::size_t sample_count = 0;
};

inline std::vector<ReadingGrid> mean_grids(const Dataset& ds, const ArraySpec& array) {
    if (ds.samples.empty()) throw std::invalid_argument("mean_grids: dataset is empty");
    if (ds.width() != array.sensors.size()) {
        throw std::invalid_argument("mean_grids: dataset width does not match array size");
    }
    std::map<double, std::pair<std::vector<double>, std::size_t>> sums;
    for (const Sample& s : ds.samples) {
        auto& [sum, count] = sums[s.label_c];
        if (sum.empty()) sum.assign(ds.width(), 0.0);
        for (std::size_t i = 0; i < s.readings.size(); ++i) sum[i] += s.readings[i];
        ++count;
    }
    std::vector<ReadingGrid> grids;
    grids.reserve(sums.size());
    for (const auto& [label, sum_count] : sums) {
        ReadingGrid g;
        g.setpoint_c = label;
        g.sample_count = sum_count.second;
        for (const SensorSpec& sensor : array.sensors) {
            g.values[static_cast<std::size_t>(sensor.position.row - 1)]
                    [static_cast<std::size_t>(sensor.position.col - 1)] =
                sum_count.first[static_cast<std::size_t>(sensor.id)] /
                static_cast<double>(sum_count.second);
        }
        grids.push_back(g);
    }
    return grids;
}

namespace svg {

inline std::string num(double v, int decimals = 2) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

// Linear two-color ramp, low = red, high = yellow.
inline std::string ramp_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(200.0 + t * 55.0));
    const int g = static_cast<int>(std::lround(30.0 + t * 190.0));
    const int b = static_cast<int>(std::lround(30.0 + t * 10.0));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

inline std::string open_document(double width, double height) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           num(width, 0) + "\" height=\"" + num(height, 0) + "\" viewBox=\"0 0 " + num(width, 0) +
           " " + num(height, 0) + "\">\n";
}

inline std::string text(double x, double y, const std::string& content, int font_px = 11,
                        const std::string& anchor = "start") {
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
           std::to_string(font_px) + "\" font-family=\"monospace\" text-anchor=\"" + anchor +
           "\">" + content + "</text>\n";
}

inline std::string rect(double x, double y, double w, double h, const std::string& fill) {
    return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
           num(h) + "\" fill=\"" + fill + "\"/>\n";
}

inline std::string circle(double x, double y, double r, const std::string& fill) {
    return "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(r) + "\" fill=\"" +
           fill + "\"/>\n";
}

inline std::string polyline(const std::vector<std::pair<double, double>>& pts,
                            const std::string& stroke, const std::string& dash = "") {
    std::string s = "<polyline fill=\"none\" stroke=\"" + stroke + "\"";
    if (!dash.empty()) s += " stroke-dasharray=\"" + dash + "\"";
    s += " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) s += ' ';
        s += num(pts[i].first) + "," + num(pts[i].second);
    }
    return s + "\"/>\n";
}

}  // namespace svg

// One panel per setpoint, cells colored over the global [min, max] of all
// grids, with a numeric legend. Byte-deterministic for equal input.
inline std::string emit_heatmap_svg(const std::vector<ReadingGrid>& grids) {
    if (grids.empty()) throw std::invalid_argument("emit_heatmap_svg: no grids");
    double lo = grids.front().values[0][0];
    double hi = lo;
    for (const ReadingGrid& g : grids) {
        for (const auto& row : g.values) {
            for (double v : row) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    const double span = hi > lo ? hi - lo : 1.0;

    constexpr double cell = 22.0;
    constexpr double panel_w = kArrayCols * cell + 20.0;
    constexpr double panel_h = kArrayRows * cell + 40.0;
    const std::size_t cols = std::min<std::size_t>(grids.size(), 4);
    const std::size_t rows = (grids.size() + cols - 1) / cols;
    const double width = 10.0 + panel_w * static_cast<double>(cols);
    const double height = 70.0 + panel_h * static_cast<double>(rows);

    std::string out = svg::open_document(width, height);
    out += svg::text(10, 16, "mean sensor readings per setpoint (degC)", 13);
    // legend: color bar with numeric endpoints
    for (int i = 0; i < 40; ++i) {
        out += svg::rect(10 + i * 4.0, 26, 4.0, 12, svg::ramp_color(i / 39.0));
    }
    out += svg::text(10, 52, svg::num(lo, 2) + " degC", 11);
    out += svg::text(10 + 160, 52, svg::num(hi, 2) + " degC", 11, "end");

    for (std::size_t gi = 0; gi < grids.size(); ++gi) {
        const ReadingGrid& g = grids[gi];
        const double ox = 10.0 + panel_w * static_cast<double>(gi % cols);
        const double oy = 70.0 + panel_h * static_cast<double>(gi / cols);
        out += svg::text(ox, oy + 12, "set " + svg::num(g.setpoint_c, 1) + " degC (n=" +
                                          std::to_string(g.sample_count) + ")");
        for (std::size_t r = 0; r < kArrayRows; ++r) {
            for (std::size_t c = 0; c < kArrayCols; ++c) {
                const double t = (g.values[r][c] - lo) / span;
                out += svg::rect(ox + static_cast<double>(c) * cell,
                                 oy + 18 + static_cast<double>(r) * cell, cell - 1, cell - 1,
                                 svg::ramp_color(t));
            }
        }
    }
    out += "</svg>\n";
    return out;
}

inline nlohmann::json grids_to_json(const std::vector<ReadingGrid>& grids) {
    nlohmann::json j = nlohmann::json::array();
    for (const ReadingGrid& g : grids) {
        nlohmann::json values = nlohmann::json::array();
        for (const auto& row : g.values) values.push_back(row);
        j.push_back({{"setpoint_c", g.setpoint_c},
                     {"rows", kArrayRows},
                     {"cols", kArrayCols},
                     {"sample_count", g.sample_count},
                     {"values", values}});
    }
    return j;
}

// Raw readings, per-setpoint reading mean, per-setpoint prediction mean, and
// the identity reference line, all against the set temperature.
inline std::string emit_prediction_scatter_svg(const Dataset& test,
                                               const std::vector<double>& predictions_c) {
    if (predictions_c.empty() || predictions_c.size() != test.samples.size()) {
        throw std::invalid_argument("scatter: predictions are not aligned with the dataset");
    }
    double x_lo = test.samples.front().label_c, x_hi = x_lo;
    double y_lo = x_lo, y_hi = x_hi;
    std::map<double, std::pair<double, std::size_t>> read_mean, pred_mean;
    for (std::size_t i = 0; i < test.samples.size(); ++i) {
        const Sample& s = test.samples[i];
        x_lo = std::min(x_lo, s.label_c);
        x_hi = std::max(x_hi, s.label_c);
        for (double r : s.readings) {
            y_lo = std::min(y_lo, r);
            y_hi = std::max(y_hi, r);
        }
        y_lo = std::min(y_lo, predictions_c[i]);
        y_hi = std::max(y_hi, predictions_c[i]);
        auto& [rs, rn] = read_mean[s.label_c];
        for (double r : s.readings) rs += r;
        rn += s.readings.size();
        auto& [ps, pn] = pred_mean[s.label_c];
        ps += predictions_c[i];
        ++pn;
    }
    if (x_hi == x_lo) x_hi = x_lo + 1.0;
    const double pad_y = 0.05 * (y_hi - y_lo + 1e-12);
    y_lo -= pad_y;
    y_hi += pad_y;

    constexpr double W = 560, H = 420, ML = 60, MR = 20, MT = 40, MB = 50;
    const auto px = [&](double t) { return ML + (t - x_lo) / (x_hi - x_lo) * (W - ML - MR); };
    const auto py = [&](double t) { return H - MB - (t - y_lo) / (y_hi - y_lo) * (H - MT - MB); };

    std::string out = svg::open_document(W, H);
    out += svg::text(ML, 20, "readings / predictions vs set temperature (degC)", 13);
    out += svg::text(ML, 34,
                     "red: raw readings; teal: reading mean; blue: prediction mean; "
                     "dashed: target",
                     10);
    // axes
    out += svg::polyline({{ML, MT}, {ML, H - MB}, {W - MR, H - MB}}, "#000000");
    for (const auto& [label, unused] : read_mean) {
        (void)unused;
        out += svg::text(px(label), H - MB + 16, svg::num(label, 0), 9, "middle");
    }
    for (int i = 0; i <= 4; ++i) {
        const double v = y_lo + (y_hi - y_lo) * i / 4.0;
        out += svg::text(ML - 6, py(v) + 3, svg::num(v, 1), 9, "end");
    }
    // identity reference
    out += svg::polyline({{px(x_lo), py(x_lo)}, {px(x_hi), py(x_hi)}}, "#3050c8", "5,4");
    // raw readings
    for (const Sample& s : test.samples) {
        for (double r : s.readings) out += svg::circle(px(s.label_c), py(r), 1.2, "#d04040");
    }
    // per-setpoint means
    std::vector<std::pair<double, double>> mean_pts, pred_pts;
    for (const auto& [label, sum_count] : read_mean) {
        mean_pts.push_back({px(label), py(sum_count.first / static_cast<double>(sum_count.second))});
    }
    for (const auto& [label, sum_count] : pred_mean) {
        pred_pts.push_back({px(label), py(sum_count.first / static_cast<double>(sum_count.second))});
    }
    for (const auto& [x, y] : mean_pts) out += svg::circle(x, y, 3.0, "#20a090");
    for (const auto& [x, y] : pred_pts) out += svg::circle(x, y, 3.0, "#3050c8");
    out += "</svg>\n";
    return out;
}

struct NamedHistory {
    std::string name;
    TrainHistory history;
};

// Train/test loss curves per epoch; log10 axis when requested, with
// non-positive values clamped to a floor that is called out in the legend.
inline std::string emit_loss_curves_svg(const std::vector<NamedHistory>& histories,
                                        bool log_scale) {
    if (histories.empty()) throw std::invalid_argument("loss curves: no histories");
    constexpr double kLogFloor = 1e-12;
    bool clamped = false;
    std::size_t max_epochs = 0;
    double lo = 0.0, hi = 1.0;
    bool first = true;
    const auto transform = [&](double v) {
        if (log_scale) {
            if (v < kLogFloor) {
                clamped = true;
                v = kLogFloor;
            }
            return std::log10(v);
        }
        return v;
    };
    std::vector<std::vector<double>> series;  // transformed, train then test per history
    for (const NamedHistory& nh : histories) {
        max_epochs = std::max(max_epochs, nh.history.train_loss.size());
        for (const std::vector<double>* curve : {&nh.history.train_loss, &nh.history.test_loss}) {
            std::vector<double> t;
            t.reserve(curve->size());
            for (double v : *curve) {
                const double tv = transform(v);
                if (first) {
                    lo = hi = tv;
                    first = false;
                }
                lo = std::min(lo, tv);
                hi = std::max(hi, tv);
                t.push_back(tv);
            }
            series.push_back(std::move(t));
        }
    }
    if (hi == lo) hi = lo + 1.0;
    if (max_epochs < 2) max_epochs = 2;

    constexpr double W = 560, H = 360, ML = 70, MR = 20, MT = 40, MB = 40;
    const auto px = [&](double epoch) {
        return ML + epoch / static_cast<double>(max_epochs - 1) * (W - ML - MR);
    };
    const auto py = [&](double v) { return H - MB - (v - lo) / (hi - lo) * (H - MT - MB); };

    static const char* palette[] = {"#c03030", "#3050c8", "#20a070", "#c08020",
                                    "#8040c0", "#208090", "#c04080", "#607020",
                                    "#a06040", "#4060a0"};
    std::string out = svg::open_document(W, H);
    std::string title = std::string("loss per epoch") + (log_scale ? " (log10 scale)" : "");
    if (clamped) title += " [values clamped at 1e-12]";
    out += svg::text(ML, 20, title, 13);
    out += svg::polyline({{ML, MT}, {ML, H - MB}, {W - MR, H - MB}}, "#000000");
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        out += svg::text(ML - 6, py(v) + 3, svg::num(v, 2), 9, "end");
    }
    out += svg::text(W - MR, H - MB + 16, std::to_string(max_epochs) + " epochs", 9, "end");
    for (std::size_t hI = 0; hI < histories.size(); ++hI) {
        const std::string color = palette[hI % 10];
        out += svg::text(ML + static_cast<double>(hI) * 130.0, 34,
                         histories[hI].name + " (train solid, test dashed)", 9);
        for (int part = 0; part < 2; ++part) {
            const std::vector<double>& curve = series[hI * 2 + static_cast<std::size_t>(part)];
            std::vector<std::pair<double, double>> pts;
            pts.reserve(curve.size());
            for (std::size_t e = 0; e < curve.size(); ++e) {
                pts.push_back({px(static_cast<double>(e)), py(curve[e])});
            }
            if (pts.size() == 1) pts.push_back(pts.front());
            out += svg::polyline(pts, color, part == 1 ? "4,3" : "");
        }
    }
    out += "</svg>\n";
    return out;
}

}  // namespace tempnet
