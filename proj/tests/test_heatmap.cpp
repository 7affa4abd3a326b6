#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "tempnet/config.hpp"
#include "tempnet/heatmap.hpp"

using namespace tempnet;

namespace {

Dataset small_dataset(int per_setpoint, double end_c = 31.0) {
    const RunConfig cfg;
    Protocol protocol = cfg.protocol;
    protocol.end_c = end_c;
    protocol.samples_per_setpoint = per_setpoint;
    return generate(build_array(cfg.array_seed, cfg.array_defaults), cfg.profile, protocol,
                    coefficients_from(cfg), 21);
}

// Minimal structural XML check: every opened tag closes in order, attributes
// are quoted, exactly one root element.
bool well_formed_xml(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    int roots = 0;
    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        const std::size_t end = text.find('>', i);
        if (end == std::string::npos) return false;
        std::string tag = text.substr(i + 1, end - i - 1);
        i = end + 1;
        if (tag.empty()) return false;
        if (tag[0] == '?') continue;  // declaration
        if (tag[0] == '/') {
            if (stack.empty()) return false;
            if (stack.back() != tag.substr(1)) return false;
            stack.pop_back();
            if (stack.empty()) ++roots;
            continue;
        }
        // quotes must balance inside the tag
        if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
        const bool self_closing = tag.back() == '/';
        std::string name = tag.substr(0, tag.find_first_of(" \t/"));
        if (name.empty()) return false;
        if (!self_closing) {
            stack.push_back(name);
        } else if (stack.empty()) {
            ++roots;
        }
    }
    return stack.empty() && roots == 1;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

// pull "attr=\"...\"" as double from the element text
double attr(const std::string& element, const std::string& name) {
    const std::size_t at = element.find(name + "=\"");
    REQUIRE(at != std::string::npos);
    return std::stod(element.substr(at + name.size() + 2));
}

// every <circle .../> with the given fill
std::vector<std::pair<double, double>> circles_with_fill(const std::string& svg,
                                                         const std::string& fill) {
    std::vector<std::pair<double, double>> out;
    std::size_t pos = 0;
    while ((pos = svg.find("<circle", pos)) != std::string::npos) {
        const std::size_t end = svg.find("/>", pos);
        const std::string el = svg.substr(pos, end - pos);
        if (el.find("fill=\"" + fill + "\"") != std::string::npos) {
            out.push_back({attr(el, "cx"), attr(el, "cy")});
        }
        pos = end;
    }
    return out;
}

// perpendicular distance of p from the segment through a and b, in pixels
double distance_from_line(std::pair<double, double> a, std::pair<double, double> b,
                          std::pair<double, double> p) {
    const double dx = b.first - a.first, dy = b.second - a.second;
    const double len = std::hypot(dx, dy);
    return std::abs(dy * p.first - dx * p.second + b.first * a.second - b.second * a.first) / len;
}

std::pair<std::pair<double, double>, std::pair<double, double>> dashed_line(
    const std::string& svg) {
    const std::size_t at = svg.find("stroke-dasharray=\"5,4\"");
    REQUIRE(at != std::string::npos);
    const std::size_t pts = svg.find("points=\"", at);
    const std::size_t end = svg.find('"', pts + 8);
    std::string body = svg.substr(pts + 8, end - pts - 8);
    double x1, y1, x2, y2;
    REQUIRE(std::sscanf(body.c_str(), "%lf,%lf %lf,%lf", &x1, &y1, &x2, &y2) == 4);
    return {{x1, y1}, {x2, y2}};
}

}  // namespace

TEST_CASE("mean_grids with one sample per setpoint rearranges the readings") {
    const RunConfig cfg;
    const ArraySpec array = build_array(cfg.array_seed, cfg.array_defaults);
    const Dataset ds = small_dataset(1);
    const auto grids = mean_grids(ds, array);
    REQUIRE(grids.size() == 2);
    for (const auto& grid : grids) {
        REQUIRE(grid.sample_count == 1);
        const Sample* sample = nullptr;
        for (const Sample& s : ds.samples) {
            if (s.label_c == grid.setpoint_c) sample = &s;
        }
        REQUIRE(sample != nullptr);
        for (const SensorSpec& s : array.sensors) {
            REQUIRE(grid.values[static_cast<std::size_t>(s.position.row - 1)]
                               [static_cast<std::size_t>(s.position.col - 1)] ==
                    sample->readings[static_cast<std::size_t>(s.id)]);
        }
    }
}

TEST_CASE("mean_grids covers the full staircase with 50 samples each") {
    const RunConfig cfg;
    const ArraySpec array = build_array(cfg.array_seed, cfg.array_defaults);
    const Dataset ds = generate(array, cfg.profile, cfg.protocol, coefficients_from(cfg), 42);
    const auto grids = mean_grids(ds, array);
    REQUIRE(grids.size() == 16);
    for (const auto& g : grids) REQUIRE(g.sample_count == 50);
}

TEST_CASE("mean_grids cells stay within the contributing readings") {
    const RunConfig cfg;
    const ArraySpec array = build_array(cfg.array_seed, cfg.array_defaults);
    const Dataset ds = small_dataset(7);
    const auto grids = mean_grids(ds, array);
    for (const auto& g : grids) {
        double lo = 1e9, hi = -1e9;
        for (const Sample& s : ds.samples) {
            if (s.label_c != g.setpoint_c) continue;
            for (double r : s.readings) {
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
        }
        for (const auto& row : g.values) {
            for (double v : row) {
                REQUIRE(v >= lo);
                REQUIRE(v <= hi);
            }
        }
    }
}

TEST_CASE("flat noise-free dataset yields grids at the setpoint") {
    const RunConfig cfg;
    ArrayDefaults defaults = cfg.array_defaults;
    defaults.analog_bias_min_c = defaults.analog_bias_max_c = 0.0;
    defaults.digital_bias_min_c = defaults.digital_bias_max_c = 0.0;
    defaults.analog_noise_sigma_c = defaults.digital_noise_sigma_c = 0.0;
    const ArraySpec array = build_array(3, defaults);
    const PlateProfile flat{22.0, 0.0, 0.0, 90.0};
    const Dataset ds =
        generate(array, flat, {37.0, 37.0, 1.0, 3, 0.0}, coefficients_from(cfg), 5);
    const auto grids = mean_grids(ds, array);
    REQUIRE(grids.size() == 1);
    for (const auto& row : grids[0].values) {
        for (double v : row) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(37.0, 0.1));
    }
}

TEST_CASE("heatmap SVG is deterministic, well-formed and legended") {
    const RunConfig cfg;
    const ArraySpec array = build_array(cfg.array_seed, cfg.array_defaults);
    const Dataset ds = generate(array, cfg.profile, cfg.protocol, coefficients_from(cfg), 42);
    const auto grids = mean_grids(ds, array);

    const std::string svg = emit_heatmap_svg(grids);
    REQUIRE(svg == emit_heatmap_svg(grids));
    REQUIRE(well_formed_xml(svg));
    REQUIRE(count_occurrences(svg, "set ") == 16);
    // 16 panels x 32 cells + 40 legend swatches
    REQUIRE(count_occurrences(svg, "<rect") == 16 * 32 + 40);

    // legend endpoints are the global min / max over the grids
    double lo = 1e9, hi = -1e9;
    for (const auto& g : grids) {
        for (const auto& row : g.values) {
            for (double v : row) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    REQUIRE(svg.find(svg::num(lo, 2) + " degC") != std::string::npos);
    REQUIRE(svg.find(svg::num(hi, 2) + " degC") != std::string::npos);
}

TEST_CASE("single-grid heatmap has exactly one panel of cells") {
    const RunConfig cfg;
    const ArraySpec array = build_array(cfg.array_seed, cfg.array_defaults);
    const auto grids = mean_grids(small_dataset(1, 30.0), array);
    REQUIRE(grids.size() == 1);
    const std::string svg = emit_heatmap_svg(grids);
    REQUIRE(count_occurrences(svg, "set ") == 1);
    REQUIRE(count_occurrences(svg, "<rect") == 32 + 40);
    REQUIRE(well_formed_xml(svg));
}

TEST_CASE("prediction scatter: a perfect predictor sits on the identity line") {
    Dataset test;
    std::vector<double> predictions;
    for (int sp = 0; sp < 6; ++sp) {
        for (int i = 0; i < 3; ++i) {
            Sample s;
            s.readings.assign(32, 30.0 + sp + 0.1 * i);
            s.label_c = 30.0 + sp;
            s.setpoint_index = sp;
            s.sample_index = i;
            test.samples.push_back(s);
            predictions.push_back(30.0 + sp);
        }
    }
    const std::string svg = emit_prediction_scatter_svg(test, predictions);
    REQUIRE(well_formed_xml(svg));
    REQUIRE(svg == emit_prediction_scatter_svg(test, predictions));

    const auto [a, b] = dashed_line(svg);
    const auto pred_circles = circles_with_fill(svg, "#3050c8");
    REQUIRE(pred_circles.size() == 6);
    for (const auto& p : pred_circles) REQUIRE(distance_from_line(a, b, p) < 0.05);
}

TEST_CASE("prediction scatter: biased readings put the mean series below the line") {
    Dataset test;
    std::vector<double> predictions;
    for (int sp = 0; sp < 6; ++sp) {
        Sample s;
        s.readings.assign(32, 30.0 + sp - 1.5);  // systematic underestimation
        s.label_c = 30.0 + sp;
        s.setpoint_index = sp;
        test.samples.push_back(s);
        predictions.push_back(30.0 + sp);
    }
    const std::string svg = emit_prediction_scatter_svg(test, predictions);
    const auto [a, b] = dashed_line(svg);
    // SVG y grows downward: below the line means larger cy than the line's y
    for (const auto& c : circles_with_fill(svg, "#20a090")) {
        const double t = (c.first - a.first) / (b.first - a.first);
        const double line_y = a.second + t * (b.second - a.second);
        REQUIRE(c.second > line_y + 1.0);
    }
}

TEST_CASE("prediction scatter rejects misaligned predictions") {
    Dataset test;
    Sample s;
    s.readings.assign(32, 30.0);
    s.label_c = 30.0;
    test.samples.push_back(s);
    REQUIRE_THROWS_AS(emit_prediction_scatter_svg(test, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(emit_prediction_scatter_svg(test, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("loss curves SVG") {
    TrainHistory constant;
    constant.train_loss.assign(50, 0.25);
    constant.test_loss.assign(50, 0.25);
    const std::string flat = emit_loss_curves_svg({{"constant", constant}}, false);
    REQUIRE(well_formed_xml(flat));
    // a constant series draws as a horizontal line: the train polyline
    // (second polyline, after the axes) repeats one y coordinate
    std::size_t poly = flat.find("<polyline");
    poly = flat.find("<polyline", poly + 1);
    const std::size_t pts_at = flat.find("points=\"", poly) + 8;
    const std::string pts = flat.substr(pts_at, flat.find('"', pts_at) - pts_at);
    std::string first_y;
    std::size_t checked = 0;
    for (std::size_t at = 0; at < pts.size();) {
        const std::size_t comma = pts.find(',', at);
        std::size_t space = pts.find(' ', comma);
        if (space == std::string::npos) space = pts.size();
        const std::string y = pts.substr(comma + 1, space - comma - 1);
        if (first_y.empty()) first_y = y;
        REQUIRE(y == first_y);
        ++checked;
        at = space + 1;
    }
    REQUIRE(checked == 50);

    TrainHistory improving;
    for (int e = 0; e < 40; ++e) {
        improving.train_loss.push_back(std::pow(10.0, -1 - 0.05 * e));
        improving.test_loss.push_back(std::pow(10.0, -1 - 0.04 * e));
    }
    const std::string curves = emit_loss_curves_svg({{"run", improving}}, true);
    REQUIRE(well_formed_xml(curves));
    REQUIRE(curves == emit_loss_curves_svg({{"run", improving}}, true));
    REQUIRE(curves.find("log10") != std::string::npos);
    REQUIRE(curves.find("clamped") == std::string::npos);

    TrainHistory with_zero = improving;
    with_zero.train_loss[5] = 0.0;
    const std::string clamped = emit_loss_curves_svg({{"run", with_zero}}, true);
    REQUIRE(clamped.find("clamped at 1e-12") != std::string::npos);

    REQUIRE_THROWS_AS(emit_loss_curves_svg({}, true), std::invalid_argument);
}

TEST_CASE("grids companion JSON carries the shape") {
    const RunConfig cfg;
    const ArraySpec array = build_array(cfg.array_seed, cfg.array_defaults);
    const auto grids = mean_grids(small_dataset(2), array);
    const nlohmann::json j = grids_to_json(grids);
    REQUIRE(j.is_array());
    REQUIRE(j.size() == grids.size());
    REQUIRE(j[0]["rows"] == 4);
    REQUIRE(j[0]["cols"] == 8);
    REQUIRE(j[0]["values"].size() == 4);
    REQUIRE(j[0]["values"][0].size() == 8);
}
