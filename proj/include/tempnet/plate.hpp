#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tempnet/random.hpp"

namespace tempnet {

// Setpoint the attenuation coefficient is anchored at: k(set) = k0 + k1 * (set - 30).
constexpr double kAttenuationAnchorC = 30.0;

// Steady-state surface model: the plate is hottest at its center and falls
// off quadratically with radius, more steeply at higher setpoints.
struct PlateProfile {
    double ambient_c = 22.0;
    double nonuniformity_base = 0.1;       // k0, dimensionless
    double nonuniformity_slope = 0.025;    // k1, 1/degC
    double plate_radius_mm = 90.0;
};

struct GridPosition {
    int row = 1;  // 1..4
    int col = 1;  // 1..8
    double x_mm = 0.0;  // from plate center
    double y_mm = 0.0;

    friend bool operator==(const GridPosition&, const GridPosition&) = default;
};

struct Protocol {
    double start_c = 30.0;
    double end_c = 45.0;
    double step_c = 1.0;
    int samples_per_setpoint = 50;
    double set_accuracy_c = 0.15;
};

inline double attenuation(const PlateProfile& p, double set_c) {
    return p.nonuniformity_base + p.nonuniformity_slope * (set_c - kAttenuationAnchorC);
}

// Surface temperature seen at a grid position for a given setpoint.
// Equals set_c exactly at the center and decreases with radius.
inline double local_temperature(const GridPosition& pos, double set_c, const PlateProfile& p) {
    const double rho2 = pos.x_mm * pos.x_mm + pos.y_mm * pos.y_mm;
    const double radius2 = p.plate_radius_mm * p.plate_radius_mm;
    return p.ambient_c + (set_c - p.ambient_c) * (1.0 - attenuation(p, set_c) * rho2 / radius2);
}

inline std::vector<double> staircase_setpoints(const Protocol& pr) {
    std::vector<double> out;
    // the 1e-6 slack absorbs the rounding in (end-start)/step for fractional
    // steps (e.g. 15/0.1 = 149.9999...) without ever adding a phantom step
    const int n = static_cast<int>(std::floor((pr.end_c - pr.start_c) / pr.step_c + 1e-6)) + 1;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(pr.start_c + pr.step_c * i);
    return out;
}

// One physical plate state: the setpoint plus uniform controller error.
// Labels keep the nominal setpoint; only the simulated field is perturbed.
inline double perturb_setpoint(double set_c, double accuracy_c, Rng& rng) {
    return set_c + rng.uniform(-accuracy_c, accuracy_c);
}

inline std::vector<std::string> profile_violations(const PlateProfile& p) {
    std::vector<std::string> v;
    if (!(p.nonuniformity_base >= 0.0 && p.nonuniformity_base < 1.0))
        v.push_back("plate.profile: nonuniformity_base must lie in [0, 1)");
    if (!(p.nonuniformity_slope >= 0.0))
        v.push_back("plate.profile: nonuniformity_slope must be >= 0");
    if (!(p.plate_radius_mm > 0.0))
        v.push_back("plate.profile: plate_radius_mm must be positive");
    return v;
}

inline std::vector<std::string> protocol_violations(const Protocol& pr) {
    std::vector<std::string> v;
    if (!(pr.start_c <= pr.end_c)) v.push_back("plate.protocol: start_c must be <= end_c");
    if (!(pr.step_c > 0.0)) v.push_back("plate.protocol: step_c must be positive");
    if (!(pr.samples_per_setpoint >= 1))
        v.push_back("plate.protocol: samples_per_setpoint must be >= 1");
    if (!(pr.set_accuracy_c >= 0.0)) v.push_back("plate.protocol: set_accuracy_c must be >= 0");
    return v;
}

// Cross-check: attenuation must stay inside [0, 1) at every protocol
// setpoint; k is linear in the setpoint, so the two endpoints bound it.
inline std::vector<std::string> profile_protocol_violations(const PlateProfile& p,
                                                            const Protocol& pr) {
    std::vector<std::string> v;
    if (!(attenuation(p, pr.end_c) < 1.0)) {
        v.push_back("plate: attenuation k(set) reaches 1 at setpoint " + std::to_string(pr.end_c) +
                    " degC; lower nonuniformity_base/slope or end_c");
    }
    if (attenuation(p, pr.start_c) < 0.0) {
        v.push_back("plate: attenuation k(set) is negative at setpoint " +
                    std::to_string(pr.start_c) + " degC; raise nonuniformity_base or start_c");
    }
    return v;
}

}  // namespace tempnet
