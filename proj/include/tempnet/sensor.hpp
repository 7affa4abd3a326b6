#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tempnet/plate.hpp"
#include "tempnet/random.hpp"
#include "tempnet/thermistor.hpp"

namespace tempnet {

enum class SensorKind { digital, analog };

// One physical sensor: fixed systematic bias drawn at array construction,
// gaussian read noise, and a family-specific quantizer.
struct SensorSpec {
    int id = 0;  // 0..31; doubles as the component index in reading vectors
    SensorKind kind = SensorKind::digital;
    GridPosition position;
    double bias_c = 0.0;
    double noise_sigma_c = 0.0;
    // digital family
    double digital_step_c = 0.0625;
    // analog family (NTC + divider + ADC)
    int adc_bits = 10;
    double divider_ref_ohms = 100e3;

    friend bool operator==(const SensorSpec&, const SensorSpec&) = default;
};

struct ArrayDefaults {
    double analog_bias_min_c = -2.0;
    double analog_bias_max_c = 0.5;
    double digital_bias_min_c = -0.5;
    double digital_bias_max_c = 0.5;
    double analog_noise_sigma_c = 0.15;
    double digital_noise_sigma_c = 0.05;
    double digital_step_c = 0.0625;
    int adc_bits = 10;
    double divider_ref_ohms = 100e3;
    double pitch_mm = 20.0;
};

struct ArraySpec {
    std::vector<SensorSpec> sensors;  // exactly 32, ordered by id
    std::uint64_t construction_seed = 0;

    friend bool operator==(const ArraySpec&, const ArraySpec&) = default;
};

constexpr int kArrayRows = 4;
constexpr int kArrayCols = 8;
constexpr int kArraySensors = kArrayRows * kArrayCols;

// ids 0..15 are the analog rows (1-2), ids 16..31 the digital rows (3-4),
// matching the rig layout. Grid is centered on the plate.
inline ArraySpec build_array(std::uint64_t seed, const ArrayDefaults& d = {}) {
    ArraySpec array;
    array.construction_seed = seed;
    array.sensors.reserve(kArraySensors);
    Rng rng(seed);
    for (int id = 0; id < kArraySensors; ++id) {
        SensorSpec s;
        s.id = id;
        s.kind = id < kArraySensors / 2 ? SensorKind::analog : SensorKind::digital;
        s.position.row = 1 + id / kArrayCols;
        s.position.col = 1 + id % kArrayCols;
        s.position.x_mm = (s.position.col - (kArrayCols + 1) / 2.0) * d.pitch_mm;
        s.position.y_mm = (s.position.row - (kArrayRows + 1) / 2.0) * d.pitch_mm;
        if (s.kind == SensorKind::analog) {
            s.bias_c = rng.uniform(d.analog_bias_min_c, d.analog_bias_max_c);
            s.noise_sigma_c = d.analog_noise_sigma_c;
        } else {
            s.bias_c = rng.uniform(d.digital_bias_min_c, d.digital_bias_max_c);
            s.noise_sigma_c = d.digital_noise_sigma_c;
        }
        s.digital_step_c = d.digital_step_c;
        s.adc_bits = d.adc_bits;
        s.divider_ref_ohms = d.divider_ref_ohms;
        array.sensors.push_back(s);
    }
    return array;
}

// Snap to the step grid anchored at 0, round-half-to-even so quantization
// adds no directional bias.
inline double quantize_half_even(double value, double step) {
    const double q = value / step;
    const double f = std::floor(q);
    const double frac = q - f;
    double cell = f;
    if (frac > 0.5) {
        cell = f + 1.0;
    } else if (frac == 0.5) {
        if (std::fmod(f, 2.0) != 0.0) cell = f + 1.0;
    }
    return cell * step;
}

inline double read_digital(const SensorSpec& s, double true_c, Rng& rng) {
    const double noisy = true_c + s.bias_c + rng.gaussian(0.0, s.noise_sigma_c);
    return quantize_half_even(noisy, s.digital_step_c);
}

// Analog path: bias+noise in temperature, then through the thermistor and a
// resistor divider into an ADC, then back out. Boundary ADC codes clamp to
// the thermistor validity range instead of producing infinities.
inline double read_analog(const SensorSpec& s, double true_c, const ThermistorCoefficients& k,
                          Rng& rng) {
    const double noisy_c = true_c + s.bias_c + rng.gaussian(0.0, s.noise_sigma_c);
    const double r = temperature_to_resistance(celsius_to_kelvin(noisy_c), k);
    const double full_scale = static_cast<double>((1u << s.adc_bits) - 1u);
    const double fraction = r / (r + s.divider_ref_ohms);
    double code = quantize_half_even(fraction * full_scale, 1.0);
    code = std::min(std::max(code, 0.0), full_scale);
    const double fq = code / full_scale;
    double r_q = fq >= 1.0 ? k.r_max : fq * s.divider_ref_ohms / (1.0 - fq);
    r_q = std::min(std::max(r_q, k.r_min), k.r_max);
    return kelvin_to_celsius(resistance_to_temperature(r_q, k));
}

// One frame: all 32 sensors sample the same physical plate state, so the
// setpoint perturbation is drawn once per vector.
inline std::vector<double> read_array(const ArraySpec& array, const PlateProfile& profile,
                                      double set_c, double set_accuracy_c,
                                      const ThermistorCoefficients& k, Rng& rng) {
    const double plate_set_c = perturb_setpoint(set_c, set_accuracy_c, rng);
    std::vector<double> readings;
    readings.reserve(array.sensors.size());
    for (const SensorSpec& s : array.sensors) {
        const double true_c = local_temperature(s.position, plate_set_c, profile);
        readings.push_back(s.kind == SensorKind::digital ? read_digital(s, true_c, rng)
                                                         : read_analog(s, true_c, k, rng));
    }
    return readings;
}

inline std::vector<std::string> array_defaults_violations(const ArrayDefaults& d) {
    std::vector<std::string> v;
    if (!(d.analog_bias_min_c <= d.analog_bias_max_c))
        v.push_back("array: analog bias range is inverted");
    if (!(d.digital_bias_min_c <= d.digital_bias_max_c))
        v.push_back("array: digital bias range is inverted");
    if (!(d.analog_noise_sigma_c >= 0.0 && d.digital_noise_sigma_c >= 0.0))
        v.push_back("array: noise sigmas must be >= 0");
    if (!(d.digital_step_c > 0.0)) v.push_back("array: digital_step_c must be positive");
    if (!(d.adc_bits >= 1 && d.adc_bits <= 31)) v.push_back("array: adc_bits must be in [1, 31]");
    if (!(d.divider_ref_ohms > 0.0)) v.push_back("array: divider_ref_ohms must be positive");
    if (!(d.pitch_mm > 0.0)) v.push_back("array: pitch_mm must be positive");
    return v;
}

}  // namespace tempnet
