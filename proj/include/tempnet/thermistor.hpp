#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace tempnet {

constexpr double kCelsiusOffsetK = 273.15;

inline double celsius_to_kelvin(double c) { return c + kCelsiusOffsetK; }
inline double kelvin_to_celsius(double k) { return k - kCelsiusOffsetK; }

// 1/T = a + b ln R + c (ln R)^3, T in kelvin, R in ohms.
// The cubic extrapolates pathologically, so the validity range travels with
// the coefficients and every conversion enforces it.
struct ThermistorCoefficients {
    double a = 0.0;      // 1/K
    double b = 0.0;      // 1/K per unit ln-ohm
    double c = 0.0;      // 1/K per unit ln-ohm cubed
    double r_min = 0.0;  // ohms
    double r_max = 0.0;  // ohms
};

namespace detail {

inline double sh_denominator(const ThermistorCoefficients& k, double ln_r) {
    return k.a + k.b * ln_r + k.c * ln_r * ln_r * ln_r;
}

// Minimum of the denominator over [ln r_min, ln r_max]: endpoints plus any
// interior stationary points of the cubic.
inline double min_denominator(const ThermistorCoefficients& k) {
    const double x_lo = std::log(k.r_min);
    const double x_hi = std::log(k.r_max);
    double lowest = std::min(sh_denominator(k, x_lo), sh_denominator(k, x_hi));
    if (k.c != 0.0 && -k.b / (3.0 * k.c) > 0.0) {
        const double x_crit = std::sqrt(-k.b / (3.0 * k.c));
        for (double x : {x_crit, -x_crit}) {
            if (x > x_lo && x < x_hi) lowest = std::min(lowest, sh_denominator(k, x));
        }
    }
    return lowest;
}

}  // namespace detail

inline void check_coefficients(const ThermistorCoefficients& k) {
    if (!(k.a > 0.0)) throw std::invalid_argument("thermistor: coefficient a must be positive");
    if (!(k.r_min > 0.0)) throw std::invalid_argument("thermistor: r_min must be positive");
    if (!(k.r_min < k.r_max)) throw std::invalid_argument("thermistor: r_min must be below r_max");
    if (!(detail::min_denominator(k) > 0.0)) {
        throw std::invalid_argument(
            "thermistor: a + b ln R + c (ln R)^3 must stay positive over [r_min, r_max]");
    }
}

inline double resistance_to_temperature(double r_ohms, const ThermistorCoefficients& k) {
    if (!(r_ohms >= k.r_min)) {
        throw std::out_of_range("thermistor: resistance " + std::to_string(r_ohms) +
                                " ohm below r_min = " + std::to_string(k.r_min) + " ohm");
    }
    if (!(r_ohms <= k.r_max)) {
        throw std::out_of_range("thermistor: resistance " + std::to_string(r_ohms) +
                                " ohm above r_max = " + std::to_string(k.r_max) + " ohm");
    }
    const double denom = detail::sh_denominator(k, std::log(r_ohms));
    if (!(denom > 0.0)) {
        throw std::domain_error("thermistor: non-positive denominator at R = " +
                                std::to_string(r_ohms) + " ohm");
    }
    return 1.0 / denom;
}

// Inverse of the conversion above, solved in x = ln R where it is a depressed
// cubic c x^3 + b x + (a - 1/t) = 0. The closed-form root is polished with a
// few Newton steps so the roundtrip holds to well below 1e-9 K.
inline double temperature_to_resistance(double t_kelvin, const ThermistorCoefficients& k) {
    if (!(t_kelvin > 0.0)) {
        throw std::domain_error("thermistor: temperature must be positive (got " +
                                std::to_string(t_kelvin) + " K)");
    }
    const double target = 1.0 / t_kelvin;
    const double x_lo = std::log(k.r_min);
    const double x_hi = std::log(k.r_max);

    std::array<double, 3> roots{};
    std::size_t n_roots = 0;
    if (k.c == 0.0) {
        if (k.b == 0.0) throw std::domain_error("thermistor: degenerate coefficients (b = c = 0)");
        roots[n_roots++] = (target - k.a) / k.b;
    } else {
        const double p = k.b / k.c;
        const double q = (k.a - target) / k.c;
        if (p > 0.0) {
            // One real root; the hyperbolic form is stable for NTC-shaped fits.
            roots[n_roots++] =
                -2.0 * std::sqrt(p / 3.0) *
                std::sinh(std::asinh(1.5 * q / p * std::sqrt(3.0 / p)) / 3.0);
        } else {
            const double disc = q * q / 4.0 + p * p * p / 27.0;
            if (disc > 0.0) {
                const double s = std::sqrt(disc);
                roots[n_roots++] = std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s);
            } else {
                const double m = 2.0 * std::sqrt(-p / 3.0);
                const double theta = std::acos(std::clamp(3.0 * q / (p * m), -1.0, 1.0)) / 3.0;
                for (int j = 0; j < 3; ++j) {
                    roots[n_roots++] =
                        m * std::cos(theta - 2.0 * 3.14159265358979323846 * j / 3.0);
                }
            }
        }
    }

    for (std::size_t i = 0; i < n_roots; ++i) {
        double x = roots[i];
        for (int iter = 0; iter < 4; ++iter) {
            const double f = detail::sh_denominator(k, x) - target;
            const double fp = k.b + 3.0 * k.c * x * x;
            if (fp == 0.0) break;
            x -= f / fp;
        }
        if (x >= x_lo && x <= x_hi &&
            std::abs(detail::sh_denominator(k, x) - target) < 1e-12 * target) {
            return std::exp(x);
        }
    }
    throw std::domain_error("thermistor: no resistance in [r_min, r_max] for T = " +
                            std::to_string(t_kelvin) + " K");
}

// Solve the 3x3 linear system in (a, b, c) through three (R, T) calibration
// points. Gaussian elimination with partial pivoting; three points keep this
// exact to solver precision.
inline ThermistorCoefficients fit_coefficients(
    const std::array<std::pair<double, double>, 3>& points_r_t,
    std::pair<double, double> r_range) {
    double m[3][4];
    for (int i = 0; i < 3; ++i) {
        const double r = points_r_t[static_cast<std::size_t>(i)].first;
        const double t = points_r_t[static_cast<std::size_t>(i)].second;
        if (!(r > 0.0)) throw std::invalid_argument("thermistor fit: resistances must be positive");
        if (!(t > 0.0)) throw std::invalid_argument("thermistor fit: temperatures must be positive");
        const double x = std::log(r);
        m[i][0] = 1.0;
        m[i][1] = x;
        m[i][2] = x * x * x;
        m[i][3] = 1.0 / t;
    }
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int row = col + 1; row < 3; ++row) {
            if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
        }
        if (std::abs(m[pivot][col]) < 1e-14) {
            throw std::runtime_error(
                "thermistor fit: singular system (duplicate or collinear ln-resistances)");
        }
        if (pivot != col) {
            for (int j = col; j < 4; ++j) std::swap(m[pivot][j], m[col][j]);
        }
        for (int row = col + 1; row < 3; ++row) {
            const double f = m[row][col] / m[col][col];
            for (int j = col; j < 4; ++j) m[row][j] -= f * m[col][j];
        }
    }
    double sol[3];
    for (int row = 2; row >= 0; --row) {
        double acc = m[row][3];
        for (int j = row + 1; j < 3; ++j) acc -= m[row][j] * sol[j];
        sol[row] = acc / m[row][row];
    }
    ThermistorCoefficients k{sol[0], sol[1], sol[2], r_range.first, r_range.second};
    check_coefficients(k);
    return k;
}

}  // namespace tempnet
