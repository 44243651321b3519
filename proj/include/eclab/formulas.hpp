#pragma once

// Closed-form rate and slack constants shared by the mixing and certificate
// modules. Logarithms are natural; reports record that choice.

#include <cmath>
#include <stdexcept>

namespace eclab {

// Spectral-independence excess for fan distributions at maximum degree D.
inline double eta_delta(int delta) {
    if (delta < 2) throw std::invalid_argument("eta formula needs degree >= 2");
    double l = std::log(static_cast<double>(delta));
    return (1.0 + (6.0 + 160.0 / (delta - 1)) * l * l) / delta + 1.0 / (static_cast<double>(delta) * delta);
}

// Decay exponent delivered by the contraction theorem at slack beta.
inline double ssm_delta_rate(long beta, int delta, double eta) {
    double g = 1.0 + (static_cast<double>(beta) - 1.0 - delta) / delta; // (beta-1)/delta
    return (g * g - (1.0 + eta) * (1.0 + eta)) / (2.0 * g * g);
}

// One-step contraction epsilon and rate for uniform-palette trees.
inline double wsm_epsilon(int delta) {
    double a = (delta - 1.0) / delta;
    double b = (std::exp(1.0) - 1.0) / std::exp(1.0);
    return a > b ? a : b;
}

inline double wsm_rate(int delta) {
    double eps = wsm_epsilon(delta);
    return 1.0 - (1.0 - eps) / (2.0 * delta - (1.0 + eps));
}

inline double wsm_paper_constant(int delta) {
    double eps = wsm_epsilon(delta);
    double rate = wsm_rate(delta);
    double c1 = 8.0 * eps / ((1.0 - eps) * (1.0 - eps)) / (rate * rate);
    double c2 = 1.0 / rate;
    return c1 > c2 ? c1 : c2;
}

} // namespace eclab
