#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "ripplekit/matrix.hpp"

namespace ripplekit {

/// Number of ripple harmonics carried by the model. The dc value plus three
/// rotating harmonic pairs give the 7-dimensional state.
inline constexpr std::size_t kHarmonicCount = 3;
inline constexpr std::size_t kStateDim = 2 * kHarmonicCount + 1;

using StateVector7 = Vec<kStateDim>;

struct Harmonic {
    double magnitude = 0.0;  ///< b_n >= 0, signal units
    double phase = 0.0;      ///< radians, normalized to (-pi, pi]
};

/**
 * @brief Average value plus the first three ripple harmonics of a scalar
 *        signal: y(t) = average + sum b_n cos(n·beta·t + phi_n).
 */
struct HarmonicDecomposition {
    double average = 0.0;
    std::array<Harmonic, kHarmonicCount> harmonics{};
    double beta = 0.0;  ///< fundamental ripple frequency [rad/s], > 0
};

/**
 * @brief Continuous-time dynamics of the autonomous harmonic generator:
 *        a zero first row and one skew block [0, -n·beta; n·beta, 0] per
 *        harmonic on the diagonal.
 */
[[nodiscard]] inline Matrix<kStateDim, kStateDim> continuous_dynamics(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("continuous_dynamics: beta must be positive");
    }
    Matrix<kStateDim, kStateDim> s{};
    for (std::size_t n = 1; n <= kHarmonicCount; ++n) {
        const std::size_t i = 2 * n - 1;
        s(i, i + 1) = -static_cast<double>(n) * beta;
        s(i + 1, i) = static_cast<double>(n) * beta;
    }
    return s;
}

/// Output row mapping the state to the measured scalar: picks the dc entry
/// and the cosine entry of each harmonic pair.
[[nodiscard]] inline RowVec<kStateDim> output_map() {
    RowVec<kStateDim> g{};
    g[0] = 1.0;
    g[1] = 1.0;
    g[3] = 1.0;
    g[5] = 1.0;
    return g;
}

/**
 * @brief Closed-form one-sample transition matrix: identity on the dc entry
 *        and a rotation block [cos, -sin; sin, cos] at angle n·beta·T per
 *        harmonic. Equals mat_exp(continuous_dynamics(beta), T).
 *
 * Requires beta·T < pi/3 so the third harmonic stays below the Nyquist rate.
 */
[[nodiscard]] inline Matrix<kStateDim, kStateDim> discretize(double beta, double sample_period) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("discretize: beta must be positive");
    }
    if (!(sample_period >= 0.0) || !std::isfinite(sample_period)) {
        throw std::invalid_argument("discretize: sample period must be non-negative");
    }
    if (beta * sample_period >= std::numbers::pi / 3.0) {
        throw std::invalid_argument("discretize: beta*T must stay below pi/3 (third harmonic aliases)");
    }
    Matrix<kStateDim, kStateDim> sd{};
    sd(0, 0) = 1.0;
    for (std::size_t n = 1; n <= kHarmonicCount; ++n) {
        const double angle = static_cast<double>(n) * beta * sample_period;
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const std::size_t i = 2 * n - 1;
        sd(i, i) = c;
        sd(i, i + 1) = -s;
        sd(i + 1, i) = s;
        sd(i + 1, i + 1) = c;
    }
    return sd;
}

/// x1 = average; x_{2n} = b_n cos(phi_n); x_{2n+1} = b_n sin(phi_n).
[[nodiscard]] inline StateVector7 state_from_harmonics(const HarmonicDecomposition& h) {
    StateVector7 x{};
    x[0] = h.average;
    for (std::size_t n = 0; n < kHarmonicCount; ++n) {
        x[2 * n + 1] = h.harmonics[n].magnitude * std::cos(h.harmonics[n].phase);
        x[2 * n + 2] = h.harmonics[n].magnitude * std::sin(h.harmonics[n].phase);
    }
    return x;
}

/// Inverse of state_from_harmonics; a zero-magnitude harmonic reports
/// phase 0 by convention.
[[nodiscard]] inline HarmonicDecomposition harmonics_from_state(const StateVector7& x, double beta) {
    HarmonicDecomposition h;
    h.average = x[0];
    h.beta = beta;
    for (std::size_t n = 0; n < kHarmonicCount; ++n) {
        const double c = x[2 * n + 1];
        const double s = x[2 * n + 2];
        h.harmonics[n].magnitude = std::hypot(c, s);
        h.harmonics[n].phase = (h.harmonics[n].magnitude == 0.0) ? 0.0 : std::atan2(s, c);
    }
    return h;
}

/// Applies the one-sample transition k times. Rotation blocks keep each
/// harmonic's amplitude invariant.
[[nodiscard]] inline StateVector7 propagate(StateVector7 x, const Matrix<kStateDim, kStateDim>& sd,
                                            std::uint64_t steps) {
    for (std::uint64_t i = 0; i < steps; ++i) {
        x = sd * x;
    }
    return x;
}

/// Direct evaluation of the harmonic sum at time t; the closed form the
/// state-space propagation must reproduce through the output map.
[[nodiscard]] inline double evaluate_harmonics(const HarmonicDecomposition& h, double t) {
    double y = h.average;
    for (std::size_t n = 0; n < kHarmonicCount; ++n) {
        y += h.harmonics[n].magnitude *
             std::cos(static_cast<double>(n + 1) * h.beta * t + h.harmonics[n].phase);
    }
    return y;
}

}  // namespace ripplekit
