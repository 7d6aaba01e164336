#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "ripplekit/harmonic_model.hpp"
#include "ripplekit/matrix.hpp"

namespace ripplekit {

/**
 * @brief Discrete-time harmonic observer design for one measured scalar
 *        (dc-link voltage or inductor current).
 *
 * The error dynamics eigenvalues are the open-loop unit-circle eigenvalues
 * {1, e^(+-i·n·beta·T)} scaled by rho, so the correction gain shrinks as rho
 * approaches 1.
 */
struct ObserverConfig {
    double beta = 0.0;           ///< ripple fundamental [rad/s]
    double sample_period = 0.0;  ///< T [s]
    double rho = 0.0;            ///< pole scaling, in (0, 1)
    Matrix<kStateDim, kStateDim> transition{};  ///< S_d
    RowVec<kStateDim> output{};                 ///< G
    Vec<kStateDim> gain{};                      ///< L_d
};

struct ObserverState {
    StateVector7 z{};
    std::uint64_t samples_seen = 0;
};

[[nodiscard]] inline ObserverConfig design_observer(double beta, double sample_period, double rho) {
    if (!(rho > 0.0) || !(rho < 1.0)) {
        throw std::invalid_argument("design_observer: rho must be in (0, 1)");
    }
    if (!(sample_period > 0.0) || !std::isfinite(sample_period)) {
        throw std::invalid_argument("design_observer: sample period must be positive");
    }

    ObserverConfig cfg;
    cfg.beta = beta;
    cfg.sample_period = sample_period;
    cfg.rho = rho;
    cfg.transition = discretize(beta, sample_period);
    cfg.output = output_map();

    std::array<std::complex<double>, kStateDim> targets{};
    targets[0] = rho;
    for (std::size_t n = 1; n <= kHarmonicCount; ++n) {
        const double angle = static_cast<double>(n) * beta * sample_period;
        targets[2 * n - 1] = rho * std::polar(1.0, angle);
        targets[2 * n] = rho * std::polar(1.0, -angle);
    }
    cfg.gain = place_observer_gain(cfg.transition, cfg.output, targets);

    // construction-time check that the error dynamics carry the placed roots
    const auto placed = char_poly(cfg.transition - cfg.gain * cfg.output);
    for (const auto& target : targets) {
        if (std::abs(placed.evaluate(target)) > 1e-6) {
            throw std::runtime_error("design_observer: pole placement failed verification");
        }
    }
    return cfg;
}

/// Observer state seeded from the first measurement: the dc entry takes the
/// sample, harmonic entries start at zero.
[[nodiscard]] inline ObserverState initial_observer_state(double first_sample) {
    ObserverState st;
    st.z[0] = first_sample;
    return st;
}

/**
 * @brief One predictor update: z' = S_d·z + L_d·(y - G·z).
 *
 * @throws std::domain_error on a non-finite measurement; the state is
 *         left untouched in that case.
 */
[[nodiscard]] inline ObserverState observer_step(const ObserverConfig& cfg, const ObserverState& st,
                                                 double y) {
    if (!std::isfinite(y)) {
        throw std::domain_error("observer_step: non-finite measurement");
    }
    ObserverState out;
    const double innovation = y - dot(cfg.output, st.z);
    out.z = cfg.transition * st.z + cfg.gain * innovation;
    out.samples_seen = st.samples_seen + 1;
    return out;
}

/**
 * @brief Same contract as observer_step, using the 1+2+2+2 block structure
 *        of S_d instead of a full 7x7 multiply.
 *
 * Per update: 12 multiplies for the three rotations, 7 for the gain
 * correction (19 total, within the 25-multiply budget of a fast
 * fixed-point implementation).
 */
[[nodiscard]] inline ObserverState observer_step_decomposed(const ObserverConfig& cfg,
                                                            const ObserverState& st, double y) {
    if (!std::isfinite(y)) {
        throw std::domain_error("observer_step_decomposed: non-finite measurement");
    }
    const StateVector7& z = st.z;
    const double innovation = y - (z[0] + z[1] + z[3] + z[5]);

    ObserverState out;
    out.z[0] = z[0] + cfg.gain[0] * innovation;
    for (std::size_t n = 1; n <= kHarmonicCount; ++n) {
        const std::size_t i = 2 * n - 1;
        const double c = cfg.transition(i, i);
        const double s = cfg.transition(i + 1, i);
        out.z[i] = c * z[i] - s * z[i + 1] + cfg.gain[i] * innovation;
        out.z[i + 1] = s * z[i] + c * z[i + 1] + cfg.gain[i + 1] * innovation;
    }
    out.samples_seen = st.samples_seen + 1;
    return out;
}

/**
 * @brief Ripple fundamental from motor speed: six conduction events per
 *        electrical cycle for a two-phase-on bridge.
 */
[[nodiscard]] inline double beta_from_speed(double rpm, int pole_pairs,
                                            int pulses_per_electrical_cycle = 6) {
    if (!(rpm > 0.0) || pole_pairs < 1 || pulses_per_electrical_cycle < 1) {
        throw std::invalid_argument("beta_from_speed: inputs must be positive");
    }
    return 2.0 * std::numbers::pi * (rpm / 60.0) * pole_pairs * pulses_per_electrical_cycle;
}

/// Full redesign (discretization + placement) at a new fundamental. The
/// caller keeps its ObserverState; z and samples_seen carry over unchanged.
[[nodiscard]] inline ObserverConfig retune(const ObserverConfig& cfg, double new_beta) {
    return design_observer(new_beta, cfg.sample_period, cfg.rho);
}

}  // namespace ripplekit
