#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ripplekit/harmonic_model.hpp"

namespace ripplekit {

/**
 * @brief Duty-cycle controller: PI-plus-current baseline with delayed
 *        harmonic state feedback on the voltage and current observers.
 *
 * Sign note: a boost converter's output rises with duty, so k1, k2 and k3
 * must share sign for negative feedback. The integral gain defaults to
 * -1.0; the stability sweep behind that sign lives in the controller test
 * suite.
 */
struct ControllerConfig {
    double nominal_duty = 0.0;              ///< D0
    double nominal_inductor_current = 0.0;  ///< i_L0 [A]
    double v_ref = 0.0;                     ///< [V]
    double k1 = -0.08;                      ///< duty per A
    double k2 = -0.06;                      ///< duty per V
    double k3 = -1.0;                       ///< duty per V·s
    double duty_min = 0.0;
    double duty_max = 0.8;
    std::array<double, 6> kv{};  ///< gains on voltage-observer z2..z7
    std::array<double, 6> ki{};  ///< gains on current-observer z2..z7
    double enable_time_v = 0.1;  ///< [s] voltage harmonic feedback delay
    double enable_time_i = 0.2;  ///< [s] current harmonic feedback delay
    double sample_period = 1.0 / 18000.0;
    double integral_limit = 0.0;  ///< 0 selects the derived anti-windup bound

    void validate() const {
        if (!(duty_min >= 0.0) || !(duty_min < duty_max) || !(duty_max <= 1.0)) {
            throw std::invalid_argument("ControllerConfig: need 0 <= duty_min < duty_max <= 1");
        }
        if (enable_time_v < 0.0 || enable_time_i < 0.0) {
            throw std::invalid_argument("ControllerConfig: enable times must be non-negative");
        }
        if (!(sample_period > 0.0)) {
            throw std::invalid_argument("ControllerConfig: sample period must be positive");
        }
    }

    [[nodiscard]] double integral_bound() const {
        if (integral_limit > 0.0) {
            return integral_limit;
        }
        if (k3 == 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        return (duty_max - duty_min) / std::abs(k3);
    }
};

struct ControllerState {
    double integral = 0.0;  ///< accumulated (v_dc - v_ref)·T [V·s]
    double t = 0.0;
};

/**
 * @brief Baseline tracking law, before saturation. The integral accumulates
 *        (v_dc - v_ref)·T ahead of use and is clamped to the anti-windup
 *        bound.
 */
[[nodiscard]] inline double base_duty(const ControllerConfig& cfg, ControllerState& st, double i_L,
                                      double v_dc) {
    const double err_v = v_dc - cfg.v_ref;
    const double bound = cfg.integral_bound();
    st.integral = std::clamp(st.integral + err_v * cfg.sample_period, -bound, bound);
    return cfg.nominal_duty + cfg.k1 * (i_L - cfg.nominal_inductor_current) + cfg.k2 * err_v +
           cfg.k3 * st.integral;
}

/// Dot product of the six feedback gains with z2..z7; the dc estimate z1 is
/// never fed back.
[[nodiscard]] inline double harmonic_term(const std::array<double, 6>& k, const StateVector7& z) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        sum += k[i] * z[i + 1];
    }
    return sum;
}

/**
 * @brief Full duty command for one sample: baseline plus the harmonic terms
 *        once their enable delays have elapsed, saturated to
 *        [duty_min, duty_max]. Conditional anti-windup: when the saturation
 *        binds and this sample's integral update pushes further into it,
 *        the update is rolled back; updates that drive the command back
 *        toward the linear range are kept.
 */
[[nodiscard]] inline double compute_duty(const ControllerConfig& cfg, ControllerState& st,
                                         double i_L, double v_dc, const StateVector7& zv,
                                         const StateVector7& zi, double t) {
    const double integral_before = st.integral;
    double duty = base_duty(cfg, st, i_L, v_dc);
    if (t >= cfg.enable_time_v) {
        duty += harmonic_term(cfg.kv, zv);
    }
    if (t >= cfg.enable_time_i) {
        duty += harmonic_term(cfg.ki, zi);
    }
    st.t = t;
    if (duty < cfg.duty_min || duty > cfg.duty_max) {
        const double update_effect = cfg.k3 * (st.integral - integral_before);
        const bool deeper = (duty > cfg.duty_max && update_effect > 0.0) ||
                            (duty < cfg.duty_min && update_effect < 0.0);
        if (deeper) {
            st.integral = integral_before;
        }
        return std::clamp(duty, cfg.duty_min, cfg.duty_max);
    }
    return duty;
}

}  // namespace ripplekit
