#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <variant>
#include <vector>

namespace ripplekit {

/**
 * @brief Boost-converter parameters. The control sample rate equals the PWM
 *        rate; each sample period is integrated in substeps with the switch
 *        transition placed exactly at the duty fraction.
 */
struct BoostParams {
    double v_in = 13.9;          ///< input voltage [V]
    double inductance = 330e-6;  ///< L [H]
    double capacitance = 470e-6; ///< C [F]
    double esr = 0.1;            ///< output capacitor ESR [ohm]
    double r_on = 0.0;           ///< switch on-resistance [ohm]
    double f_pwm = 18000.0;      ///< switching = sampling frequency [Hz]
    int substeps_per_period = 16;

    void validate() const {
        if (!(v_in > 0.0) || !(inductance > 0.0) || !(capacitance > 0.0) || !(f_pwm > 0.0)) {
            throw std::invalid_argument("BoostParams: v_in, L, C, f_pwm must be positive");
        }
        if (esr < 0.0 || r_on < 0.0) {
            throw std::invalid_argument("BoostParams: esr and r_on must be non-negative");
        }
        if (substeps_per_period < 8) {
            throw std::invalid_argument("BoostParams: at least 8 substeps per period required");
        }
    }
};

struct ConstantCurrentLoad {
    double i0 = 0.0;  ///< dc-link current draw [A]
};

struct HarmonicLoadComponent {
    double magnitude = 0.0;  ///< [A]
    int order = 1;           ///< harmonic order n in {1, 2, 3}
    double phase = 0.0;      ///< [rad]
};

/// Idealized pulsating load: i0 plus cosine components at multiples of beta.
struct PeriodicHarmonicsLoad {
    double i0 = 0.0;
    double beta = 0.0;  ///< base ripple frequency [rad/s]
    std::vector<HarmonicLoadComponent> components;

    void validate() const {
        if (!components.empty() && !(beta > 0.0)) {
            throw std::invalid_argument("PeriodicHarmonicsLoad: beta must be positive");
        }
        for (const auto& c : components) {
            if (c.order < 1 || c.order > 3) {
                throw std::invalid_argument("PeriodicHarmonicsLoad: harmonic orders are 1..3");
            }
        }
    }
};

/**
 * @brief Two-phase-on six-step BLDC drive seen from the dc link.
 *
 * The conducting pair forms a series loop (2R, 2L, pair back-EMF); the
 * commutation hand-off is ideal and instantaneous, so the 6-per-cycle
 * dc-link ripple comes from the back-EMF corners: a flat angle below 120
 * electrical degrees leaves part of each conduction sector on the EMF
 * ramps, dipping the loop EMF around every commutation.
 */
struct SixStepBldcLoad {
    double r_phase = 0.41;          ///< stator phase resistance [ohm]
    double l_phase = 0.0007;        ///< stator phase inductance [H]
    double torque_constant = 1.4;   ///< k_t [N·m/A]
    double flat_angle_deg = 120.0;  ///< back-EMF flat area [electrical deg]
    double inertia = 9.6e-5;        ///< J [kg·m^2]
    double damping = 1e-3;          ///< F [N·m·s]
    int pole_pairs = 4;
    double load_torque = 0.0;       ///< [N·m]

    void validate() const {
        if (!(r_phase > 0.0) || !(l_phase > 0.0) || !(torque_constant > 0.0) || !(inertia > 0.0) ||
            !(damping > 0.0) || pole_pairs < 1) {
            throw std::invalid_argument("SixStepBldcLoad: parameters must be positive");
        }
        if (!(flat_angle_deg > 0.0) || flat_angle_deg > 120.0) {
            throw std::invalid_argument("SixStepBldcLoad: flat angle must be in (0, 120] degrees");
        }
        if (load_torque < 0.0) {
            throw std::invalid_argument("SixStepBldcLoad: load torque must be non-negative");
        }
    }
};

using LoadModel = std::variant<ConstantCurrentLoad, PeriodicHarmonicsLoad, SixStepBldcLoad>;

struct MotorState {
    double theta_e = 0.0;   ///< electrical angle [rad]
    double omega_m = 0.0;   ///< mechanical speed [rad/s]
    double i_phase = 0.0;   ///< conducting-pair loop current [A]
};

struct PlantState {
    double i_L = 0.0;  ///< inductor current [A], clamped at 0 (DCM)
    double v_C = 0.0;  ///< capacitor voltage [V]
    double t = 0.0;    ///< simulation time [s]
    MotorState motor{};
    int stall_count = 0;   ///< consecutive samples with back-EMF above v_dc
    bool stalled = false;  ///< diagnostic only, never an exception
};

/// Values sampled at the period boundary plus the substep-resolution
/// extremes seen during the period (switching-ripple diagnostics).
struct Measurement {
    double v_dc = 0.0;
    double i_L = 0.0;
    double v_dc_min = 0.0;
    double v_dc_max = 0.0;
    double i_L_min = 0.0;
    double i_L_max = 0.0;
};

namespace detail {

/// Unit trapezoid: +1 over the flat angle centered at pi/2, -1 over the flat
/// centered at 3*pi/2, linear ramps between.
[[nodiscard]] inline double trapezoid_wave(double theta, double flat_rad) {
    const double two_pi = 2.0 * std::numbers::pi;
    double th = std::fmod(theta, two_pi);
    if (th < 0.0) {
        th += two_pi;
    }
    const double ramp = std::numbers::pi - flat_rad;
    const double a0 = std::numbers::pi / 2.0 - flat_rad / 2.0;
    const double a1 = std::numbers::pi / 2.0 + flat_rad / 2.0;
    const double b0 = 3.0 * std::numbers::pi / 2.0 - flat_rad / 2.0;
    const double b1 = 3.0 * std::numbers::pi / 2.0 + flat_rad / 2.0;
    if (th >= a0 && th <= a1) {
        return 1.0;
    }
    if (th >= b0 && th <= b1) {
        return -1.0;
    }
    if (th > a1 && th < b0) {
        return 1.0 - 2.0 * (th - a1) / ramp;
    }
    const double x = (th > b1) ? th - b1 : th + two_pi - b1;
    return -1.0 + 2.0 * x / ramp;
}

/// (high, low) phase index per 60-degree conduction sector, sectors starting
/// at 30 electrical degrees.
inline constexpr int kConductionTable[6][2] = {{0, 1}, {0, 2}, {1, 2}, {1, 0}, {2, 0}, {2, 1}};

/// Back-EMF shape of the conducting pair, in [0, 2]; exactly 2 wherever both
/// phases sit on their flat tops.
[[nodiscard]] inline double conduction_pair_shape(double theta_e, double flat_rad) {
    const double two_pi = 2.0 * std::numbers::pi;
    double thn = std::fmod(theta_e - std::numbers::pi / 6.0, two_pi);
    if (thn < 0.0) {
        thn += two_pi;
    }
    const int sector = std::min(5, static_cast<int>(thn / (std::numbers::pi / 3.0)));
    const double shapes[3] = {trapezoid_wave(theta_e, flat_rad),
                              trapezoid_wave(theta_e - two_pi / 3.0, flat_rad),
                              trapezoid_wave(theta_e - 2.0 * two_pi / 3.0, flat_rad)};
    return shapes[kConductionTable[sector][0]] - shapes[kConductionTable[sector][1]];
}

struct MotorDeriv {
    double di = 0.0;
    double domega = 0.0;
    double dtheta = 0.0;
};

[[nodiscard]] inline MotorDeriv motor_derivatives(const SixStepBldcLoad& m, const MotorState& st,
                                                  double v_dc) {
    const double flat_rad = m.flat_angle_deg * std::numbers::pi / 180.0;
    const double shape = conduction_pair_shape(st.theta_e, flat_rad);
    const double k_e = m.torque_constant / 2.0;  // per-phase EMF constant; pair flat EMF = k_t·omega
    const double e_loop = k_e * st.omega_m * shape;
    MotorDeriv d;
    d.di = (v_dc - 2.0 * m.r_phase * st.i_phase - e_loop) / (2.0 * m.l_phase);
    const double torque = m.torque_constant * st.i_phase * shape / 2.0;  // power-consistent
    d.domega = (torque - m.load_torque - m.damping * st.omega_m) / m.inertia;
    d.dtheta = m.pole_pairs * st.omega_m;
    return d;
}

}  // namespace detail

/**
 * @brief Advances the motor loop by dt with the dc-link voltage held fixed
 *        (trapezoidal / Heun step). Commutation is the sector change implied
 *        by the advancing angle; the loop current carries across unchanged.
 */
[[nodiscard]] inline MotorState motor_substep(const SixStepBldcLoad& m, const MotorState& st,
                                              double v_dc, double dt) {
    const detail::MotorDeriv d1 = detail::motor_derivatives(m, st, v_dc);
    MotorState pred{st.theta_e + dt * d1.dtheta, st.omega_m + dt * d1.domega,
                    st.i_phase + dt * d1.di};
    const detail::MotorDeriv d2 = detail::motor_derivatives(m, pred, v_dc);
    MotorState out;
    out.i_phase = st.i_phase + 0.5 * dt * (d1.di + d2.di);
    out.omega_m = st.omega_m + 0.5 * dt * (d1.domega + d2.domega);
    out.theta_e = st.theta_e + 0.5 * dt * (d1.dtheta + d2.dtheta);
    if (out.i_phase < 0.0) {
        out.i_phase = 0.0;  // bridge switches block reverse loop current
    }
    return out;
}

/// Instantaneous dc-link current drawn by the load.
[[nodiscard]] inline double load_current(const LoadModel& load, double t, double /*v_dc*/,
                                         const MotorState& motor) {
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, ConstantCurrentLoad>) {
                return l.i0;
            } else if constexpr (std::is_same_v<T, PeriodicHarmonicsLoad>) {
                double i = l.i0;
                for (const auto& c : l.components) {
                    i += c.magnitude * std::cos(c.order * l.beta * t + c.phase);
                }
                return i;
            } else {
                return std::max(motor.i_phase, 0.0);
            }
        },
        load);
}

namespace detail {

struct BoostDeriv {
    double di_L = 0.0;
    double dv_C = 0.0;
    double v_dc = 0.0;
};

[[nodiscard]] inline BoostDeriv boost_derivatives(const BoostParams& p, double i_L, double v_C,
                                                  bool switch_on, double i_load) {
    BoostDeriv d;
    if (switch_on) {
        const double i_C = -i_load;  // diode blocks, capacitor alone feeds the load
        d.v_dc = v_C + p.esr * i_C;
        d.di_L = (p.v_in - p.r_on * i_L) / p.inductance;
        d.dv_C = i_C / p.capacitance;
    } else {
        const double i_C = i_L - i_load;
        d.v_dc = v_C + p.esr * i_C;
        d.di_L = (p.v_in - d.v_dc) / p.inductance;
        d.dv_C = i_C / p.capacitance;
        if (i_L <= 0.0 && d.di_L < 0.0) {
            // discontinuous conduction: inductor current stays at zero
            d.di_L = 0.0;
            d.dv_C = -i_load / p.capacitance;
            d.v_dc = v_C - p.esr * i_load;
        }
    }
    return d;
}

}  // namespace detail

/// Output voltage and inductor current as seen at a period boundary (switch
/// off side of the transition for any duty below one).
[[nodiscard]] inline Measurement instantaneous_output(const BoostParams& p, const LoadModel& load,
                                                      const PlantState& st) {
    const double i_load = load_current(load, st.t, st.v_C, st.motor);
    const auto d = detail::boost_derivatives(p, st.i_L, st.v_C, false, i_load);
    Measurement m;
    m.v_dc = d.v_dc;
    m.i_L = st.i_L;
    m.v_dc_min = m.v_dc_max = d.v_dc;
    m.i_L_min = m.i_L_max = st.i_L;
    return m;
}

/**
 * @brief Advances the plant by exactly one PWM/control period with the duty
 *        latched for the whole period.
 *
 * The period is split into the configured substeps plus one extra boundary
 * at the exact switch transition; each segment is integrated with a Heun
 * (trapezoidal) step. The switch is on for the leading duty-fraction of the
 * period. Identical inputs give bit-identical trajectories.
 */
[[nodiscard]] inline std::pair<PlantState, Measurement> sample_step(const BoostParams& p,
                                                                    const LoadModel& load,
                                                                    const PlantState& st,
                                                                    double duty) {
    if (!(duty >= 0.0 && duty <= 1.0)) {
        throw std::invalid_argument("sample_step: duty must lie in [0, 1]");
    }
    const double period = 1.0 / p.f_pwm;
    const double t_switch = duty * period;
    const bool bldc = std::holds_alternative<SixStepBldcLoad>(load);

    PlantState s = st;
    Measurement meas;
    {
        const double i_load0 = load_current(load, s.t, s.v_C, s.motor);
        const auto d0 = detail::boost_derivatives(p, s.i_L, s.v_C, t_switch > 0.0, i_load0);
        meas.v_dc_min = meas.v_dc_max = d0.v_dc;
        meas.i_L_min = meas.i_L_max = s.i_L;
    }

    const int n = p.substeps_per_period;
    double seg_start = 0.0;
    for (int i = 0; i < n; ++i) {
        const double seg_end = period * (i + 1) / n;
        // insert the exact transition boundary into this substep if it falls inside
        double bounds[3] = {seg_start, seg_end, seg_end};
        int segments = 1;
        if (t_switch > seg_start && t_switch < seg_end) {
            bounds[1] = t_switch;
            segments = 2;
        }
        for (int j = 0; j < segments; ++j) {
            const double a = bounds[j];
            const double b = bounds[j + 1];
            const double dt = b - a;
            if (dt <= 0.0) {
                continue;
            }
            const bool on = (a + 0.5 * dt) < t_switch;

            // load current at segment ends (motor advanced with v_dc frozen)
            double i_load_a;
            double i_load_b;
            MotorState motor_next = s.motor;
            if (bldc) {
                const auto& m = std::get<SixStepBldcLoad>(load);
                i_load_a = std::max(s.motor.i_phase, 0.0);
                const auto d_now = detail::boost_derivatives(p, s.i_L, s.v_C, on, i_load_a);
                motor_next = motor_substep(m, s.motor, d_now.v_dc, dt);
                i_load_b = std::max(motor_next.i_phase, 0.0);
            } else {
                i_load_a = load_current(load, s.t + a, s.v_C, s.motor);
                i_load_b = load_current(load, s.t + b, s.v_C, s.motor);
            }

            // Heun on the (i_L, v_C) pair
            const auto d1 = detail::boost_derivatives(p, s.i_L, s.v_C, on, i_load_a);
            double i_pred = s.i_L + dt * d1.di_L;
            double v_pred = s.v_C + dt * d1.dv_C;
            if (i_pred < 0.0) {
                i_pred = 0.0;
            }
            const auto d2 = detail::boost_derivatives(p, i_pred, v_pred, on, i_load_b);
            s.i_L += 0.5 * dt * (d1.di_L + d2.di_L);
            s.v_C += 0.5 * dt * (d1.dv_C + d2.dv_C);
            if (s.i_L < 0.0) {
                s.i_L = 0.0;
            }
            if (s.v_C < 0.0) {
                s.v_C = 0.0;
            }
            s.motor = motor_next;

            const auto d_end = detail::boost_derivatives(p, s.i_L, s.v_C, on, i_load_b);
            meas.v_dc_min = std::min(meas.v_dc_min, d_end.v_dc);
            meas.v_dc_max = std::max(meas.v_dc_max, d_end.v_dc);
            meas.i_L_min = std::min(meas.i_L_min, s.i_L);
            meas.i_L_max = std::max(meas.i_L_max, s.i_L);
        }
        seg_start = seg_end;
    }
    s.t = st.t + period;

    const double i_load_end = load_current(load, s.t, s.v_C, s.motor);
    const auto d_final = detail::boost_derivatives(p, s.i_L, s.v_C, false, i_load_end);
    meas.v_dc = d_final.v_dc;
    meas.i_L = s.i_L;

    if (bldc) {
        const auto& m = std::get<SixStepBldcLoad>(load);
        const double e_flat = m.torque_constant * s.motor.omega_m;  // pair EMF on the flat top
        if (e_flat > meas.v_dc && s.motor.i_phase <= 1e-9) {
            s.stall_count += 1;
        } else {
            s.stall_count = 0;
        }
        s.stalled = s.stall_count > static_cast<int>(p.f_pwm / 100.0);  // ~10 ms sustained
    }
    return {s, meas};
}

}  // namespace ripplekit
