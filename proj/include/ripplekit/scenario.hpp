#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ripplekit/analysis.hpp"
#include "ripplekit/controller.hpp"
#include "ripplekit/observer.hpp"
#include "ripplekit/plant.hpp"

namespace ripplekit {

enum class FeedbackMode { off, voltage, voltage_and_current };

enum class SpeedSource { fixed_rpm, motor_state };

struct ObserverSettings {
    double rho = 0.99;
    SpeedSource speed_source = SpeedSource::fixed_rpm;
    double fixed_rpm = 1000.0;
    int pole_pairs = 4;
    int pulses_per_electrical_cycle = 6;
};

struct SimSettings {
    double duration = 1.0;      ///< [s]
    std::uint64_t seed = 1;     ///< measurement-noise seed
    double noise_stddev_v = 0.0;
    double noise_stddev_i = 0.0;
};

struct OutputSettings {
    std::string trace_path;
    std::string metrics_path;
};

/// Everything one closed-loop run needs: plant, load, observer design
/// settings, controller gains, and simulation options.
struct ScenarioConfig {
    BoostParams plant{};
    LoadModel load = ConstantCurrentLoad{2.65};
    ObserverSettings observer{};
    ControllerConfig controller{};
    SimSettings sim{};
    OutputSettings outputs{};

    void validate() const {
        plant.validate();
        controller.validate();
        if (!(sim.duration > 0.0)) {
            throw std::invalid_argument("ScenarioConfig: duration must be positive");
        }
        if (sim.noise_stddev_v < 0.0 || sim.noise_stddev_i < 0.0) {
            throw std::invalid_argument("ScenarioConfig: noise stddev must be non-negative");
        }
        if (!(observer.rho > 0.0 && observer.rho < 1.0)) {
            throw std::invalid_argument("ScenarioConfig: rho must be in (0, 1)");
        }
        if (observer.speed_source == SpeedSource::motor_state &&
            !std::holds_alternative<SixStepBldcLoad>(load)) {
            throw std::invalid_argument(
                "ScenarioConfig: motor-state speed source requires the BLDC load");
        }
        if (const auto* m = std::get_if<SixStepBldcLoad>(&load)) {
            m->validate();
        }
        if (const auto* ph = std::get_if<PeriodicHarmonicsLoad>(&load)) {
            ph->validate();
        }
    }
};

/**
 * @brief The shipped reference scenario: Table-2 electrical values
 *        (13.9 V in, 24 V reference, 330 uH, 470 uF, 0.1 ohm ESR, 18 kHz)
 *        driving the six-step BLDC at 1000 rpm, ripple feedback enables at
 *        0.1 s and 0.2 s.
 *
 * The motor keeps the listed stator geometry; its torque constant and load
 * torque are scaled so the 24 V link sustains 1000 rpm (the listed
 * 1.4 N·m/A needs ~147 V there), and the back-EMF flat area is set a notch
 * below the ideal 120 degrees, which is what excites the 6-per-cycle
 * (400 Hz) dc-link ripple under ideal commutation.
 */
[[nodiscard]] inline ScenarioConfig paper_default_scenario() {
    ScenarioConfig cfg;
    cfg.plant.v_in = 13.9;
    cfg.plant.inductance = 330e-6;
    cfg.plant.capacitance = 470e-6;
    cfg.plant.esr = 0.1;
    cfg.plant.r_on = 0.0;
    cfg.plant.f_pwm = 18000.0;
    cfg.plant.substeps_per_period = 16;

    SixStepBldcLoad motor;
    motor.r_phase = 0.41;
    motor.l_phase = 0.0007;
    motor.torque_constant = 0.21;
    motor.flat_angle_deg = 110.0;
    motor.inertia = 9.6e-5;
    motor.damping = 1e-3;
    motor.pole_pairs = 4;
    motor.load_torque = 0.3965;
    cfg.load = motor;

    cfg.observer.rho = 0.99;
    cfg.observer.speed_source = SpeedSource::motor_state;
    cfg.observer.fixed_rpm = 1000.0;
    cfg.observer.pole_pairs = 4;
    cfg.observer.pulses_per_electrical_cycle = 6;

    cfg.controller.v_ref = 24.0;
    cfg.controller.nominal_duty = 1.0 - cfg.plant.v_in / cfg.controller.v_ref;
    cfg.controller.nominal_inductor_current = 3.66;
    cfg.controller.k1 = -0.08;
    cfg.controller.k2 = -0.06;
    cfg.controller.k3 = -1.0;
    cfg.controller.duty_min = 0.0;
    cfg.controller.duty_max = 0.8;
    cfg.controller.enable_time_v = 0.1;
    cfg.controller.enable_time_i = 0.2;
    cfg.controller.sample_period = 1.0 / cfg.plant.f_pwm;
    // Gains recorded from `ripplekit tune` on this scenario.
    cfg.controller.kv = {-1.0, 0.9427644103769663, -1.0, 0.24518628897653005, 1.0, -1.0};
    cfg.controller.ki = {-0.9841679486189117, -0.25113888808681345, -0.011456180001682434, -0.016467957350053544, -0.6287784239777919, -0.003398874989484817};

    cfg.sim.duration = 1.0;
    cfg.sim.seed = 1;
    return cfg;
}

// ---------------------------------------------------------------------------
// JSON configuration (strict: unknown keys are rejected)
// ---------------------------------------------------------------------------

namespace detail {

inline void ensure_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                        const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
inline void maybe(const nlohmann::json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        out = obj.at(key).get<T>();
    }
}

inline void maybe_gains(const nlohmann::json& obj, const char* key, std::array<double, 6>& out) {
    if (obj.contains(key)) {
        const auto v = obj.at(key).get<std::vector<double>>();
        if (v.size() != 6) {
            throw std::invalid_argument(std::string("config: '") + key + "' needs 6 gains (z2..z7)");
        }
        std::copy(v.begin(), v.end(), out.begin());
    }
}

}  // namespace detail

/// Parses a scenario on top of the paper-default values; only keys present
/// in the document are overridden, anything unrecognized is an error.
[[nodiscard]] inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    using detail::ensure_keys;
    using detail::maybe;
    ScenarioConfig cfg = paper_default_scenario();
    ensure_keys(j, {"plant", "load", "observer", "controller", "sim", "outputs"}, "scenario");

    if (j.contains("plant")) {
        const auto& p = j.at("plant");
        ensure_keys(p, {"v_in", "L", "C", "esr", "r_on", "f_pwm", "substeps_per_period"}, "plant");
        maybe(p, "v_in", cfg.plant.v_in);
        maybe(p, "L", cfg.plant.inductance);
        maybe(p, "C", cfg.plant.capacitance);
        maybe(p, "esr", cfg.plant.esr);
        maybe(p, "r_on", cfg.plant.r_on);
        maybe(p, "f_pwm", cfg.plant.f_pwm);
        maybe(p, "substeps_per_period", cfg.plant.substeps_per_period);
    }
    if (j.contains("load")) {
        const auto& l = j.at("load");
        const std::string type = l.at("type").get<std::string>();
        if (type == "constant_current") {
            ensure_keys(l, {"type", "i0"}, "load");
            ConstantCurrentLoad load;
            maybe(l, "i0", load.i0);
            cfg.load = load;
        } else if (type == "periodic_harmonics") {
            ensure_keys(l, {"type", "i0", "beta", "components"}, "load");
            PeriodicHarmonicsLoad load;
            maybe(l, "i0", load.i0);
            maybe(l, "beta", load.beta);
            if (l.contains("components")) {
                for (const auto& c : l.at("components")) {
                    ensure_keys(c, {"magnitude", "order", "phase"}, "load component");
                    HarmonicLoadComponent comp;
                    maybe(c, "magnitude", comp.magnitude);
                    maybe(c, "order", comp.order);
                    maybe(c, "phase", comp.phase);
                    if (comp.order < 1 || comp.order > 3) {
                        throw std::invalid_argument("config: load harmonic order must be 1..3");
                    }
                    load.components.push_back(comp);
                }
            }
            cfg.load = load;
        } else if (type == "six_step_bldc") {
            ensure_keys(l,
                        {"type", "r_phase", "l_phase", "k_t", "flat_angle_deg", "J", "F",
                         "pole_pairs", "load_torque"},
                        "load");
            SixStepBldcLoad load = std::get<SixStepBldcLoad>(paper_default_scenario().load);
            maybe(l, "r_phase", load.r_phase);
            maybe(l, "l_phase", load.l_phase);
            maybe(l, "k_t", load.torque_constant);
            maybe(l, "flat_angle_deg", load.flat_angle_deg);
            maybe(l, "J", load.inertia);
            maybe(l, "F", load.damping);
            maybe(l, "pole_pairs", load.pole_pairs);
            maybe(l, "load_torque", load.load_torque);
            cfg.load = load;
        } else {
            throw std::invalid_argument("config: unknown load type '" + type + "'");
        }
    }
    if (j.contains("observer")) {
        const auto& o = j.at("observer");
        ensure_keys(o, {"rho", "speed_source", "fixed_rpm", "pole_pairs",
                        "pulses_per_electrical_cycle"},
                    "observer");
        maybe(o, "rho", cfg.observer.rho);
        if (o.contains("speed_source")) {
            const std::string s = o.at("speed_source").get<std::string>();
            if (s == "fixed_rpm") {
                cfg.observer.speed_source = SpeedSource::fixed_rpm;
            } else if (s == "motor_state") {
                cfg.observer.speed_source = SpeedSource::motor_state;
            } else {
                throw std::invalid_argument("config: speed_source must be fixed_rpm or motor_state");
            }
        }
        maybe(o, "fixed_rpm", cfg.observer.fixed_rpm);
        maybe(o, "pole_pairs", cfg.observer.pole_pairs);
        maybe(o, "pulses_per_electrical_cycle", cfg.observer.pulses_per_electrical_cycle);
    }
    if (j.contains("controller")) {
        const auto& c = j.at("controller");
        ensure_keys(c,
                    {"D0", "i_L0", "v_ref", "k1", "k2", "k3", "duty_min", "duty_max", "Kv", "Ki",
                     "enable_time_v", "enable_time_i"},
                    "controller");
        maybe(c, "D0", cfg.controller.nominal_duty);
        maybe(c, "i_L0", cfg.controller.nominal_inductor_current);
        maybe(c, "v_ref", cfg.controller.v_ref);
        maybe(c, "k1", cfg.controller.k1);
        maybe(c, "k2", cfg.controller.k2);
        maybe(c, "k3", cfg.controller.k3);
        maybe(c, "duty_min", cfg.controller.duty_min);
        maybe(c, "duty_max", cfg.controller.duty_max);
        detail::maybe_gains(c, "Kv", cfg.controller.kv);
        detail::maybe_gains(c, "Ki", cfg.controller.ki);
        maybe(c, "enable_time_v", cfg.controller.enable_time_v);
        maybe(c, "enable_time_i", cfg.controller.enable_time_i);
    }
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        ensure_keys(s, {"duration", "seed", "noise_stddev_v", "noise_stddev_i"}, "sim");
        maybe(s, "duration", cfg.sim.duration);
        maybe(s, "seed", cfg.sim.seed);
        maybe(s, "noise_stddev_v", cfg.sim.noise_stddev_v);
        maybe(s, "noise_stddev_i", cfg.sim.noise_stddev_i);
    }
    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        ensure_keys(o, {"trace", "metrics"}, "outputs");
        maybe(o, "trace", cfg.outputs.trace_path);
        maybe(o, "metrics", cfg.outputs.metrics_path);
    }
    cfg.controller.sample_period = 1.0 / cfg.plant.f_pwm;
    cfg.validate();
    return cfg;
}

[[nodiscard]] inline nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
    nlohmann::json load;
    if (const auto* c = std::get_if<ConstantCurrentLoad>(&cfg.load)) {
        load = {{"type", "constant_current"}, {"i0", c->i0}};
    } else if (const auto* ph = std::get_if<PeriodicHarmonicsLoad>(&cfg.load)) {
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& c : ph->components) {
            comps.push_back({{"magnitude", c.magnitude}, {"order", c.order}, {"phase", c.phase}});
        }
        load = {{"type", "periodic_harmonics"}, {"i0", ph->i0}, {"beta", ph->beta},
                {"components", comps}};
    } else {
        const auto& m = std::get<SixStepBldcLoad>(cfg.load);
        load = {{"type", "six_step_bldc"}, {"r_phase", m.r_phase},   {"l_phase", m.l_phase},
                {"k_t", m.torque_constant}, {"flat_angle_deg", m.flat_angle_deg},
                {"J", m.inertia},           {"F", m.damping},
                {"pole_pairs", m.pole_pairs}, {"load_torque", m.load_torque}};
    }
    return {{"plant",
             {{"v_in", cfg.plant.v_in},
              {"L", cfg.plant.inductance},
              {"C", cfg.plant.capacitance},
              {"esr", cfg.plant.esr},
              {"r_on", cfg.plant.r_on},
              {"f_pwm", cfg.plant.f_pwm},
              {"substeps_per_period", cfg.plant.substeps_per_period}}},
            {"load", load},
            {"observer",
             {{"rho", cfg.observer.rho},
              {"speed_source",
               cfg.observer.speed_source == SpeedSource::fixed_rpm ? "fixed_rpm" : "motor_state"},
              {"fixed_rpm", cfg.observer.fixed_rpm},
              {"pole_pairs", cfg.observer.pole_pairs},
              {"pulses_per_electrical_cycle", cfg.observer.pulses_per_electrical_cycle}}},
            {"controller",
             {{"D0", cfg.controller.nominal_duty},
              {"i_L0", cfg.controller.nominal_inductor_current},
              {"v_ref", cfg.controller.v_ref},
              {"k1", cfg.controller.k1},
              {"k2", cfg.controller.k2},
              {"k3", cfg.controller.k3},
              {"duty_min", cfg.controller.duty_min},
              {"duty_max", cfg.controller.duty_max},
              {"Kv", cfg.controller.kv},
              {"Ki", cfg.controller.ki},
              {"enable_time_v", cfg.controller.enable_time_v},
              {"enable_time_i", cfg.controller.enable_time_i}}},
            {"sim",
             {{"duration", cfg.sim.duration},
              {"seed", cfg.sim.seed},
              {"noise_stddev_v", cfg.sim.noise_stddev_v},
              {"noise_stddev_i", cfg.sim.noise_stddev_i}}},
            {"outputs", {{"trace", cfg.outputs.trace_path}, {"metrics", cfg.outputs.metrics_path}}}};
}

// ---------------------------------------------------------------------------
// Closed-loop simulation
// ---------------------------------------------------------------------------

namespace detail {

/// Box-Muller gaussian built directly on mt19937_64 output so traces are
/// reproducible across standard libraries.
class GaussianNoise {
  public:
    explicit GaussianNoise(std::uint64_t seed) : rng_(seed) {}

    double next(double sigma) {
        if (sigma == 0.0) {
            return 0.0;
        }
        if (have_spare_) {
            have_spare_ = false;
            return sigma * spare_;
        }
        const double u1 = std::max(uniform(), 1e-300);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return sigma * r * std::cos(a);
    }

  private:
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace detail

struct SimResult {
    Trace trace;
    bool diverged = false;
    double mean_v_dc = 0.0;  ///< over the steady window
    Window steady_window{};
    double final_beta = 0.0;
};

/**
 * @brief Runs one closed-loop scenario at the PWM/control rate.
 *
 * Per sample: measure (plus optional gaussian noise), update both harmonic
 * observers, compute the duty command, advance the plant one period. With a
 * motor-state speed source the observer fundamental is re-derived from the
 * motor speed at most once per 10 ms (full redesign, state carried over).
 * The trace records the true plant outputs; the controller and observers
 * see the noisy measurements.
 */
[[nodiscard]] inline SimResult run_scenario(const ScenarioConfig& cfg, FeedbackMode mode) {
    cfg.validate();
    const double T = 1.0 / cfg.plant.f_pwm;

    ControllerConfig ctrl = cfg.controller;
    ctrl.sample_period = T;
    if (mode == FeedbackMode::off) {
        ctrl.kv = {};
        ctrl.ki = {};
    } else if (mode == FeedbackMode::voltage) {
        ctrl.ki = {};
    }

    // initial conditions: regulated output a notch below the reference, the
    // motor already at commanded speed
    PlantState plant;
    plant.v_C = 0.95 * ctrl.v_ref;
    plant.i_L = ctrl.nominal_inductor_current;
    double beta;
    if (const auto* m = std::get_if<SixStepBldcLoad>(&cfg.load)) {
        plant.motor.omega_m = cfg.observer.fixed_rpm * 2.0 * std::numbers::pi / 60.0;
        plant.motor.i_phase = std::max(
            (ctrl.v_ref - m->torque_constant * plant.motor.omega_m) / (2.0 * m->r_phase), 0.0);
    }
    if (cfg.observer.speed_source == SpeedSource::motor_state) {
        const double rpm0 = plant.motor.omega_m * 60.0 / (2.0 * std::numbers::pi);
        beta = beta_from_speed(rpm0, cfg.observer.pole_pairs,
                               cfg.observer.pulses_per_electrical_cycle);
    } else {
        beta = beta_from_speed(cfg.observer.fixed_rpm, cfg.observer.pole_pairs,
                               cfg.observer.pulses_per_electrical_cycle);
    }

    ObserverConfig obs_cfg = design_observer(beta, T, cfg.observer.rho);
    detail::GaussianNoise noise(cfg.sim.seed);

    Measurement meas = instantaneous_output(cfg.plant, cfg.load, plant);
    double y_v = meas.v_dc + noise.next(cfg.sim.noise_stddev_v);
    double y_i = meas.i_L + noise.next(cfg.sim.noise_stddev_i);
    ObserverState zv = initial_observer_state(y_v);
    ObserverState zi = initial_observer_state(y_i);
    ControllerState ctrl_state;

    const auto n_samples = static_cast<std::size_t>(std::llround(cfg.sim.duration * cfg.plant.f_pwm));

    SimResult result;
    Trace& trace = result.trace;
    trace.sample_period = T;
    trace.names = {"t", "v_dc", "i_L", "duty"};
    for (int i = 1; i <= 7; ++i) {
        trace.names.push_back("zv" + std::to_string(i));
    }
    for (int i = 1; i <= 7; ++i) {
        trace.names.push_back("zi" + std::to_string(i));
    }
    trace.names.push_back("i_load");
    trace.names.push_back("beta");
    trace.columns.assign(trace.names.size(), {});
    for (auto& col : trace.columns) {
        col.reserve(n_samples);
    }

    double last_retune = 0.0;
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double t = static_cast<double>(k) * T;

        if (cfg.observer.speed_source == SpeedSource::motor_state && k > 0 &&
            t - last_retune >= 0.01 - 0.5 * T) {
            last_retune = t;
            const double rpm = plant.motor.omega_m * 60.0 / (2.0 * std::numbers::pi);
            if (rpm > 1.0) {
                const double beta_new =
                    beta_from_speed(rpm, cfg.observer.pole_pairs,
                                    cfg.observer.pulses_per_electrical_cycle);
                const bool aliasing_ok = 3.0 * beta_new * T < std::numbers::pi;
                if (aliasing_ok && std::abs(beta_new - beta) > 1e-9 * beta) {
                    beta = beta_new;
                    obs_cfg = retune(obs_cfg, beta);
                }
            }
        }

        zv = observer_step_decomposed(obs_cfg, zv, y_v);
        zi = observer_step_decomposed(obs_cfg, zi, y_i);
        const double duty = compute_duty(ctrl, ctrl_state, y_i, y_v, zv.z, zi.z, t);

        trace.columns[0].push_back(t);
        trace.columns[1].push_back(meas.v_dc);
        trace.columns[2].push_back(meas.i_L);
        trace.columns[3].push_back(duty);
        for (int i = 0; i < 7; ++i) {
            trace.columns[4 + i].push_back(zv.z[i]);
        }
        for (int i = 0; i < 7; ++i) {
            trace.columns[11 + i].push_back(zi.z[i]);
        }
        trace.columns[18].push_back(load_current(cfg.load, t, meas.v_dc, plant.motor));
        trace.columns[19].push_back(beta);

        auto [next_state, next_meas] = sample_step(cfg.plant, cfg.load, plant, duty);
        plant = next_state;
        meas = next_meas;
        if (!std::isfinite(meas.v_dc) || !std::isfinite(meas.i_L) ||
            meas.v_dc > 5.0 * ctrl.v_ref) {
            result.diverged = true;
            break;
        }
        y_v = meas.v_dc + noise.next(cfg.sim.noise_stddev_v);
        y_i = meas.i_L + noise.next(cfg.sim.noise_stddev_i);
    }

    result.final_beta = beta;
    const auto& tcol = trace.columns[0];
    if (!tcol.empty()) {
        const double t_end = tcol.back() + T;
        result.steady_window = {0.6 * t_end, t_end};
        const auto& v = trace.columns[1];
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < tcol.size(); ++i) {
            if (tcol[i] >= result.steady_window.t_begin) {
                sum += v[i];
                ++count;
            }
        }
        result.mean_v_dc = count ? sum / static_cast<double>(count) : 0.0;
    }
    return result;
}

}  // namespace ripplekit
