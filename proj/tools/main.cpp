// Command-line front end: observer design, closed-loop simulation, trace
// analysis, ripple calculators, and gain tuning.

#include <complex>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ripplekit/analysis.hpp"
#include "ripplekit/observer.hpp"
#include "ripplekit/scenario.hpp"
#include "ripplekit/trace_io.hpp"
#include "ripplekit/tuner.hpp"

namespace {

using nlohmann::json;

void write_json_file(const json& j, const std::string& path) {
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    f << j.dump(2) << '\n';
}

ripplekit::ScenarioConfig load_scenario(const std::string& config_path, bool preset) {
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) {
            throw std::runtime_error("cannot open config file: " + config_path);
        }
        json j = json::parse(f);
        return ripplekit::scenario_from_json(j);
    }
    if (preset) {
        return ripplekit::paper_default_scenario();
    }
    throw std::runtime_error("either --config or --preset paper-default is required");
}

int cmd_design_observer(double freq_hz, double sample_rate, double rho, const std::string& out) {
    const double beta = 2.0 * std::numbers::pi * freq_hz;
    const double T = 1.0 / sample_rate;
    const auto cfg = ripplekit::design_observer(beta, T, rho);

    // residuals of the placed characteristic polynomial at each target root
    const auto closed = cfg.transition - cfg.gain * cfg.output;
    const auto poly = ripplekit::char_poly(closed);
    double max_residual = 0.0;
    for (int n = -3; n <= 3; ++n) {
        const std::complex<double> target = rho * std::polar(1.0, n * beta * T);
        max_residual = std::max(max_residual, std::abs(poly.evaluate(target)));
    }

    json sd = json::array();
    for (std::size_t r = 0; r < 7; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < 7; ++c) {
            row.push_back(cfg.transition(r, c));
        }
        sd.push_back(row);
    }
    json ld = json::array();
    for (std::size_t i = 0; i < 7; ++i) {
        ld.push_back(cfg.gain[i]);
    }
    json j{{"beta", beta},         {"T", T},           {"rho", rho},
           {"S_d", sd},            {"L_d", ld},        {"placed_root_residual", max_residual}};
    std::cout << j.dump(2) << '\n';
    if (!out.empty()) {
        write_json_file(j, out);
    }
    return 0;
}

ripplekit::FeedbackMode parse_feedback(const std::string& s) {
    if (s == "off") {
        return ripplekit::FeedbackMode::off;
    }
    if (s == "voltage") {
        return ripplekit::FeedbackMode::voltage;
    }
    if (s == "voltage+current") {
        return ripplekit::FeedbackMode::voltage_and_current;
    }
    throw std::runtime_error("feedback must be off, voltage, or voltage+current");
}

int cmd_simulate(const std::string& config_path, bool preset, const std::string& feedback,
                 std::string trace_path, std::string metrics_path, double duration_override) {
    ripplekit::ScenarioConfig cfg = load_scenario(config_path, preset);
    if (duration_override > 0.0) {
        cfg.sim.duration = duration_override;
    }
    if (trace_path.empty()) {
        trace_path = cfg.outputs.trace_path.empty() ? "trace.csv" : cfg.outputs.trace_path;
    }
    if (metrics_path.empty()) {
        metrics_path = cfg.outputs.metrics_path;
    }

    const auto mode = parse_feedback(feedback);
    const auto result = ripplekit::run_scenario(cfg, mode);
    ripplekit::write_trace_csv(result.trace, trace_path);

    json summary{{"trace", trace_path},
                 {"samples", result.trace.size()},
                 {"mean_v_dc", result.mean_v_dc},
                 {"steady_window", {result.steady_window.t_begin, result.steady_window.t_end}},
                 {"beta", result.final_beta},
                 {"diverged", result.diverged}};
    if (!result.diverged && result.trace.size() > 2) {
        const auto mv = ripplekit::measure_ripple(result.trace, "v_dc", result.steady_window,
                                                  result.final_beta);
        const auto mi = ripplekit::measure_ripple(result.trace, "i_L", result.steady_window,
                                                  result.final_beta);
        summary["v_dc_metrics"] = ripplekit::metrics_to_json("v_dc", mv, result.final_beta);
        summary["i_L_metrics"] = ripplekit::metrics_to_json("i_L", mi, result.final_beta);
        if (!metrics_path.empty()) {
            write_json_file(summary, metrics_path);
        }
    }
    std::cout << summary.dump(2) << '\n';
    if (result.diverged) {
        std::cerr << "error: simulation diverged; partial trace written to " << trace_path << '\n';
        return 2;
    }
    return 0;
}

int cmd_analyze(const std::string& trace_path, const std::string& column,
                const std::string& window_spec, double fundamental_hz,
                const std::string& baseline_path, const std::string& out) {
    const ripplekit::Trace trace = ripplekit::read_trace_csv(trace_path);
    const auto& t = trace.column("t");

    ripplekit::Window window{t.front(), t.back() + trace.sample_period};
    if (!window_spec.empty()) {
        const auto colon = window_spec.find(':');
        if (colon == std::string::npos) {
            throw std::runtime_error("window must be given as begin:end seconds");
        }
        window.t_begin = std::stod(window_spec.substr(0, colon));
        window.t_end = std::stod(window_spec.substr(colon + 1));
    } else {
        // default: the last 40% of the trace (steady state)
        window.t_begin = window.t_end - 0.4 * (window.t_end - t.front());
    }

    const double beta = 2.0 * std::numbers::pi * fundamental_hz;
    auto metrics = ripplekit::measure_ripple(trace, column, window, beta);
    if (!baseline_path.empty()) {
        const ripplekit::Trace base = ripplekit::read_trace_csv(baseline_path);
        const auto& bt = base.column("t");
        ripplekit::Window bw{bt.back() + base.sample_period -
                                 0.4 * (bt.back() + base.sample_period - bt.front()),
                             bt.back() + base.sample_period};
        const auto base_metrics = ripplekit::measure_ripple(base, column, bw, beta);
        metrics.reduction_vs_baseline =
            ripplekit::reduction_ratio(base_metrics.p2p_lowpass, metrics.p2p_lowpass);
    }
    const json j = ripplekit::metrics_to_json(column, metrics, beta);
    std::cout << j.dump(2) << '\n';
    if (!out.empty()) {
        write_json_file(j, out);
    }
    return 0;
}

int cmd_calc_ripple(double vin, double vout, double iout, double duty, double fs, double l,
                    double c, double esr, double dv, const std::string& out) {
    const double c_min = ripplekit::min_output_capacitance(iout, duty, fs, dv);
    const double di_max = ripplekit::inductor_ripple_max(vin, duty, fs, l);
    const auto [di_lo, di_hi] = ripplekit::inductor_ripple_estimate(iout, vout, vin);
    const double dv_esr = ripplekit::esr_ripple(esr, iout, duty, di_max);

    // cross-check the per-cycle inductor ripple against an open-loop run of
    // the switching model at the same duty
    ripplekit::BoostParams p;
    p.v_in = vin;
    p.inductance = l;
    p.capacitance = c;
    p.esr = 0.0;
    p.r_on = 0.0;
    p.f_pwm = fs;
    p.substeps_per_period = 32;
    ripplekit::LoadModel load = ripplekit::ConstantCurrentLoad{iout};
    ripplekit::PlantState st;
    st.v_C = vin / (1.0 - duty);
    st.i_L = iout / (1.0 - duty);
    ripplekit::Measurement meas{};
    for (int k = 0; k < 400; ++k) {
        auto [next, m] = ripplekit::sample_step(p, load, st, duty);
        st = next;
        meas = m;
    }
    const double di_sim = meas.i_L_max - meas.i_L_min;
    const double sim_error = std::abs(di_sim - di_max) / di_max;

    json j{{"c_out_min", c_min},
           {"dv_esr", dv_esr},
           {"di_est", {di_lo, di_hi}},
           {"di_max", di_max},
           {"di_max_simulated", di_sim},
           {"di_max_sim_agreement", sim_error <= 0.05}};
    std::cout << j.dump(2) << '\n';
    if (!out.empty()) {
        write_json_file(j, out);
    }
    return sim_error <= 0.05 ? 0 : 3;
}

int cmd_tune(const std::string& config_path, bool preset, const std::string& target_name,
             double duration_override, int grid_points, int passes, const std::string& out) {
    ripplekit::TuneSpec spec;
    spec.scenario = load_scenario(config_path, preset);
    if (duration_override > 0.0) {
        spec.scenario.sim.duration = duration_override;
    }
    spec.grid_points = grid_points;
    spec.passes = passes;
    if (target_name == "voltage") {
        spec.target = ripplekit::TuneTarget::voltage;
    } else if (target_name == "current") {
        spec.target = ripplekit::TuneTarget::current;
    } else {
        throw std::runtime_error("target must be voltage or current");
    }

    const auto result = ripplekit::coordinate_search(spec);
    const json j = ripplekit::tune_result_to_json(spec, result);
    std::cout << j.dump(2) << '\n';
    if (!out.empty()) {
        write_json_file(j, out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boost-converter ripple reduction toolkit: harmonic-observer design, switching "
                 "simulation, ripple analysis, and feedback-gain tuning"};
    app.require_subcommand(1);

    // design-observer
    double freq_hz = 400.0;
    double sample_rate = 18000.0;
    double rho = 0.99;
    std::string design_out;
    auto* design = app.add_subcommand("design-observer",
                                      "Design the 7-state harmonic observer and print S_d, L_d");
    design->add_option("--freq", freq_hz, "ripple fundamental [Hz]")->required();
    design->add_option("--sample-rate", sample_rate, "sampling frequency [Hz]")->required();
    design->add_option("--rho", rho, "pole scaling factor in (0,1)")->required();
    design->add_option("--out", design_out, "write the design JSON to this path");

    // simulate
    std::string sim_config;
    std::string sim_preset;
    std::string feedback = "off";
    std::string trace_path;
    std::string metrics_path;
    double sim_duration = 0.0;
    auto* simulate = app.add_subcommand("simulate", "Run one closed-loop scenario, write the trace CSV");
    simulate->add_option("--config", sim_config, "scenario JSON path");
    simulate->add_option("--preset", sim_preset, "built-in scenario name (paper-default)")
        ->check(CLI::IsMember({"paper-default"}));
    simulate->add_option("--feedback", feedback, "off | voltage | voltage+current")
        ->default_val("off");
    simulate->add_option("--trace", trace_path, "trace CSV output path");
    simulate->add_option("--metrics", metrics_path, "metrics JSON output path");
    simulate->add_option("--duration", sim_duration, "override simulation duration [s]")
        ->check(CLI::PositiveNumber);

    // analyze
    std::string an_trace;
    std::string an_column = "v_dc";
    std::string an_window;
    double an_fundamental = 400.0;
    std::string an_baseline;
    std::string an_out;
    auto* analyze = app.add_subcommand("analyze", "Ripple metrics for one column of a trace CSV");
    analyze->add_option("--trace", an_trace, "trace CSV path")->required();
    analyze->add_option("--column", an_column, "column name (v_dc, i_L, duty, ...)");
    analyze->add_option("--window", an_window, "measurement window begin:end [s]");
    analyze->add_option("--fundamental", an_fundamental, "ripple fundamental [Hz]");
    analyze->add_option("--baseline", an_baseline, "baseline trace CSV for the reduction ratio");
    analyze->add_option("--out", an_out, "write the metrics JSON to this path");

    // calc-ripple
    double vin = 13.9, vout = 24.0, iout = 2.65, duty = 0.55, fs = 18000.0;
    double l_val = 0.00033, c_val = 470e-6, esr = 0.1, dv = 0.24;
    std::string calc_out;
    auto* calc = app.add_subcommand("calc-ripple", "Closed-form capacitor/inductor ripple design values");
    calc->add_option("--vin", vin, "input voltage [V]");
    calc->add_option("--vout", vout, "output voltage [V]");
    calc->add_option("--iout", iout, "maximum output current [A]");
    calc->add_option("--duty", duty, "duty cycle");
    calc->add_option("--fs", fs, "switching frequency [Hz]");
    calc->add_option("--L", l_val, "inductance [H]");
    calc->add_option("--C", c_val, "output capacitance [F]");
    calc->add_option("--esr", esr, "capacitor ESR [ohm]");
    calc->add_option("--dv", dv, "desired output ripple [V]");
    calc->add_option("--out", calc_out, "write the report JSON to this path");

    // tune
    std::string tune_config;
    std::string tune_preset;
    std::string target = "voltage";
    double tune_duration = 0.0;
    int grid_points = 21;
    int passes = 2;
    std::string tune_out;
    auto* tune = app.add_subcommand("tune", "Coordinate search over the harmonic feedback gains");
    tune->add_option("--config", tune_config, "scenario JSON path");
    tune->add_option("--preset", tune_preset, "built-in scenario name (paper-default)")
        ->check(CLI::IsMember({"paper-default"}));
    tune->add_option("--target", target, "voltage | current")->default_val("voltage");
    tune->add_option("--duration", tune_duration, "override simulation duration [s]")
        ->check(CLI::PositiveNumber);
    tune->add_option("--grid-points", grid_points, "grid points per 1-D sweep");
    tune->add_option("--passes", passes, "number of sweep passes");
    tune->add_option("--out", tune_out, "write the tuned-gains JSON to this path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (design->parsed()) {
            return cmd_design_observer(freq_hz, sample_rate, rho, design_out);
        }
        if (simulate->parsed()) {
            return cmd_simulate(sim_config, sim_preset == "paper-default", feedback, trace_path,
                                metrics_path, sim_duration);
        }
        if (analyze->parsed()) {
            return cmd_analyze(an_trace, an_column, an_window, an_fundamental, an_baseline, an_out);
        }
        if (calc->parsed()) {
            return cmd_calc_ripple(vin, vout, iout, duty, fs, l_val, c_val, esr, dv, calc_out);
        }
        if (tune->parsed()) {
            return cmd_tune(tune_config, tune_preset == "paper-default", target, tune_duration,
                            grid_points, passes, tune_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
