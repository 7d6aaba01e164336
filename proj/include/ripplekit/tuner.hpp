#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ripplekit/scenario.hpp"

namespace ripplekit {

enum class TuneTarget { voltage, current };

/**
 * @brief Coordinate-descent gain search: repeated one-dimensional sweeps
 *        over the six harmonic feedback gains, each candidate scored by a
 *        full closed-loop simulation.
 */
struct TuneSpec {
    TuneTarget target = TuneTarget::voltage;
    std::array<int, 6> gain_order = {0, 1, 2, 3, 4, 5};  ///< sweep order over z2..z7 gains
    std::array<std::pair<double, double>, 6> intervals = {
        {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}}};
    int grid_points = 21;
    int passes = 2;
    ScenarioConfig scenario;

    void validate() const {
        if (grid_points < 5) {
            throw std::invalid_argument("TuneSpec: at least 5 grid points required");
        }
        if (passes < 1) {
            throw std::invalid_argument("TuneSpec: at least one pass required");
        }
        std::array<bool, 6> seen{};
        for (int g : gain_order) {
            if (g < 0 || g > 5 || seen[g]) {
                throw std::invalid_argument("TuneSpec: gain_order must permute 0..5");
            }
            seen[g] = true;
        }
        for (const auto& [lo, hi] : intervals) {
            if (!(lo < hi)) {
                throw std::invalid_argument("TuneSpec: interval lower bound must be below upper");
            }
        }
        scenario.validate();
    }
};

struct TuneEvaluation {
    int pass = 0;
    int gain_index = 0;
    double gain_value = 0.0;
    double objective = 0.0;
};

struct TuneResult {
    std::array<double, 6> gains{};
    double objective = 0.0;
    double baseline = 0.0;
    std::vector<TuneEvaluation> evaluations;
};

/// Sentinel for runs that diverged or left the sane operating region.
inline constexpr double kInfeasibleObjective = std::numeric_limits<double>::infinity();

/**
 * @brief Scores one gain vector: runs the scenario with the candidate gains
 *        on the target loop and returns the steady-state ripple metric
 *        (lowpass peak-to-peak of v_dc for the voltage loop, raw
 *        peak-to-peak of i_L for the current loop). A diverging simulation
 *        scores infeasible instead of throwing.
 */
[[nodiscard]] inline double objective_eval(const ScenarioConfig& scenario,
                                           const std::array<double, 6>& gains, TuneTarget target) {
    ScenarioConfig cfg = scenario;
    FeedbackMode mode;
    if (target == TuneTarget::voltage) {
        cfg.controller.kv = gains;
        mode = FeedbackMode::voltage;
    } else {
        cfg.controller.ki = gains;
        mode = FeedbackMode::voltage_and_current;
    }
    try {
        const SimResult res = run_scenario(cfg, mode);
        if (res.diverged) {
            return kInfeasibleObjective;
        }
        const char* column = (target == TuneTarget::voltage) ? "v_dc" : "i_L";
        const RippleMode ripple_mode =
            (target == TuneTarget::voltage) ? RippleMode::lowpass : RippleMode::raw;
        const double fundamental = res.final_beta / (2.0 * std::numbers::pi);
        const double value =
            peak_to_peak(res.trace, column, res.steady_window, ripple_mode, fundamental);
        return std::isfinite(value) ? value : kInfeasibleObjective;
    } catch (const std::exception&) {
        return kInfeasibleObjective;
    }
}

namespace detail {

/// Evaluates all candidates, fanning out over hardware threads; results are
/// keyed by index so the outcome does not depend on scheduling.
inline std::vector<double> evaluate_batch(const std::vector<std::array<double, 6>>& candidates,
                                          const std::function<double(const std::array<double, 6>&)>& objective) {
    std::vector<double> results(candidates.size());
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(candidates.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            results[i] = objective(candidates[i]);
        }
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < candidates.size(); i = next.fetch_add(1)) {
                results[i] = objective(candidates[i]);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    return results;
}

/// Tie-break: prefer the strictly smaller objective, then the gain closest
/// to zero.
[[nodiscard]] inline bool improves(double obj, double gain, double best_obj, double best_gain) {
    if (obj < best_obj) {
        return true;
    }
    return obj == best_obj && std::abs(gain) < std::abs(best_gain);
}

}  // namespace detail

/**
 * @brief Coordinate search with an injected objective (used directly by the
 *        tests; the simulation front-end below is the production entry).
 *
 * For every pass and every gain in sweep order: evaluate the grid over the
 * gain's interval holding the others fixed, then refine around the best
 * grid point with one golden-section stage. Deterministic given the spec.
 *
 * @throws std::runtime_error if every evaluation of a sweep is infeasible
 */
[[nodiscard]] inline TuneResult coordinate_search(
    const TuneSpec& spec, const std::function<double(const std::array<double, 6>&)>& objective) {
    spec.validate();

    TuneResult result;
    result.baseline = objective(result.gains);
    double best_obj = result.baseline;

    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;

    for (int pass = 0; pass < spec.passes; ++pass) {
        for (int idx : spec.gain_order) {
            const auto [lo, hi] = spec.intervals[idx];

            std::vector<std::array<double, 6>> candidates;
            std::vector<double> values;
            for (int gp = 0; gp < spec.grid_points; ++gp) {
                const double g = lo + (hi - lo) * gp / (spec.grid_points - 1);
                auto k = result.gains;
                k[idx] = g;
                candidates.push_back(k);
                values.push_back(g);
            }
            std::vector<double> objs = detail::evaluate_batch(candidates, objective);

            double sweep_gain = result.gains[idx];
            double sweep_obj = best_obj;
            bool any_feasible = std::isfinite(best_obj);
            for (std::size_t i = 0; i < objs.size(); ++i) {
                if (std::isfinite(objs[i])) {
                    any_feasible = true;
                }
                if (detail::improves(objs[i], values[i], sweep_obj, sweep_gain)) {
                    sweep_obj = objs[i];
                    sweep_gain = values[i];
                }
                result.evaluations.push_back({pass, idx, values[i], objs[i]});
            }
            if (!any_feasible) {
                throw std::runtime_error("coordinate_search: every evaluation infeasible");
            }

            // golden-section refinement inside the bracket around the best
            // grid point
            const double step = (hi - lo) / (spec.grid_points - 1);
            double a = std::max(lo, sweep_gain - step);
            double b = std::min(hi, sweep_gain + step);
            double x1 = b - golden * (b - a);
            double x2 = a + golden * (b - a);
            auto eval_at = [&](double g) {
                auto k = result.gains;
                k[idx] = g;
                const double obj = objective(k);
                result.evaluations.push_back({pass, idx, g, obj});
                return obj;
            };
            double f1 = eval_at(x1);
            double f2 = eval_at(x2);
            for (int it = 0; it < 16; ++it) {
                if (f1 <= f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - golden * (b - a);
                    f1 = eval_at(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + golden * (b - a);
                    f2 = eval_at(x2);
                }
            }
            const double g_refined = (f1 <= f2) ? x1 : x2;
            const double f_refined = std::min(f1, f2);
            if (detail::improves(f_refined, g_refined, sweep_obj, sweep_gain)) {
                sweep_obj = f_refined;
                sweep_gain = g_refined;
            }

            result.gains[idx] = sweep_gain;
            best_obj = sweep_obj;
        }
    }
    result.objective = best_obj;
    return result;
}

/// Production entry: the objective is a full simulation of the spec's
/// scenario with the candidate gains.
[[nodiscard]] inline TuneResult coordinate_search(const TuneSpec& spec) {
    return coordinate_search(spec, [&spec](const std::array<double, 6>& k) {
        return objective_eval(spec.scenario, k, spec.target);
    });
}

[[nodiscard]] inline nlohmann::json tune_result_to_json(const TuneSpec& spec,
                                                        const TuneResult& result) {
    nlohmann::json gains;
    for (int i = 0; i < 6; ++i) {
        gains["z" + std::to_string(i + 2)] = result.gains[i];
    }
    return {{"target", spec.target == TuneTarget::voltage ? "voltage" : "current"},
            {"K", gains},
            {"objective", result.objective},
            {"baseline", result.baseline},
            {"reduction", reduction_ratio(result.baseline, result.objective)}};
}

}  // namespace ripplekit
