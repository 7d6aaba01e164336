#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ripplekit {

/**
 * @brief Uniformly sampled simulation trace: a time column plus named data
 *        columns, all the same length.
 */
struct Trace {
    double sample_period = 0.0;
    std::vector<std::string> names;             ///< names[0] must be "t"
    std::vector<std::vector<double>> columns;   ///< columns[0] is time

    [[nodiscard]] std::size_t size() const { return columns.empty() ? 0 : columns[0].size(); }

    [[nodiscard]] const std::vector<double>& column(std::string_view name) const {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) {
                return columns[i];
            }
        }
        throw std::invalid_argument("Trace: unknown column '" + std::string(name) + "'");
    }

    [[nodiscard]] bool has_column(std::string_view name) const {
        for (const auto& n : names) {
            if (n == name) {
                return true;
            }
        }
        return false;
    }

    /// Checks strictly increasing time with constant spacing.
    void validate_uniform() const {
        const auto& t = column("t");
        if (t.size() < 2) {
            return;
        }
        const double tol = 1e-9 * sample_period + 1e-12;
        for (std::size_t i = 1; i < t.size(); ++i) {
            if (std::abs((t[i] - t[i - 1]) - sample_period) > tol) {
                throw std::invalid_argument("Trace: non-uniform sampling");
            }
        }
    }
};

/// Half-open measurement window [t_begin, t_end) in trace time.
struct Window {
    double t_begin = 0.0;
    double t_end = 0.0;
};

enum class RippleMode { raw, lowpass };

struct RippleMetrics {
    double p2p_raw = 0.0;
    double p2p_lowpass = 0.0;
    std::array<double, 3> harmonic_mags{};  ///< magnitudes at n·beta, n = 1..3
    double switching_mag = 0.0;             ///< magnitude of the sample-rate alternation band
    Window window{};
    std::optional<double> reduction_vs_baseline;
};

namespace detail {

struct IndexRange {
    std::size_t first = 0;
    std::size_t last = 0;  // exclusive
    [[nodiscard]] std::size_t count() const { return last - first; }
};

[[nodiscard]] inline IndexRange window_indices(const Trace& trace, const Window& w) {
    const auto& t = trace.column("t");
    if (t.empty()) {
        throw std::invalid_argument("window: empty trace");
    }
    if (!(w.t_end > w.t_begin)) {
        throw std::invalid_argument("window: end must exceed begin");
    }
    IndexRange r;
    r.first = static_cast<std::size_t>(
        std::distance(t.begin(), std::lower_bound(t.begin(), t.end(), w.t_begin - 1e-12)));
    r.last = static_cast<std::size_t>(
        std::distance(t.begin(), std::lower_bound(t.begin(), t.end(), w.t_end - 1e-12)));
    if (r.first >= r.last) {
        throw std::invalid_argument("window: no samples inside window");
    }
    return r;
}

}  // namespace detail

/**
 * @brief Max minus min over the window. In lowpass mode a zero-phase
 *        [1/4, 1/2, 1/4] kernel is applied first; at the control rate used
 *        here (one sample per PWM period) that exactly nulls the
 *        sample-rate alternation that represents the switching band.
 *
 * @param fundamental_hz when positive, the window must span at least three
 *        fundamental periods.
 */
[[nodiscard]] inline double peak_to_peak(const Trace& trace, std::string_view column,
                                         const Window& w, RippleMode mode,
                                         double fundamental_hz = 0.0) {
    const auto r = detail::window_indices(trace, w);
    if (fundamental_hz > 0.0 &&
        (w.t_end - w.t_begin) < 3.0 / fundamental_hz - 1e-12) {
        throw std::invalid_argument("peak_to_peak: window shorter than three fundamental periods");
    }
    const auto& x = trace.column(column);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    if (mode == RippleMode::raw) {
        for (std::size_t i = r.first; i < r.last; ++i) {
            lo = std::min(lo, x[i]);
            hi = std::max(hi, x[i]);
        }
    } else {
        if (r.count() < 3) {
            throw std::invalid_argument("peak_to_peak: window too short for lowpass mode");
        }
        for (std::size_t i = r.first + 1; i + 1 < r.last; ++i) {
            const double v = 0.25 * x[i - 1] + 0.5 * x[i] + 0.25 * x[i + 1];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    return hi - lo;
}

/**
 * @brief Single-frequency correlation magnitude 2/N·|sum x[k]·e^(-i2πf·kT)|,
 *        with the window truncated to a whole number of cycles of f.
 *        Requires at least five cycles inside the window.
 */
[[nodiscard]] inline double spectral_mag(const Trace& trace, std::string_view column, double freq_hz,
                                         const Window& w) {
    if (!(freq_hz > 0.0)) {
        throw std::invalid_argument("spectral_mag: frequency must be positive");
    }
    const auto r = detail::window_indices(trace, w);
    const double dt = trace.sample_period;
    const double span = static_cast<double>(r.count()) * dt;
    const double cycles = std::floor(span * freq_hz * (1.0 + 1e-12));
    if (cycles < 5.0) {
        throw std::invalid_argument("spectral_mag: window spans fewer than five cycles");
    }
    std::size_t n = static_cast<std::size_t>(std::llround(cycles / (freq_hz * dt)));
    n = std::min(n, r.count());
    const auto& x = trace.column(column);
    const double omega = 2.0 * std::numbers::pi * freq_hz * dt;
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += x[r.first + k] * std::polar(1.0, -omega * static_cast<double>(k));
    }
    return 2.0 * std::abs(acc) / static_cast<double>(n);
}

/// Full metric set for one column: both peak-to-peak modes, the three
/// harmonic magnitudes at the fundamental, and the switching-band magnitude
/// (evaluated at half the sample rate, where an 18 kHz square component
/// lands after synchronous sampling).
[[nodiscard]] inline RippleMetrics measure_ripple(const Trace& trace, std::string_view column,
                                                  const Window& w, double beta) {
    RippleMetrics m;
    m.window = w;
    const double f1 = beta / (2.0 * std::numbers::pi);
    m.p2p_raw = peak_to_peak(trace, column, w, RippleMode::raw, f1);
    m.p2p_lowpass = peak_to_peak(trace, column, w, RippleMode::lowpass, f1);
    for (int n = 1; n <= 3; ++n) {
        m.harmonic_mags[n - 1] = spectral_mag(trace, column, n * f1, w);
    }
    m.switching_mag = spectral_mag(trace, column, 0.5 / trace.sample_period, w);
    return m;
}

[[nodiscard]] inline nlohmann::json metrics_to_json(std::string_view column,
                                                    const RippleMetrics& m, double beta) {
    nlohmann::json harmonics = nlohmann::json::array();
    for (int n = 1; n <= 3; ++n) {
        harmonics.push_back({{"n", n},
                             {"freq_hz", n * beta / (2.0 * std::numbers::pi)},
                             {"magnitude", m.harmonic_mags[n - 1]}});
    }
    nlohmann::json j{{"column", std::string(column)},
                     {"window", {m.window.t_begin, m.window.t_end}},
                     {"p2p_raw", m.p2p_raw},
                     {"p2p_lowpass", m.p2p_lowpass},
                     {"harmonics", harmonics},
                     {"switching_mag", m.switching_mag}};
    if (m.reduction_vs_baseline) {
        j["reduction_vs_baseline"] = *m.reduction_vs_baseline;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Closed-form design calculators
// ---------------------------------------------------------------------------

/// Minimum output capacitance for a target output ripple:
/// C = I_out_max·D / (f_s·dV_out).
[[nodiscard]] inline double min_output_capacitance(double i_out_max, double duty, double f_s,
                                                   double dv_out) {
    if (!(i_out_max > 0.0) || !(duty > 0.0) || !(f_s > 0.0) || !(dv_out > 0.0) || !(duty < 1.0)) {
        throw std::invalid_argument("min_output_capacitance: inputs must be positive, duty < 1");
    }
    return i_out_max * duty / (f_s * dv_out);
}

/// Additional output ripple contributed by the capacitor ESR:
/// ESR·(I_out_max/(1-D) + dI_L/2).
[[nodiscard]] inline double esr_ripple(double esr, double i_out_max, double duty, double di_L) {
    if (!(duty < 1.0)) {
        throw std::invalid_argument("esr_ripple: duty must be below 1");
    }
    return esr * (i_out_max / (1.0 - duty) + di_L / 2.0);
}

/// Rule-of-thumb inductor ripple band: (0.2 .. 0.4)·I_out_max·V_out/V_in.
[[nodiscard]] inline std::pair<double, double> inductor_ripple_estimate(double i_out_max,
                                                                        double v_out, double v_in) {
    if (!(i_out_max > 0.0) || !(v_out > 0.0) || !(v_in > 0.0)) {
        throw std::invalid_argument("inductor_ripple_estimate: inputs must be positive");
    }
    const double r = i_out_max * v_out / v_in;
    return {0.2 * r, 0.4 * r};
}

/// Per-cycle inductor current ripple: V_in·D/(f_s·L).
[[nodiscard]] inline double inductor_ripple_max(double v_in, double duty, double f_s, double l) {
    if (!(v_in > 0.0) || !(f_s > 0.0) || !(l > 0.0) || duty < 0.0) {
        throw std::invalid_argument("inductor_ripple_max: inputs must be positive");
    }
    return v_in * duty / (f_s * l);
}

/// Fractional improvement (before - after) / before.
[[nodiscard]] inline double reduction_ratio(double before, double after) {
    if (!(before > 0.0)) {
        throw std::invalid_argument("reduction_ratio: 'before' must be positive");
    }
    return (before - after) / before;
}

}  // namespace ripplekit
