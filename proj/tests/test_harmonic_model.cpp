#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "ripplekit/harmonic_model.hpp"

using namespace ripplekit;

namespace {

double max_abs_diff_7(const Matrix<7, 7>& a, const Matrix<7, 7>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < 49; ++i) {
        m = std::max(m, std::abs(a.entries[i] - b.entries[i]));
    }
    return m;
}

HarmonicDecomposition random_decomposition(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mag(0.01, 2.0);
    std::uniform_real_distribution<double> phase(-3.1, 3.1);
    std::uniform_real_distribution<double> avg(-10.0, 30.0);
    HarmonicDecomposition h;
    h.average = avg(rng);
    h.beta = 2.0 * std::numbers::pi * 400.0;
    for (auto& harm : h.harmonics) {
        harm.magnitude = mag(rng);
        harm.phase = phase(rng);
    }
    return h;
}

}  // namespace

TEST_CASE("continuous dynamics has the block-skew layout") {
    const auto s = continuous_dynamics(1.0);
    CHECK(s(2, 1) == 1.0);
    CHECK(s(1, 2) == -1.0);
    CHECK(s(4, 3) == 2.0);
    CHECK(s(6, 5) == 3.0);

    // zero diagonal, skew-symmetric outside the first row/column
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(s(i, i) == 0.0);
        CHECK(s(0, i) == 0.0);
        CHECK(s(i, 0) == 0.0);
    }
    for (std::size_t r = 1; r < 7; ++r) {
        for (std::size_t c = 1; c < 7; ++c) {
            CHECK(s(r, c) == -s(c, r));
        }
    }
}

TEST_CASE("continuous dynamics third-harmonic entry is 3·beta") {
    const auto s = continuous_dynamics(2513.27);
    CHECK(s(6, 5) == Catch::Approx(7539.8).margin(0.1));
}

TEST_CASE("continuous dynamics rejects a non-positive fundamental") {
    CHECK_THROWS_AS(continuous_dynamics(0.0), std::invalid_argument);
    CHECK_THROWS_AS(continuous_dynamics(-5.0), std::invalid_argument);
}

TEST_CASE("output map is (1,1,0,1,0,1,0)") {
    const auto g = output_map();
    const double expected[7] = {1, 1, 0, 1, 0, 1, 0};
    int nonzero = 0;
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(g[i] == expected[i]);
        nonzero += g[i] != 0.0;
    }
    CHECK(nonzero == 4);

    Vec<7> e1{};
    e1[0] = 1.0;
    CHECK(dot(g, e1) == 1.0);
}

TEST_CASE("output map recovers the instantaneous harmonic sum") {
    HarmonicDecomposition h;
    h.average = 24.0;
    h.beta = 2.0 * std::numbers::pi * 400.0;
    h.harmonics = {{{0.2, 0.3}, {0.05, -1.1}, {0.02, 2.0}}};
    const auto x = state_from_harmonics(h);
    double expected = h.average;
    for (const auto& harm : h.harmonics) {
        expected += harm.magnitude * std::cos(harm.phase);
    }
    CHECK(dot(output_map(), x) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("discretize matches the reference 400 Hz / 18 kHz transition matrix") {
    const auto sd = discretize(2.0 * std::numbers::pi * 400.0, 1.0 / 18000.0);
    CHECK(sd(1, 1) == Catch::Approx(0.99027).margin(1e-4));
    CHECK(sd(1, 2) == Catch::Approx(-0.13918).margin(1e-4));
    CHECK(sd(2, 1) == Catch::Approx(0.13918).margin(1e-4));
    // reference tables round this entry to 0.9123; the true value is cos(3·beta·T)
    CHECK(sd(5, 5) == Catch::Approx(0.91355).margin(1e-5));
}

TEST_CASE("discretize at T = 0 is the identity") {
    CHECK(max_abs_diff_7(discretize(2513.27, 0.0), Matrix<7, 7>::identity()) == 0.0);
}

TEST_CASE("discretize rejects aliasing of the third harmonic") {
    const double beta = 2.0 * std::numbers::pi * 400.0;
    CHECK_THROWS_AS(discretize(beta, std::numbers::pi / (3.0 * beta) * 1.01),
                    std::invalid_argument);
}

TEST_CASE("discretize equals mat_exp of the continuous dynamics") {
    for (double freq : {37.0, 400.0, 913.0}) {
        const double beta = 2.0 * std::numbers::pi * freq;
        const double T = 1.0 / 18000.0;
        CHECK(max_abs_diff_7(discretize(beta, T), mat_exp(continuous_dynamics(beta), T)) < 1e-12);
    }
}

TEST_CASE("state_from_harmonics basics") {
    HarmonicDecomposition h;
    h.average = 28.0;
    h.beta = 100.0;
    const auto x = state_from_harmonics(h);
    CHECK(x[0] == 28.0);
    for (std::size_t i = 1; i < 7; ++i) {
        CHECK(x[i] == 0.0);
    }

    h.average = 0.0;
    h.harmonics[0] = {1.0, std::numbers::pi / 2.0};
    const auto x2 = state_from_harmonics(h);
    CHECK(x2[1] == Catch::Approx(0.0).margin(1e-15));
    CHECK(x2[2] == Catch::Approx(1.0));
}

TEST_CASE("harmonics_from_state basics") {
    StateVector7 x{};
    x[0] = 28.0;
    auto h = harmonics_from_state(x, 100.0);
    CHECK(h.average == 28.0);
    for (const auto& harm : h.harmonics) {
        CHECK(harm.magnitude == 0.0);
        CHECK(harm.phase == 0.0);
    }

    x[1] = 3.0;
    x[2] = 4.0;
    h = harmonics_from_state(x, 100.0);
    CHECK(h.harmonics[0].magnitude == Catch::Approx(5.0));
    CHECK(h.harmonics[0].phase == Catch::Approx(std::atan2(4.0, 3.0)).margin(1e-12));
}

TEST_CASE("round trip through state and harmonic descriptions") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const auto h = random_decomposition(rng);
        const auto x = state_from_harmonics(h);
        const auto h2 = harmonics_from_state(x, h.beta);
        CHECK(h2.average == Catch::Approx(h.average).margin(1e-12));
        for (std::size_t n = 0; n < 3; ++n) {
            CHECK(h2.harmonics[n].magnitude ==
                  Catch::Approx(h.harmonics[n].magnitude).margin(1e-12));
            CHECK(h2.harmonics[n].phase == Catch::Approx(h.harmonics[n].phase).margin(1e-12));
        }
        // and back again
        const auto x2 = state_from_harmonics(h2);
        for (std::size_t i = 0; i < 7; ++i) {
            CHECK(x2[i] == Catch::Approx(x[i]).margin(1e-12));
        }
    }
}

TEST_CASE("propagate with zero steps is the identity") {
    std::mt19937_64 rng(5);
    const auto x = state_from_harmonics(random_decomposition(rng));
    const auto sd = discretize(2.0 * std::numbers::pi * 400.0, 1.0 / 18000.0);
    CHECK(propagate(x, sd, 0) == x);
}

TEST_CASE("propagated output matches the closed-form harmonic sum") {
    std::mt19937_64 rng(31);
    const double T = 1.0 / 18000.0;
    std::uniform_int_distribution<std::uint64_t> steps(0, 500);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto h = random_decomposition(rng);
        const auto sd = discretize(h.beta, T);
        const auto x0 = state_from_harmonics(h);
        const std::uint64_t k = steps(rng);
        const auto xk = propagate(x0, sd, k);
        const double direct = evaluate_harmonics(h, static_cast<double>(k) * T);
        CHECK(dot(output_map(), xk) == Catch::Approx(direct).margin(1e-9));
    }
}

TEST_CASE("per-harmonic amplitudes are invariant under propagation") {
    std::mt19937_64 rng(12);
    const double T = 1.0 / 18000.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto h = random_decomposition(rng);
        const auto sd = discretize(h.beta, T);
        const auto x0 = state_from_harmonics(h);
        const auto xk = propagate(x0, sd, 500);
        double norm = 0.0;
        for (std::size_t i = 0; i < 7; ++i) {
            norm += x0[i] * x0[i];
        }
        norm = std::sqrt(norm);
        for (std::size_t n = 0; n < 3; ++n) {
            const double before = std::hypot(x0[2 * n + 1], x0[2 * n + 2]);
            const double after = std::hypot(xk[2 * n + 1], xk[2 * n + 2]);
            CHECK(std::abs(after - before) < 1e-9 * (1.0 + norm));
        }
    }
}

TEST_CASE("a full rotation returns the first harmonic pair to its start") {
    // beta·T divides 2*pi: 45 samples per fundamental cycle
    const double T = 1.0 / 18000.0;
    const double beta = 2.0 * std::numbers::pi * 400.0;
    const auto sd = discretize(beta, T);
    HarmonicDecomposition h;
    h.beta = beta;
    h.average = 1.0;
    h.harmonics[0] = {1.0, 0.7};
    const auto x0 = state_from_harmonics(h);
    const auto xk = propagate(x0, sd, 45);
    CHECK(xk[1] == Catch::Approx(x0[1]).margin(1e-6));
    CHECK(xk[2] == Catch::Approx(x0[2]).margin(1e-6));
}
