#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>

namespace ripplekit {

/**
 * @brief Fixed-size, stack-allocated real matrix, row-major storage.
 *
 * Only the operations needed by the harmonic-model / observer design path
 * are provided; this is deliberately not a general linear-algebra library.
 */
template <std::size_t Rows, std::size_t Cols>
struct Matrix {
    std::array<double, Rows * Cols> entries{};

    static constexpr std::size_t rows() { return Rows; }
    static constexpr std::size_t cols() { return Cols; }

    constexpr double& operator()(std::size_t r, std::size_t c) { return entries[r * Cols + c]; }
    constexpr double operator()(std::size_t r, std::size_t c) const { return entries[r * Cols + c]; }

    // Vector-style element access for single-column / single-row matrices.
    constexpr double& operator[](std::size_t i)
        requires(Cols == 1 || Rows == 1)
    {
        return entries[i];
    }
    constexpr double operator[](std::size_t i) const
        requires(Cols == 1 || Rows == 1)
    {
        return entries[i];
    }

    [[nodiscard]] static constexpr Matrix identity()
        requires(Rows == Cols)
    {
        Matrix m{};
        for (std::size_t i = 0; i < Rows; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    [[nodiscard]] bool is_finite() const {
        for (double v : entries) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] constexpr Matrix<Cols, Rows> transpose() const {
        Matrix<Cols, Rows> out{};
        for (std::size_t r = 0; r < Rows; ++r) {
            for (std::size_t c = 0; c < Cols; ++c) {
                out(c, r) = (*this)(r, c);
            }
        }
        return out;
    }

    /// Maximum absolute row sum.
    [[nodiscard]] double infinity_norm() const {
        double norm = 0.0;
        for (std::size_t r = 0; r < Rows; ++r) {
            double row_sum = 0.0;
            for (std::size_t c = 0; c < Cols; ++c) {
                row_sum += std::abs((*this)(r, c));
            }
            norm = std::max(norm, row_sum);
        }
        return norm;
    }

    [[nodiscard]] double trace() const
        requires(Rows == Cols)
    {
        double sum = 0.0;
        for (std::size_t i = 0; i < Rows; ++i) {
            sum += (*this)(i, i);
        }
        return sum;
    }

    constexpr Matrix& operator+=(const Matrix& rhs) {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            entries[i] += rhs.entries[i];
        }
        return *this;
    }

    constexpr Matrix& operator-=(const Matrix& rhs) {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            entries[i] -= rhs.entries[i];
        }
        return *this;
    }

    constexpr Matrix& operator*=(double s) {
        for (double& v : entries) {
            v *= s;
        }
        return *this;
    }

    [[nodiscard]] constexpr Matrix operator+(const Matrix& rhs) const {
        Matrix out = *this;
        out += rhs;
        return out;
    }

    [[nodiscard]] constexpr Matrix operator-(const Matrix& rhs) const {
        Matrix out = *this;
        out -= rhs;
        return out;
    }

    [[nodiscard]] constexpr Matrix operator-() const {
        Matrix out = *this;
        out *= -1.0;
        return out;
    }

    template <std::size_t P>
    [[nodiscard]] constexpr Matrix<Rows, P> operator*(const Matrix<Cols, P>& rhs) const {
        Matrix<Rows, P> out{};
        for (std::size_t r = 0; r < Rows; ++r) {
            for (std::size_t k = 0; k < Cols; ++k) {
                const double a = (*this)(r, k);
                if (a == 0.0) {
                    continue;
                }
                for (std::size_t c = 0; c < P; ++c) {
                    out(r, c) += a * rhs(k, c);
                }
            }
        }
        return out;
    }

    [[nodiscard]] constexpr bool operator==(const Matrix& rhs) const { return entries == rhs.entries; }
};

template <std::size_t R, std::size_t C>
[[nodiscard]] constexpr Matrix<R, C> operator*(double s, const Matrix<R, C>& m) {
    Matrix<R, C> out = m;
    out *= s;
    return out;
}

template <std::size_t R, std::size_t C>
[[nodiscard]] constexpr Matrix<R, C> operator*(const Matrix<R, C>& m, double s) {
    return s * m;
}

template <std::size_t N>
using Vec = Matrix<N, 1>;

template <std::size_t N>
using RowVec = Matrix<1, N>;

template <std::size_t N>
[[nodiscard]] constexpr double dot(const RowVec<N>& a, const Vec<N>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

/**
 * @brief Monic real polynomial of fixed degree, coefficients in descending
 *        powers: coeffs[0]·z^N + coeffs[1]·z^(N-1) + ... + coeffs[N], with
 *        coeffs[0] == 1.
 */
template <std::size_t Degree>
struct Poly {
    std::array<double, Degree + 1> coeffs{};

    static constexpr std::size_t degree() { return Degree; }

    [[nodiscard]] std::complex<double> evaluate(std::complex<double> z) const {
        std::complex<double> acc = coeffs[0];
        for (std::size_t i = 1; i <= Degree; ++i) {
            acc = acc * z + coeffs[i];
        }
        return acc;
    }

    [[nodiscard]] double evaluate(double x) const {
        double acc = coeffs[0];
        for (std::size_t i = 1; i <= Degree; ++i) {
            acc = acc * x + coeffs[i];
        }
        return acc;
    }
};

/**
 * @brief Matrix exponential e^(A·t) by scaling-and-squaring with a truncated
 *        Taylor series.
 *
 * The argument is halved until its infinity norm is at most 0.5, the series
 * is summed until the next term drops below 1e-16 relative to the running
 * result, then the result is squared back up.
 */
template <std::size_t N>
[[nodiscard]] Matrix<N, N> mat_exp(const Matrix<N, N>& a, double t) {
    if (!a.is_finite() || !std::isfinite(t)) {
        throw std::invalid_argument("mat_exp: non-finite input");
    }

    int squarings = 0;
    double scaled_norm = a.infinity_norm() * std::abs(t);
    while (scaled_norm > 0.5) {
        scaled_norm *= 0.5;
        ++squarings;
    }

    const Matrix<N, N> b = a * (t / std::ldexp(1.0, squarings));

    Matrix<N, N> result = Matrix<N, N>::identity();
    Matrix<N, N> term = Matrix<N, N>::identity();
    for (int k = 1; k <= 40; ++k) {
        term = term * b;
        term *= 1.0 / k;
        result += term;
        if (term.infinity_norm() < 1e-16 * std::max(1.0, result.infinity_norm())) {
            break;
        }
    }

    for (int i = 0; i < squarings; ++i) {
        result = result * result;
    }
    return result;
}

/**
 * @brief Monic characteristic polynomial det(zI - A) by the
 *        Faddeev-LeVerrier recurrence.
 */
template <std::size_t N>
[[nodiscard]] Poly<N> char_poly(const Matrix<N, N>& a) {
    static_assert(N >= 1 && N <= 16, "char_poly supports orders 1..16");
    if (!a.is_finite()) {
        throw std::invalid_argument("char_poly: non-finite input");
    }

    Poly<N> p;
    p.coeffs[0] = 1.0;
    Matrix<N, N> m = a;
    p.coeffs[1] = -m.trace();
    for (std::size_t k = 2; k <= N; ++k) {
        m = a * (m + p.coeffs[k - 1] * Matrix<N, N>::identity());
        p.coeffs[k] = -m.trace() / static_cast<double>(k);
    }
    return p;
}

/// Solves A·x = b by Gaussian elimination with partial pivoting.
template <std::size_t N>
[[nodiscard]] Vec<N> solve_linear(Matrix<N, N> a, Vec<N> b) {
    double scale = a.infinity_norm();
    if (scale == 0.0) {
        scale = 1.0;
    }
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < N; ++r) {
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) {
                pivot = r;
            }
        }
        if (std::abs(a(pivot, col)) < 1e-12 * scale) {
            throw std::domain_error("solve_linear: singular system");
        }
        if (pivot != col) {
            for (std::size_t c = col; c < N; ++c) {
                std::swap(a(col, c), a(pivot, c));
            }
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < N; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) {
                continue;
            }
            for (std::size_t c = col; c < N; ++c) {
                a(r, c) -= f * a(col, c);
            }
            b[r] -= f * b[col];
        }
    }
    Vec<N> x{};
    for (std::size_t ri = N; ri-- > 0;) {
        double sum = b[ri];
        for (std::size_t c = ri + 1; c < N; ++c) {
            sum -= a(ri, c) * x[c];
        }
        x[ri] = sum / a(ri, ri);
    }
    return x;
}

/// Expands prod (z - root_i) into a monic polynomial. The roots must be
/// closed under conjugation, which is equivalent to the coefficients being
/// real; imaginary residue beyond round-off rejects the input.
template <std::size_t N>
[[nodiscard]] Poly<N> poly_from_roots(const std::array<std::complex<double>, N>& roots) {
    std::array<std::complex<double>, N + 1> c{};
    c[0] = 1.0;
    for (std::size_t k = 0; k < N; ++k) {
        for (std::size_t i = k + 1; i-- > 0;) {
            c[i + 1] -= roots[k] * c[i];
        }
    }
    double max_mag = 0.0;
    for (const auto& v : c) {
        max_mag = std::max(max_mag, std::abs(v.real()));
    }
    Poly<N> p;
    for (std::size_t i = 0; i <= N; ++i) {
        if (std::abs(c[i].imag()) > 1e-9 * (1.0 + max_mag)) {
            throw std::invalid_argument("poly_from_roots: roots not closed under conjugation");
        }
        p.coeffs[i] = c[i].real();
    }
    return p;
}

/**
 * @brief Observer gain placement for a single-output pair (A, G).
 *
 * Returns L such that the eigenvalues of A - L·G sit at the given targets,
 * computed as the dual of single-input Ackermann placement:
 *     L = p(A) · O^{-1} · e_n
 * with p the desired monic polynomial and O the observability stack
 * [G; GA; ...; GA^(n-1)]. Observability is established by the elimination
 * pivots of the solve against O (rank n required). For an observable
 * single-output pair the gain is unique.
 *
 * @throws std::invalid_argument if the targets are not conjugate-closed
 * @throws std::domain_error if (A, G) is not observable
 */
template <std::size_t N>
[[nodiscard]] Vec<N> place_observer_gain(const Matrix<N, N>& a, const RowVec<N>& g,
                                         const std::array<std::complex<double>, N>& targets) {
    const Poly<N> p = poly_from_roots(targets);

    Matrix<N, N> obs{};
    RowVec<N> row = g;
    for (std::size_t r = 0; r < N; ++r) {
        for (std::size_t c = 0; c < N; ++c) {
            obs(r, c) = row[c];
        }
        row = row * a;
    }

    Vec<N> e_n{};
    e_n[N - 1] = 1.0;
    Vec<N> w;
    try {
        w = solve_linear(obs, e_n);
    } catch (const std::domain_error&) {
        throw std::domain_error("place_observer_gain: pair (A, G) is not observable");
    }

    // p(A)·w by Horner on the vector.
    Vec<N> v = w;
    for (std::size_t k = 1; k <= N; ++k) {
        v = a * v + p.coeffs[k] * w;
    }
    return v;
}

}  // namespace ripplekit
