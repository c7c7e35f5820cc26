#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace fba {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// 1/phi = (sqrt(5)-1)/2, the golden-section contraction ratio.
inline const double kGoldenRatioInv = (std::sqrt(5.0) - 1.0) / 2.0;

// Neumaier-compensated accumulator. The sliding-window sums in the FR
// estimator run for millions of updates; plain doubles drift past the
// 1e-9 relative equivalence budget, compensation keeps them exact-ish.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
    void reset() { sum = 0.0; comp = 0.0; }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Packed symmetric matrix, row-major upper triangle.
// N=3 -> 6 values, N=4 -> 10 values. Entries are kept in extended
// precision: the 4-column modulation Gram is ill-conditioned enough near
// the low search edge that a double-rounded inverse cannot multiply back
// to identity within the 1e-10 cache budget.
template <std::size_t N>
struct SymMat {
    static constexpr std::size_t kPacked = N * (N + 1) / 2;
    std::array<long double, kPacked> p{};

    static constexpr std::size_t idx(std::size_t i, std::size_t j) {
        if (i > j) std::swap(i, j);
        return i * N - i * (i - 1) / 2 + (j - i);
    }
    long double operator()(std::size_t i, std::size_t j) const { return p[idx(i, j)]; }
    void set(std::size_t i, std::size_t j, long double v) { p[idx(i, j)] = v; }

    std::array<double, N> apply(const std::array<double, N>& x) const {
        std::array<double, N> y{};
        for (std::size_t i = 0; i < N; ++i) {
            long double s = 0.0L;
            for (std::size_t j = 0; j < N; ++j) s += (*this)(i, j) * x[j];
            y[i] = static_cast<double>(s);
        }
        return y;
    }
};

namespace detail {

#if defined(__SIZEOF_FLOAT128__)
using quad = __float128;
#else
using quad = long double;
#endif

// Newton square root; the long-double seed leaves ~2 iterations to reach
// working precision.
inline quad quad_sqrt(quad a) {
    long double seed = std::sqrt(static_cast<long double>(a));
    quad x = seed > 0.0L ? static_cast<quad>(seed) : static_cast<quad>(1);
    for (int i = 0; i < 3; ++i) x = (x + a / x) / 2;
    return x;
}

} // namespace detail

// Inverse of a small SPD matrix via equilibrated quad-precision Cholesky.
// The 4-column modulation Gram is near-singular at the low end of the
// search range (sin column almost collinear with the time column), with a
// condition number beyond what long double can invert to the 1e-10 cache
// identity budget.
template <std::size_t N>
SymMat<N> sym_inverse_spd(const SymMat<N>& a) {
    using detail::quad;
    quad d[N];
    for (std::size_t i = 0; i < N; ++i) {
        quad v = a(i, i);
        if (!(v > 0)) throw std::runtime_error("sym_inverse_spd: non-positive diagonal");
        d[i] = 1 / detail::quad_sqrt(v);
    }
    quad m[N][N];
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) m[i][j] = static_cast<quad>(a(i, j)) * d[i] * d[j];

    quad chol[N][N] = {};
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            quad s = m[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= chol[i][k] * chol[j][k];
            if (i == j) {
                if (!(s > 0)) throw std::runtime_error("sym_inverse_spd: matrix not positive definite");
                chol[i][i] = detail::quad_sqrt(s);
            } else {
                chol[i][j] = s / chol[j][j];
            }
        }
    }
    // Solve M X = I column by column, then undo the scaling:
    // inv(A) = D * inv(M) * D.
    SymMat<N> inv;
    for (std::size_t c = 0; c < N; ++c) {
        quad y[N];
        for (std::size_t i = 0; i < N; ++i) {
            quad s = (i == c) ? 1 : 0;
            for (std::size_t k = 0; k < i; ++k) s -= chol[i][k] * y[k];
            y[i] = s / chol[i][i];
        }
        quad x[N];
        for (std::size_t ii = N; ii-- > 0;) {
            quad s = y[ii];
            for (std::size_t k = ii + 1; k < N; ++k) s -= chol[k][ii] * x[k];
            x[ii] = s / chol[ii][ii];
        }
        for (std::size_t i = 0; i <= c; ++i)
            inv.set(i, c, static_cast<long double>(x[i] * d[i] * d[c]));
    }
    return inv;
}

template <std::size_t N>
std::array<double, N> solve_spd(const SymMat<N>& a, const std::array<double, N>& rhs) {
    return sym_inverse_spd(a).apply(rhs);
}

// Max-abs entry of (A * Ainv - I); used as the cache-quality certificate.
// Accumulated in long double so the check is not limited by the size of
// the inverse's own entries.
template <std::size_t N>
double identity_error(const SymMat<N>& a, const SymMat<N>& ainv) {
    double worst = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            long double s = 0.0L;
            for (std::size_t k = 0; k < N; ++k) s += a(i, k) * ainv(k, j);
            double e = std::abs(static_cast<double>(s - (i == j ? 1.0L : 0.0L)));
            worst = std::max(worst, e);
        }
    }
    return worst;
}

inline bool nearly_equal(double a, double b, double rel, double abs_tol = 0.0) {
    double d = std::abs(a - b);
    return d <= abs_tol + rel * std::max(std::abs(a), std::abs(b));
}

} // namespace fba
