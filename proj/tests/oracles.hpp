#pragma once

// Test-side reference implementations, independent of the library's
// computation paths: dense normal-equation solves built from scratch,
// direct summation, finite differences, and brute-force convolution.

#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

// Dense least squares via normal equations in long double with full
// Gaussian elimination (partial pivoting).
inline std::vector<double> dense_ls(const std::vector<std::vector<double>>& cols,
                                    std::span<const double> y) {
    const std::size_t p = cols.size(), n = y.size();
    std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0.0L));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            long double s = 0.0L;
            for (std::size_t l = 0; l < n; ++l) s += (long double)cols[i][l] * cols[j][l];
            a[i][j] = s;
        }
        long double s = 0.0L;
        for (std::size_t l = 0; l < n; ++l) s += (long double)cols[i][l] * y[l];
        a[i][p] = s;
    }
    for (std::size_t k = 0; k < p; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < p; ++i)
            if (std::abs((double)a[i][k]) > std::abs((double)a[piv][k])) piv = i;
        std::swap(a[k], a[piv]);
        for (std::size_t i = k + 1; i < p; ++i) {
            long double f = a[i][k] / a[k][k];
            for (std::size_t j = k; j <= p; ++j) a[i][j] -= f * a[k][j];
        }
    }
    std::vector<double> x(p);
    for (std::size_t i = p; i-- > 0;) {
        long double s = a[i][p];
        for (std::size_t j = i + 1; j < p; ++j) s -= a[i][j] * x[j];
        x[i] = (double)(s / a[i][i]);
    }
    return x;
}

// 3-parameter envelope model columns at a fixed frequency.
inline std::vector<std::vector<double>> am_columns(double f_hz, std::size_t n, double ts) {
    std::vector<std::vector<double>> cols(3, std::vector<double>(n));
    for (std::size_t l = 0; l < n; ++l) {
        double w = 2.0 * kPi * f_hz * (double)l * ts;
        cols[0][l] = 1.0;
        cols[1][l] = std::sin(w);
        cols[2][l] = std::cos(w);
    }
    return cols;
}

inline std::vector<std::vector<double>> pm_columns(double f_hz, std::size_t n, double ts) {
    std::vector<std::vector<double>> cols(4, std::vector<double>(n));
    for (std::size_t l = 0; l < n; ++l) {
        double t = (double)l * ts;
        double w = 2.0 * kPi * f_hz * t;
        cols[0][l] = 1.0;
        cols[1][l] = t;
        cols[2][l] = std::sin(w);
        cols[3][l] = std::cos(w);
    }
    return cols;
}

inline std::vector<std::vector<double>> fr_columns(std::size_t n, double ts) {
    std::vector<std::vector<double>> cols(3, std::vector<double>(n));
    for (std::size_t l = 0; l < n; ++l) {
        double t = (double)l * ts;
        cols[0][l] = 1.0;
        cols[1][l] = t;
        cols[2][l] = t * t;
    }
    return cols;
}

// Direct weighted sums over an explicitly unwrapped window.
struct DirectSums {
    long double s0 = 0, s1 = 0, s2 = 0;
};
inline DirectSums direct_sums(std::span<const double> window) {
    DirectSums d;
    for (std::size_t l = 0; l < window.size(); ++l) {
        long double v = window[l];
        d.s0 += v;
        d.s1 += (long double)l * v;
        d.s2 += (long double)l * (long double)l * v;
    }
    return d;
}

// Offline batch unwrap: cumulative 2*pi corrections at jumps beyond pi.
inline std::vector<double> batch_unwrap(std::span<const double> wrapped) {
    std::vector<double> out(wrapped.size());
    double offset = 0.0;
    for (std::size_t i = 0; i < wrapped.size(); ++i) {
        if (i > 0) {
            double d = wrapped[i] - wrapped[i - 1];
            if (d <= -kPi) offset += 2.0 * kPi;
            else if (d >= kPi) offset -= 2.0 * kPi;
        }
        out[i] = wrapped[i] + offset;
    }
    return out;
}

inline std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

// Central finite difference d/dt of a scalar function.
template <typename F>
double central_diff(F&& f, double t, double h) {
    return (f(t + h) - f(t - h)) / (2.0 * h);
}

struct MeanVar {
    double mean = 0.0, var = 0.0;
};
inline MeanVar mean_var(std::span<const double> xs) {
    MeanVar mv;
    for (double x : xs) mv.mean += x;
    mv.mean /= (double)xs.size();
    for (double x : xs) mv.var += (x - mv.mean) * (x - mv.mean);
    mv.var /= (double)(xs.size() - 1);
    return mv;
}

} // namespace oracle
