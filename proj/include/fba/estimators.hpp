#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fba/numeric.hpp"

namespace fba {

// ---------------------------------------------------------------------------
// Golden-section candidate lattice.
//
// With the contraction ratio r = 1/phi and r^2 = 1 - r, every interval
// endpoint and interior point reachable from [0,1] lies on the integer
// lattice m + n*r. Enumerating exactly over (m, n) makes candidate identity
// a lattice-key comparison instead of a floating tolerance.
// ---------------------------------------------------------------------------

struct GoldenPoint {
    long long m = 0, n = 0; // value = m + n*r
    friend GoldenPoint operator-(GoldenPoint a, GoldenPoint b) { return {a.m - b.m, a.n - b.n}; }
    friend GoldenPoint operator+(GoldenPoint a, GoldenPoint b) { return {a.m + b.m, a.n + b.n}; }
    GoldenPoint times_r() const { return {n, m - n}; } // (m + n r) r = n + (m - n) r
    double value() const { return static_cast<double>(m) + static_cast<double>(n) * kGoldenRatioInv; }
    friend bool operator<(GoldenPoint a, GoldenPoint b) {
        return a.m != b.m ? a.m < b.m : a.n < b.n;
    }
    friend bool operator==(GoldenPoint a, GoldenPoint b) { return a.m == b.m && a.n == b.n; }
};

struct GoldenInterval {
    GoldenPoint a, b;
    GoldenPoint lower_interior() const { return b - (b - a).times_r(); } // b - (b-a)r
    GoldenPoint upper_interior() const { return a + (b - a).times_r(); } // a + (b-a)r
};

// The candidate table for a GSS run: every frequency the search can ever
// evaluate for a fixed range and iteration count. "Iterations" counts
// evaluation rounds: round one fits the two interior points (and the range
// endpoints); each later round contracts once and fits one fresh interior.
// The per-round interior slots number exactly 2^iterations; several slots
// coincide on the lattice and share storage.
class GssCandidates {
  public:
    struct Entry {
        GoldenPoint p;
        double freq_hz = 0.0;
        std::size_t kernel = 0; // storage group (shared for near-identical)
    };

    GssCandidates(double f_lo_hz, double f_hi_hz, int iterations = 5,
                  double share_tol_hz = 0.07e-3)
        : f_lo_(f_lo_hz), f_hi_(f_hi_hz), iterations_(iterations) {
        if (!(f_lo_hz < f_hi_hz)) throw std::invalid_argument("GssCandidates: need f_lo < f_hi");
        if (iterations < 1) throw std::invalid_argument("GssCandidates: iterations must be >= 1");

        GoldenInterval root{{0, 0}, {1, 0}};
        std::map<GoldenPoint, std::size_t> uniq;
        auto note = [&](GoldenPoint p, bool slot) {
            uniq.emplace(p, uniq.size());
            if (slot) ++nominal_slots_;
        };
        note(root.a, false);
        note(root.b, false);
        note(root.lower_interior(), true);
        note(root.upper_interior(), true);
        std::vector<GoldenInterval> level{root};
        for (int k = 1; k < iterations; ++k) {
            std::vector<GoldenInterval> next;
            next.reserve(level.size() * 2);
            for (const auto& iv : level) {
                GoldenInterval left{iv.a, iv.upper_interior()};
                GoldenInterval right{iv.lower_interior(), iv.b};
                // Each child evaluates exactly one fresh interior; the other
                // is inherited from the parent.
                note(left.lower_interior(), true);
                note(right.upper_interior(), true);
                next.push_back(left);
                next.push_back(right);
            }
            level = std::move(next);
        }

        entries_.resize(uniq.size());
        for (const auto& [p, idx] : uniq)
            entries_[idx] = Entry{p, f_lo_ + (f_hi_ - f_lo_) * p.value(), 0};
        for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].p, i);

        // Assign shared-storage kernels: sort by frequency, group within tol.
        std::vector<std::size_t> order(entries_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return entries_[x].freq_hz < entries_[y].freq_hz;
        });
        double group_start = -1e300;
        for (std::size_t oi = 0; oi < order.size(); ++oi) {
            double f = entries_[order[oi]].freq_hz;
            if (f - group_start > share_tol_hz) {
                group_start = f;
                kernel_freqs_.push_back(f);
            }
            entries_[order[oi]].kernel = kernel_freqs_.size() - 1;
        }
    }

    // Nominal per-round interior evaluation slots (2^iterations).
    std::size_t nominal_slot_count() const { return nominal_slots_; }
    // Distinct stored kernels (shared-storage groups).
    std::size_t kernel_count() const { return kernel_freqs_.size(); }
    const std::vector<double>& kernel_freqs() const { return kernel_freqs_; }
    const std::vector<Entry>& entries() const { return entries_; }
    int iterations() const { return iterations_; }
    double f_lo() const { return f_lo_; }
    double f_hi() const { return f_hi_; }

    std::size_t index_of(GoldenPoint p) const {
        auto it = index_.find(p);
        if (it == index_.end())
            throw std::logic_error("GssCandidates: point not in candidate table");
        return it->second;
    }

  private:
    double f_lo_, f_hi_;
    int iterations_;
    std::size_t nominal_slots_ = 0;
    std::vector<Entry> entries_;
    std::map<GoldenPoint, std::size_t> index_;
    std::vector<double> kernel_freqs_;
};

// ---------------------------------------------------------------------------
// Basis cache: per stored kernel, the sin/cos columns over the window and
// the packed symmetric Gram inverses (6 values for the 3-parameter fit, 10
// for the 4-parameter one), plus the shared time column.
// ---------------------------------------------------------------------------

struct KernelBasis {
    double freq_hz = 0.0;
    std::vector<double> sin_col;
    std::vector<double> cos_col;
    SymMat<3> am_gram;
    SymMat<3> am_gram_inv;
    SymMat<4> pm_gram;
    SymMat<4> pm_gram_inv;
    double am_identity_err = 0.0;
    double pm_identity_err = 0.0;
};

class BasisCache {
  public:
    BasisCache(const GssCandidates& cands, std::size_t window_len, double ts_s)
        : cands_(&cands), len_(window_len), ts_(ts_s) {
        t_col_.resize(len_);
        for (std::size_t l = 0; l < len_; ++l) t_col_[l] = static_cast<double>(l) * ts_;
        kernels_.reserve(cands.kernel_count());
        for (double f : cands.kernel_freqs()) kernels_.push_back(build_kernel(f));
    }

    const KernelBasis& kernel_for_entry(std::size_t entry_idx) const {
        return kernels_[cands_->entries()[entry_idx].kernel];
    }
    const KernelBasis& kernel(std::size_t k) const { return kernels_[k]; }
    std::size_t kernel_count() const { return kernels_.size(); }
    const std::vector<double>& t_col() const { return t_col_; }
    std::size_t window_len() const { return len_; }
    double ts() const { return ts_; }
    const GssCandidates& candidates() const { return *cands_; }

  private:
    KernelBasis build_kernel(double f) const {
        KernelBasis k;
        k.freq_hz = f;
        k.sin_col.resize(len_);
        k.cos_col.resize(len_);
        for (std::size_t l = 0; l < len_; ++l) {
            double w = kTwoPi * f * t_col_[l];
            k.sin_col[l] = std::sin(w);
            k.cos_col[l] = std::cos(w);
        }
        // Gram matrices accumulated in long double over the actual columns.
        auto lsum = [&](const std::vector<double>& a, const std::vector<double>& b) {
            long double s = 0.0L;
            for (std::size_t l = 0; l < len_; ++l) s += (long double)a[l] * (long double)b[l];
            return static_cast<double>(s);
        };
        std::vector<double> ones(len_, 1.0);
        const std::vector<double>* am_cols[3] = {&ones, &k.sin_col, &k.cos_col};
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = i; j < 3; ++j)
                k.am_gram.set(i, j, lsum(*am_cols[i], *am_cols[j]));
        const std::vector<double>* pm_cols[4] = {&ones, &t_col_, &k.sin_col, &k.cos_col};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i; j < 4; ++j)
                k.pm_gram.set(i, j, lsum(*pm_cols[i], *pm_cols[j]));
        k.am_gram_inv = sym_inverse_spd(k.am_gram);
        k.pm_gram_inv = sym_inverse_spd(k.pm_gram);
        k.am_identity_err = identity_error(k.am_gram, k.am_gram_inv);
        k.pm_identity_err = identity_error(k.pm_gram, k.pm_gram_inv);
        return k;
    }

    const GssCandidates* cands_;
    std::size_t len_;
    double ts_;
    std::vector<double> t_col_;
    std::vector<KernelBasis> kernels_;
};

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

struct AmFit {
    double f_am_hz = 0.0;
    std::array<double, 3> gamma{}; // offset, sin, cos coefficients
    double residual = 0.0;         // sum of squared reconstruction error
    bool feasible = false;
    double certificate = 0.0;      // ||D^T(D g - x)|| / ||D^T x||

    double a0() const { return gamma[0]; }
    double depth() const { return std::sqrt(gamma[1] * gamma[1] + gamma[2] * gamma[2]) / gamma[0]; }
    double phase() const { return std::atan2(gamma[2], gamma[1]); }
};

struct PmFit {
    double f_pm_hz = 0.0;
    std::array<double, 4> nu{}; // offset, slope, sin, cos
    double residual = 0.0;
    bool feasible = false;
    double certificate = 0.0;

    double phi0() const { return nu[0]; }
    double f0_hz() const { return nu[1] / kTwoPi; }
    double depth_rad() const { return std::sqrt(nu[2] * nu[2] + nu[3] * nu[3]); }
    double phase() const { return std::atan2(nu[3], nu[2]); }
};

struct FrFit {
    std::array<double, 3> beta{}; // phi0, 2*pi*f0, pi*R
    double residual = 0.0;
    double certificate = 0.0;

    double phi0() const { return beta[0]; }
    double f0_hz() const { return beta[1] / kTwoPi; }
    double rate_hz_per_s() const { return beta[2] / kPi; }
    double freq_at(double tau_s) const { return (beta[1] + 2.0 * beta[2] * tau_s) / kTwoPi; }
};

namespace detail {

inline double norm3(const std::array<double, 3>& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}
inline double norm4(const std::array<double, 4>& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
}

} // namespace detail

// 3-parameter envelope fit at a fixed modulation frequency.
inline AmFit am_ls_fit(std::span<const double> x, const KernelBasis& k, double feas_max_depth = 0.5) {
    const std::size_t n = x.size();
    if (n < 3 || n != k.sin_col.size())
        throw std::invalid_argument("am_ls_fit: window/basis size mismatch");
    std::array<double, 3> rhs{0.0, 0.0, 0.0};
    for (std::size_t l = 0; l < n; ++l) {
        rhs[0] += x[l];
        rhs[1] += x[l] * k.sin_col[l];
        rhs[2] += x[l] * k.cos_col[l];
    }
    AmFit fit;
    fit.f_am_hz = k.freq_hz;
    fit.gamma = k.am_gram_inv.apply(rhs);

    std::array<double, 3> grad{0.0, 0.0, 0.0};
    double sse = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        double r = fit.gamma[0] + fit.gamma[1] * k.sin_col[l] + fit.gamma[2] * k.cos_col[l] - x[l];
        sse += r * r;
        grad[0] += r;
        grad[1] += r * k.sin_col[l];
        grad[2] += r * k.cos_col[l];
    }
    fit.residual = sse;
    double denom = detail::norm3(rhs);
    fit.certificate = denom > 0.0 ? detail::norm3(grad) / denom : 0.0;
    fit.feasible = fit.gamma[0] > 0.0 && fit.depth() <= feas_max_depth;
    return fit;
}

// 4-parameter argument fit at a fixed modulation frequency.
inline PmFit pm_ls_fit(std::span<const double> x, const KernelBasis& k,
                       std::span<const double> t_col, double feas_max_depth = kPi / 2.0) {
    const std::size_t n = x.size();
    if (n < 4 || n != k.sin_col.size())
        throw std::invalid_argument("pm_ls_fit: window/basis size mismatch");
    std::array<double, 4> rhs{0.0, 0.0, 0.0, 0.0};
    for (std::size_t l = 0; l < n; ++l) {
        rhs[0] += x[l];
        rhs[1] += x[l] * t_col[l];
        rhs[2] += x[l] * k.sin_col[l];
        rhs[3] += x[l] * k.cos_col[l];
    }
    PmFit fit;
    fit.f_pm_hz = k.freq_hz;
    fit.nu = k.pm_gram_inv.apply(rhs);

    std::array<double, 4> grad{0.0, 0.0, 0.0, 0.0};
    double sse = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        double r = fit.nu[0] + fit.nu[1] * t_col[l] + fit.nu[2] * k.sin_col[l] +
                   fit.nu[3] * k.cos_col[l] - x[l];
        sse += r * r;
        grad[0] += r;
        grad[1] += r * t_col[l];
        grad[2] += r * k.sin_col[l];
        grad[3] += r * k.cos_col[l];
    }
    fit.residual = sse;
    double denom = detail::norm4(rhs);
    fit.certificate = denom > 0.0 ? detail::norm4(grad) / denom : 0.0;
    fit.feasible = fit.depth_rad() <= feas_max_depth;
    return fit;
}

// ---------------------------------------------------------------------------
// Golden-section search over the candidate lattice.
//
// The objective fits one candidate frequency and reports (residual,
// feasible). Round one evaluates the endpoints and both interiors; each of
// the remaining rounds contracts once and evaluates the fresh interior.
// Contraction follows the smaller feasible residual; if the smaller one is
// infeasible the search contracts toward the feasible interior, and if both
// interiors are infeasible it stops. The best feasible evaluated frequency
// wins - never an unevaluated midpoint.
// ---------------------------------------------------------------------------

struct GssOutcome {
    bool found = false;
    std::size_t entry_idx = 0; // into GssCandidates::entries()
    double freq_hz = 0.0;
    double residual = 0.0;
    std::size_t evaluations = 0;
};

template <typename Objective>
GssOutcome gss(const GssCandidates& cands, Objective&& evaluate) {
    struct Eval {
        double rho = 0.0;
        bool feasible = false;
    };
    std::map<std::size_t, Eval> memo;
    GssOutcome out;
    auto eval_at = [&](GoldenPoint p) -> Eval {
        std::size_t idx = cands.index_of(p);
        auto it = memo.find(idx);
        if (it != memo.end()) return it->second;
        auto [rho, feasible] = evaluate(idx, cands.entries()[idx].freq_hz);
        Eval e{rho, feasible};
        memo.emplace(idx, e);
        ++out.evaluations;
        if (feasible && (!out.found || rho < out.residual)) {
            out.found = true;
            out.entry_idx = idx;
            out.freq_hz = cands.entries()[idx].freq_hz;
            out.residual = rho;
        }
        return e;
    };

    GoldenInterval iv{{0, 0}, {1, 0}};
    eval_at(iv.a);
    eval_at(iv.b);
    for (int round = 1; round <= cands.iterations(); ++round) {
        GoldenPoint c = iv.lower_interior();
        GoldenPoint d = iv.upper_interior();
        Eval ec = eval_at(c);
        Eval ed = eval_at(d);
        if (round == cands.iterations()) break; // final round only evaluates
        if (!ec.feasible && !ed.feasible) break;
        bool go_left; // keep [a, d] (low side) vs [c, b] (high side)
        if (ec.feasible && ed.feasible)
            go_left = ec.rho < ed.rho;
        else
            go_left = ed.feasible ? false : true; // contract toward the feasible interior
        if (go_left)
            iv = GoldenInterval{iv.a, d};
        else
            iv = GoldenInterval{c, iv.b};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Recursive frequency-ramp accumulators (sliding weighted sums).
// s_lambda = sum_{l=0..L-1} l^lambda * x(window[l]), newest at l = L-1.
// ---------------------------------------------------------------------------

struct WrapCorrections {
    double m0, m1, m2;
};

// Correction terms for one cleared wrap: 2*pi*sum_{l=0}^{L-2} l^lambda.
inline WrapCorrections wrap_corrections(std::size_t window_len) {
    double ld = static_cast<double>(window_len);
    return {kTwoPi * (ld - 1.0),
            kPi * (ld - 2.0) * (ld - 1.0),
            kPi * (ld - 2.0) * (ld - 1.0) * (2.0 * ld - 3.0) / 3.0};
}

class FrAccumulator {
  public:
    FrAccumulator(std::size_t window_len, double ts_s) : len_(window_len), ts_(ts_s) {
        if (window_len < 3) throw std::invalid_argument("FrAccumulator: window must be >= 3");
    }

    // Slide in the newest (virtually unwrapped) sample; `outgoing` must be
    // the value the departing sample carried when it entered (zero during
    // the fill phase).
    void push(double newest, double outgoing) {
        double lm1 = static_cast<double>(len_ - 1);
        double s0p = s0_.value(), s1p = s1_.value();
        s2_.add(-2.0 * s1p);
        s2_.add(s0p);
        s2_.add(newest * lm1 * lm1);
        s2_.add(-outgoing);
        s1_.add(-s0p);
        s1_.add(newest * lm1);
        s1_.add(outgoing);
        s0_.add(newest);
        s0_.add(-outgoing);
        if (fill_ < len_) ++fill_;
    }

    // Applied when a recorded wrap index leaves the window: shifts every
    // sample except the newest by -2*pi (sign < 0 undoes a forward wrap).
    void apply_wrap_correction(double sign = 1.0) {
        auto m = wrap_corrections(len_);
        s0_.add(-sign * m.m0);
        s1_.add(-sign * m.m1);
        s2_.add(-sign * m.m2);
    }

    bool ready() const { return fill_ >= len_; }
    double s0() const { return s0_.value(); }
    double s1() const { return s1_.value(); }
    double s2() const { return s2_.value(); }
    std::size_t window_len() const { return len_; }
    double ts() const { return ts_; }

  private:
    std::size_t len_;
    double ts_;
    std::size_t fill_ = 0;
    CompensatedSum s0_, s1_, s2_;
};

// Gram matrix of the quadratic basis {1, t, t^2} on l*Ts, l = 0..L-1,
// entries from exact power-sum closed forms.
inline SymMat<3> fr_gram(std::size_t window_len, double ts_s) {
    long double L = static_cast<long double>(window_len);
    long double S1 = L * (L - 1.0L) / 2.0L;
    long double S2 = L * (L - 1.0L) * (2.0L * L - 1.0L) / 6.0L;
    long double S3 = S1 * S1;
    long double S4 = L * (L - 1.0L) * (2.0L * L - 1.0L) * (3.0L * L * L - 3.0L * L - 1.0L) / 30.0L;
    long double T = ts_s;
    SymMat<3> g;
    g.set(0, 0, static_cast<double>(L));
    g.set(0, 1, static_cast<double>(T * S1));
    g.set(0, 2, static_cast<double>(T * T * S2));
    g.set(1, 1, static_cast<double>(T * T * S2));
    g.set(1, 2, static_cast<double>(T * T * T * S3));
    g.set(2, 2, static_cast<double>(T * T * T * T * S4));
    return g;
}

struct FrGramCache {
    std::size_t window_len;
    double ts_s;
    SymMat<3> gram;
    SymMat<3> gram_inv;
    double identity_err;

    FrGramCache(std::size_t l, double ts)
        : window_len(l), ts_s(ts), gram(fr_gram(l, ts)), gram_inv(sym_inverse_spd(gram)),
          identity_err(identity_error(gram, gram_inv)) {}
};

// beta from the accumulator state; residual and certificate from the window.
inline FrFit fr_fit(const FrAccumulator& acc, const FrGramCache& cache,
                    std::span<const double> window) {
    if (!acc.ready()) throw std::runtime_error("fr_fit: accumulator not ready");
    if (cache.window_len != acc.window_len())
        throw std::invalid_argument("fr_fit: cache window mismatch");
    double ts = cache.ts_s;
    std::array<double, 3> rhs{acc.s0(), ts * acc.s1(), ts * ts * acc.s2()};
    FrFit fit;
    fit.beta = cache.gram_inv.apply(rhs);
    std::array<double, 3> grad{0.0, 0.0, 0.0};
    double sse = 0.0;
    for (std::size_t l = 0; l < window.size(); ++l) {
        double t = static_cast<double>(l) * ts;
        double r = fit.beta[0] + fit.beta[1] * t + fit.beta[2] * t * t - window[l];
        sse += r * r;
        grad[0] += r;
        grad[1] += r * t;
        grad[2] += r * t * t;
    }
    fit.residual = sse;
    double denom = detail::norm3(rhs);
    fit.certificate = denom > 0.0 ? detail::norm3(grad) / denom : 0.0;
    return fit;
}

// One-shot quadratic fit with the time axis anchored at `t_origin` relative
// to the window start. Used for post-step refits on partial windows.
inline FrFit fr_fit_direct(std::span<const double> x, double ts_s, double t_origin = 0.0) {
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("fr_fit_direct: need >= 3 samples");
    SymMat<3> gram;
    std::array<long double, 5> s{};
    std::array<long double, 3> b{};
    for (std::size_t l = 0; l < n; ++l) {
        long double t = t_origin + static_cast<long double>(l) * ts_s;
        long double t2 = t * t;
        s[0] += 1.0L; s[1] += t; s[2] += t2; s[3] += t * t2; s[4] += t2 * t2;
        b[0] += x[l]; b[1] += t * x[l]; b[2] += t2 * x[l];
    }
    gram.set(0, 0, (double)s[0]); gram.set(0, 1, (double)s[1]); gram.set(0, 2, (double)s[2]);
    gram.set(1, 1, (double)s[2]); gram.set(1, 2, (double)s[3]); gram.set(2, 2, (double)s[4]);
    FrFit fit;
    std::array<double, 3> rhs{(double)b[0], (double)b[1], (double)b[2]};
    fit.beta = solve_spd(gram, rhs);
    std::array<double, 3> grad{0.0, 0.0, 0.0};
    double sse = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        double t = t_origin + static_cast<double>(l) * ts_s;
        double r = fit.beta[0] + fit.beta[1] * t + fit.beta[2] * t * t - x[l];
        sse += r * r;
        grad[0] += r; grad[1] += r * t; grad[2] += r * t * t;
    }
    fit.residual = sse;
    double denom = detail::norm3(rhs);
    fit.certificate = denom > 0.0 ? detail::norm3(grad) / denom : 0.0;
    return fit;
}

// Single-parameter Cramer-Rao bounds for the quadratic-phase model with
// white Gaussian argument noise (each coefficient with the others known).
struct CrlbFr {
    double beta0, beta1, beta2;
};

inline CrlbFr crlb_fr(std::size_t window_len, double ts_s, double sigma_rad) {
    if (sigma_rad == 0.0) return {0.0, 0.0, 0.0};
    double L = static_cast<double>(window_len);
    double s2 = sigma_rad * sigma_rad;
    double t2 = ts_s * ts_s;
    return {s2 / L,
            6.0 * s2 / (t2 * L * (L - 1.0) * (2.0 * L - 1.0)),
            30.0 * s2 / (t2 * t2 * L * (L - 1.0) * (2.0 * L - 1.0) * (3.0 * L * L - 3.0 * L - 1.0))};
}

// ---------------------------------------------------------------------------
// Differential step detection (one channel).
//
// Deviation of the sample-to-sample differential from its own L-sample
// running mean; the mean telescopes to (x(t) - x(t-L))/L.
// ---------------------------------------------------------------------------

class DiffChannel {
  public:
    DiffChannel(std::size_t mean_len, double threshold)
        : mean_len_(mean_len), threshold_(threshold), hist_(mean_len + 1, 0.0) {
        if (mean_len < 1) throw std::invalid_argument("DiffChannel: mean length must be >= 1");
    }

    struct Sample {
        bool valid = false;
        double deviation = 0.0;
        bool over = false;
    };

    Sample push(double x) {
        hist_[count_ % hist_.size()] = x;
        ++count_;
        Sample s;
        if (count_ < hist_.size()) return s;
        double newest = x;
        double prev = hist_[(count_ - 2) % hist_.size()];
        double oldest = hist_[count_ % hist_.size()]; // x(t - L)
        double diff = newest - prev;
        double mean = (newest - oldest) / static_cast<double>(mean_len_);
        s.valid = true;
        s.deviation = std::abs(diff - mean);
        s.over = s.deviation > threshold_;
        return s;
    }

    double threshold() const { return threshold_; }
    std::size_t mean_len() const { return mean_len_; }

  private:
    std::size_t mean_len_;
    double threshold_;
    std::vector<double> hist_;
    std::size_t count_ = 0;
};

// Flagged interval with per-channel maxima. Indices are global sample
// indices on the channel's own timeline.
struct StepEvent {
    enum class Kind { kAmplitude, kPhase, kBoth };
    Kind kind = Kind::kAmplitude;
    std::size_t t_lb = 0;
    std::optional<std::size_t> t_ub;   // first sample of the settled run; pending until dwell met
    // Set when the flag never resolved within the monitor's patience: the
    // interval stopped extending here and the event no longer governs
    // reporting once it leaves the window.
    std::optional<std::size_t> abandoned_at;
    std::size_t t_step_amp = 0;        // argmax of amplitude-channel deviation
    std::size_t t_step_phase = 0;      // argmax of phase-channel deviation
    double max_dev_amp = 0.0;
    double max_dev_phase = 0.0;
    bool amp_triggered = false;
    bool phase_triggered = false;
    int merged_events = 1;             // >1 when a second step extended the interval
};

// Joint two-channel monitor implementing flag/argmax/dwell bookkeeping.
// t_ub is declared after both channels stay inside threshold for `dwell`
// consecutive samples, and marks the first sample of that settled run.
class StepMonitor {
  public:
    StepMonitor(std::size_t mean_len_amp, double eps_amp, std::size_t mean_len_phase,
                double eps_phase, std::size_t dwell, std::size_t patience = 0)
        : amp_(mean_len_amp, eps_amp), phase_(mean_len_phase, eps_phase), dwell_(dwell),
          patience_(patience) {}

    // Returns true if a new event was opened at this sample.
    bool push(double envelope, double argument) {
        auto sa = amp_.push(envelope);
        auto sp = phase_.push(argument);
        std::size_t now = count_++;
        if (!sa.valid || !sp.valid) return false;
        bool over = sa.over || sp.over;
        bool opened = false;
        if (active_ && patience_ > 0 && now - events_.back().t_lb >= patience_ &&
            !events_.back().t_ub) {
            // Step never settled within a full observation span: there is no
            // pre-event state left to predict from, give up on this event.
            events_.back().abandoned_at = now;
            active_ = false;
            settled_run_ = 0;
        }
        if (active_) {
            StepEvent& ev = events_.back();
            if (sa.deviation > ev.max_dev_amp) { ev.max_dev_amp = sa.deviation; ev.t_step_amp = now; }
            if (sp.deviation > ev.max_dev_phase) { ev.max_dev_phase = sp.deviation; ev.t_step_phase = now; }
            if (sa.over) ev.amp_triggered = true;
            if (sp.over) ev.phase_triggered = true;
            if (over) {
                if (settled_run_ >= 1) ev.merged_events += 1; // re-flag after quiet gap
                settled_run_ = 0;
            } else {
                ++settled_run_;
                if (settled_run_ >= dwell_) {
                    ev.t_ub = now - settled_run_ + 1;
                    ev.kind = ev.amp_triggered && ev.phase_triggered ? StepEvent::Kind::kBoth
                              : ev.amp_triggered ? StepEvent::Kind::kAmplitude
                                                 : StepEvent::Kind::kPhase;
                    active_ = false;
                    settled_run_ = 0;
                }
            }
        } else if (over) {
            StepEvent ev;
            ev.t_lb = now;
            ev.t_step_amp = now;
            ev.t_step_phase = now;
            ev.max_dev_amp = sa.deviation;
            ev.max_dev_phase = sp.deviation;
            ev.amp_triggered = sa.over;
            ev.phase_triggered = sp.over;
            events_.push_back(ev);
            active_ = true;
            settled_run_ = 0;
            opened = true;
        }
        return opened;
    }

    const std::deque<StepEvent>& events() const { return events_; }
    bool active() const { return active_; }
    std::size_t samples_seen() const { return count_; }

    // Drop events that ended well before `horizon` (global index).
    void prune_before(std::size_t horizon) {
        while (!events_.empty()) {
            const auto& f = events_.front();
            std::size_t end;
            if (f.t_ub) end = *f.t_ub;
            else if (f.abandoned_at) end = *f.abandoned_at;
            else break;
            if (end + tail_keep_ < horizon) events_.pop_front();
            else break;
        }
    }

  private:
    DiffChannel amp_;
    DiffChannel phase_;
    std::size_t dwell_;
    std::size_t patience_;
    std::size_t tail_keep_ = 4096;
    std::deque<StepEvent> events_;
    bool active_ = false;
    std::size_t settled_run_ = 0;
    std::size_t count_ = 0;
};

// Running mean of the most recent `mean_len` samples, all strictly after
// t_ub; empty until enough post-step samples exist.
inline std::optional<double> post_step_amplitude(std::span<const double> envelope,
                                                 std::size_t t_ub_idx, std::size_t mean_len) {
    if (envelope.size() < t_ub_idx + 1 + mean_len) return std::nullopt;
    double s = 0.0;
    for (std::size_t i = envelope.size() - mean_len; i < envelope.size(); ++i) s += envelope[i];
    return s / static_cast<double>(mean_len);
}

} // namespace fba
