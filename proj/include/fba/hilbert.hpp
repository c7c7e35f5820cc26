#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fba/numeric.hpp"

namespace fba {

enum class FirParity { kTypeIII, kTypeIV }; // odd / even length, both antisymmetric

struct FirHilbertFilter {
    std::vector<double> coeffs;
    FirParity parity = FirParity::kTypeIII;
    double band_lo_rad = 0.0;   // passband [band_lo, band_hi] in rad/sample
    double band_hi_rad = 0.0;
    double delta = 0.0;         // achieved passband ripple
    int alternations = 0;       // extremal count at the optimum

    std::size_t length() const { return coeffs.size(); }
    // Integer for type III; type IV delays are half-integer.
    double group_delay() const { return (static_cast<double>(coeffs.size()) - 1.0) / 2.0; }
};

// Exact DTFT of a real coefficient sequence at one frequency.
inline std::complex<double> freq_response_at(std::span<const double> h, double omega) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t k = 0; k < h.size(); ++k)
        acc += h[k] * std::complex<double>(std::cos(omega * k), -std::sin(omega * k));
    return acc;
}

inline std::vector<std::complex<double>> freq_response(std::span<const double> h,
                                                       std::span<const double> grid_rad) {
    std::vector<std::complex<double>> out(grid_rad.size());
    for (std::size_t i = 0; i < grid_rad.size(); ++i) {
        if (grid_rad[i] <= -kPi || grid_rad[i] > kPi)
            throw std::invalid_argument("freq_response: grid point outside (-pi, pi]");
        out[i] = freq_response_at(h, grid_rad[i]);
    }
    return out;
}

// Zero-phase amplitude A(w): H(e^jw) = -j * A(w) * e^{-jwD}. Positive A in
// band means a cosine input comes out as +sin delayed by D samples. D is the
// antisymmetry axis; by default the array center, but composed cascades have
// uneven zero padding and pass their true group delay.
inline double amplitude_at(std::span<const double> h, double omega, double delay = -1.0) {
    double d = delay >= 0.0 ? delay : (static_cast<double>(h.size()) - 1.0) / 2.0;
    std::complex<double> r = freq_response_at(h, omega);
    std::complex<double> rot = r * std::complex<double>(std::cos(omega * d), std::sin(omega * d));
    return -rot.imag();
}

struct RemezError : std::runtime_error {
    double last_ripple;
    RemezError(const std::string& msg, double ripple)
        : std::runtime_error(msg), last_ripple(ripple) {}
};

namespace detail {

// Remez exchange for a single-band antisymmetric (Hilbert) design.
// Works on the transformed problem: the amplitude A(w) = q(w) * P(cos w)
// with q = sin(w) (type III) or sin(w/2) (type IV); P has `r` coefficients.
// The weighted error of the transformed problem equals 1 - A(w) exactly.
struct RemezWorkspace {
    std::vector<double> grid;   // rad/sample
    std::vector<double> des;    // transformed desired 1/q
    std::vector<double> wt;     // transformed weight q
    std::vector<double> err;
    std::vector<std::size_t> ext;
    std::vector<double> bx, by, bw; // barycentric nodes/values/weights
    double delta = 0.0;
};

inline void barycentric_setup(RemezWorkspace& ws) {
    const std::size_t m = ws.ext.size();
    ws.bx.resize(m);
    ws.bw.resize(m);
    ws.by.resize(m);
    for (std::size_t i = 0; i < m; ++i) ws.bx[i] = std::cos(ws.grid[ws.ext[i]]);
    // Stabilized product for the barycentric weights.
    std::size_t stride = (m - 2) / 15 + 1;
    for (std::size_t i = 0; i < m; ++i) {
        double denom = 1.0;
        for (std::size_t s = 0; s < stride; ++s)
            for (std::size_t k = s; k < m; k += stride)
                if (k != i) denom *= 2.0 * (ws.bx[i] - ws.bx[k]);
        ws.bw[i] = 1.0 / denom;
    }
    double num = 0.0, den = 0.0, sign = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        num += ws.bw[i] * ws.des[ws.ext[i]];
        den += sign * ws.bw[i] / ws.wt[ws.ext[i]];
        sign = -sign;
    }
    ws.delta = num / den;
    sign = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        ws.by[i] = ws.des[ws.ext[i]] - sign * ws.delta / ws.wt[ws.ext[i]];
        sign = -sign;
    }
}

inline double barycentric_eval(const RemezWorkspace& ws, double x) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ws.bx.size(); ++i) {
        double c = x - ws.bx[i];
        if (std::abs(c) < 1e-9) return ws.by[i];
        c = ws.bw[i] / c;
        den += c;
        num += c * ws.by[i];
    }
    return num / den;
}

inline bool exchange_extremals(RemezWorkspace& ws) {
    const std::size_t n = ws.grid.size();
    const std::size_t want = ws.ext.size();
    std::vector<std::size_t> found;
    found.reserve(n);
    auto is_max = [&](std::size_t i) {
        double e = ws.err[i];
        bool lo = (i == 0) || (e >= ws.err[i - 1]);
        bool hi = (i + 1 == n) || (e > ws.err[i + 1]);
        return lo && hi && e > 0.0;
    };
    auto is_min = [&](std::size_t i) {
        double e = ws.err[i];
        bool lo = (i == 0) || (e <= ws.err[i - 1]);
        bool hi = (i + 1 == n) || (e < ws.err[i + 1]);
        return lo && hi && e < 0.0;
    };
    for (std::size_t i = 0; i < n; ++i)
        if (is_max(i) || is_min(i)) found.push_back(i);
    if (found.size() < want) return false;

    // Prune to `want` alternating extremals: drop non-alternating or the
    // globally smallest until the count fits.
    while (found.size() > want) {
        bool up = ws.err[found[0]] > 0.0;
        std::size_t smallest = 0;
        bool alternating = true;
        for (std::size_t j = 1; j < found.size(); ++j) {
            if (std::abs(ws.err[found[j]]) < std::abs(ws.err[found[smallest]])) smallest = j;
            bool pos = ws.err[found[j]] > 0.0;
            if (pos == up) { alternating = false, smallest = (std::abs(ws.err[found[j]]) < std::abs(ws.err[found[j - 1]])) ? j : j - 1; break; }
            up = pos;
        }
        if (alternating && found.size() == want + 1) {
            smallest = (std::abs(ws.err[found.back()]) < std::abs(ws.err[found.front()]))
                           ? found.size() - 1 : 0;
        }
        found.erase(found.begin() + static_cast<std::ptrdiff_t>(smallest));
    }
    bool changed = !std::equal(found.begin(), found.end(), ws.ext.begin());
    ws.ext = std::move(found);
    return changed || true;
}

} // namespace detail

// Minimax antisymmetric Hilbert filter over [band_lo, band_hi] rad/sample.
// band_hi defaults to the mirrored edge pi - band_lo. Type IV designs may
// extend the band to pi; type III cannot (forced zero at Nyquist).
inline FirHilbertFilter design_equiripple(std::size_t length, double band_lo_rad,
                                          double band_hi_rad = -1.0,
                                          std::size_t grid_points = 0,
                                          std::size_t max_iterations = 64) {
    if (length < 3) throw std::invalid_argument("design_equiripple: length must be >= 3");
    if (band_hi_rad < 0.0) {
        if (!(band_lo_rad > 0.0) || band_lo_rad >= kPi / 2.0)
            throw std::invalid_argument("design_equiripple: need 0 < band_lo < pi/2");
        band_hi_rad = kPi - band_lo_rad;
    } else if (!(band_lo_rad > 0.0) || !(band_lo_rad < band_hi_rad) || band_hi_rad > kPi) {
        throw std::invalid_argument("design_equiripple: need 0 < band_lo < band_hi <= pi");
    }
    const bool odd = (length % 2) != 0;
    if (band_hi_rad > kPi || (odd && band_hi_rad >= kPi - 1e-12 && band_hi_rad > kPi - 1e-12))
        band_hi_rad = std::min(band_hi_rad, kPi);
    const std::size_t r = odd ? (length - 1) / 2 : length / 2;

    detail::RemezWorkspace ws;
    // Grid density: at least 16 points per filter tap across the band.
    std::size_t n = grid_points ? grid_points : std::max<std::size_t>(32 * length, 2048);
    double hi = band_hi_rad;
    if (odd) hi = std::min(hi, kPi * (1.0 - 1e-9)); // keep q = sin(w) nonzero
    ws.grid.resize(n);
    ws.des.resize(n);
    ws.wt.resize(n);
    ws.err.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double w = band_lo_rad + (hi - band_lo_rad) * static_cast<double>(i) / static_cast<double>(n - 1);
        double q = odd ? std::sin(w) : std::sin(w / 2.0);
        ws.grid[i] = w;
        ws.des[i] = 1.0 / q;
        ws.wt[i] = q;
    }
    ws.ext.resize(r + 1);
    for (std::size_t i = 0; i <= r; ++i) ws.ext[i] = i * (n - 1) / r;

    double last_ripple = 0.0;
    bool converged = false;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        detail::barycentric_setup(ws);
        for (std::size_t i = 0; i < n; ++i) {
            double a = detail::barycentric_eval(ws, std::cos(ws.grid[i]));
            ws.err[i] = ws.wt[i] * (ws.des[i] - a);
        }
        if (!detail::exchange_extremals(ws))
            throw RemezError("design_equiripple: lost extremals during exchange", std::abs(ws.delta));
        double emin = std::abs(ws.err[ws.ext[0]]), emax = emin;
        for (auto e : ws.ext) {
            emin = std::min(emin, std::abs(ws.err[e]));
            emax = std::max(emax, std::abs(ws.err[e]));
        }
        last_ripple = emax;
        if ((emax - emin) / emax < 1e-7) { converged = true; break; }
    }
    if (!converged)
        throw RemezError("design_equiripple: exchange did not converge", last_ripple);

    detail::barycentric_setup(ws);

    // Impulse response by frequency sampling of the final amplitude.
    const std::size_t nfft = length;
    const double m = (static_cast<double>(nfft) - 1.0) / 2.0;
    std::vector<double> amp(nfft / 2 + 1, 0.0);
    for (std::size_t k = 0; k <= nfft / 2; ++k) {
        double w = kTwoPi * static_cast<double>(k) / static_cast<double>(nfft);
        double q = odd ? std::sin(w) : std::sin(w / 2.0);
        double p = detail::barycentric_eval(ws, std::cos(w));
        amp[k] = p * q;
    }
    FirHilbertFilter f;
    f.coeffs.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
        double x = kTwoPi * (static_cast<double>(i) - m) / static_cast<double>(nfft);
        double val = 0.0;
        if (odd) {
            for (std::size_t k = 1; k <= (nfft - 1) / 2; ++k) val += 2.0 * amp[k] * std::sin(x * k);
        } else {
            val = amp[nfft / 2] * std::sin(kPi * (static_cast<double>(i) - m));
            for (std::size_t k = 1; k <= nfft / 2 - 1; ++k) val += 2.0 * amp[k] * std::sin(x * k);
        }
        f.coeffs[i] = val / static_cast<double>(nfft);
    }
    // Enforce exact antisymmetry; snap the parity-forced zero taps.
    for (std::size_t i = 0; i < length / 2; ++i) {
        double v = 0.5 * (f.coeffs[i] - f.coeffs[length - 1 - i]);
        f.coeffs[i] = v;
        f.coeffs[length - 1 - i] = -v;
    }
    if (odd) f.coeffs[(length - 1) / 2] = 0.0;
    double peak = 0.0;
    for (double c : f.coeffs) peak = std::max(peak, std::abs(c));
    for (auto& c : f.coeffs)
        if (std::abs(c) < 1e-12 * peak) c = 0.0;

    f.parity = odd ? FirParity::kTypeIII : FirParity::kTypeIV;
    f.band_lo_rad = band_lo_rad;
    f.band_hi_rad = band_hi_rad;
    f.alternations = static_cast<int>(r + 1);

    // Measured ripple on a dense verification grid; odd point count so the
    // band midpoint (a ripple extremum for symmetric bands) is sampled.
    double worst = 0.0;
    const std::size_t verify_n = 8193;
    for (std::size_t i = 0; i < verify_n; ++i) {
        double w = band_lo_rad + (band_hi_rad - band_lo_rad) * static_cast<double>(i) / (verify_n - 1);
        worst = std::max(worst, std::abs(1.0 - amplitude_at(f.coeffs, w)));
    }
    f.delta = worst;
    return f;
}

// ---------------------------------------------------------------------------
// Frequency-transformation cascade: sharp subfilter G (type III), low-ripple
// prototype P (type IV). The composed amplitude is G, reshaped through the
// prototype: A(w) = Ag(w) * Q(1 - 2*Ag(w)^2) where Q(cos u) = Ap(u)/sin(u/2).
// The subfilter is scaled by 1/(1+delta_G) so its amplitude never leaves the
// prototype's designed band image [2*asin((1-dG)/(1+dG)), pi].
// ---------------------------------------------------------------------------

struct CascadeHilbertFilter {
    FirHilbertFilter prototype;           // as designed
    FirHilbertFilter subfilter;           // scaled copy used in the cascade
    std::vector<double> composed;         // full impulse response
    std::size_t group_delay = 0;          // samples, exact
    double prototype_ripple = 0.0;        // delta_P: cascade magnitude bound
    double composition_slack = 1e-4;      // extra allowance on top of delta_P

    double band_lo_rad = 0.0;
    double band_hi_rad = 0.0;
};

inline std::size_t ft_group_delay(std::size_t lp, std::size_t lg) {
    return (lg - 1) / 2 + 1 + (lg + 1) * (lp / 2 - 1);
}

// Prototype band edge implied by a subfilter ripple delta_G.
inline double ft_prototype_band_edge(double delta_g) {
    return 2.0 * std::asin((1.0 - delta_g) / (1.0 + delta_g));
}

namespace detail {

inline std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

// Power-basis coefficients of Q (degree M-1) from M Chebyshev-node samples,
// computed through Newton divided differences in long double.
inline std::vector<double> prototype_poly(const FirHilbertFilter& p) {
    const std::size_t m = p.length() / 2;
    std::vector<long double> xs(m), ys(m);
    for (std::size_t i = 0; i < m; ++i) {
        long double x = std::cos(kPi * (2.0L * i + 1.0L) / (2.0L * m));
        long double u = std::acos((long double)x); // in (0, pi)
        double amp = amplitude_at(p.coeffs, static_cast<double>(u));
        xs[i] = x;
        ys[i] = (long double)amp / std::sin(u / 2.0L);
    }
    // Divided differences.
    std::vector<long double> dd = ys;
    for (std::size_t j = 1; j < m; ++j)
        for (std::size_t i = m; i-- > j;)
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - j]);
    // Expand Newton form to power basis.
    std::vector<long double> poly(m, 0.0L);
    std::vector<long double> basis(m, 0.0L);
    basis[0] = 1.0L;
    std::size_t blen = 1;
    poly[0] = dd[0];
    for (std::size_t j = 1; j < m; ++j) {
        // basis *= (x - xs[j-1])
        std::vector<long double> nb(blen + 1, 0.0L);
        for (std::size_t i = 0; i < blen; ++i) {
            nb[i + 1] += basis[i];
            nb[i] -= basis[i] * xs[j - 1];
        }
        blen += 1;
        std::copy(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(blen), basis.begin());
        for (std::size_t i = 0; i < blen; ++i) poly[i] += dd[j] * basis[i];
    }
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = static_cast<double>(poly[i]);
    return out;
}

} // namespace detail

inline CascadeHilbertFilter compose_ft(const FirHilbertFilter& prototype,
                                       const FirHilbertFilter& subfilter) {
    if (prototype.parity != FirParity::kTypeIV)
        throw std::invalid_argument("compose_ft: prototype must be type IV (even length)");
    if (subfilter.parity != FirParity::kTypeIII)
        throw std::invalid_argument("compose_ft: subfilter must be type III (odd length)");

    const std::size_t lg = subfilter.length();
    const std::size_t lp = prototype.length();
    const std::size_t m = lp / 2;

    CascadeHilbertFilter cf;
    cf.prototype = prototype;
    cf.subfilter = subfilter;
    double scale = 1.0 / (1.0 + subfilter.delta);
    for (auto& c : cf.subfilter.coeffs) c *= scale;

    std::vector<double> q = detail::prototype_poly(prototype);

    // Block X(z) = z^{-(Lg+1)} + 2 z^{-2} G(z)^2, amplitude 1 - 2 Ag^2 at
    // delay Lg+1. Powers of X padded with z^{-(Lg+1)} keep delays aligned.
    const std::vector<double>& g = cf.subfilter.coeffs;
    std::vector<double> g2 = detail::convolve(g, g);
    std::vector<double> x(std::max<std::size_t>(2 * lg + 1, lg + 2), 0.0);
    x[lg + 1] += 1.0;
    for (std::size_t k = 0; k < g2.size(); ++k) x[k + 2] += 2.0 * g2[k];

    std::vector<double> s{q[m - 1]};
    for (std::size_t step = 1; step < m; ++step) {
        std::size_t cm = m - 1 - step;
        s = detail::convolve(s, x);
        std::size_t at = step * (lg + 1);
        if (s.size() < at + 1) s.resize(at + 1, 0.0);
        s[at] += q[cm];
    }
    std::vector<double> h = detail::convolve(g, s);
    h.insert(h.begin(), 0.0); // the final z^{-1}

    cf.composed = std::move(h);
    cf.group_delay = ft_group_delay(lp, lg);
    cf.prototype_ripple = prototype.delta;
    cf.band_lo_rad = subfilter.band_lo_rad;
    cf.band_hi_rad = subfilter.band_hi_rad;
    return cf;
}

// Max deviation of |H| from 1 over [band_lo, band_hi] on a dense grid.
inline double measure_band_ripple(std::span<const double> h, double lo, double hi,
                                  std::size_t n = 8192) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        worst = std::max(worst, std::abs(std::abs(freq_response_at(h, w)) - 1.0));
    }
    return worst;
}

// Energy centroid of the impulse response; equals the (anti)symmetry axis
// exactly for a linear-phase filter.
inline double measure_impulse_center(std::span<const double> h) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        double e = h[k] * h[k];
        num += static_cast<double>(k) * e;
        den += e;
    }
    if (den == 0.0) throw std::invalid_argument("measure_impulse_center: all-zero response");
    return num / den;
}

// Streaming direct-form FIR. Single writer per instance; output for push n
// is sum_k h[k] x[n-k], valid once the history covers the full support.
class StreamingFir {
  public:
    explicit StreamingFir(std::vector<double> taps)
        : taps_(std::move(taps)), hist_(taps_.size(), 0.0) {}

    double push(double x) {
        hist_[pos_] = x;
        pos_ = (pos_ + 1) % hist_.size();
        ++count_;
        double acc = 0.0;
        std::size_t idx = pos_; // oldest sample
        // h reversed against history: oldest sample pairs with the last tap.
        for (std::size_t k = taps_.size(); k-- > 0;) {
            acc += taps_[k] * hist_[idx];
            idx = idx + 1 == hist_.size() ? 0 : idx + 1;
        }
        return acc;
    }

    bool warmed_up() const { return count_ >= taps_.size(); }
    std::size_t pushes() const { return count_; }
    std::size_t warm_up_len() const { return taps_.size(); }

  private:
    std::vector<double> taps_;
    std::vector<double> hist_;
    std::size_t pos_ = 0;
    std::size_t count_ = 0;
};

} // namespace fba
