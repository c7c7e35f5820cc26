#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fba/numeric.hpp"

namespace fba {

// ---------------------------------------------------------------------------
// Dynamic terms. Amplitudes and depths are per-unit of the declared
// full scale, frequencies in Hz, times in seconds, ramp rate in Hz/s.
// ---------------------------------------------------------------------------

struct AmTerm {
    double depth = 0.0;                    // a_AM, in [0, 0.5]
    double freq_hz = 0.0;                  // f_AM
    std::optional<double> phase_rad;       // phi_AM; resolved at synthesis
};

struct PmTerm {
    double depth_rad = 0.0;                // a_PM, |.| <= pi/2
    double freq_hz = 0.0;                  // f_PM
    std::optional<double> phase_rad;       // phi_PM
};

struct AsTerm {
    double depth = 0.0;                    // a_AS (relative step)
    double time_s = 0.0;                   // t_AS
};

struct PsTerm {
    double depth_rad = 0.0;                // a_PS
    double time_s = 0.0;                   // t_PS
};

struct FrTerm {
    double rate_hz_per_s = 0.0;            // R
    double onset_s = 0.0;                  // ramp start; 0 reproduces the plain model
};

using DynamicTerm = std::variant<AmTerm, PmTerm, AsTerm, PsTerm, FrTerm>;

struct GroundTruthSpec {
    double a0 = 1.0;        // base amplitude, per-unit of full_scale
    double f0_hz = 50.0;    // fundamental frequency
    double phi0_rad = 0.0;  // initial phase
    double full_scale = 1.0;
    std::vector<DynamicTerm> dynamics;
};

struct Waveform {
    double fs_hz = 0.0;
    double t0_s = 0.0;
    double full_scale = 1.0;
    std::vector<double> samples;

    double time_at(std::size_t l) const { return t0_s + static_cast<double>(l) / fs_hz; }
};

struct InstantaneousTruth {
    double amplitude = 0.0;
    double phase_rad = 0.0;
    double freq_hz = 0.0;
    double rocof_hz_per_s = 0.0;
};

// Right-continuous unit step: h(0) = 1.
inline double unit_step(double x) { return x >= 0.0 ? 1.0 : 0.0; }

namespace detail {

struct ResolvedPhases {
    double am = 0.0;
    double pm = 0.0;
};

// The multidynamic modulation test drives AM and PM 180 degrees out of
// phase; that offset is the default when both are present and neither
// declares a phase.
inline ResolvedPhases resolve_mod_phases(const GroundTruthSpec& spec) {
    const AmTerm* am = nullptr;
    const PmTerm* pm = nullptr;
    for (const auto& d : spec.dynamics) {
        if (auto* t = std::get_if<AmTerm>(&d)) am = t;
        if (auto* t = std::get_if<PmTerm>(&d)) pm = t;
    }
    ResolvedPhases r;
    if (am && am->phase_rad) r.am = *am->phase_rad;
    if (pm && pm->phase_rad) r.pm = *pm->phase_rad;
    if (am && pm && !am->phase_rad && !pm->phase_rad) r.pm = kPi;
    return r;
}

} // namespace detail

inline void validate(const GroundTruthSpec& spec) {
    if (!(spec.a0 > 0.0)) throw std::invalid_argument("spec: a0 must be > 0");
    if (!(spec.f0_hz > 0.0)) throw std::invalid_argument("spec: f0 must be > 0");
    if (!(spec.full_scale > 0.0)) throw std::invalid_argument("spec: full_scale must be > 0");

    int n_am = 0, n_pm = 0, n_as = 0, n_ps = 0, n_fr = 0;
    for (const auto& d : spec.dynamics) {
        if (auto* t = std::get_if<AmTerm>(&d)) {
            if (t->depth < 0.0 || t->depth > 0.5)
                throw std::invalid_argument("spec: a_AM must lie in [0, 0.5]");
            if (!(t->freq_hz > 0.0)) throw std::invalid_argument("spec: f_AM must be > 0");
            ++n_am;
        } else if (auto* t2 = std::get_if<PmTerm>(&d)) {
            if (std::abs(t2->depth_rad) > kPi / 2.0)
                throw std::invalid_argument("spec: |a_PM| must be <= pi/2");
            if (!(t2->freq_hz > 0.0)) throw std::invalid_argument("spec: f_PM must be > 0");
            ++n_pm;
        } else if (std::holds_alternative<AsTerm>(d)) {
            ++n_as;
        } else if (std::holds_alternative<PsTerm>(d)) {
            ++n_ps;
        } else {
            ++n_fr;
        }
    }
    if (n_am > 1 || n_as > 1 || n_pm > 1 || n_ps > 1 || n_fr > 1)
        throw std::invalid_argument("spec: at most one term of each dynamic kind");
    if (n_am && n_as)
        throw std::invalid_argument("spec: AM and AS may not be combined");
    if (n_pm && (n_ps || n_fr))
        throw std::invalid_argument("spec: PM may not be combined with PS or FR");
    // PS followed by FR is the one sanctioned phase-class composite.
    if (n_ps && n_fr) {
        double t_ps = 0.0, t_fr = 0.0;
        for (const auto& d : spec.dynamics) {
            if (auto* t = std::get_if<PsTerm>(&d)) t_ps = t->time_s;
            if (auto* t = std::get_if<FrTerm>(&d)) t_fr = t->onset_s;
        }
        if (t_fr < t_ps)
            throw std::invalid_argument("spec: FR onset must not precede the phase step");
    }
}

// Amplitude factor g_A(t) and argument offset g_phi(t) of the general model.
inline double eval_g_amplitude(const GroundTruthSpec& spec, double t, double am_phase) {
    double g = 0.0;
    for (const auto& d : spec.dynamics) {
        if (auto* am = std::get_if<AmTerm>(&d))
            g += am->depth * std::sin(kTwoPi * am->freq_hz * t + am_phase);
        else if (auto* as = std::get_if<AsTerm>(&d))
            g += as->depth * unit_step(t - as->time_s);
    }
    return g;
}

inline double eval_g_phase(const GroundTruthSpec& spec, double t, double pm_phase) {
    double g = 0.0;
    for (const auto& d : spec.dynamics) {
        if (auto* pm = std::get_if<PmTerm>(&d))
            g += pm->depth_rad * std::sin(kTwoPi * pm->freq_hz * t + pm_phase);
        else if (auto* ps = std::get_if<PsTerm>(&d))
            g += ps->depth_rad * unit_step(t - ps->time_s);
        else if (auto* fr = std::get_if<FrTerm>(&d)) {
            double tau = t - fr->onset_s;
            if (tau >= 0.0) g += fr->rate_hz_per_s * kPi * tau * tau;
        }
    }
    return g;
}

// Closed-form instantaneous amplitude/phase/frequency/ROCOF. Steps are
// right-continuous: at the step sample the post-step value is returned.
inline InstantaneousTruth truth_at(const GroundTruthSpec& spec, double t) {
    validate(spec);
    auto ph = detail::resolve_mod_phases(spec);

    InstantaneousTruth out;
    out.amplitude = spec.a0 * (1.0 + eval_g_amplitude(spec, t, ph.am));
    out.phase_rad = kTwoPi * spec.f0_hz * t + eval_g_phase(spec, t, ph.pm) + spec.phi0_rad;

    double df = 0.0, drocof = 0.0;
    for (const auto& d : spec.dynamics) {
        if (auto* pm = std::get_if<PmTerm>(&d)) {
            double w = kTwoPi * pm->freq_hz;
            df += pm->depth_rad * pm->freq_hz * std::cos(w * t + ph.pm);
            drocof += -pm->depth_rad * pm->freq_hz * w * std::sin(w * t + ph.pm);
        } else if (auto* fr = std::get_if<FrTerm>(&d)) {
            double tau = t - fr->onset_s;
            if (tau >= 0.0) {
                df += fr->rate_hz_per_s * tau;
                drocof += fr->rate_hz_per_s;
            }
        }
    }
    out.freq_hz = spec.f0_hz + df;
    out.rocof_hz_per_s = drocof;
    return out;
}

// Gaussian deviates from mt19937_64 via the basic Box-Muller transform.
// The algorithm is part of the output contract (see kPrngName), so a
// library distribution with unspecified internals is not used here.
class GaussianGen {
  public:
    explicit GaussianGen(std::uint64_t seed) : eng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01_();
        double u2 = uniform01_();
        double r = std::sqrt(-2.0 * std::log(1.0 - u1)); // 1-u1 in (0,1], log finite
        double a = kTwoPi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    double uniform01_() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Synthesize per the general dynamic model. snr_db, when present, sets
// additive white Gaussian noise power relative to the RMS power of the
// unmodulated fundamental (A0/sqrt(2)).
inline Waveform synthesize(const GroundTruthSpec& spec, double fs_hz, double duration_s,
                           std::optional<double> snr_db = std::nullopt,
                           std::uint64_t seed = 0, double t0_s = 0.0) {
    validate(spec);
    if (!(fs_hz > 0.0)) throw std::invalid_argument("synthesize: fs must be > 0");
    auto count = static_cast<std::size_t>(std::floor(duration_s * fs_hz + 0.5));
    if (count < 1) throw std::invalid_argument("synthesize: duration*fs must be >= 1");

    for (const auto& d : spec.dynamics) {
        double ts = -1.0;
        if (auto* as = std::get_if<AsTerm>(&d)) ts = as->time_s;
        if (auto* ps = std::get_if<PsTerm>(&d)) ts = ps->time_s;
        if (ts >= 0.0 && (ts < t0_s || ts > t0_s + duration_s))
            throw std::invalid_argument("synthesize: step time outside the synthesized duration");
    }

    auto ph = detail::resolve_mod_phases(spec);
    Waveform w;
    w.fs_hz = fs_hz;
    w.t0_s = t0_s;
    w.full_scale = spec.full_scale;
    w.samples.resize(count);
    for (std::size_t l = 0; l < count; ++l) {
        double t = t0_s + static_cast<double>(l) / fs_hz;
        double amp = spec.a0 * (1.0 + eval_g_amplitude(spec, t, ph.am));
        double arg = kTwoPi * spec.f0_hz * t + eval_g_phase(spec, t, ph.pm) + spec.phi0_rad;
        w.samples[l] = amp * std::cos(arg);
    }
    if (snr_db) {
        double sigma = (spec.a0 / std::sqrt(2.0)) * std::pow(10.0, -(*snr_db) / 20.0);
        GaussianGen g(seed);
        for (auto& s : w.samples) s += sigma * g();
    }
    return w;
}

// Shift every step time by b/(10*frr) seconds; used by the shifted
// repeated signal procedure (b = 0..9).
inline GroundTruthSpec srs_shift(const GroundTruthSpec& spec, int b, double frr_fps) {
    if (b < 0 || b > 9) throw std::invalid_argument("srs_shift: b must lie in 0..9");
    if (!(frr_fps > 0.0)) throw std::invalid_argument("srs_shift: frr must be > 0");
    bool has_step = false;
    GroundTruthSpec out = spec;
    double shift = static_cast<double>(b) / (10.0 * frr_fps);
    for (auto& d : out.dynamics) {
        if (auto* as = std::get_if<AsTerm>(&d)) {
            as->time_s += shift;
            has_step = true;
        } else if (auto* ps = std::get_if<PsTerm>(&d)) {
            ps->time_s += shift;
            has_step = true;
        } else if (auto* fr = std::get_if<FrTerm>(&d)) {
            if (fr->onset_s > 0.0) fr->onset_s += shift;
        }
    }
    if (!has_step) throw std::invalid_argument("srs_shift: spec contains no step term");
    return out;
}

} // namespace fba
