#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fba/pipeline.hpp"
#include "fba/wavegen.hpp"

namespace fba {

// Total vector error in percent between two (amplitude, phase) phasors.
inline double tve_pct(double est_amp, double est_phase_rad, double ref_amp,
                      double ref_phase_rad) {
    if (!(ref_amp > 0.0)) throw std::invalid_argument("tve: reference amplitude must be > 0");
    std::complex<double> xe = std::polar(est_amp, est_phase_rad);
    std::complex<double> xr = std::polar(ref_amp, ref_phase_rad);
    return std::abs(xe - xr) / std::abs(xr) * 100.0;
}

struct MetricsRecord {
    std::size_t report_index = 0;
    double t_abs_s = 0.0;
    double fe_hz = 0.0;
    std::optional<double> rfe_hz_s;   // needs two consecutive reports
    std::optional<double> irfe_hz_s;  // undefined at a step sample
    double tve_pct = 0.0;
    std::optional<double> tde;        // needs the raw window
    std::string classification;
};

// Summed absolute reconstruction error over the central non-overlapping
// segment of the window: indices [(L-stride)/2, (L+stride)/2).
inline double tde_central(std::span<const double> input, std::span<const double> recon,
                          std::size_t window_len, std::size_t stride) {
    if (stride > window_len)
        throw std::invalid_argument("tde: reporting stride exceeds the window");
    std::size_t lo = (window_len - stride) / 2;
    std::size_t hi = lo + stride;
    if (input.size() != window_len || recon.size() != window_len)
        throw std::invalid_argument("tde: window size mismatch");
    double s = 0.0;
    for (std::size_t l = lo; l < hi; ++l) s += std::abs(input[l] - recon[l]);
    return s;
}

// Streaming metric computation against analytic ground truth. Feed reports
// in order; differential ROCOF error uses the matching differential of the
// reference frequency, so a constant frequency bias cancels exactly.
class MetricsAccumulator {
  public:
    MetricsAccumulator(GroundTruthSpec spec, const PipelineConfig& cfg)
        : spec_(std::move(spec)), frr_(cfg.frr_fps), window_len_(cfg.window_len),
          stride_(cfg.report_stride()), fs_(cfg.fs_hz) {}

    MetricsRecord consume(const ReportedModel& rep) {
        MetricsRecord m;
        m.report_index = rep.index;
        m.t_abs_s = rep.t_report_abs_s;
        m.classification = rep.classification;

        auto ref = truth_at(spec_, rep.t_report_abs_s);
        double f_est = rep.freq_at(rep.t_report_abs_s);
        m.fe_hz = std::abs(f_est - ref.freq_hz);
        m.tve_pct = tve_pct(rep.amplitude_at(rep.t_report_abs_s),
                            rep.argument_at(rep.t_report_abs_s), ref.amplitude, ref.phase_rad);
        if (prev_) {
            double est_rocof = (f_est - prev_->f_est) * frr_;
            double ref_rocof = (ref.freq_hz - prev_->f_ref) * frr_;
            m.rfe_hz_s = std::abs(est_rocof - ref_rocof);
        }
        if (!at_step_sample(rep.t_report_abs_s))
            m.irfe_hz_s = std::abs(rep.rocof_at(rep.t_report_abs_s) - ref.rocof_hz_per_s);
        if (rep.raw_window) {
            std::vector<double> grid(window_len_);
            for (std::size_t l = 0; l < window_len_; ++l)
                grid[l] = rep.origin_abs_s + static_cast<double>(l) / fs_;
            auto recon = rep.reconstruct(grid);
            m.tde = tde_central(*rep.raw_window, recon, window_len_, stride_);
        }
        prev_ = Prev{f_est, ref.freq_hz};
        return m;
    }

  private:
    bool at_step_sample(double t) const {
        for (const auto& d : spec_.dynamics) {
            double ts = -1.0;
            if (auto* as = std::get_if<AsTerm>(&d)) ts = as->time_s;
            if (auto* ps = std::get_if<PsTerm>(&d)) ts = ps->time_s;
            if (ts >= 0.0 && std::abs(t - ts) < 0.5 / fs_) return true;
        }
        return false;
    }

    struct Prev {
        double f_est, f_ref;
    };
    GroundTruthSpec spec_;
    double frr_;
    std::size_t window_len_;
    std::size_t stride_;
    double fs_;
    std::optional<Prev> prev_;
};

struct MetricsSummary {
    double max_fe = 0.0, mean_fe = 0.0;
    double max_rfe = 0.0, mean_rfe = 0.0;
    double max_tve = 0.0, mean_tve = 0.0;
    double max_irfe = 0.0, mean_irfe = 0.0;
    double max_tde = 0.0, mean_tde = 0.0;
    std::size_t count = 0;

    void add(const MetricsRecord& m) {
        ++count;
        max_fe = std::max(max_fe, m.fe_hz);
        mean_fe += m.fe_hz;
        max_tve = std::max(max_tve, m.tve_pct);
        mean_tve += m.tve_pct;
        if (m.rfe_hz_s) { max_rfe = std::max(max_rfe, *m.rfe_hz_s); mean_rfe += *m.rfe_hz_s; }
        if (m.irfe_hz_s) { max_irfe = std::max(max_irfe, *m.irfe_hz_s); mean_irfe += *m.irfe_hz_s; }
        if (m.tde) { max_tde = std::max(max_tde, *m.tde); mean_tde += *m.tde; }
    }
    void finalize() {
        if (count == 0) return;
        mean_fe /= count;
        mean_rfe /= count;
        mean_tve /= count;
        mean_irfe /= count;
        mean_tde /= count;
    }
};

// ---------------------------------------------------------------------------
// Shifted repeated signal (SRS) step-response measurement: the pipeline runs
// on ten copies of the spec with the step shifted by b/(10*Frr), b = 0..9,
// and per-report errors interleave into a curve with resolution 1/(10*Frr).
// The time axis is relative to the true step instant.
// ---------------------------------------------------------------------------

struct SrsPoint {
    double t_rel_s = 0.0;     // report center minus true step time
    int shift_b = 0;
    double fe_hz = 0.0;
    std::optional<double> rfe_hz_s;
    double tve_pct = 0.0;
    double stepped_value = 0.0; // amplitude (AS) or argument offset (PS) at center
};

struct StepResponseCurve {
    std::vector<SrsPoint> points; // sorted by t_rel
    double step_size = 0.0;       // signed, in the stepped quantity's unit
    double pre_value = 0.0;
    double post_value = 0.0;
    bool amplitude_step = false;

    double max_fe_hz = 0.0;
    double max_rfe_hz_s = 0.0;
    double max_tve_pct = 0.0;
    std::optional<double> delay_time_s;  // 50% crossing of the stepped quantity
    double overshoot_pct = 0.0;
    // Response-time bookkeeping: total over-threshold dwell and the
    // first-to-last exceedance span on the interleaved axis.
    double fe_dwell_s = 0.0, fe_span_s = 0.0;
    double tve_dwell_s = 0.0, tve_span_s = 0.0;
};

struct SrsThresholds {
    double fe_hz = 0.005;  // steady-state frequency-error limit
    double tve_pct = 1.0;
};

inline StepResponseCurve srs_run(const GroundTruthSpec& spec, const PipelineConfig& cfg,
                                 double duration_s, std::optional<double> snr_db,
                                 std::uint64_t seed, SrsThresholds thr = {}) {
    // Locate the step and its quantity from the spec.
    std::optional<double> t_as, t_ps;
    double a_as = 0.0, a_ps = 0.0, a0 = spec.a0;
    for (const auto& d : spec.dynamics) {
        if (auto* s = std::get_if<AsTerm>(&d)) { t_as = s->time_s; a_as = s->depth; }
        if (auto* s = std::get_if<PsTerm>(&d)) { t_ps = s->time_s; a_ps = s->depth_rad; }
    }
    if (!t_as && !t_ps) throw std::invalid_argument("srs_run: spec contains no step");
    bool amp_step = t_as.has_value();

    StepResponseCurve curve;
    curve.amplitude_step = amp_step;
    if (amp_step) {
        curve.pre_value = a0;
        curve.post_value = a0 * (1.0 + a_as);
        curve.step_size = a0 * a_as;
    } else {
        curve.pre_value = 0.0;
        curve.post_value = a_ps;
        curve.step_size = a_ps;
    }

    for (int b = 0; b < 10; ++b) {
        GroundTruthSpec shifted = srs_shift(spec, b, cfg.frr_fps);
        double t_step = amp_step ? *t_as : *t_ps;
        t_step += static_cast<double>(b) / (10.0 * cfg.frr_fps);
        Waveform w = synthesize(shifted, cfg.fs_hz, duration_s, snr_db,
                                seed + static_cast<std::uint64_t>(b));
        Pipeline pipe(cfg);
        MetricsAccumulator metrics(shifted, cfg);
        for (double x : w.samples) {
            auto rep = pipe.ingest(x);
            if (!rep) continue;
            auto m = metrics.consume(*rep);
            SrsPoint p;
            p.t_rel_s = rep->t_report_abs_s - t_step;
            p.shift_b = b;
            p.fe_hz = m.fe_hz;
            p.rfe_hz_s = m.rfe_hz_s;
            p.tve_pct = m.tve_pct;
            if (amp_step) {
                p.stepped_value = rep->amplitude_at(rep->t_report_abs_s);
            } else {
                // Argument offset against the un-stepped carrier track.
                double base = kTwoPi * spec.f0_hz * rep->t_report_abs_s + spec.phi0_rad;
                double off = rep->argument_at(rep->t_report_abs_s) - base;
                p.stepped_value = std::remainder(off, kTwoPi);
            }
            curve.points.push_back(p);
            curve.max_fe_hz = std::max(curve.max_fe_hz, m.fe_hz);
            curve.max_tve_pct = std::max(curve.max_tve_pct, m.tve_pct);
            if (m.rfe_hz_s) curve.max_rfe_hz_s = std::max(curve.max_rfe_hz_s, *m.rfe_hz_s);
        }
    }
    std::sort(curve.points.begin(), curve.points.end(),
              [](const SrsPoint& a, const SrsPoint& b) { return a.t_rel_s < b.t_rel_s; });

    // Delay time: first interleaved crossing of 50% of the step.
    double half = curve.pre_value + 0.5 * curve.step_size;
    for (const auto& p : curve.points) {
        bool crossed = curve.step_size > 0.0 ? p.stepped_value >= half : p.stepped_value <= half;
        if (crossed && p.t_rel_s > -0.5 / cfg.frr_fps) {
            curve.delay_time_s = p.t_rel_s;
            break;
        }
    }
    // Overshoot past the settled value, percent of step size.
    double sign = curve.step_size >= 0.0 ? 1.0 : -1.0;
    double worst = 0.0;
    for (const auto& p : curve.points)
        if (p.t_rel_s > 0.0)
            worst = std::max(worst, sign * (p.stepped_value - curve.post_value));
    curve.overshoot_pct = 100.0 * worst / std::abs(curve.step_size);

    // Over-threshold dwell and span on the interleaved axis.
    double dt = 1.0 / (10.0 * cfg.frr_fps);
    double fe_first = 0.0, fe_last = 0.0, tve_first = 0.0, tve_last = 0.0;
    bool fe_any = false, tve_any = false;
    for (const auto& p : curve.points) {
        if (p.fe_hz > thr.fe_hz) {
            curve.fe_dwell_s += dt;
            if (!fe_any) { fe_first = p.t_rel_s; fe_any = true; }
            fe_last = p.t_rel_s;
        }
        if (p.tve_pct > thr.tve_pct) {
            curve.tve_dwell_s += dt;
            if (!tve_any) { tve_first = p.t_rel_s; tve_any = true; }
            tve_last = p.t_rel_s;
        }
    }
    curve.fe_span_s = fe_any ? fe_last - fe_first : 0.0;
    curve.tve_span_s = tve_any ? tve_last - tve_first : 0.0;
    return curve;
}

} // namespace fba
