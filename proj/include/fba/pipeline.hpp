#pragma once

#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fba/analytic.hpp"
#include "fba/estimators.hpp"
#include "fba/hilbert.hpp"
#include "fba/stock_filters.hpp"

namespace fba {

struct PipelineConfig {
    double fs_hz = 10000.0;
    std::size_t window_len = 600;          // L
    double frr_fps = 50.0;                 // reporting rate
    double gss_f_lo_hz = 1.0;
    double gss_f_hi_hz = 5.0;
    int gss_iterations = 5;
    double full_scale = 1.0;
    double eps_da_frac_fs = 0.00035;       // amplitude differential threshold, fraction of FS
    double eps_dp_rad = 0.0002 * kPi;      // argument differential threshold
    std::size_t mean_len_da = 32;          // L_dA
    std::size_t mean_len_dp = 32;          // L_dphi
    std::size_t mean_len_amp = 64;         // L_A, post-step amplitude mean
    std::size_t min_fr_samples = 300;      // L_FR, post-step refit floor
    std::size_t settle_dwell = 32;         // consecutive in-threshold samples before t_ub
    // Samples after t_ub excluded from post-step regressions: the filter's
    // step transient stays structured (though inside the differential
    // thresholds) for roughly three dwell lengths.
    std::size_t post_guard = 96;
    double eps_fr_override = std::numeric_limits<double>::quiet_NaN(); // NaN = auto (2*L*sigma^2)
    std::string filter = "H2";             // H1, H2
    std::vector<double> custom_filter;     // used when filter == "custom"
    std::size_t custom_group_delay = 0;
    // Classification floors separating SS from a genuinely detected dynamic.
    double ss_am_depth = 0.01;
    double ss_pm_depth_rad = 0.01;
    double ss_fr_rate_hz_s = 0.1;
    bool store_windows = true;             // keep raw window copies on reports

    std::size_t report_stride() const {
        double s = fs_hz / frr_fps;
        auto stride = static_cast<std::size_t>(s + 0.5);
        if (std::abs(s - static_cast<double>(stride)) > 1e-9)
            throw std::invalid_argument("PipelineConfig: fs/frr must be an integer sample count");
        return stride;
    }
};

// ---------------------------------------------------------------------------
// Reported models. All evaluation is on absolute time; holding a previous
// model unchanged is exactly the report-shifted prediction, since each
// report's local axis starts one reporting period later.
// ---------------------------------------------------------------------------

struct EnvelopeModel {
    enum class Kind { kAm, kConst, kPiecewise } kind = Kind::kConst;
    // kAm / kConst
    double origin_abs_s = 0.0;
    std::array<double, 3> gamma{};
    double f_am_hz = 0.0;
    // kPiecewise
    std::shared_ptr<const EnvelopeModel> pre;
    double t_step_abs_s = 0.0;
    double a0_post = 0.0;

    double value(double t_abs) const {
        switch (kind) {
            case Kind::kConst:
                return gamma[0];
            case Kind::kAm: {
                double w = kTwoPi * f_am_hz * (t_abs - origin_abs_s);
                return gamma[0] + gamma[1] * std::sin(w) + gamma[2] * std::cos(w);
            }
            case Kind::kPiecewise:
            default:
                return t_abs < t_step_abs_s ? pre->value(t_abs) : a0_post;
        }
    }
};

struct ArgumentModel {
    enum class Kind { kPm, kFr, kPsPatch, kPiecewise } kind = Kind::kFr;
    // kPm / kFr share origin; phase_base is an exact multiple of 2*pi linking
    // window-frame phase values across reports.
    double origin_abs_s = 0.0;
    double phase_base_rad = 0.0;
    std::array<double, 4> nu{};     // kPm
    double f_pm_hz = 0.0;           // kPm
    std::array<double, 3> beta{};   // kFr
    // kPsPatch / kPiecewise
    std::shared_ptr<const ArgumentModel> pre;
    double t_step_abs_s = 0.0;
    double a_ps_rad = 0.0;                       // kPsPatch
    std::shared_ptr<const ArgumentModel> post;   // kPiecewise (kFr model)

    double value(double t_abs) const {
        switch (kind) {
            case Kind::kPm: {
                double tau = t_abs - origin_abs_s;
                double w = kTwoPi * f_pm_hz * tau;
                return phase_base_rad + nu[0] + nu[1] * tau + nu[2] * std::sin(w) +
                       nu[3] * std::cos(w);
            }
            case Kind::kFr: {
                double tau = t_abs - origin_abs_s;
                return phase_base_rad + beta[0] + beta[1] * tau + beta[2] * tau * tau;
            }
            case Kind::kPsPatch:
                return pre->value(t_abs) + (t_abs >= t_step_abs_s ? a_ps_rad : 0.0);
            case Kind::kPiecewise:
            default:
                return t_abs < t_step_abs_s ? pre->value(t_abs) : post->value(t_abs);
        }
    }

    double freq_hz(double t_abs) const {
        switch (kind) {
            case Kind::kPm: {
                double tau = t_abs - origin_abs_s;
                double om = kTwoPi * f_pm_hz;
                return (nu[1] + om * (nu[2] * std::cos(om * tau) - nu[3] * std::sin(om * tau))) /
                       kTwoPi;
            }
            case Kind::kFr: {
                double tau = t_abs - origin_abs_s;
                return (beta[1] + 2.0 * beta[2] * tau) / kTwoPi;
            }
            case Kind::kPsPatch:
                return pre->freq_hz(t_abs);
            case Kind::kPiecewise:
            default:
                return t_abs < t_step_abs_s ? pre->freq_hz(t_abs) : post->freq_hz(t_abs);
        }
    }

    double rocof_hz_s(double t_abs) const {
        switch (kind) {
            case Kind::kPm: {
                double tau = t_abs - origin_abs_s;
                double om = kTwoPi * f_pm_hz;
                return -om * om * (nu[2] * std::sin(om * tau) + nu[3] * std::cos(om * tau)) /
                       kTwoPi;
            }
            case Kind::kFr:
                return beta[2] / kPi;
            case Kind::kPsPatch:
                return pre->rocof_hz_s(t_abs);
            case Kind::kPiecewise:
            default:
                return t_abs < t_step_abs_s ? pre->rocof_hz_s(t_abs) : post->rocof_hz_s(t_abs);
        }
    }
};

// Phase-model arbitration: FR wins ties within eps_fr; otherwise the
// smaller residual.
enum class PhaseModelChoice { kFr, kPm };
inline PhaseModelChoice select_phase_model(double rho_pm, double rho_fr, double eps_fr) {
    if (std::abs(rho_fr - rho_pm) < eps_fr) return PhaseModelChoice::kFr;
    return rho_fr < rho_pm ? PhaseModelChoice::kFr : PhaseModelChoice::kPm;
}

struct StepDiagnostics {
    bool resolved = false;
    StepEvent::Kind kind = StepEvent::Kind::kBoth;
    double t_lb_abs_s = 0.0;
    double t_step_amp_abs_s = 0.0;
    double t_step_phase_abs_s = 0.0;
    std::optional<double> t_ub_abs_s;
    std::optional<double> a_as;
    std::optional<double> a_ps_rad;
    std::optional<double> a0_post;
    int merged_events = 1;
};

struct ReportedModel {
    std::size_t index = 0;
    double t_report_abs_s = 0.0;   // window-center timestamp
    double origin_abs_s = 0.0;     // window-start timestamp
    std::shared_ptr<const EnvelopeModel> envelope;
    std::shared_ptr<const ArgumentModel> argument;
    std::string classification;

    // Diagnostics
    double rho_am = 0.0, rho_pm = 0.0, rho_fr = 0.0;
    bool am_feasible = false, pm_feasible = false;
    double f_am_hz = 0.0, f_pm_hz = 0.0;
    PhaseModelChoice phase_choice = PhaseModelChoice::kFr;
    double eps_fr_used = 0.0;
    double max_certificate = 0.0;  // worst LS optimality certificate this report
    std::optional<StepDiagnostics> step;
    std::shared_ptr<const std::vector<double>> raw_window; // aligned input copy

    double amplitude_at(double t_abs) const { return envelope->value(t_abs); }
    double argument_at(double t_abs) const { return argument->value(t_abs); }
    double freq_at(double t_abs) const { return argument->freq_hz(t_abs); }
    double rocof_at(double t_abs) const { return argument->rocof_hz_s(t_abs); }

    std::vector<double> reconstruct(std::span<const double> t_abs_grid) const {
        std::vector<double> out(t_abs_grid.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = envelope->value(t_abs_grid[i]) * std::cos(argument->value(t_abs_grid[i]));
        return out;
    }
};

// Step timing milestones on the effective (signal-time) axis.
struct StepTimeline {
    double detect_abs_s = 0.0;
    std::optional<double> t_ub_abs_s;
    std::optional<double> ps_depth_abs_s;       // first report carrying a PS depth
    std::optional<double> post_fr_data_abs_s;   // L_FR-th sample after t_ub ingested
    std::optional<double> post_fr_report_abs_s; // first report with the post-step refit
};

class Pipeline {
  public:
    explicit Pipeline(const PipelineConfig& cfg)
        : cfg_(cfg),
          cands_(cfg.gss_f_lo_hz, cfg.gss_f_hi_hz, cfg.gss_iterations),
          basis_(cands_, cfg.window_len, 1.0 / cfg.fs_hz),
          fr_cache_(cfg.window_len, 1.0 / cfg.fs_hz),
          unwrap_(cfg.window_len),
          fr_acc_(cfg.window_len, 1.0 / cfg.fs_hz),
          monitor_(cfg.mean_len_da, cfg.eps_da_frac_fs * cfg.full_scale, cfg.mean_len_dp,
                   cfg.eps_dp_rad, cfg.settle_dwell, cfg.window_len),
          env_ring_(cfg.window_len, 0.0),
          raw_ring_(cfg.window_len, 0.0) {
        std::vector<double> taps;
        if (cfg.filter == "custom") {
            taps = cfg.custom_filter;
            delay_ = cfg.custom_group_delay;
            if (taps.empty()) throw std::invalid_argument("Pipeline: empty custom filter");
        } else {
            CascadeHilbertFilter c = stock_cascade(cfg.filter);
            taps = c.composed;
            delay_ = c.group_delay;
        }
        fir_ = std::make_unique<StreamingFir>(std::move(taps));
        real_delay_.assign(delay_ + 1, 0.0);
        stride_ = cfg.report_stride();
        if (cfg.min_fr_samples > cfg.window_len)
            throw std::invalid_argument("Pipeline: L_FR must not exceed the window");
    }

    // Feed one raw sample; returns a report every fs/frr samples once the
    // filter has warmed up and a full window of analytic samples exists.
    std::optional<ReportedModel> ingest(double x) {
        if (!std::isfinite(x))
            throw std::runtime_error("stream integrity: non-finite sample at push " +
                                     std::to_string(push_count_));
        double imag = fir_->push(x);
        real_delay_[push_count_ % real_delay_.size()] = x;
        std::size_t n = push_count_++;
        if (n + 1 < fir_->warm_up_len()) return std::nullopt;

        // Aligned pair: x[n - delay] against the filtered output at push n.
        double real = real_delay_[(n - delay_) % real_delay_.size()];
        double t_eff = t0_s_ + static_cast<double>(n - delay_) / cfg_.fs_hz;
        AnalyticSample a = make_analytic(real, imag, t_eff);

        auto res = unwrap_.push(a.arg_wrapped);
        fr_acc_.push(res.unwrapped, res.outgoing_valid ? res.outgoing : 0.0);
        if (res.cleared) fr_acc_.apply_wrap_correction(res.cleared->correct_sign);

        std::size_t eff_idx = eff_count_++;
        env_ring_[eff_idx % env_ring_.size()] = a.envelope;
        raw_ring_[eff_idx % raw_ring_.size()] = real;

        // The differential detector needs the continuous argument; the
        // window-frame value re-bases by 2*pi whenever a wrap clears.
        double arg_continuous =
            res.unwrapped + kTwoPi * static_cast<double>(unwrap_.cleared_total());
        bool opened = monitor_.push(a.envelope, arg_continuous);
        if (opened) {
            StepTimeline tl;
            tl.detect_abs_s = t_eff;
            timelines_.push_back(tl);
        }
        // Track t_ub declaration and post-step data availability.
        if (!monitor_.events().empty()) {
            const auto& ev = monitor_.events().back();
            if (ev.t_ub && !timelines_.empty()) {
                auto& tl = timelines_.back();
                if (!tl.t_ub_abs_s) tl.t_ub_abs_s = eff_time(*ev.t_ub);
                if (!tl.post_fr_data_abs_s && eff_idx >= *ev.t_ub + cfg_.min_fr_samples)
                    tl.post_fr_data_abs_s = t_eff;
            }
        }
        if (analytic_sink_) analytic_sink_(a, res.unwrapped, unwrap_.wrap_count());

        if (eff_count_ >= cfg_.window_len &&
            (eff_count_ - cfg_.window_len) % stride_ == 0)
            return report_now();
        return std::nullopt;
    }

    // Assemble the report for the current window (window must be full).
    ReportedModel report_now() {
        if (eff_count_ < cfg_.window_len)
            throw std::runtime_error("report_now: window not yet full");
        const std::size_t L = cfg_.window_len;
        const double ts = 1.0 / cfg_.fs_hz;
        const std::size_t win_start = eff_count_ - L; // effective index of window[0]
        const double origin_abs = eff_time(win_start);

        std::vector<double> phi;
        unwrap_.materialize(phi);
        std::vector<double> env(L), raw(L);
        for (std::size_t l = 0; l < L; ++l) {
            env[l] = env_ring_[(win_start + l) % L];
            raw[l] = raw_ring_[(win_start + l) % L];
        }
        double phase_base = kTwoPi * static_cast<double>(unwrap_.cleared_total());

        ReportedModel rep;
        rep.index = report_count_++;
        rep.origin_abs_s = origin_abs;
        rep.t_report_abs_s = origin_abs + static_cast<double>(L / 2) * ts;
        if (cfg_.store_windows)
            rep.raw_window = std::make_shared<const std::vector<double>>(raw);

        const StepEvent* ev = governing_event(win_start);
        if (ev == nullptr) {
            report_no_step(rep, env, phi, phase_base, origin_abs);
            pre_step_base_env_.reset();
            pre_step_base_arg_.reset();
            // Remember recent clean reports: the step-prediction base must
            // come from a window that ends before the filter began seeing
            // the step (half the filter support ahead of the flag).
            clean_history_.push_back(CleanModels{origin_abs + static_cast<double>(L - 1) * ts,
                                                 rep.envelope, rep.argument});
            if (clean_history_.size() > 8) clean_history_.pop_front();
        } else {
            report_step(rep, *ev, env, phi, phase_base, origin_abs, win_start);
        }
        monitor_.prune_before(win_start > 8192 ? win_start - 8192 : 0);
        prev_report_ = std::make_shared<ReportedModel>(rep);
        return rep;
    }

    const PipelineConfig& config() const { return cfg_; }
    std::size_t group_delay() const { return delay_; }
    std::size_t warm_up_pushes() const { return fir_->warm_up_len(); }
    std::size_t effective_samples() const { return eff_count_; }
    double eps_fr_current() const { return eps_fr(); }
    const GssCandidates& candidates() const { return cands_; }
    const BasisCache& basis() const { return basis_; }
    const FrGramCache& fr_gram_cache() const { return fr_cache_; }
    const std::vector<StepTimeline>& step_timelines() const { return timelines_; }
    const std::deque<StepEvent>& step_events() const { return monitor_.events(); }
    double max_certificate_seen() const { return max_cert_seen_; }
    void set_start_time(double t0_s) { t0_s_ = t0_s; }
    void set_analytic_sink(std::function<void(const AnalyticSample&, double, long)> sink) {
        analytic_sink_ = std::move(sink);
    }

  private:
    // Signal time of the k-th valid analytic sample: the first valid output
    // appears after warm_up-1 pushes and describes the input delay samples
    // earlier.
    double eff_time(std::size_t eff_idx) const {
        double n = static_cast<double>(eff_idx + fir_->warm_up_len() - 1) -
                   static_cast<double>(delay_);
        return t0_s_ + n / cfg_.fs_hz;
    }

    // Tie tolerance 2*L*sigma^2 with sigma^2 the argument-noise variance,
    // estimated as the smallest recent per-sample fit residual: quiet or
    // well-modeled windows expose the noise floor, structure does not leak
    // in through the minimum.
    double eps_fr() const {
        if (!std::isnan(cfg_.eps_fr_override)) return cfg_.eps_fr_override;
        double sigma2 = 1e-12;
        if (!noise_floor_.empty()) {
            sigma2 = noise_floor_.front();
            for (double v : noise_floor_) sigma2 = std::min(sigma2, v);
        }
        return 2.0 * static_cast<double>(cfg_.window_len) * sigma2;
    }

    // Earliest step event whose flagged period [t_lb, t_ub) overlaps the
    // current window; open events extend to the newest sample.
    const StepEvent* governing_event(std::size_t win_start) const {
        for (const auto& e : monitor_.events()) {
            std::size_t last_flagged;
            if (e.t_ub) last_flagged = *e.t_ub - 1;
            else if (e.abandoned_at) last_flagged = *e.abandoned_at;
            else last_flagged = eff_count_ - 1;
            if (last_flagged >= win_start) return &e;
        }
        return nullptr;
    }

    void report_no_step(ReportedModel& rep, const std::vector<double>& env,
                        const std::vector<double>& phi, double phase_base, double origin_abs) {
        const std::size_t L = cfg_.window_len;
        // Envelope: modulation fit via golden-section search.
        AmFit best_am;
        auto am_out = gss(cands_, [&](std::size_t idx, double) {
            AmFit f = am_ls_fit(env, basis_.kernel_for_entry(idx));
            note_cert(f.certificate);
            if (f.feasible && (!best_am.feasible || f.residual < best_am.residual)) best_am = f;
            return std::pair<double, bool>(f.residual, f.feasible);
        });
        auto env_model = std::make_shared<EnvelopeModel>();
        env_model->origin_abs_s = origin_abs;
        if (am_out.found) {
            env_model->kind = EnvelopeModel::Kind::kAm;
            env_model->gamma = best_am.gamma;
            env_model->f_am_hz = best_am.f_am_hz;
            rep.rho_am = best_am.residual;
            rep.am_feasible = true;
            rep.f_am_hz = best_am.f_am_hz;
        } else {
            // No feasible modulation: constant-envelope fallback.
            double mean = 0.0;
            for (double v : env) mean += v;
            mean /= static_cast<double>(L);
            env_model->kind = EnvelopeModel::Kind::kConst;
            env_model->gamma = {mean, 0.0, 0.0};
            double sse = 0.0;
            for (double v : env) sse += (v - mean) * (v - mean);
            rep.rho_am = sse;
            rep.am_feasible = false;
        }
        rep.envelope = env_model;

        // Argument: modulation fit against the recursive ramp fit.
        PmFit best_pm;
        auto pm_out = gss(cands_, [&](std::size_t idx, double) {
            PmFit f = pm_ls_fit(phi, basis_.kernel_for_entry(idx), basis_.t_col());
            note_cert(f.certificate);
            if (f.feasible && (!best_pm.feasible || f.residual < best_pm.residual)) best_pm = f;
            return std::pair<double, bool>(f.residual, f.feasible);
        });
        FrFit fr = fr_fit(fr_acc_, fr_cache_, phi);
        note_cert(fr.certificate);
        rep.rho_fr = fr.residual;
        rep.pm_feasible = pm_out.found;
        double eps = eps_fr();
        rep.eps_fr_used = eps;

        PhaseModelChoice choice = PhaseModelChoice::kFr;
        if (pm_out.found) {
            rep.rho_pm = best_pm.residual;
            rep.f_pm_hz = best_pm.f_pm_hz;
            choice = select_phase_model(best_pm.residual, fr.residual, eps);
        }
        rep.phase_choice = choice;
        auto arg_model = std::make_shared<ArgumentModel>();
        arg_model->origin_abs_s = origin_abs;
        arg_model->phase_base_rad = phase_base;
        if (choice == PhaseModelChoice::kPm) {
            arg_model->kind = ArgumentModel::Kind::kPm;
            arg_model->nu = best_pm.nu;
            arg_model->f_pm_hz = best_pm.f_pm_hz;
        } else {
            arg_model->kind = ArgumentModel::Kind::kFr;
            arg_model->beta = fr.beta;
        }
        rep.argument = arg_model;

        // Noise-variance tracker feeding the FR/PM tie tolerance.
        double dof_resid = std::min(rep.rho_fr, pm_out.found ? rep.rho_pm : rep.rho_fr) /
                           static_cast<double>(L - 4);
        noise_floor_.push_back(dof_resid);
        if (noise_floor_.size() > 25) noise_floor_.pop_front();

        rep.classification = classify_no_step(rep, best_am, choice, fr, best_pm);
    }

    std::string classify_no_step(const ReportedModel& rep, const AmFit& am,
                                 PhaseModelChoice choice, const FrFit& fr, const PmFit& pm) {
        bool amp_dyn = rep.am_feasible && am.depth() >= cfg_.ss_am_depth;
        std::string phase_dyn;
        if (choice == PhaseModelChoice::kPm && pm.feasible &&
            pm.depth_rad() >= cfg_.ss_pm_depth_rad)
            phase_dyn = "PM";
        else if (choice == PhaseModelChoice::kFr &&
                 std::abs(fr.rate_hz_per_s()) >= cfg_.ss_fr_rate_hz_s)
            phase_dyn = "FR";
        if (amp_dyn && !phase_dyn.empty()) return "AM+" + phase_dyn;
        if (amp_dyn) return "AM";
        if (!phase_dyn.empty()) return phase_dyn;
        return "SS";
    }

    void report_step(ReportedModel& rep, const StepEvent& ev, const std::vector<double>& env,
                     const std::vector<double>& phi, double phase_base, double origin_abs,
                     std::size_t win_start) {
        const std::size_t L = cfg_.window_len;
        const double ts = 1.0 / cfg_.fs_hz;

        // Freeze the prediction base: the newest clean report whose window
        // ended before the filter's support reached the flagged samples.
        if (!pre_step_base_env_) {
            double contamination_start =
                eff_time(ev.t_lb) -
                0.5 * static_cast<double>(fir_->warm_up_len() - 1) / cfg_.fs_hz;
            for (auto it = clean_history_.rbegin(); it != clean_history_.rend(); ++it) {
                if (it->window_end_abs_s <= contamination_start) {
                    pre_step_base_env_ = it->envelope;
                    pre_step_base_arg_ = it->argument;
                    break;
                }
            }
            if (!pre_step_base_env_ && !clean_history_.empty()) {
                pre_step_base_env_ = clean_history_.front().envelope;
                pre_step_base_arg_ = clean_history_.front().argument;
            }
        }
        if (!pre_step_base_env_) {
            if (prev_report_) {
                pre_step_base_env_ = prev_report_->envelope;
                pre_step_base_arg_ = prev_report_->argument;
            } else {
                // Step inside the very first window: nothing to predict from.
                auto e = std::make_shared<EnvelopeModel>();
                e->kind = EnvelopeModel::Kind::kConst;
                double mean = 0.0;
                for (double v : env) mean += v;
                e->gamma = {mean / static_cast<double>(L), 0.0, 0.0};
                e->origin_abs_s = origin_abs;
                pre_step_base_env_ = e;
                auto a = std::make_shared<ArgumentModel>();
                a->kind = ArgumentModel::Kind::kFr;
                a->origin_abs_s = origin_abs;
                a->phase_base_rad = phase_base;
                a->beta = {phi[0], (phi[L - 1] - phi[0]) / (static_cast<double>(L - 1) * ts), 0.0};
                pre_step_base_arg_ = a;
            }
        }

        StepDiagnostics diag;
        diag.kind = ev.kind;
        diag.resolved = ev.t_ub.has_value();
        diag.t_lb_abs_s = eff_time(ev.t_lb);
        diag.t_step_amp_abs_s = eff_time(ev.t_step_amp);
        diag.t_step_phase_abs_s = eff_time(ev.t_step_phase);
        diag.merged_events = ev.merged_events;

        bool amp_step = ev.amp_triggered;
        bool phase_step = ev.phase_triggered;
        double t_as_abs = eff_time(ev.t_step_amp);
        double t_ps_abs = eff_time(ev.t_step_phase);

        // Envelope side (Alg. 1 lines 21-27).
        std::shared_ptr<const EnvelopeModel> env_model = pre_step_base_env_;
        if (ev.t_ub && eff_count_ > *ev.t_ub) {
            std::size_t post_samples = eff_count_ - 1 - *ev.t_ub; // strictly after t_ub
            if (post_samples >= cfg_.mean_len_amp && amp_step) {
                double mean = 0.0;
                for (std::size_t l = L - cfg_.mean_len_amp; l < L; ++l) mean += env[l];
                mean /= static_cast<double>(cfg_.mean_len_amp);
                auto piece = std::make_shared<EnvelopeModel>();
                piece->kind = EnvelopeModel::Kind::kPiecewise;
                piece->pre = pre_step_base_env_;
                piece->t_step_abs_s = t_as_abs;
                piece->a0_post = mean;
                env_model = piece;
                diag.a0_post = mean;
                double a0_pre = pre_step_base_env_->value(t_as_abs);
                diag.a_as = (mean - a0_pre) / a0_pre;
            }
        }
        rep.envelope = env_model;

        // Argument side (Alg. 1 lines 28-36).
        std::shared_ptr<const ArgumentModel> arg_model = pre_step_base_arg_;
        if (ev.t_ub) {
            diag.t_ub_abs_s = eff_time(*ev.t_ub);
            std::size_t ub_local = *ev.t_ub >= win_start ? *ev.t_ub - win_start : 0;
            std::size_t post_count = L - ub_local; // samples at or after t_ub in window
            // The refit waits one extra reporting period past the L_FR floor:
            // a fit evaluated at the very edge of its support inside the
            // filter's step transient swings the reported frequency by tens
            // of mHz. One period later the report time sits a full stride
            // inside the fitted span.
            if (post_count < cfg_.min_fr_samples + stride_) {
                if (phase_step) {
                    // First depth estimate anchors at t_ub; once samples past
                    // the settling guard exist the estimate refines to their
                    // mean offset against the prediction.
                    double a_ps;
                    std::size_t obs_start = ub_local + cfg_.post_guard;
                    if (obs_start + 8 <= L) {
                        double acc = 0.0;
                        for (std::size_t l = obs_start; l < L; ++l)
                            acc += phi[l] + phase_base -
                                   pre_step_base_arg_->value(origin_abs +
                                                             static_cast<double>(l) * ts);
                        a_ps = acc / static_cast<double>(L - obs_start);
                    } else {
                        double predicted = pre_step_base_arg_->value(eff_time(*ev.t_ub));
                        a_ps = phi[ub_local] + phase_base - predicted;
                    }
                    auto patch = std::make_shared<ArgumentModel>();
                    patch->kind = ArgumentModel::Kind::kPsPatch;
                    patch->pre = pre_step_base_arg_;
                    patch->t_step_abs_s = t_ps_abs;
                    patch->a_ps_rad = a_ps;
                    arg_model = patch;
                    diag.a_ps_rad = patch->a_ps_rad;
                    if (!timelines_.empty() && !timelines_.back().ps_depth_abs_s)
                        timelines_.back().ps_depth_abs_s = diag.t_ub_abs_s;
                }
            } else {
                // Post-step ramp refit on the settled samples (guard-trimmed);
                // the fitted curve extends back to the step location.
                std::size_t fit_start = std::min(ub_local + cfg_.post_guard, L - 3);
                std::vector<double> post(phi.begin() + static_cast<std::ptrdiff_t>(fit_start),
                                         phi.end());
                FrFit pf = fr_fit_direct(post, ts, static_cast<double>(fit_start) * ts);
                note_cert(pf.certificate);
                auto post_model = std::make_shared<ArgumentModel>();
                post_model->kind = ArgumentModel::Kind::kFr;
                post_model->origin_abs_s = origin_abs;
                post_model->phase_base_rad = phase_base;
                post_model->beta = pf.beta;
                auto piece = std::make_shared<ArgumentModel>();
                piece->kind = ArgumentModel::Kind::kPiecewise;
                piece->pre = pre_step_base_arg_;
                piece->t_step_abs_s = phase_step ? t_ps_abs : t_as_abs;
                piece->post = post_model;
                arg_model = piece;
                rep.rho_fr = pf.residual;
                if (!timelines_.empty() && !timelines_.back().post_fr_report_abs_s)
                    timelines_.back().post_fr_report_abs_s = rep.t_report_abs_s;
            }
        }
        rep.argument = arg_model;

        if (!ev.t_ub) {
            rep.classification = "transitional";
        } else {
            // Label by estimated step depths once they exist; a disturbance
            // that trips a differential channel but leaves no depth (the
            // envelope dip of a pure phase step, say) is not that channel's
            // step.
            bool amp_sig = amp_step;
            if (diag.a_as) amp_sig = std::abs(*diag.a_as) >= cfg_.ss_am_depth;
            bool phase_sig = phase_step;
            if (diag.a_ps_rad) {
                phase_sig = std::abs(*diag.a_ps_rad) >= cfg_.ss_pm_depth_rad;
            } else if (arg_model->kind == ArgumentModel::Kind::kPiecewise) {
                double t = arg_model->t_step_abs_s;
                double jump = arg_model->post->value(t) - arg_model->pre->value(t);
                phase_sig = std::abs(std::remainder(jump, kTwoPi)) >= cfg_.ss_pm_depth_rad;
            }
            if (!amp_sig && !phase_sig) {
                amp_sig = amp_step;
                phase_sig = phase_step;
            }
            rep.classification = amp_sig && phase_sig ? "AS+PS" : amp_sig ? "AS" : "PS";
        }
        rep.step = diag;
    }

    void note_cert(double c) { max_cert_seen_ = std::max(max_cert_seen_, c); }

    PipelineConfig cfg_;
    GssCandidates cands_;
    BasisCache basis_;
    FrGramCache fr_cache_;
    std::unique_ptr<StreamingFir> fir_;
    std::vector<double> real_delay_;
    std::size_t delay_ = 0;
    std::size_t stride_ = 200;
    double t0_s_ = 0.0;

    UnwrapState unwrap_;
    FrAccumulator fr_acc_;
    StepMonitor monitor_;
    std::vector<double> env_ring_;
    std::vector<double> raw_ring_;

    std::size_t push_count_ = 0;
    std::size_t eff_count_ = 0;
    std::size_t report_count_ = 0;

    struct CleanModels {
        double window_end_abs_s;
        std::shared_ptr<const EnvelopeModel> envelope;
        std::shared_ptr<const ArgumentModel> argument;
    };
    std::shared_ptr<ReportedModel> prev_report_;
    std::deque<CleanModels> clean_history_;
    std::shared_ptr<const EnvelopeModel> pre_step_base_env_;
    std::shared_ptr<const ArgumentModel> pre_step_base_arg_;

    std::deque<double> noise_floor_;
    double max_cert_seen_ = 0.0;
    std::vector<StepTimeline> timelines_;
    std::function<void(const AnalyticSample&, double, long)> analytic_sink_;
};

// Bounded report queue: producer blocks when full (backpressure rather than
// dropped reports). One writer, one reader.
class ReportQueue {
  public:
    explicit ReportQueue(std::size_t capacity) : cap_(capacity) {}

    void push(ReportedModel r) {
        std::unique_lock lk(mu_);
        cv_pop_.wait(lk, [&] { return q_.size() < cap_ || closed_; });
        if (closed_) throw std::runtime_error("ReportQueue: push after close");
        q_.push_back(std::move(r));
        cv_push_.notify_one();
    }

    std::optional<ReportedModel> pop() {
        std::unique_lock lk(mu_);
        cv_push_.wait(lk, [&] { return !q_.empty() || closed_; });
        if (q_.empty()) return std::nullopt;
        ReportedModel r = std::move(q_.front());
        q_.pop_front();
        cv_pop_.notify_one();
        return r;
    }

    void close() {
        std::lock_guard lk(mu_);
        closed_ = true;
        cv_push_.notify_all();
        cv_pop_.notify_all();
    }

  private:
    std::size_t cap_;
    std::mutex mu_;
    std::condition_variable cv_push_, cv_pop_;
    std::deque<ReportedModel> q_;
    bool closed_ = false;
};

} // namespace fba
