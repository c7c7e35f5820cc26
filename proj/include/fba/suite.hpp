#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fba/io.hpp"
#include "fba/metrics.hpp"
#include "fba/pipeline.hpp"
#include "fba/version.hpp"
#include "fba/wavegen.hpp"

namespace fba {

struct TestCase {
    std::string name;
    GroundTruthSpec spec;
    double duration_s = 5.0;
    std::optional<double> snr_db;
    std::uint64_t seed = 1;
    PipelineConfig pipeline;
    bool srs = false;
};

struct TestSuiteConfig {
    std::vector<TestCase> tests;
    int jobs = 1;
};

inline PipelineConfig pipeline_from_json(const nlohmann::json& j, PipelineConfig base = {}) {
    PipelineConfig c = base;
    c.fs_hz = j.value("fs_hz", c.fs_hz);
    c.window_len = j.value("window_len", c.window_len);
    c.frr_fps = j.value("frr_fps", c.frr_fps);
    c.gss_f_lo_hz = j.value("gss_f_lo_hz", c.gss_f_lo_hz);
    c.gss_f_hi_hz = j.value("gss_f_hi_hz", c.gss_f_hi_hz);
    c.gss_iterations = j.value("gss_iterations", c.gss_iterations);
    c.full_scale = j.value("full_scale", c.full_scale);
    c.eps_da_frac_fs = j.value("eps_da_frac_fs", c.eps_da_frac_fs);
    c.eps_dp_rad = j.value("eps_dp_rad", c.eps_dp_rad);
    c.mean_len_da = j.value("mean_len_da", c.mean_len_da);
    c.mean_len_dp = j.value("mean_len_dp", c.mean_len_dp);
    c.mean_len_amp = j.value("mean_len_amp", c.mean_len_amp);
    c.min_fr_samples = j.value("min_fr_samples", c.min_fr_samples);
    c.settle_dwell = j.value("settle_dwell", c.settle_dwell);
    if (j.contains("eps_fr_override")) c.eps_fr_override = j["eps_fr_override"].get<double>();
    c.filter = j.value("filter", c.filter);
    c.ss_am_depth = j.value("ss_am_depth", c.ss_am_depth);
    c.ss_pm_depth_rad = j.value("ss_pm_depth_rad", c.ss_pm_depth_rad);
    c.ss_fr_rate_hz_s = j.value("ss_fr_rate_hz_s", c.ss_fr_rate_hz_s);
    return c;
}

inline TestSuiteConfig suite_from_json(const nlohmann::json& j) {
    TestSuiteConfig cfg;
    cfg.jobs = j.value("jobs", 1);
    PipelineConfig base;
    if (j.contains("pipeline")) base = pipeline_from_json(j["pipeline"]);
    for (const auto& t : j.value("tests", nlohmann::json::array())) {
        TestCase tc;
        tc.name = t.at("name").get<std::string>();
        tc.spec = spec_from_json(t.at("spec"));
        tc.duration_s = t.value("duration_s", 5.0);
        if (t.contains("snr_db") && !t["snr_db"].is_null()) tc.snr_db = t["snr_db"].get<double>();
        tc.seed = t.value("seed", 1ull);
        tc.pipeline = t.contains("pipeline") ? pipeline_from_json(t["pipeline"], base) : base;
        tc.pipeline.full_scale = tc.spec.full_scale;
        tc.srs = t.value("srs", false);
        cfg.tests.push_back(std::move(tc));
    }
    // Output paths are <name>_reports.csv / <name>_metrics.csv; names must
    // therefore be unique.
    for (std::size_t i = 0; i < cfg.tests.size(); ++i)
        for (std::size_t k = i + 1; k < cfg.tests.size(); ++k)
            if (cfg.tests[i].name == cfg.tests[k].name)
                throw std::runtime_error("suite: duplicate test name '" + cfg.tests[i].name + "'");
    return cfg;
}

// --------------------------- CSV writers ------------------------------------

inline void write_report_header(std::ostream& out) {
    out << "# fba " << kVersion << " report stream; prng=" << kPrngName << "\n";
    out << "index,t_s,classification,f_am_hz,gamma0,gamma1,gamma2,f_pm_hz,nu0,nu1,nu2,nu3,"
           "beta0,beta1,beta2,f0_est_hz,rocof_est_hz_s,amp_center,arg_center_rad,"
           "rho_am,rho_pm,rho_fr,am_feasible,pm_feasible,phase_model,eps_fr,"
           "a_as,t_as_s,a_ps_rad,t_ps_s,a0_post,t_ub_s,step_kind,max_certificate\n";
}

inline void write_report_row(std::ostream& out, const ReportedModel& r) {
    auto opt = [](const std::optional<double>& v) { return v ? fmt_g17(*v) : std::string(); };
    const ArgumentModel& a = *r.argument;
    bool is_pm = a.kind == ArgumentModel::Kind::kPm;
    bool is_fr = a.kind == ArgumentModel::Kind::kFr;
    out << r.index << ',' << fmt_fixed(r.t_report_abs_s, 9) << ',' << r.classification << ','
        << (r.am_feasible ? fmt_g17(r.f_am_hz) : std::string()) << ','
        << fmt_g17(r.envelope->gamma[0]) << ',' << fmt_g17(r.envelope->gamma[1]) << ','
        << fmt_g17(r.envelope->gamma[2]) << ','
        << (is_pm ? fmt_g17(a.f_pm_hz) : std::string()) << ','
        << (is_pm ? fmt_g17(a.nu[0]) : std::string()) << ','
        << (is_pm ? fmt_g17(a.nu[1]) : std::string()) << ','
        << (is_pm ? fmt_g17(a.nu[2]) : std::string()) << ','
        << (is_pm ? fmt_g17(a.nu[3]) : std::string()) << ','
        << (is_fr ? fmt_g17(a.beta[0]) : std::string()) << ','
        << (is_fr ? fmt_g17(a.beta[1]) : std::string()) << ','
        << (is_fr ? fmt_g17(a.beta[2]) : std::string()) << ','
        << fmt_g17(r.freq_at(r.t_report_abs_s)) << ','
        << fmt_g17(r.rocof_at(r.t_report_abs_s)) << ','
        << fmt_g17(r.amplitude_at(r.t_report_abs_s)) << ','
        << fmt_g17(r.argument_at(r.t_report_abs_s)) << ','
        << fmt_g17(r.rho_am) << ',' << fmt_g17(r.rho_pm) << ',' << fmt_g17(r.rho_fr) << ','
        << (r.am_feasible ? 1 : 0) << ',' << (r.pm_feasible ? 1 : 0) << ','
        << (r.phase_choice == PhaseModelChoice::kFr ? "FR" : "PM") << ','
        << fmt_g17(r.eps_fr_used) << ',';
    if (r.step) {
        const auto& s = *r.step;
        out << opt(s.a_as) << ',' << fmt_fixed(s.t_step_amp_abs_s, 9) << ','
            << opt(s.a_ps_rad) << ',' << fmt_fixed(s.t_step_phase_abs_s, 9) << ','
            << opt(s.a0_post) << ','
            << (s.t_ub_abs_s ? fmt_fixed(*s.t_ub_abs_s, 9) : std::string()) << ','
            << (s.kind == StepEvent::Kind::kBoth
                    ? "both"
                    : s.kind == StepEvent::Kind::kAmplitude ? "amplitude" : "phase");
    } else {
        out << ",,,,,,";
    }
    out << ',' << fmt_g17(r.max_certificate) << "\n";
}

inline void write_metrics_header(std::ostream& out) {
    out << "# fba " << kVersion << " metrics; prng=" << kPrngName << "\n";
    out << "index,t_s,fe_hz,rfe_hz_s,tve_pct,irfe_hz_s,tde,classification\n";
}

inline void write_metrics_row(std::ostream& out, const MetricsRecord& m) {
    auto opt = [](const std::optional<double>& v) { return v ? fmt_g17(*v) : std::string(); };
    out << m.report_index << ',' << fmt_fixed(m.t_abs_s, 9) << ',' << fmt_g17(m.fe_hz) << ','
        << opt(m.rfe_hz_s) << ',' << fmt_g17(m.tve_pct) << ',' << opt(m.irfe_hz_s) << ','
        << opt(m.tde) << ',' << m.classification << "\n";
}

// --------------------------- test execution ---------------------------------

struct TestResult {
    std::string name;
    MetricsSummary summary;
    std::size_t reports = 0;
    std::size_t step_events = 0;
    double max_certificate = 0.0;
    std::optional<StepResponseCurve> srs;
    std::vector<std::string> classifications; // one per report
};

inline TestResult run_test(const TestCase& tc, const std::filesystem::path& outdir,
                           std::optional<std::uint64_t> seed_override = std::nullopt) {
    std::uint64_t seed = seed_override ? *seed_override : tc.seed;
    Waveform w = synthesize(tc.spec, tc.pipeline.fs_hz, tc.duration_s, tc.snr_db, seed);
    Pipeline pipe(tc.pipeline);
    MetricsAccumulator metrics(tc.spec, tc.pipeline);

    std::ofstream rep_out(outdir / (tc.name + "_reports.csv"));
    std::ofstream met_out(outdir / (tc.name + "_metrics.csv"));
    if (!rep_out || !met_out)
        throw std::runtime_error(tc.name + ": cannot open output files in " + outdir.string());
    write_report_header(rep_out);
    write_metrics_header(met_out);

    TestResult result;
    result.name = tc.name;
    for (double x : w.samples) {
        auto rep = pipe.ingest(x);
        if (!rep) continue;
        write_report_row(rep_out, *rep);
        auto m = metrics.consume(*rep);
        write_metrics_row(met_out, m);
        result.summary.add(m);
        result.classifications.push_back(rep->classification);
        ++result.reports;
    }
    result.summary.finalize();
    result.step_events = pipe.step_events().size();
    result.max_certificate = pipe.max_certificate_seen();
    met_out << "max," << ',' << fmt_g17(result.summary.max_fe) << ','
            << fmt_g17(result.summary.max_rfe) << ',' << fmt_g17(result.summary.max_tve) << ','
            << fmt_g17(result.summary.max_irfe) << ',' << fmt_g17(result.summary.max_tde) << ",\n";
    met_out << "mean," << ',' << fmt_g17(result.summary.mean_fe) << ','
            << fmt_g17(result.summary.mean_rfe) << ',' << fmt_g17(result.summary.mean_tve) << ','
            << fmt_g17(result.summary.mean_irfe) << ',' << fmt_g17(result.summary.mean_tde)
            << ",\n";

    if (tc.srs) {
        result.srs = srs_run(tc.spec, tc.pipeline, tc.duration_s, tc.snr_db, seed);
        std::ofstream srs_out(outdir / (tc.name + "_srs.csv"));
        srs_out << "# fba " << kVersion << " interleaved step response\n";
        srs_out << "t_rel_s,shift_b,fe_hz,rfe_hz_s,tve_pct,stepped_value\n";
        for (const auto& p : result.srs->points) {
            srs_out << fmt_fixed(p.t_rel_s, 9) << ',' << p.shift_b << ',' << fmt_g17(p.fe_hz)
                    << ',' << (p.rfe_hz_s ? fmt_g17(*p.rfe_hz_s) : std::string()) << ','
                    << fmt_g17(p.tve_pct) << ',' << fmt_g17(p.stepped_value) << "\n";
        }
    }
    return result;
}

struct SuiteOutcome {
    std::vector<TestResult> results;
    bool ok = true;
    std::vector<std::string> errors;
};

inline SuiteOutcome run_suite(const TestSuiteConfig& cfg, const std::filesystem::path& outdir,
                              std::optional<std::uint64_t> seed_override = std::nullopt,
                              int jobs_override = 0) {
    std::filesystem::create_directories(outdir);
    SuiteOutcome outcome;
    outcome.results.resize(cfg.tests.size());
    std::vector<char> done(cfg.tests.size(), 0);
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    int jobs = jobs_override > 0 ? jobs_override : cfg.jobs;
    jobs = std::max(1, jobs);

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= cfg.tests.size()) return;
            try {
                outcome.results[i] = run_test(cfg.tests[i], outdir, seed_override);
                done[i] = 1;
            } catch (const std::exception& e) {
                std::lock_guard lk(err_mu);
                outcome.ok = false;
                outcome.errors.push_back(cfg.tests[i].name + ": " + e.what());
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Summary in config order (Table-layout: one row per test family member).
    std::ofstream sum(outdir / "summary.csv");
    sum << "# fba " << kVersion << " suite summary; prng=" << kPrngName << "\n";
    sum << "test,reports,max_fe_hz,max_rfe_hz_s,max_tve_pct,max_irfe_hz_s,max_tde,"
           "mean_fe_hz,step_events,srs_max_fe_hz,srs_max_tve_pct,srs_delay_time_s,"
           "srs_overshoot_pct\n";
    nlohmann::json jsum = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.tests.size(); ++i) {
        if (!done[i]) continue;
        const auto& r = outcome.results[i];
        sum << r.name << ',' << r.reports << ',' << fmt_g17(r.summary.max_fe) << ','
            << fmt_g17(r.summary.max_rfe) << ',' << fmt_g17(r.summary.max_tve) << ','
            << fmt_g17(r.summary.max_irfe) << ',' << fmt_g17(r.summary.max_tde) << ','
            << fmt_g17(r.summary.mean_fe) << ',' << r.step_events << ',';
        if (r.srs) {
            sum << fmt_g17(r.srs->max_fe_hz) << ',' << fmt_g17(r.srs->max_tve_pct) << ','
                << (r.srs->delay_time_s ? fmt_g17(*r.srs->delay_time_s) : std::string()) << ','
                << fmt_g17(r.srs->overshoot_pct);
        } else {
            sum << ",,,";
        }
        sum << "\n";
        nlohmann::json jt;
        jt["test"] = r.name;
        jt["reports"] = r.reports;
        jt["max_fe_hz"] = r.summary.max_fe;
        jt["max_rfe_hz_s"] = r.summary.max_rfe;
        jt["max_tve_pct"] = r.summary.max_tve;
        jt["max_tde"] = r.summary.max_tde;
        jt["step_events"] = r.step_events;
        jt["max_certificate"] = r.max_certificate;
        if (r.srs) {
            jt["srs_max_fe_hz"] = r.srs->max_fe_hz;
            jt["srs_max_tve_pct"] = r.srs->max_tve_pct;
            if (r.srs->delay_time_s) jt["srs_delay_time_s"] = *r.srs->delay_time_s;
            jt["srs_overshoot_pct"] = r.srs->overshoot_pct;
        }
        jsum.push_back(jt);
    }
    std::ofstream jd(outdir / "summary.json");
    jd << jsum.dump(2) << "\n";
    return outcome;
}

// Analyze an externally provided recording: reports only, no metrics.
inline std::size_t analyze_file(const std::string& wave_path, const PipelineConfig& cfg_in,
                                const std::string& out_csv) {
    LoadedWaveform lw = load_waveform_text(wave_path);
    PipelineConfig cfg = cfg_in;
    cfg.fs_hz = lw.waveform.fs_hz;
    cfg.full_scale = lw.waveform.full_scale;
    Pipeline pipe(cfg);
    pipe.set_start_time(lw.waveform.t0_s);
    std::ofstream out(out_csv);
    if (!out) throw std::runtime_error("cannot open " + out_csv + " for writing");
    write_report_header(out);
    std::size_t n = 0;
    for (double x : lw.waveform.samples) {
        auto rep = pipe.ingest(x);
        if (rep) {
            write_report_row(out, *rep);
            ++n;
        }
    }
    return n;
}

// The stock test set: steady-state, modulation, ramp, and step families plus
// the two multidynamic cases, at the standard amplitudes and sweeps.
inline TestSuiteConfig default_suite(std::optional<double> snr_db = 60.0) {
    TestSuiteConfig cfg;
    cfg.jobs = 2;
    auto add = [&](const std::string& name, GroundTruthSpec spec, double dur, bool srs = false,
                   std::optional<double> snr = std::nullopt) {
        TestCase tc;
        tc.name = name;
        tc.spec = std::move(spec);
        tc.duration_s = dur;
        tc.snr_db = snr ? snr : snr_db;
        tc.seed = 1 + cfg.tests.size();
        tc.pipeline.full_scale = tc.spec.full_scale;
        tc.srs = srs;
        cfg.tests.push_back(std::move(tc));
    };

    for (int f0 = 45; f0 <= 55; ++f0) {
        GroundTruthSpec s;
        s.a0 = 0.9;
        s.f0_hz = f0;
        add("ss_f" + std::to_string(f0), s, 5.0);
    }
    for (double depth : {0.1, 0.5}) {
        for (int i = 0; i < 10; ++i) {
            double fm = 0.1 + 0.5 * i;
            GroundTruthSpec s;
            s.a0 = 0.6;
            s.f0_hz = 50.0;
            s.dynamics.push_back(AmTerm{depth, fm, std::nullopt});
            std::ostringstream nm;
            nm << "am_d" << static_cast<int>(depth * 100) << "_f" << fm;
            add(nm.str(), s, 5.0);
        }
    }
    for (double depth : {0.1, 0.5}) {
        for (int i = 0; i < 10; ++i) {
            double fm = 0.1 + 0.5 * i;
            GroundTruthSpec s;
            s.a0 = 0.9;
            s.f0_hz = 50.0;
            s.dynamics.push_back(PmTerm{depth, fm, std::nullopt});
            std::ostringstream nm;
            nm << "pm_d" << depth << "_f" << fm;
            add(nm.str(), s, 5.0);
        }
    }
    for (double rate : {1.0, 5.0, 10.0}) {
        GroundTruthSpec s;
        s.a0 = 0.9;
        s.f0_hz = 45.0;
        s.dynamics.push_back(FrTerm{rate, 0.0});
        double dur = 10.0 / rate + 0.5;
        add("fr_r" + std::to_string(static_cast<int>(rate)), s, dur);
    }
    {
        GroundTruthSpec s;
        s.a0 = 0.6;
        s.f0_hz = 50.0;
        s.dynamics.push_back(AsTerm{0.1, 1.0});
        add("as_step", s, 2.0, true);
        cfg.tests.back().snr_db.reset(); // step timing is evaluated noiseless
    }
    {
        GroundTruthSpec s;
        s.a0 = 0.6;
        s.f0_hz = 50.0;
        s.dynamics.push_back(PsTerm{kPi / 18.0, 1.0});
        add("ps_step", s, 2.0, true);
        cfg.tests.back().snr_db.reset();
    }
    {
        GroundTruthSpec s;
        s.a0 = 0.6;
        s.f0_hz = 50.0;
        s.dynamics.push_back(AmTerm{0.1, 5.0, std::nullopt});
        s.dynamics.push_back(PmTerm{0.1, 5.0, std::nullopt});
        add("multi_ampm", s, 5.0);
    }
    {
        GroundTruthSpec s;
        s.a0 = 0.6;
        s.f0_hz = 50.0;
        s.dynamics.push_back(AsTerm{0.1, 1.0});
        s.dynamics.push_back(PsTerm{kPi / 18.0, 1.0});
        s.dynamics.push_back(FrTerm{3.0, 1.0});
        add("multi_step_fr", s, 2.5, false);
        cfg.tests.back().snr_db.reset();
    }
    return cfg;
}

inline nlohmann::json suite_to_json(const TestSuiteConfig& cfg) {
    nlohmann::json j;
    j["jobs"] = cfg.jobs;
    j["tests"] = nlohmann::json::array();
    for (const auto& t : cfg.tests) {
        nlohmann::json jt;
        jt["name"] = t.name;
        jt["spec"] = to_json(t.spec);
        jt["duration_s"] = t.duration_s;
        if (t.snr_db) jt["snr_db"] = *t.snr_db;
        jt["seed"] = t.seed;
        jt["srs"] = t.srs;
        j["tests"].push_back(jt);
    }
    return j;
}

} // namespace fba
