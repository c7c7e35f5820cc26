// Batch driver: synthesize test waveforms, run the analysis pipeline, and
// emit report/metrics/summary files.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fba/io.hpp"
#include "fba/stock_filters.hpp"
#include "fba/suite.hpp"
#include "fba/version.hpp"

using namespace fba;

int main(int argc, char** argv) {
    CLI::App app{"fba - functional basis analysis of power-system waveforms"};
    app.set_version_flag("--version", std::string("fba ") + kVersion);
    app.require_subcommand(1);

    // ---- suite ----
    auto* suite_cmd = app.add_subcommand("suite", "run a test suite from a JSON config");
    std::string suite_config, suite_out = "out";
    std::uint64_t suite_seed = 0;
    bool suite_seed_set = false;
    int suite_jobs = 0;
    bool emit_default = false;
    suite_cmd->add_option("--config", suite_config, "suite config JSON (omit for the bundled default)");
    suite_cmd->add_option("--out", suite_out, "output directory")->required();
    suite_cmd->add_option("--seed", suite_seed, "override every test seed")
        ->each([&](const std::string&) { suite_seed_set = true; });
    suite_cmd->add_option("--jobs", suite_jobs, "worker threads (default from config)");
    suite_cmd->add_flag("--emit-default-config", emit_default,
                        "write the bundled default suite config to --out and exit");

    // ---- analyze ----
    auto* an_cmd = app.add_subcommand("analyze", "analyze a recorded waveform file");
    std::string an_input, an_out = "reports.csv", an_cfg;
    an_cmd->add_option("--input", an_input, "waveform file (fba-waveform text format)")->required();
    an_cmd->add_option("--out", an_out, "report CSV path");
    an_cmd->add_option("--config", an_cfg, "pipeline config JSON");

    // ---- synth ----
    auto* syn_cmd = app.add_subcommand("synth", "synthesize a waveform from a spec");
    std::string syn_spec, syn_out = "wave.txt";
    double syn_fs = 10000.0, syn_dur = 1.0;
    double syn_snr = -1.0;
    std::uint64_t syn_seed = 1;
    syn_cmd->add_option("--spec", syn_spec, "ground-truth spec JSON file")->required();
    syn_cmd->add_option("--out", syn_out, "output waveform path");
    syn_cmd->add_option("--fs", syn_fs, "sampling rate, Hz");
    syn_cmd->add_option("--duration", syn_dur, "duration, s");
    syn_cmd->add_option("--snr-db", syn_snr, "additive noise SNR in dB (<0 for noiseless)");
    syn_cmd->add_option("--seed", syn_seed, "noise seed");

    // ---- design ----
    auto* de_cmd = app.add_subcommand("design", "design an equiripple Hilbert filter");
    std::size_t de_len = 27;
    double de_edge_pi = 0.01;
    std::string de_out = "filter.txt", de_cascade;
    de_cmd->add_option("--length", de_len, "filter length (odd: type III, even: type IV)");
    de_cmd->add_option("--edge-pi", de_edge_pi, "band edge as a fraction of pi");
    de_cmd->add_option("--cascade", de_cascade, "emit a stock cascade (H1 or H2) instead");
    de_cmd->add_option("--out", de_out, "coefficient file path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (suite_cmd->parsed()) {
            std::filesystem::create_directories(suite_out);
            if (emit_default) {
                std::ofstream out(std::filesystem::path(suite_out) / "default_suite.json");
                out << suite_to_json(default_suite()).dump(2) << "\n";
                std::cout << "wrote " << suite_out << "/default_suite.json\n";
                return 0;
            }
            TestSuiteConfig cfg;
            if (suite_config.empty()) {
                cfg = default_suite();
            } else {
                std::ifstream in(suite_config);
                if (!in) throw std::runtime_error("cannot open config " + suite_config);
                cfg = suite_from_json(nlohmann::json::parse(in));
            }
            auto outcome = run_suite(cfg, suite_out,
                                     suite_seed_set ? std::optional<std::uint64_t>(suite_seed)
                                                    : std::nullopt,
                                     suite_jobs);
            for (const auto& e : outcome.errors) std::cerr << "error: " << e << "\n";
            std::cout << (outcome.ok ? "suite complete: " : "suite FAILED: ")
                      << outcome.results.size() << " tests, artifacts in " << suite_out << "\n";
            return outcome.ok ? 0 : 1;
        }
        if (an_cmd->parsed()) {
            PipelineConfig cfg;
            if (!an_cfg.empty()) {
                std::ifstream in(an_cfg);
                if (!in) throw std::runtime_error("cannot open config " + an_cfg);
                cfg = pipeline_from_json(nlohmann::json::parse(in));
            }
            std::size_t n = analyze_file(an_input, cfg, an_out);
            std::cout << "wrote " << n << " reports to " << an_out << "\n";
            return 0;
        }
        if (syn_cmd->parsed()) {
            std::ifstream in(syn_spec);
            if (!in) throw std::runtime_error("cannot open spec " + syn_spec);
            GroundTruthSpec spec = spec_from_json(nlohmann::json::parse(in));
            std::optional<double> snr;
            if (syn_snr >= 0.0) snr = syn_snr;
            Waveform w = synthesize(spec, syn_fs, syn_dur, snr, syn_seed);
            save_waveform_text(w, &spec, syn_out);
            std::cout << "wrote " << w.samples.size() << " samples to " << syn_out << "\n";
            return 0;
        }
        if (de_cmd->parsed()) {
            if (!de_cascade.empty()) {
                CascadeHilbertFilter c = stock_cascade(de_cascade);
                FirHilbertFilter composed;
                composed.coeffs = c.composed;
                composed.parity = FirParity::kTypeIII;
                composed.band_lo_rad = c.band_lo_rad;
                composed.band_hi_rad = c.band_hi_rad;
                composed.delta = c.prototype_ripple;
                save_filter_text(composed,
                                 "ft-cascade Lp=" + std::to_string(c.prototype.length()) +
                                     " Lg=" + std::to_string(c.subfilter.length()) +
                                     " delay=" + std::to_string(c.group_delay),
                                 de_out);
                std::cout << "wrote cascade " << de_cascade << " (delay " << c.group_delay
                          << ") to " << de_out << "\n";
                return 0;
            }
            FirHilbertFilter f = design_equiripple(de_len, de_edge_pi * kPi);
            save_filter_text(f, "remez-exchange", de_out);
            std::cout << "wrote length-" << de_len << " filter (ripple " << f.delta << ") to "
                      << de_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
