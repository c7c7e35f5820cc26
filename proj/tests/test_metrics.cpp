#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "fba/metrics.hpp"
#include "oracles.hpp"

using namespace fba;

TEST_CASE("vector error basics") {
    CHECK(tve_pct(0.9, 0.3, 0.9, 0.3) == 0.0);
    // pure 1% amplitude error
    CHECK(tve_pct(0.909, 0.3, 0.9, 0.3) == doctest::Approx(1.0).epsilon(1e-9));
    // pure 0.01 rad phase error: 100*|e^{j0.01}-1|
    double expect = 100.0 * std::abs(std::polar(1.0, 0.01) - 1.0);
    CHECK(tve_pct(0.9, 0.31, 0.9, 0.3) == doctest::Approx(expect).epsilon(1e-9));
    CHECK(expect == doctest::Approx(1.0).epsilon(1e-4));
    CHECK_THROWS_AS((void)tve_pct(1.0, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("vector error is invariant to a common rotation") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> un(-kPi, kPi);
    for (int i = 0; i < 100; ++i) {
        double ea = 0.5 + 0.5 * (i % 7) / 7.0, ep = un(rng);
        double ra = 0.9, rp = un(rng), rot = un(rng);
        CHECK(tve_pct(ea, ep, ra, rp) ==
              doctest::Approx(tve_pct(ea, ep + rot, ra, rp + rot)).epsilon(1e-9));
    }
}

TEST_CASE("central-segment reconstruction error") {
    std::vector<double> in(600, 0.0), recon(600, 0.0);
    CHECK(tde_central(in, recon, 600, 200) == 0.0);
    for (auto& v : recon) v = 0.01;
    CHECK(tde_central(in, recon, 600, 200) == doctest::Approx(200 * 0.01).epsilon(1e-12));
    // additive over disjoint segments
    std::vector<double> recon2(600, 0.0);
    for (std::size_t i = 200; i < 300; ++i) recon2[i] = 0.02;
    for (std::size_t i = 300; i < 400; ++i) recon2[i] = 0.03;
    CHECK(tde_central(in, recon2, 600, 200) ==
          doctest::Approx(100 * 0.02 + 100 * 0.03).epsilon(1e-12));
    CHECK_THROWS_AS((void)tde_central(in, recon, 600, 700), std::invalid_argument);
}

TEST_CASE("differential rocof error cancels a constant frequency bias") {
    GroundTruthSpec s;
    s.a0 = 0.9;
    s.f0_hz = 50.0;
    PipelineConfig cfg;
    MetricsAccumulator acc(s, cfg);
    // hand-built reports with a constant +1 mHz bias
    for (int r = 0; r < 5; ++r) {
        ReportedModel rep;
        rep.index = r;
        rep.origin_abs_s = r * 0.02;
        rep.t_report_abs_s = rep.origin_abs_s + 0.03;
        auto env = std::make_shared<EnvelopeModel>();
        env->kind = EnvelopeModel::Kind::kConst;
        env->gamma = {0.9, 0.0, 0.0};
        auto arg = std::make_shared<ArgumentModel>();
        arg->kind = ArgumentModel::Kind::kFr;
        arg->origin_abs_s = rep.origin_abs_s;
        arg->beta = {0.0, kTwoPi * 50.001, 0.0};
        rep.envelope = env;
        rep.argument = arg;
        auto m = acc.consume(rep);
        CHECK(m.fe_hz == doctest::Approx(0.001).epsilon(1e-9));
        if (r > 0) CHECK(*m.rfe_hz_s == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("perfect tracking of a ramp gives zero FE and RFE") {
    GroundTruthSpec s;
    s.a0 = 0.9;
    s.f0_hz = 45.0;
    s.dynamics.push_back(FrTerm{5.0, 0.0});
    PipelineConfig cfg;
    MetricsAccumulator acc(s, cfg);
    for (int r = 0; r < 5; ++r) {
        ReportedModel rep;
        rep.index = r;
        rep.origin_abs_s = r * 0.02;
        rep.t_report_abs_s = rep.origin_abs_s + 0.03;
        auto env = std::make_shared<EnvelopeModel>();
        env->kind = EnvelopeModel::Kind::kConst;
        env->gamma = {0.9, 0.0, 0.0};
        auto arg = std::make_shared<ArgumentModel>();
        arg->kind = ArgumentModel::Kind::kFr;
        arg->origin_abs_s = 0.0;
        arg->beta = {0.0, kTwoPi * 45.0, kPi * 5.0};
        rep.envelope = env;
        rep.argument = arg;
        auto m = acc.consume(rep);
        CHECK(m.fe_hz < 1e-9);
        if (r > 0) CHECK(*m.rfe_hz_s < 1e-9);
        if (m.irfe_hz_s) CHECK(*m.irfe_hz_s < 1e-9);
    }
}

TEST_CASE("instantaneous rocof from the argument models") {
    ArgumentModel fr;
    fr.kind = ArgumentModel::Kind::kFr;
    fr.origin_abs_s = 0.0;
    fr.beta = {0.1, kTwoPi * 50.0, kPi * 7.0};
    CHECK(fr.rocof_hz_s(0.123) == doctest::Approx(7.0).epsilon(1e-12));

    ArgumentModel pm;
    pm.kind = ArgumentModel::Kind::kPm;
    pm.origin_abs_s = 0.0;
    pm.f_pm_hz = 4.0;
    pm.nu = {0.0, kTwoPi * 50.0, 0.2, 0.0};
    // rocof = -(2 pi f)^2 * 0.2 * sin(2 pi f t) / (2 pi)
    double t = 0.05;
    double expect = -std::pow(kTwoPi * 4.0, 2) * 0.2 * std::sin(kTwoPi * 4.0 * t) / kTwoPi;
    CHECK(pm.rocof_hz_s(t) == doctest::Approx(expect).epsilon(1e-12));
    // finite-difference cross-check of the frequency derivative
    double fd = oracle::central_diff([&](double tt) { return pm.freq_hz(tt); }, t, 1e-7);
    CHECK(pm.rocof_hz_s(t) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("interleaved step response refines each single-shift curve") {
    GroundTruthSpec s;
    s.a0 = 0.6;
    s.f0_hz = 50.0;
    s.dynamics.push_back(AsTerm{0.1, 1.0});
    PipelineConfig cfg;
    cfg.full_scale = 1.0;
    auto curve = srs_run(s, cfg, 1.6, std::nullopt, 5);
    REQUIRE(!curve.points.empty());
    CHECK(curve.amplitude_step);
    CHECK(curve.step_size == doctest::Approx(0.06).epsilon(1e-12));
    // exactly 10 shifts, and decimating by shift recovers per-shift curves
    std::array<int, 10> counts{};
    for (const auto& p : curve.points) counts[(std::size_t)p.shift_b]++;
    for (int b = 0; b < 10; ++b) CHECK(counts[(std::size_t)b] > 0);
    // points of one shift are spaced at the reporting period
    double prev = -1e9;
    for (const auto& p : curve.points) {
        if (p.shift_b != 3) continue;
        if (prev > -1e8) CHECK(p.t_rel_s - prev == doctest::Approx(0.02).epsilon(1e-6));
        prev = p.t_rel_s;
    }
    // interleaved spacing is ten times finer around the step
    std::vector<double> ts;
    for (const auto& p : curve.points)
        if (std::abs(p.t_rel_s) < 0.05) ts.push_back(p.t_rel_s);
    std::sort(ts.begin(), ts.end());
    for (std::size_t i = 1; i < ts.size(); ++i)
        CHECK(ts[i] - ts[i - 1] == doctest::Approx(0.002).epsilon(2e-2));
    REQUIRE(curve.delay_time_s.has_value());
    CHECK(std::abs(*curve.delay_time_s) < 0.002);
}

TEST_CASE("a step-free spec is rejected by the interleaved runner") {
    GroundTruthSpec s;
    s.a0 = 0.9;
    s.f0_hz = 50.0;
    PipelineConfig cfg;
    CHECK_THROWS_AS((void)srs_run(s, cfg, 1.0, std::nullopt, 1), std::invalid_argument);
}
