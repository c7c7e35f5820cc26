#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fba/analytic.hpp"
#include "fba/stock_filters.hpp"
#include "oracles.hpp"

using namespace fba;

TEST_CASE("analytic pair extraction") {
    auto a = make_analytic(1.0, 0.0);
    CHECK(a.envelope == doctest::Approx(1.0));
    CHECK(a.arg_wrapped == doctest::Approx(0.0));
    auto b = make_analytic(0.0, -1.0);
    CHECK(b.envelope == doctest::Approx(1.0));
    CHECK(b.arg_wrapped == doctest::Approx(-kPi / 2.0));
    // boundary: atan2 returning -pi maps to +pi
    auto c = make_analytic(-1.0, -0.0);
    CHECK(c.arg_wrapped == doctest::Approx(kPi));
}

TEST_CASE("steady 50 Hz envelope through the high-performance cascade") {
    auto c = stock_cascade("H2");
    StreamingFir fir(c.composed);
    const double fs = 10000.0;
    std::vector<double> hist(c.composed.size(), 0.0);
    double worst = 0.0;
    for (std::size_t n = 0; n < 8000; ++n) {
        double x = std::cos(kTwoPi * 50.0 * (double)n / fs);
        hist[n % hist.size()] = x;
        double im = fir.push(x);
        if (n + 1 < c.composed.size()) continue;
        double re = hist[(n - c.group_delay) % hist.size()];
        worst = std::max(worst, std::abs(make_analytic(re, im).envelope - 1.0));
    }
    CHECK(worst < 0.0001 + 2.0 * c.composition_slack);
}

TEST_CASE("single wrap unwraps by 2 pi") {
    UnwrapState u(16);
    auto r1 = u.push(0.9 * kPi);
    CHECK(!r1.wrap_detected);
    CHECK(r1.unwrapped == doctest::Approx(0.9 * kPi));
    auto r2 = u.push(-0.9 * kPi);
    CHECK(r2.wrap_detected);
    CHECK(r2.wrap_direction == 1);
    CHECK(u.wrap_count() == 1);
    CHECK(r2.unwrapped == doctest::Approx(1.1 * kPi));
}

TEST_CASE("constant stream never wraps") {
    UnwrapState u(8);
    for (int i = 0; i < 50; ++i) {
        auto r = u.push(0.3);
        CHECK(!r.wrap_detected);
        CHECK(r.unwrapped == doctest::Approx(0.3));
    }
    CHECK(u.wrap_count() == 0);
}

TEST_CASE("50 Hz at 10 kHz holds three wraps in a 600-sample window") {
    UnwrapState u(600);
    const double fs = 10000.0;
    for (std::size_t n = 0; n < 1200; ++n) {
        double arg = std::remainder(kTwoPi * 50.0 * (double)n / fs, kTwoPi);
        if (arg <= -kPi) arg = kPi;
        u.push(arg);
    }
    // 600 samples cover 0.06 s = 3 cycles of 50 Hz
    CHECK(u.wrap_count() == 3);
}

TEST_CASE("wrap-clear events fire exactly window-length pushes after detection") {
    const std::size_t L = 32;
    UnwrapState u(L);
    std::size_t first_wrap = 0, first_clear = 0;
    for (std::size_t n = 0; n < 100; ++n) {
        double val = (n == 10) ? -0.95 * kPi : 0.9 * kPi; // one artificial wrap at push 10
        auto r = u.push(val);
        if (r.wrap_detected && first_wrap == 0) first_wrap = n;
        if (r.cleared && first_clear == 0) {
            first_clear = n;
            CHECK(r.cleared->detected_at == first_wrap);
        }
        if (n == 11) {
            // the jump back up is a forward (anomalous) wrap
            CHECK(u.anomalous_wraps() >= 1);
        }
    }
    CHECK(first_wrap == 10);
    CHECK(first_clear == first_wrap + L);
}

TEST_CASE("forward wraps are handled symmetrically") {
    UnwrapState u(16);
    u.push(-0.9 * kPi);
    auto r = u.push(0.9 * kPi); // forward jump of 1.8 pi
    CHECK(r.wrap_detected);
    CHECK(r.wrap_direction == -1);
    CHECK(u.wrap_count() == -1);
    CHECK(r.unwrapped == doctest::Approx(0.9 * kPi - kTwoPi));
    CHECK(u.anomalous_wraps() == 1);
}

TEST_CASE("materialized window differs from a batch unwrap by a global 2 pi multiple") {
    const std::size_t L = 200;
    UnwrapState u(L);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> un(0.0, 0.4);
    double phase = 0.0;
    std::vector<double> wrapped_hist;
    for (std::size_t n = 0; n < 900; ++n) {
        phase += un(rng);
        double w = std::remainder(phase, kTwoPi);
        if (w <= -kPi) w = kPi;
        u.push(w);
        wrapped_hist.push_back(w);
    }
    std::vector<double> win;
    u.materialize(win);
    std::vector<double> tail(wrapped_hist.end() - (std::ptrdiff_t)L, wrapped_hist.end());
    auto batch = oracle::batch_unwrap(tail);
    double offset = win[0] - batch[0];
    CHECK(std::remainder(offset, kTwoPi) == doctest::Approx(0.0).epsilon(1e-9));
    for (std::size_t l = 0; l < L; ++l)
        CHECK(win[l] - batch[l] == doctest::Approx(offset).epsilon(1e-12));
}

TEST_CASE("envelope and argument are exact functions of the pair") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> un(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        double re = un(rng), im = un(rng);
        auto a = make_analytic(re, im);
        CHECK(a.envelope == doctest::Approx(std::sqrt(re * re + im * im)).epsilon(1e-15));
        CHECK(a.envelope * std::cos(a.arg_wrapped) == doctest::Approx(re).epsilon(1e-12));
        CHECK(a.envelope * std::sin(a.arg_wrapped) == doctest::Approx(im).epsilon(1e-12));
        CHECK(a.arg_wrapped > -kPi);
        CHECK(a.arg_wrapped <= kPi);
    }
}
