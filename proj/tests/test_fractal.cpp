#include "durstat/error.hpp"
#include "durstat/fractal.hpp"
#include "durstat/intraday.hpp"
#include "durstat/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace durstat;

namespace {

// r.m.s. residual of a*t^2 after a least-squares line over s consecutive points
double quadratic_residual(double a, double s) { return std::abs(a) * std::sqrt((s * s - 1) * (s * s - 4) / 180.0); }

}  // namespace

TEST_CASE("profile") {
    CHECK(profile(std::vector<double>{1, 2, 3}) == std::vector<double>{1, 3, 6});
    CHECK(profile(std::vector<double>(5, 0.0)) == std::vector<double>(5, 0.0));
    const auto x = gen_weibull_iid({0.41, 0.67}, 1000, 1);
    const auto y = profile(x);
    CHECK(y[0] == x[0]);
    for (std::size_t i = 1; i < x.size(); ++i) CHECK(y[i] - y[i - 1] == doctest::Approx(x[i]).epsilon(1e-12));
}

TEST_CASE("scale grid") {
    const auto g = make_scale_grid(1 << 16);
    CHECK(g.front() == 20);
    CHECK(g.back() == (1 << 16) / 4);
    CHECK(g.size() <= 30);
    CHECK(g.size() >= 25);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    const auto small = make_scale_grid(80);
    CHECK(small == std::vector<std::size_t>{20});
    CHECK_THROWS_AS(make_scale_grid(79), InvalidArgument);
    CHECK_THROWS_AS(dfa(std::vector<double>(79, 1.0)), InvalidArgument);
}

TEST_CASE("linear profile detrends to zero") {
    std::vector<double> y(500);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 3.0 - 0.25 * static_cast<double>(i);
    for (auto r : segment_fluctuations(y, 37, 1)) CHECK(r < 1e-12);
}

TEST_CASE("window tiling from both ends") {
    // windows of 30 over 100 points: [1,90] from the start and [11,100] from the end
    std::vector<double> y(100, 0.0);
    y[94] = 1.0;  // point 95 lies only in the trailing tiling
    const auto r = segment_fluctuations(y, 30, 1);
    REQUIRE(r.size() == 6);
    for (int k = 0; k < 3; ++k) CHECK(r[k] == 0.0);
    CHECK(r[3] > 0.0);
    CHECK(r[4] == 0.0);
    CHECK(r[5] == 0.0);
    y[94] = 0.0;
    y[5] = 1.0;  // point 6 lies only in the leading tiling
    const auto r2 = segment_fluctuations(y, 30, 1);
    CHECK(r2[0] > 0.0);
    for (int k = 1; k < 6; ++k) CHECK(r2[k] == 0.0);
    CHECK_THROWS_AS(segment_fluctuations(y, 101, 1), InvalidArgument);
    CHECK_THROWS_AS(segment_fluctuations(y, 2, 1), InvalidArgument);
}

TEST_CASE("quadratic residual matches the closed form") {
    std::vector<double> y(1000);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.3 * static_cast<double>(i * i) + 2.0 * i;
    for (std::size_t s : {20u, 33u, 100u}) {
        const auto r = segment_fluctuations(y, s, 1);
        for (double v : r) CHECK(v == doctest::Approx(quadratic_residual(0.3, static_cast<double>(s))).epsilon(1e-7));
    }
    // order 2 removes it
    for (double v : segment_fluctuations(y, 50, 2)) CHECK(v < 1e-6);
}

TEST_CASE("fluctuation function") {
    const std::vector<double> r{0.5, 1.0, 2.0, 4.0};
    double ms = 0.0;
    for (double v : r) ms += v * v;
    CHECK(fluctuation_function(r, 2.0) == doctest::Approx(std::sqrt(ms / 4.0)).epsilon(1e-14));

    const std::vector<double> c(7, 1.7);
    for (double q : {-6.0, -1.0, -0.5, 0.0, 0.5, 2.0, 6.0}) CHECK(fluctuation_function(c, q) == doctest::Approx(1.7));

    const std::vector<double> z{1.0, 0.0, 2.0};
    CHECK(fluctuation_function(z, 2.0) > 0.0);
    try {
        (void)fluctuation_function(z, -1.0);
        FAIL("expected a singular-window error");
    } catch (const SingularWindowError& e) {
        CHECK(e.window() == 1);
    }
    CHECK_THROWS_AS(fluctuation_function(z, 0.0), SingularWindowError);
}

TEST_CASE("q to zero limit") {
    const auto y = profile(gen_fgn(0.5, 1 << 14, 3));
    for (std::size_t s : {20u, 200u}) {
        const auto r = segment_fluctuations(y, s, 1);
        const double f0 = fluctuation_function(r, 0.0);
        const double fp = fluctuation_function(r, 1e-4);
        const double fm = fluctuation_function(r, -1e-4);
        // the symmetric limit is second order in q
        CHECK(std::abs(std::sqrt(fp * fm) / f0 - 1.0) < 1e-6);
        // each side differs by the first-order term f0 * q * var(ln r) / 2
        double m = 0.0, v = 0.0;
        for (double x : r) m += std::log(x) / r.size();
        for (double x : r) v += (std::log(x) - m) * (std::log(x) - m) / r.size();
        CHECK(std::abs((fp / f0 - 1.0) - 0.5e-4 * v) < 1e-8);
        CHECK(std::abs((fm / f0 - 1.0) + 0.5e-4 * v) < 1e-8);
    }
}

TEST_CASE("fluctuation function grows with q") {
    const auto y = profile(gen_longmem_weibull({1.0, 0.67}, 0.8, 4096, 4));
    const auto r = segment_fluctuations(y, 64, 1);
    const auto q = default_q_grid();
    for (std::size_t i = 1; i < q.size(); ++i)
        CHECK(fluctuation_function(r, q[i]) >= fluctuation_function(r, q[i - 1]) * (1 - 1e-14));
}

TEST_CASE("scaling exponent of an exact power law") {
    const auto s = make_scale_grid(4096);
    std::vector<double> f(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) f[i] = 2.5 * std::pow(static_cast<double>(s[i]), 0.9);
    const auto fit = scaling_exponent(s, f);
    CHECK(fit.exponent == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(fit.std_error < 1e-12);
    f[2] = 0.0;
    CHECK_THROWS_AS(scaling_exponent(s, f), InvalidArgument);
    CHECK_THROWS_AS(scaling_exponent(std::vector<std::size_t>{20, 30, 40, 50}, std::vector<double>{1, 2, 3, 4}),
                    InvalidArgument);
}

TEST_CASE("DFA of white noise and of fGn") {
    double white = 0.0, fgn = 0.0;
    for (std::uint64_t t = 0; t < 20; ++t) {
        white += dfa(gen_fgn(0.5, 1 << 16, 10 + t)).hurst / 20.0;
        const double h = dfa(gen_fgn(0.9, 1 << 16, 50 + t)).hurst;
        CHECK(h >= 0.85);
        CHECK(h <= 0.95);
        fgn += h / 20.0;
    }
    CHECK(std::abs(white - 0.5) < 0.02);
    CHECK(std::abs(fgn - 0.9) < 0.02);
}

TEST_CASE("MF-DFA h(2) is the DFA exponent") {
    const auto x = gen_longmem_weibull({0.41, 0.67}, 0.8, 20000, 5);
    const auto d = dfa(x);
    const auto m = mfdfa(x);
    const auto& q = m.surface.q;
    const auto i2 = static_cast<std::size_t>(std::find(q.begin(), q.end(), 2.0) - q.begin());
    REQUIRE(i2 < q.size());
    CHECK(m.h[i2] == d.hurst);
    CHECK(m.hurst == d.hurst);
    CHECK(m.hurst_std_error == d.std_error);
    for (std::size_t si = 0; si < d.scales.size(); ++si) CHECK(m.surface.at(i2, si) == d.fluctuation[si]);
}

TEST_CASE("default q grid") {
    CHECK(default_q_grid() ==
          std::vector<double>{-6, -5, -4, -3, -2, -1, -0.5, 0, 0.5, 1, 2, 3, 4, 5, 6});
    CHECK(make_q_grid(-2, 3) == std::vector<double>{-2, -1, -0.5, 0, 0.5, 1, 2, 3});
}

TEST_CASE("fGn is monofractal") {
    const auto m = mfdfa(gen_fgn(0.8, 1 << 16, 6));
    const auto [lo, hi] = std::minmax_element(m.h.begin(), m.h.end());
    CHECK(*hi - *lo < 0.1);
    const double mean = std::accumulate(m.h.begin(), m.h.end(), 0.0) / static_cast<double>(m.h.size());
    for (double h : m.h) CHECK(std::abs(h - mean) < 0.05);
}

TEST_CASE("binomial cascade exponents and width") {
    const auto m = mfdfa(gen_binomial_cascade(0.3, 16, 7, true));
    for (std::size_t i = 0; i < m.h.size(); ++i) {
        const double q = m.surface.q[i];
        if (q == 0.0) continue;
        CHECK(std::abs(m.h[i] - cascade_hurst(0.3, q)) < 0.05);
    }
    CHECK(std::abs(m.spectrum.width - std::log2(7.0 / 3.0)) < 0.1);
    CHECK(m.spectrum.width >= 0.0);
    for (double f : m.spectrum.f) CHECK(f <= 1.0 + 1e-9);
    CHECK(*std::max_element(m.spectrum.f.begin(), m.spectrum.f.end()) == doctest::Approx(1.0));
}

TEST_CASE("Legendre transform") {
    const auto q = default_q_grid();
    const auto flat = legendre_spectrum(q, std::vector<double>(q.size(), 0.7));
    for (std::size_t i = 0; i < q.size(); ++i) {
        CHECK(flat.alpha[i] == doctest::Approx(0.7));
        CHECK(flat.f[i] == 1.0);
    }
    CHECK(flat.width == 0.0);
    CHECK(flat.monotone);

    // h = a + b/q has alpha = a; finite differences make it approximate
    std::vector<double> fine, h;
    for (double v = 1.0; v <= 6.0 + 1e-9; v += 0.01) {
        fine.push_back(v);
        h.push_back(0.6 + 0.3 / v);
    }
    const auto sp = legendre_spectrum(fine, h);
    for (std::size_t i = 1; i + 1 < fine.size(); ++i) CHECK(std::abs(sp.alpha[i] - 0.6) < 1e-4);

    std::vector<double> wobble(q.size(), 0.7);
    wobble[3] = 0.9;
    CHECK_FALSE(legendre_spectrum(q, wobble).monotone);
    CHECK_THROWS_AS(legendre_spectrum(std::vector<double>{1, 2}, std::vector<double>{1, 1}), InvalidArgument);
}

TEST_CASE("reversal") {
    const auto x = gen_longmem_weibull({1.0, 0.67}, 0.8, 5000, 8);
    const auto y = profile(x);
    std::vector<double> yr(y.rbegin(), y.rend());
    for (std::size_t s : {20u, 111u, 1250u}) {
        for (double q : {-4.0, 0.0, 2.0, 5.0}) {
            const double a = fluctuation_function(segment_fluctuations(y, s, 1), q);
            const double b = fluctuation_function(segment_fluctuations(yr, s, 1), q);
            CHECK(a == doctest::Approx(b).epsilon(1e-10));
        }
    }
    // reversing the series itself shifts the profile by one sample
    std::vector<double> xr(x.rbegin(), x.rend());
    const auto a = dfa(x);
    const auto b = dfa(xr);
    for (std::size_t i = 0; i < a.scales.size(); ++i) CHECK(a.fluctuation[i] == doctest::Approx(b.fluctuation[i]).epsilon(0.05));
    CHECK(std::abs(a.hurst - b.hurst) < 0.02);
}

TEST_CASE("intraday modulation barely moves the exponent") {
    StreamSpec spec;
    spec.days = 20;
    spec.hurst = 0.8;
    spec.modulation = 0.5;
    spec.seed = 9;
    const auto ds = compute_durations(gen_event_stream(spec));
    const auto adjusted = adjust_durations(ds, intraday_mean_profile(ds, 20));
    CHECK(std::abs(dfa(ds.durations).hurst - dfa(adjusted.durations).hurst) < 0.03);
}
