#include "durstat/error.hpp"
#include "durstat/fit.hpp"
#include "durstat/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace durstat;

TEST_CASE("Weibull MLE recovers the generator") {
    const auto x = gen_weibull_iid({0.41, 0.67}, 100000, 1);
    const auto f = fit_weibull_mle(x);
    CHECK(std::abs(f.weibull().scale - 0.41) < 0.01);
    CHECK(std::abs(f.weibull().shape - 0.67) < 0.01);
    CHECK(f.chi >= 0.0);
    CHECK(f.sample_size == x.size());
}

TEST_CASE("Weibull MLE on exponential data") {
    const auto f = fit_weibull_mle(gen_poisson_durations(2.0, 100000, 4));
    CHECK(std::abs(f.weibull().shape - 1.0) < 0.01);
    CHECK(f.weibull().scale == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("Weibull MLE is scale equivariant") {
    const auto x = gen_weibull_iid({0.41, 0.67}, 20000, 5);
    const auto base = fit_weibull_mle(x);
    for (double c : {1e-3, 3.7, 250.0}) {
        std::vector<double> y(x.size());
        std::transform(x.begin(), x.end(), y.begin(), [c](double v) { return c * v; });
        const auto f = fit_weibull_mle(y);
        CHECK(f.weibull().shape == doctest::Approx(base.weibull().shape).epsilon(1e-8));
        CHECK(f.weibull().scale == doctest::Approx(c * base.weibull().scale).epsilon(1e-8));
    }
}

TEST_CASE("fit input checks") {
    CHECK_THROWS_AS(fit_weibull_mle(std::vector<double>(50, 1.0)), InvalidArgument);
    auto x = gen_weibull_iid({1.0, 1.0}, 500, 6);
    x[10] = -1.0;
    CHECK_THROWS_AS(fit_qexp_mle(x), InvalidArgument);
    x[10] = 0.0;
    CHECK_THROWS_AS(fit_weibull_mle(x), InvalidArgument);
}

TEST_CASE("q-exponential MLE recovers the generator") {
    const auto x = gen_qexp_iid({0.24, 1.67}, 100000, 7);
    const auto f = fit_qexp_mle(x);
    CHECK(std::abs(f.qexp().scale - 0.24) < 0.01);
    CHECK(std::abs(f.qexp().q - 1.67) < 0.02);
}

TEST_CASE("q-exponential MLE on exponential data") {
    const auto f = fit_qexp_mle(gen_poisson_durations(1.0 / 0.8, 100000, 8));
    CHECK(f.qexp().q <= 1.05);
    CHECK(f.qexp().scale == doctest::Approx(0.8).epsilon(0.03));
}

TEST_CASE("NLSE recovers Weibull parameters from a binned sample") {
    const auto x = gen_weibull_iid({0.41, 0.67}, 1000000, 9);
    const auto f = fit_weibull_nlse(empirical_density(x));
    CHECK(std::abs(f.weibull().scale - 0.41) < 0.03);
    CHECK(std::abs(f.weibull().shape - 0.67) < 0.03);
}

TEST_CASE("NLSE is exact on noiseless densities") {
    const WeibullParams w{0.41, 0.67};
    const auto dw = tabulate_density([&](double t) { return weibull_pdf(t, w); }, 1e-3, 10.0);
    const auto fw = fit_weibull_nlse(dw);
    CHECK(fw.chi < 1e-8);
    CHECK(fw.weibull().scale == doctest::Approx(0.41).epsilon(1e-6));
    CHECK(fw.weibull().shape == doctest::Approx(0.67).epsilon(1e-6));

    const QExpParams q{0.24, 1.67};
    const auto dq = tabulate_density([&](double t) { return qexp_pdf(t, q); }, 1e-3, 100.0);
    const auto fq = fit_qexp_nlse(dq);
    CHECK(fq.chi < 1e-8);
    CHECK(fq.qexp().scale == doctest::Approx(0.24).epsilon(1e-6));
    CHECK(fq.qexp().q == doctest::Approx(1.67).epsilon(1e-6));
}

TEST_CASE("NLSE needs ten occupied bins") {
    const auto d = tabulate_density([](double t) { return std::exp(-t); }, 1.0, 2.0);
    CHECK_THROWS_AS(fit_weibull_nlse(d), InvalidArgument);
}

TEST_CASE("tail truncation pulls MLE and NLSE shapes apart") {
    // Losing the top 1% lightens the tail: the MLE shape rises while the
    // least-squares fit bends down to the depleted last bins.
    const auto x = gen_weibull_iid({0.41, 0.67}, 200000, 10);
    const double cut = 0.41 * std::pow(-std::log(0.01), 1.0 / 0.67);
    std::vector<double> kept;
    for (double v : x)
        if (v < cut) kept.push_back(v);
    const double mle_full = fit_weibull_mle(x).weibull().shape;
    const double nlse_full = fit_weibull_nlse(empirical_density(x)).weibull().shape;
    const double mle = fit_weibull_mle(kept).weibull().shape;
    const double nlse = fit_weibull_nlse(empirical_density(kept)).weibull().shape;
    CHECK(mle > mle_full + 0.01);
    CHECK(nlse < nlse_full - 0.005);
    CHECK(mle - nlse > mle_full - nlse_full + 0.03);
}

TEST_CASE("chi prefers the generating family") {
    int weibull_wins = 0, qexp_wins = 0;
    for (std::uint64_t t = 0; t < 20; ++t) {
        const auto w = gen_weibull_iid({0.41, 0.67}, 20000, 1000 + t);
        if (fit_weibull_mle(w).chi < fit_qexp_mle(w).chi) ++weibull_wins;
        const auto q = gen_qexp_iid({0.24, 1.67}, 20000, 2000 + t);
        if (fit_qexp_mle(q).chi < fit_weibull_mle(q).chi) ++qexp_wins;
    }
    CHECK(weibull_wins >= 19);
    CHECK(qexp_wins >= 19);
}

TEST_CASE("chi is infinite when the fitted density underflows") {
    auto q = gen_qexp_iid({0.24, 1.67}, 20000, 3000);
    q.push_back(1e6);
    const auto w = fit_weibull_mle(q);
    CHECK(std::isinf(w.chi));
    CHECK(std::isfinite(fit_qexp_mle(q).chi));
    CHECK_THROWS_AS(residual_rms(empirical_density(q, 20, 1), w.model()), NumericError);
}

TEST_CASE("dispatcher and names") {
    CHECK(parse_family("qexp") == Family::qexp);
    CHECK(parse_estimator("nlse") == Estimator::nlse);
    CHECK_THROWS_AS(parse_family("gamma"), InvalidArgument);
    const auto x = gen_weibull_iid({0.41, 0.67}, 5000, 11);
    const auto f = fit(x, Family::weibull, Estimator::nlse);
    CHECK(f.estimator == Estimator::nlse);
    CHECK(f.pdf(0.41) == doctest::Approx(weibull_pdf(0.41, f.weibull())));
}
