#include "durstat/error.hpp"
#include "durstat/intraday.hpp"
#include "durstat/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace durstat;

namespace {

DurationSeries tagged(std::vector<double> d, std::vector<std::int32_t> days, std::vector<int> minutes) {
    DurationSeries ds;
    ds.durations = std::move(d);
    ds.days = std::move(days);
    ds.minutes = std::move(minutes);
    ds.segments.assign(ds.durations.size(), 0);
    ds.event_count = ds.durations.size() + 1;
    return ds;
}

IntradayProfile constant_profile(double value, int minutes = 240) {
    IntradayProfile p;
    p.mean.assign(minutes, value);
    p.day_counts.assign(minutes, 1);
    p.defined.assign(minutes, 1);
    return p;
}

}  // namespace

TEST_CASE("one-level average") {
    const auto p = intraday_mean_profile(tagged({2, 4}, {0, 0}, {1, 1}), 1);
    CHECK(p.at(1) == 3.0);
    CHECK(p.is_defined(1));
    CHECK_FALSE(p.is_defined(2));
    CHECK(std::isnan(p.at(2)));
}

TEST_CASE("two-stage average over days") {
    // day means 3 and 5; the pooled mean of the four durations would be 4.5
    const auto ds = tagged({3, 4, 6, 5}, {0, 1, 1, 1}, {1, 1, 1, 1});
    CHECK(intraday_mean_profile(ds, 2).at(1) == 4.0);
    CHECK(intraday_mean_profile(ds, 2).day_counts[0] == 2);
    CHECK(intraday_mean_profile(ds, 4, 240, DayAveraging::all_days).at(1) == 2.0);
}

TEST_CASE("profile input checks") {
    CHECK_THROWS_AS(intraday_mean_profile(tagged({0, 0}, {0, 0}, {1, 2}), 1), InvalidArgument);
    CHECK_THROWS_AS(intraday_mean_profile(tagged({1}, {0}, {0}), 1), InvalidArgument);
}

TEST_CASE("Poisson profile is flat") {
    StreamSpec spec;
    spec.days = 250;
    spec.shape = 1.0;
    spec.mean_gap = 2.0;
    spec.seed = 2;
    const auto ds = compute_durations(gen_event_stream(spec));
    const auto p = intraday_mean_profile(ds, 250);

    std::map<std::pair<std::int32_t, int>, std::pair<double, int>> cells;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto& c = cells[{ds.days[i], ds.minutes[i]}];
        c.first += ds.durations[i];
        ++c.second;
    }
    std::vector<double> s1(241), s2(241), n(241);
    for (const auto& [key, c] : cells) {
        const double t = c.first / c.second;
        s1[key.second] += t;
        s2[key.second] += t * t;
        n[key.second] += 1;
    }
    double grand = 0.0;
    for (int j = 1; j <= 240; ++j) grand += p.at(j) / 240.0;
    int outside = 0;
    double worst = 0.0;
    for (int j = 1; j <= 240; ++j) {
        const double m = s1[j] / n[j];
        const double se = std::sqrt((s2[j] - n[j] * m * m) / (n[j] - 1) / n[j]);
        const double z = std::abs(p.at(j) - grand) / se;
        if (z > 3.0) ++outside;
        worst = std::max(worst, z);
    }
    // 240 minutes at a 3-sigma band: expect well under one exceedance per run
    CHECK(outside <= 5);
    CHECK(worst < 4.5);
    CHECK(p.coefficient_of_variation() < 0.02);
}

TEST_CASE("adjustment divides by the minute value") {
    const auto ds = tagged({3.0, 1.0}, {0, 0}, {5, 6});
    const auto flat = adjust_durations(ds, constant_profile(1.0));
    CHECK(flat.durations == ds.durations);

    auto p = constant_profile(1.0);
    p.mean[4] = 2.0;
    const auto adj = adjust_durations(ds, p);
    CHECK(adj.durations[0] == 1.5);
    CHECK(adj.durations[1] == 1.0);
    CHECK(adj.minutes == ds.minutes);
    CHECK(adj.days == ds.days);

    p.defined[5] = 0;
    try {
        (void)adjust_durations(ds, p);
        FAIL("expected a missing-profile error");
    } catch (const MissingProfileError& e) {
        CHECK(e.minute() == 6);
    }
}

TEST_CASE("modulated stream flattens after adjustment") {
    StreamSpec spec;
    spec.days = 40;
    spec.modulation = 0.6;
    spec.seed = 8;
    const auto ds = compute_durations(gen_event_stream(spec));
    const auto before = intraday_mean_profile(ds, 40);
    const auto adjusted = adjust_durations(ds, before);
    CHECK(adjusted.size() == ds.size());
    const auto after = intraday_mean_profile(adjusted, 40);
    for (int j = 1; j <= 240; ++j) CHECK(std::abs(after.at(j) - 1.0) < 0.05);
    CHECK(after.coefficient_of_variation() < before.coefficient_of_variation());
}

TEST_CASE("polynomial fits") {
    IntradayProfile q = constant_profile(0.0);
    for (int j = 1; j <= 240; ++j) q.mean[j - 1] = 5.0 + 0.01 * j + 0.0002 * j * j;
    const auto fq = fit_profile_polynomial(q, 2);
    for (int j = 1; j <= 240; ++j) CHECK(std::abs(fq.fitted[j - 1] - q.mean[j - 1]) < 1e-9);

    const auto fc = fit_profile_polynomial(constant_profile(3.0), 6);
    CHECK(fc.coefficients[0] == doctest::Approx(3.0));
    for (std::size_t k = 1; k < fc.coefficients.size(); ++k) CHECK(std::abs(fc.coefficients[k]) < 1e-9);

    IntradayProfile u = constant_profile(0.0);
    for (int j = 1; j <= 240; ++j) u.mean[j - 1] = 2.0 * inverse_u_modulation(0.5, (j - 0.5) / 240.0);
    const auto fu = fit_profile_polynomial(u, 6);
    const auto top = std::max_element(fu.fitted.begin(), fu.fitted.end()) - fu.fitted.begin() + 1;
    CHECK(top > 1);
    CHECK(top < 240);

    IntradayProfile sparse = constant_profile(1.0);
    std::fill(sparse.defined.begin() + 3, sparse.defined.end(), 0);
    CHECK_THROWS_AS(fit_profile_polynomial(sparse, 6), InvalidArgument);
}
