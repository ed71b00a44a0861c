#include "durstat/durations.hpp"
#include "durstat/error.hpp"
#include "durstat/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

using namespace durstat;

namespace {

Event at(const char* time, Direction d = Direction::buy, const char* date = "2003-01-02") {
    return {*parse_date(date), *parse_time_of_day(time), d};
}

EventSeries series_of(std::vector<Event> events) {
    EventSeries s;
    s.symbol = "T";
    s.events = std::move(events);
    return s;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

}  // namespace

TEST_CASE("durations are direct differences within a session") {
    const auto ds = compute_durations(series_of({at("10:00:01.00"), at("10:00:02.50"), at("10:00:02.50"),
                                                 at("10:00:07.00")}));
    REQUIRE(ds.size() == 3);
    CHECK(ds.durations[0] == 1.5);
    CHECK(ds.durations[1] == 0.0);
    CHECK(ds.durations[2] == 4.5);
    CHECK(ds.zero_count == 1);
    CHECK(ds.event_count == 4);
    CHECK(ds.minutes[0] == 31);
}

TEST_CASE("no duration spans the lunch pause or the night") {
    const auto ds = compute_durations(series_of({at("11:29:58"), at("11:29:59"), at("13:00:01"), at("13:00:04"),
                                                 at("14:59:00"), at("09:30:02", Direction::buy, "2003-01-03"),
                                                 at("09:30:03", Direction::buy, "2003-01-03")}));
    REQUIRE(ds.size() == 4);
    CHECK(ds.durations[0] == 1.0);
    CHECK(ds.durations[1] == 3.0);
    CHECK(ds.durations[2] == 7136.0);
    CHECK(ds.durations[3] == 1.0);
    CHECK(ds.segments[0] != ds.segments[1]);
    CHECK(ds.segments[1] == ds.segments[2]);
    CHECK(ds.segments[2] != ds.segments[3]);
    CHECK(ds.event_count == 7);
}

TEST_CASE("fewer than two events per session is an error") {
    CHECK_THROWS_AS(compute_durations(series_of({at("10:00:00"), at("13:30:00")})), EmptySeriesError);
    CHECK_THROWS_AS(compute_durations(series_of({at("12:00:00"), at("12:00:01")})), InvalidArgument);
}

TEST_CASE("Poisson stream has mean duration one") {
    // 80000 unit-rate gaps fit in one day-long session
    const auto gaps = gen_poisson_durations(1.0, 80000, 42);
    SessionCalendar cal({{0, centis_per_day - 1}});
    EventSeries s;
    s.calendar = cal;
    Centis t = 0;
    s.events.push_back({0, 0, Direction::buy});
    for (double g : gaps) {
        t += static_cast<Centis>(std::llround(g * 100.0));
        s.events.push_back({0, t, Direction::buy});
    }
    const auto ds = compute_durations(s);
    CHECK(ds.size() == 80000);
    CHECK(std::abs(sample_mean(ds.durations) - 1.0) < 0.02);
}

TEST_CASE("session sums equal the session span exactly") {
    StreamSpec spec;
    spec.days = 2;
    spec.seed = 5;
    spec.simultaneous = 0.05;
    const auto s = gen_event_stream(spec);
    const auto ds = compute_durations(s);
    std::map<std::uint32_t, long long> sums;
    for (std::size_t i = 0; i < ds.size(); ++i) sums[ds.segments[i]] += std::llround(ds.durations[i] * 100.0);

    std::map<std::pair<std::int32_t, std::size_t>, std::pair<Centis, Centis>> spans;
    for (const auto& e : s.events) {
        const auto key = std::make_pair(e.day, *s.calendar.session_of(e.time_of_day));
        auto [it, fresh] = spans.try_emplace(key, e.timestamp(), e.timestamp());
        if (!fresh) it->second.second = e.timestamp();
    }
    REQUIRE(sums.size() == spans.size());
    auto it = spans.begin();
    for (const auto& [seg, total] : sums) {
        CHECK(total == it->second.second - it->second.first);
        ++it;
    }
}

TEST_CASE("summary statistics") {
    const auto ds = compute_durations(series_of({at("10:00:01.00"), at("10:00:02.50"), at("10:00:02.50"),
                                                 at("10:00:07.00")}));
    const auto s = summarize(ds, 1);
    CHECK(s.mean == doctest::Approx(2.0));
    CHECK(s.n == 4);
    CHECK(s.n0 == 1);
    CHECK(s.events_per_day == 4.0);
    CHECK(s.stddev >= 0.0);
    CHECK_THROWS_AS(summarize(ds, 0), InvalidArgument);
}

TEST_CASE("direction classes obey the bookkeeping relations") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        StreamSpec spec;
        spec.seed = seed;
        spec.days = 2;
        spec.simultaneous = 0.05;
        const auto s = gen_event_stream(spec);
        const auto all = summarize(compute_durations(s, DirectionClass::all), 2);
        const auto buy = summarize(compute_durations(s, DirectionClass::buy), 2);
        const auto sell = summarize(compute_durations(s, DirectionClass::sell), 2);
        CHECK(all.n == buy.n + sell.n);
        CHECK(all.n0 >= buy.n0 + sell.n0);
        CHECK(buy.mean > all.mean);
        CHECK(sell.mean > all.mean);
    }
}

TEST_CASE("rescaling") {
    auto ds = make_duration_series({1.0, 3.0});
    ds.durations = {1.0, 3.0, 3.0, 1.0};
    ds.segments = {0, 0, 0, 0};
    const double sigma = sample_stddev(ds.durations);
    const auto rs = rescale(ds);
    CHECK(rs.sigma == doctest::Approx(sigma));
    CHECK(rs.values[1] == doctest::Approx(3.0 / sigma));

    // sigma = 2 exactly: values 2 and 4 with mean 3 and n - 1 = 1 gives sqrt(2); use a set with sd 2
    auto two = make_duration_series({1.0, 5.0, 3.0, 3.0, 1.0, 5.0});
    const double s2 = sample_stddev(two.durations);
    const auto g = rescale(two);
    CHECK(g.values[0] == doctest::Approx(1.0 / s2));
    CHECK(sample_stddev(g.values) == doctest::Approx(1.0).epsilon(1e-12));

    const auto again = rescale(g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(again.values[i] == doctest::Approx(g.values[i]).epsilon(1e-12));

    CHECK_THROWS_AS(rescale(make_duration_series({2.0, 2.0, 2.0})), DegenerateSeriesError);
}

TEST_CASE("rescaling preserves the zero count") {
    auto ds = make_duration_series({0.0, 1.0, 0.0, 4.0});
    ds.zero_count = 2;
    CHECK(rescale(ds).zero_count == 2);
}

TEST_CASE("rescaled Weibull samples do not depend on the scale") {
    const auto a = rescale(make_duration_series(gen_weibull_iid({0.2, 0.67}, 20000, 1))).values;
    const auto b = rescale(make_duration_series(gen_weibull_iid({2.0, 0.67}, 20000, 2))).values;
    // critical value at the 0.1% level for two samples of 20000
    CHECK(ks_two_sample(a, b) < 1.95 * std::sqrt(2.0 / 20000.0));
}

TEST_CASE("pooling concatenates members") {
    RescaledSeries a, b;
    a.symbol = "A";
    a.values = {1, 2, 3};
    a.segments = {0, 0, 1};
    b.symbol = "B";
    b.values = {4, 5, 6, 7, 8};
    b.segments = {0, 0, 0, 0, 0};
    const RescaledSeries both[] = {a, b};
    const auto e = pool_ensemble(both);
    CHECK(e.size() == 8);
    CHECK(e.values[3] == 4);
    CHECK(e.has_successor(0));
    CHECK_FALSE(e.has_successor(1));
    CHECK_FALSE(e.has_successor(2));
    CHECK(e.has_successor(3));

    const RescaledSeries one[] = {a};
    CHECK(pool_ensemble(one).values == a.values);
    CHECK_THROWS_AS(pool_ensemble(std::span<const RescaledSeries>{}), InvalidArgument);
}

TEST_CASE("durations CSV round trips") {
    StreamSpec spec;
    spec.days = 2;
    spec.seed = 3;
    const auto s = gen_event_stream(spec);
    const auto ds = compute_durations(s, DirectionClass::buy);
    std::ostringstream out;
    write_durations_csv(out, ds);
    CHECK(out.str().rfind("index,duration_s,date,minute_index\n", 0) == 0);
    std::istringstream in(out.str());
    const auto back = read_durations_csv(in, s.calendar, "T");
    CHECK(back.durations == ds.durations);
    CHECK(back.minutes == ds.minutes);
    CHECK(back.days == ds.days);
    CHECK(back.zero_count == ds.zero_count);
}
