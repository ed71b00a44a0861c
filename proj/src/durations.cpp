#include "durstat/durations.hpp"

#include "durstat/error.hpp"
#include "durstat/text_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace durstat {

std::string_view class_name(DirectionClass c) {
    switch (c) {
        case DirectionClass::all: return "all";
        case DirectionClass::buy: return "buy";
        case DirectionClass::sell: return "sell";
    }
    return "all";
}

DirectionClass parse_class(std::string_view text) {
    if (text == "all") return DirectionClass::all;
    if (text == "buy") return DirectionClass::buy;
    if (text == "sell") return DirectionClass::sell;
    throw InvalidArgument("unknown direction class '" + std::string(text) + "'");
}

std::vector<double> DurationSeries::positive() const {
    std::vector<double> out;
    out.reserve(durations.size() - std::min(zero_count, durations.size()));
    for (double d : durations)
        if (d > 0.0) out.push_back(d);
    return out;
}

std::size_t DurationSeries::distinct_days() const {
    std::vector<std::int32_t> d(days);
    std::sort(d.begin(), d.end());
    return static_cast<std::size_t>(std::unique(d.begin(), d.end()) - d.begin());
}

DurationSeries make_duration_series(std::vector<double> durations, std::string symbol) {
    DurationSeries ds;
    ds.symbol = std::move(symbol);
    const auto n = durations.size();
    for (double d : durations) {
        if (!(d >= 0.0)) throw InvalidArgument("durations must be non-negative");
        if (d == 0.0) ++ds.zero_count;
    }
    ds.durations = std::move(durations);
    ds.days.assign(n, 0);
    ds.minutes.assign(n, 0);
    ds.segments.assign(n, 0);
    ds.event_count = n + 1;
    return ds;
}

DurationSeries compute_durations(const EventSeries& series, DirectionClass cls) {
    DurationSeries ds;
    ds.symbol = series.symbol;
    ds.direction_class = cls;

    const auto& cal = series.calendar;
    std::uint32_t segment = 0;
    bool have_prev = false;
    Event prev{};
    std::size_t prev_session = 0;
    for (const auto& e : series.events) {
        if (cls == DirectionClass::buy && e.direction != Direction::buy) continue;
        if (cls == DirectionClass::sell && e.direction != Direction::sell) continue;
        const auto session = cal.session_of(e.time_of_day);
        if (!session) throw InvalidArgument("event outside the calendar; filter to sessions first");
        ++ds.event_count;
        if (have_prev && e.day == prev.day && *session == prev_session) {
            const Centis gap = e.timestamp() - prev.timestamp();
            if (gap < 0) throw InvalidArgument("events are not time-sorted");
            if (gap == 0) ++ds.zero_count;
            ds.durations.push_back(static_cast<double>(gap) / centis_per_second);
            ds.days.push_back(e.day);
            ds.minutes.push_back(cal.minute_index(e.time_of_day));
            ds.segments.push_back(segment);
        } else if (have_prev) {
            ++segment;
        }
        prev = e;
        prev_session = *session;
        have_prev = true;
    }
    if (ds.durations.empty()) throw EmptySeriesError("no session of '" + series.symbol + "' holds two events");
    return ds;
}

double sample_mean(std::span<const double> values) {
    if (values.empty()) throw EmptySeriesError("mean of an empty sample");
    // Pairwise-free but compensated enough for 1e6 values of similar scale.
    long double s = 0.0L;
    for (double v : values) s += v;
    return static_cast<double>(s / static_cast<long double>(values.size()));
}

double sample_stddev(std::span<const double> values) {
    if (values.size() < 2) throw EmptySeriesError("standard deviation needs two values");
    const double m = sample_mean(values);
    long double ss = 0.0L;
    for (double v : values) ss += static_cast<long double>(v - m) * (v - m);
    return std::sqrt(static_cast<double>(ss / static_cast<long double>(values.size() - 1)));
}

SummaryStats summarize(const DurationSeries& ds, std::size_t n_days) {
    if (n_days == 0) throw InvalidArgument("summary needs at least one trading day");
    if (ds.empty()) throw EmptySeriesError("summary of an empty duration series");
    SummaryStats s;
    s.n = ds.event_count;
    s.n0 = ds.zero_count;
    s.durations = ds.size();
    s.mean = sample_mean(ds.durations);
    s.stddev = ds.size() > 1 ? sample_stddev(ds.durations) : 0.0;
    s.events_per_day = static_cast<double>(s.n) / static_cast<double>(n_days);
    return s;
}

namespace {

RescaledSeries divide(std::string symbol, DirectionClass cls, std::span<const double> values,
                      std::vector<std::uint32_t> segments, std::size_t zeros) {
    const double sigma = sample_stddev(values);
    if (!(sigma > 0.0)) throw DegenerateSeriesError("cannot rescale a series with zero standard deviation");
    RescaledSeries rs;
    rs.symbol = std::move(symbol);
    rs.direction_class = cls;
    rs.sigma = sigma;
    rs.values.reserve(values.size());
    for (double v : values) rs.values.push_back(v / sigma);
    rs.segments = std::move(segments);
    rs.zero_count = zeros;
    return rs;
}

}  // namespace

RescaledSeries rescale(const DurationSeries& ds) {
    return divide(ds.symbol, ds.direction_class, ds.durations, ds.segments, ds.zero_count);
}

RescaledSeries rescale(const RescaledSeries& rs) {
    return divide(rs.symbol, rs.direction_class, rs.values, rs.segments, rs.zero_count);
}

EnsembleSeries pool_ensemble(std::span<const RescaledSeries> members) {
    if (members.empty()) throw InvalidArgument("ensemble needs at least one member");
    EnsembleSeries ens;
    std::size_t total = 0;
    for (const auto& m : members) total += m.size();
    ens.values.reserve(total);
    ens.member.reserve(total);
    ens.segments.reserve(total);
    for (std::size_t k = 0; k < members.size(); ++k) {
        const auto& m = members[k];
        ens.symbols.push_back(m.symbol);
        ens.values.insert(ens.values.end(), m.values.begin(), m.values.end());
        ens.member.insert(ens.member.end(), m.size(), static_cast<std::uint32_t>(k));
        if (m.segments.size() == m.size())
            ens.segments.insert(ens.segments.end(), m.segments.begin(), m.segments.end());
        else
            ens.segments.insert(ens.segments.end(), m.size(), 0u);
    }
    return ens;
}

void write_durations_csv(std::ostream& out, const DurationSeries& ds) {
    out << "index,duration_s,date,minute_index\n";
    for (std::size_t i = 0; i < ds.size(); ++i)
        out << i << ',' << format_number(ds.durations[i]) << ',' << format_date(ds.days[i]) << ',' << ds.minutes[i]
            << '\n';
}

DurationSeries read_durations_csv(std::istream& in, const SessionCalendar& calendar, std::string symbol) {
    DurationSeries ds;
    ds.symbol = std::move(symbol);
    std::string line;
    if (!std::getline(in, line)) throw EmptySeriesError("duration file is empty");
    const auto header = split_fields(line);
    auto col = [&](std::string_view name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw InvalidArgument("duration file lacks column '" + std::string(name) + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto c_dur = col("duration_s");
    const auto c_date = col("date");
    const auto c_min = col("minute_index");

    std::uint32_t segment = 0;
    std::int32_t prev_day = 0;
    std::optional<std::size_t> prev_session;
    bool first = true;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_fields(line);
        if (f.size() <= std::max({c_dur, c_date, c_min}))
            throw InvalidArgument("short row at line " + std::to_string(line_no));
        const double d = parse_number(f[c_dur]);
        const auto day = parse_date(f[c_date]);
        if (!day) throw InvalidArgument("bad date at line " + std::to_string(line_no));
        const int minute = static_cast<int>(parse_number(f[c_min]));
        if (!(d >= 0.0)) throw InvalidArgument("negative duration at line " + std::to_string(line_no));
        const auto session = minute > 0 ? calendar.session_of_minute(minute) : std::optional<std::size_t>{0};
        if (!first && (*day != prev_day || session != prev_session)) ++segment;
        first = false;
        prev_day = *day;
        prev_session = session;
        ds.durations.push_back(d);
        ds.days.push_back(*day);
        ds.minutes.push_back(minute);
        ds.segments.push_back(segment);
        if (d == 0.0) ++ds.zero_count;
    }
    if (ds.empty()) throw EmptySeriesError("duration file has no rows");
    ds.event_count = ds.size() + segment + 1;
    return ds;
}

DurationSeries read_durations_file(const std::string& path, const SessionCalendar& calendar) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    auto ds = read_durations_csv(in, calendar, std::filesystem::path(path).stem().string());
    return ds;
}

}  // namespace durstat
