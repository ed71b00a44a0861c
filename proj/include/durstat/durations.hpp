#pragma once

#include "durstat/events.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace durstat {

enum class DirectionClass : std::uint8_t { all, buy, sell };

std::string_view class_name(DirectionClass c);
DirectionClass parse_class(std::string_view text);

/// Waiting times between consecutive events of one session. Each duration
/// carries the date and the minute index of its closing event plus a segment
/// id that changes at every session or day boundary.
struct DurationSeries {
    std::string symbol;
    DirectionClass direction_class = DirectionClass::all;
    std::vector<double> durations;  // seconds
    std::vector<std::int32_t> days;
    std::vector<int> minutes;  // 1-based; 0 when untagged
    std::vector<std::uint32_t> segments;
    std::size_t event_count = 0;
    std::size_t zero_count = 0;

    std::size_t size() const { return durations.size(); }
    bool empty() const { return durations.empty(); }

    /// Strictly positive durations, the input to distribution fitting.
    std::vector<double> positive() const;
    std::size_t distinct_days() const;
};

/// Untagged series over one segment, for synthetic samples.
DurationSeries make_duration_series(std::vector<double> durations, std::string symbol = {});

/// Throws EmptySeriesError when no session holds two events.
DurationSeries compute_durations(const EventSeries& series, DirectionClass cls = DirectionClass::all);

struct SummaryStats {
    std::size_t n = 0;   // events
    std::size_t n0 = 0;  // zero durations
    std::size_t durations = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double events_per_day = 0.0;
};

SummaryStats summarize(const DurationSeries& ds, std::size_t n_days);

double sample_mean(std::span<const double> values);
/// Unbiased (n - 1) standard deviation.
double sample_stddev(std::span<const double> values);

struct RescaledSeries {
    std::string symbol;
    DirectionClass direction_class = DirectionClass::all;
    double sigma = 1.0;
    std::vector<double> values;
    std::vector<std::uint32_t> segments;
    std::size_t zero_count = 0;

    std::size_t size() const { return values.size(); }
};

/// g_i = tau_i / sigma with sigma the sample standard deviation of the series.
RescaledSeries rescale(const DurationSeries& ds);
RescaledSeries rescale(const RescaledSeries& rs);

/// Rescaled members laid end to end. `member` indexes `symbols`; successor
/// pairs are only valid when both member and segment match.
struct EnsembleSeries {
    std::vector<double> values;
    std::vector<std::uint32_t> member;
    std::vector<std::uint32_t> segments;
    std::vector<std::string> symbols;

    std::size_t size() const { return values.size(); }
    bool has_successor(std::size_t i) const {
        return i + 1 < values.size() && member[i] == member[i + 1] && segments[i] == segments[i + 1];
    }
};

EnsembleSeries pool_ensemble(std::span<const RescaledSeries> members);

/// "index,duration_s,date,minute_index" CSV.
void write_durations_csv(std::ostream& out, const DurationSeries& ds);
/// Segments are rebuilt from (date, session of minute) under `calendar`;
/// event_count assumes one extra event per segment.
DurationSeries read_durations_csv(std::istream& in, const SessionCalendar& calendar, std::string symbol = {});
DurationSeries read_durations_file(const std::string& path, const SessionCalendar& calendar);

}  // namespace durstat
