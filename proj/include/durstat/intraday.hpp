#pragma once

#include "durstat/durations.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace durstat {

enum class DayAveraging {
    days_with_data,  // divide by the days that have durations in the minute
    all_days,        // divide by the trading-day count unconditionally
};

/// Least-squares polynomial in u = (minute - center) / half_width.
struct PolynomialFit {
    int degree = 0;
    double center = 0.0;
    double half_width = 1.0;
    std::vector<double> coefficients;  // ascending powers of u
    std::vector<double> fitted;        // one per profile minute; NaN where undefined

    double operator()(double minute) const;
};

struct IntradayProfile {
    std::vector<double> mean;             // <tau>_j at index j - 1
    std::vector<std::size_t> day_counts;  // days with data per minute
    std::vector<char> defined;
    std::optional<PolynomialFit> fit;

    int minutes() const { return static_cast<int>(mean.size()); }
    bool is_defined(int minute) const { return minute >= 1 && minute <= minutes() && defined[minute - 1]; }
    double at(int minute) const { return mean.at(static_cast<std::size_t>(minute - 1)); }
    /// Coefficient of variation across the defined minutes.
    double coefficient_of_variation() const;
};

/// Two-stage average: minute means within each day, then across days.
IntradayProfile intraday_mean_profile(const DurationSeries& ds, std::size_t n_days, int minutes_per_day = 240,
                                      DayAveraging averaging = DayAveraging::days_with_data);

/// tau / <tau>_j for the minute j of each duration's closing event.
DurationSeries adjust_durations(const DurationSeries& ds, const IntradayProfile& profile);

PolynomialFit fit_profile_polynomial(const IntradayProfile& profile, int degree = 6);

}  // namespace durstat
