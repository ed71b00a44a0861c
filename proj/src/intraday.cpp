#include "durstat/intraday.hpp"

#include "durstat/error.hpp"

#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Dense>

namespace durstat {

double PolynomialFit::operator()(double minute) const {
    const double u = (minute - center) / half_width;
    double v = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) v = v * u + *it;
    return v;
}

double IntradayProfile::coefficient_of_variation() const {
    double s = 0.0, ss = 0.0;
    std::size_t n = 0;
    for (int j = 1; j <= minutes(); ++j) {
        if (!is_defined(j)) continue;
        s += at(j);
        ss += at(j) * at(j);
        ++n;
    }
    if (n < 2) throw EmptySeriesError("profile has fewer than two defined minutes");
    const double m = s / static_cast<double>(n);
    const double var = std::max(0.0, (ss - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    return std::sqrt(var) / m;
}

IntradayProfile intraday_mean_profile(const DurationSeries& ds, std::size_t n_days, int minutes_per_day,
                                      DayAveraging averaging) {
    if (minutes_per_day <= 0) throw InvalidArgument("minutes per day must be positive");
    if (averaging == DayAveraging::all_days && n_days == 0)
        throw InvalidArgument("all-days averaging needs a positive day count");
    const auto m = static_cast<std::size_t>(minutes_per_day);

    // (day, minute) -> (sum, count); ordered so the accumulation is deterministic.
    std::map<std::pair<std::int32_t, int>, std::pair<double, std::size_t>> cells;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int j = ds.minutes[i];
        if (j < 1 || j > minutes_per_day)
            throw InvalidArgument("duration " + std::to_string(i) + " carries no valid minute tag");
        auto& c = cells[{ds.days[i], j}];
        c.first += ds.durations[i];
        ++c.second;
    }

    IntradayProfile prof;
    prof.mean.assign(m, 0.0);
    prof.day_counts.assign(m, 0);
    prof.defined.assign(m, 0);
    for (const auto& [key, cell] : cells) {
        const auto j = static_cast<std::size_t>(key.second - 1);
        prof.mean[j] += cell.first / static_cast<double>(cell.second);
        ++prof.day_counts[j];
    }
    bool any = false;
    for (std::size_t j = 0; j < m; ++j) {
        if (prof.day_counts[j] == 0) {
            prof.mean[j] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double days = averaging == DayAveraging::all_days ? static_cast<double>(n_days)
                                                                : static_cast<double>(prof.day_counts[j]);
        prof.mean[j] /= days;
        prof.defined[j] = prof.mean[j] > 0.0;
        any = any || prof.defined[j];
    }
    if (!any) throw InvalidArgument("no minute of the profile is defined");
    return prof;
}

DurationSeries adjust_durations(const DurationSeries& ds, const IntradayProfile& profile) {
    DurationSeries out = ds;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int j = ds.minutes[i];
        if (!profile.is_defined(j))
            throw MissingProfileError("intraday profile is undefined at minute " + std::to_string(j), j);
        out.durations[i] = ds.durations[i] / profile.at(j);
    }
    return out;
}

PolynomialFit fit_profile_polynomial(const IntradayProfile& profile, int degree) {
    if (degree < 0) throw InvalidArgument("polynomial degree must be non-negative");
    std::vector<int> xs;
    for (int j = 1; j <= profile.minutes(); ++j)
        if (profile.is_defined(j)) xs.push_back(j);
    if (xs.size() < static_cast<std::size_t>(degree + 1))
        throw InvalidArgument("polynomial of degree " + std::to_string(degree) + " needs " +
                              std::to_string(degree + 1) + " defined minutes");

    PolynomialFit fit;
    fit.degree = degree;
    fit.center = 0.5 * (1.0 + profile.minutes());
    fit.half_width = std::max(0.5 * (profile.minutes() - 1.0), 1.0);

    Eigen::MatrixXd design(static_cast<Eigen::Index>(xs.size()), degree + 1);
    Eigen::VectorXd target(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t r = 0; r < xs.size(); ++r) {
        const double u = (xs[r] - fit.center) / fit.half_width;
        double p = 1.0;
        for (int c = 0; c <= degree; ++c, p *= u) design(static_cast<Eigen::Index>(r), c) = p;
        target(static_cast<Eigen::Index>(r)) = profile.at(xs[r]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < degree + 1) throw NumericError("profile polynomial design is rank deficient");
    const Eigen::VectorXd coef = qr.solve(target);
    fit.coefficients.assign(coef.data(), coef.data() + coef.size());

    fit.fitted.assign(static_cast<std::size_t>(profile.minutes()), std::numeric_limits<double>::quiet_NaN());
    for (int j : xs) fit.fitted[static_cast<std::size_t>(j - 1)] = fit(j);
    return fit;
}

}  // namespace durstat
