#include "durstat/density.hpp"

#include "durstat/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace durstat {

void validate(const WeibullParams& p) {
    if (!(p.scale > 0.0) || !(p.shape > 0.0) || !std::isfinite(p.scale) || !std::isfinite(p.shape))
        throw InvalidArgument("Weibull parameters must be positive and finite");
}

void validate(const QExpParams& p) {
    if (!(p.scale > 0.0) || !std::isfinite(p.scale) || !std::isfinite(p.q))
        throw InvalidArgument("q-exponential scale must be positive and q finite");
}

double weibull_pdf(double tau, const WeibullParams& p) {
    validate(p);
    if (tau < 0.0) throw InvalidArgument("Weibull density is defined for tau >= 0");
    if (tau == 0.0) {
        if (p.shape < 1.0) return std::numeric_limits<double>::infinity();
        return p.shape == 1.0 ? 1.0 / p.scale : 0.0;
    }
    const double z = tau / p.scale;
    const double zb = std::pow(z, p.shape);
    return p.shape / p.scale * zb / z * std::exp(-zb);
}

double weibull_cdf(double tau, const WeibullParams& p) {
    validate(p);
    if (tau <= 0.0) return 0.0;
    return -std::expm1(-std::pow(tau / p.scale, p.shape));
}

double qexp_pdf(double tau, const QExpParams& p) {
    validate(p);
    if (tau < 0.0) throw InvalidArgument("q-exponential density is defined for tau >= 0");
    const double x = tau / p.scale;
    if (p.q == 1.0) return std::exp(-x) / p.scale;
    const double base = 1.0 + (p.q - 1.0) * x;
    if (base <= 0.0) return 0.0;
    return std::exp(p.q / (1.0 - p.q) * std::log1p((p.q - 1.0) * x)) / p.scale;
}

double qexp_cdf(double tau, const QExpParams& p) {
    validate(p);
    if (tau <= 0.0) return 0.0;
    const double x = tau / p.scale;
    if (p.q == 1.0) return -std::expm1(-x);
    const double base = 1.0 + (p.q - 1.0) * x;
    if (base <= 0.0) return 1.0;
    return -std::expm1(std::log1p((p.q - 1.0) * x) / (1.0 - p.q));
}

std::size_t DensityEstimate::nonempty_bins() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

double DensityEstimate::integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < bins(); ++i) s += density[i] * width(i);
    return s;
}

long log_bin_index(double x, int bins_per_decade) {
    return static_cast<long>(std::floor(bins_per_decade * std::log10(x) + 0.5));
}

double log_bin_edge(long k, int bins_per_decade) {
    return std::pow(10.0, (static_cast<double>(k) - 0.5) / bins_per_decade);
}

namespace {

DensityEstimate make_grid(long first, long last, int bpd) {
    DensityEstimate d;
    d.bins_per_decade = bpd;
    d.first_bin = first;
    const auto n = static_cast<std::size_t>(last - first + 1);
    d.edges.resize(n + 1);
    d.centers.resize(n);
    for (std::size_t i = 0; i <= n; ++i) d.edges[i] = log_bin_edge(first + static_cast<long>(i), bpd);
    for (std::size_t i = 0; i < n; ++i)
        d.centers[i] = std::pow(10.0, static_cast<double>(first + static_cast<long>(i)) / bpd);
    d.density.assign(n, 0.0);
    d.counts.assign(n, 0);
    return d;
}

}  // namespace

DensityEstimate empirical_density(std::span<const double> samples, int bins_per_decade, std::size_t min_samples) {
    if (bins_per_decade <= 0) throw InvalidArgument("bins_per_decade must be positive");
    if (samples.size() < min_samples)
        throw InvalidArgument("density estimate needs at least " + std::to_string(min_samples) + " samples");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double x : samples) {
        if (!(x > 0.0) || !std::isfinite(x)) throw InvalidArgument("density samples must be positive and finite");
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const long first = log_bin_index(lo, bins_per_decade);
    const long last = log_bin_index(hi, bins_per_decade);
    if (first == last) throw DegenerateSeriesError("all samples fall into a single bin");

    auto d = make_grid(first, last, bins_per_decade);
    for (double x : samples) {
        const long k = std::clamp(log_bin_index(x, bins_per_decade), first, last);
        ++d.counts[static_cast<std::size_t>(k - first)];
    }
    d.sample_count = samples.size();
    const double n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < d.bins(); ++i) d.density[i] = static_cast<double>(d.counts[i]) / (n * d.width(i));
    return d;
}

DensityEstimate tabulate_density(const DensityModel& model, double lo, double hi, int bins_per_decade) {
    if (!(lo > 0.0) || !(hi > lo)) throw InvalidArgument("tabulation range must satisfy 0 < lo < hi");
    auto d = make_grid(log_bin_index(lo, bins_per_decade), log_bin_index(hi, bins_per_decade), bins_per_decade);
    for (std::size_t i = 0; i < d.bins(); ++i) {
        d.density[i] = model(d.centers[i]);
        d.counts[i] = 1;
    }
    d.sample_count = d.bins();
    return d;
}

double residual_rms(const DensityEstimate& density, const DensityModel& model) {
    double ss = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < density.bins(); ++i) {
        if (density.empty_bin(i)) continue;
        const double m = model(density.centers[i]);
        if (!(m > 0.0) || !std::isfinite(m))
            throw NumericError("model density is not positive at occupied bin " + std::to_string(i) +
                               " (tau = " + std::to_string(density.centers[i]) + ")");
        const double r = std::log10(density.density[i]) - std::log10(m);
        ss += r * r;
        ++n;
    }
    if (n == 0) throw EmptySeriesError("density has no occupied bins");
    return std::sqrt(ss / static_cast<double>(n));
}

double collapse_metric(std::span<const DensityEstimate> densities, std::size_t min_count) {
    if (densities.size() < 2) throw InvalidArgument("collapse metric needs at least two densities");
    const int bpd = densities.front().bins_per_decade;
    long lo = std::numeric_limits<long>::min();
    long hi = std::numeric_limits<long>::max();
    for (const auto& d : densities) {
        if (d.bins_per_decade != bpd) throw InvalidArgument("densities must share bins_per_decade");
        lo = std::max(lo, d.first_bin);
        hi = std::min(hi, d.first_bin + static_cast<long>(d.bins()) - 1);
    }
    const std::size_t threshold = std::max<std::size_t>(min_count, 1);
    double total = 0.0;
    std::size_t shared = 0;
    std::vector<double> logs(densities.size());
    for (long k = lo; k <= hi; ++k) {
        bool ok = true;
        for (std::size_t m = 0; m < densities.size() && ok; ++m) {
            const auto i = static_cast<std::size_t>(k - densities[m].first_bin);
            ok = densities[m].counts[i] >= threshold && densities[m].density[i] > 0.0;
            if (ok) logs[m] = std::log10(densities[m].density[i]);
        }
        if (!ok) continue;
        double mean = 0.0;
        for (double v : logs) mean += v;
        mean /= static_cast<double>(logs.size());
        double ss = 0.0;
        for (double v : logs) ss += (v - mean) * (v - mean);
        total += std::sqrt(ss / static_cast<double>(logs.size() - 1));
        ++shared;
    }
    if (shared == 0) throw InvalidArgument("densities share no occupied bins");
    return total / static_cast<double>(shared);
}

}  // namespace durstat
