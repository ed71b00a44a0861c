#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace durstat {

struct WeibullParams {
    double scale = 1.0;  // alpha
    double shape = 1.0;  // beta
};

/// Tsallis form with exponent q/(1-q): (1/mu) [1 + (q-1) tau/mu]^(q/(1-q)).
struct QExpParams {
    double scale = 1.0;  // mu
    double q = 1.5;
};

void validate(const WeibullParams& p);
void validate(const QExpParams& p);

/// Throws InvalidArgument for tau < 0; the value at 0 is the limit (infinite for shape < 1).
double weibull_pdf(double tau, const WeibullParams& p);
double weibull_cdf(double tau, const WeibullParams& p);
/// Defined for any q; q < 1 has compact support, q == 1 is the exponential.
double qexp_pdf(double tau, const QExpParams& p);
double qexp_cdf(double tau, const QExpParams& p);

using DensityModel = std::function<double(double)>;

/// Histogram on a log grid anchored at 1: bin k covers
/// [10^((k-1/2)/b), 10^((k+1/2)/b)) with b bins per decade, so every estimate
/// with the same b shares bin boundaries.
struct DensityEstimate {
    int bins_per_decade = 20;
    long first_bin = 0;
    std::vector<double> edges;
    std::vector<double> centers;  // geometric bin midpoints
    std::vector<double> density;
    std::vector<std::size_t> counts;
    std::size_t sample_count = 0;

    std::size_t bins() const { return centers.size(); }
    bool empty_bin(std::size_t i) const { return counts[i] == 0; }
    std::size_t nonempty_bins() const;
    double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
    /// Sum of density times width over all bins.
    double integral() const;
};

inline constexpr int default_bins_per_decade = 20;

long log_bin_index(double x, int bins_per_decade);
double log_bin_edge(long k, int bins_per_decade);

DensityEstimate empirical_density(std::span<const double> samples, int bins_per_decade = default_bins_per_decade,
                                  std::size_t min_samples = 100);

/// Model values at the centers of the grid bins spanning [lo, hi]; every bin
/// counts as occupied.
DensityEstimate tabulate_density(const DensityModel& model, double lo, double hi,
                                 int bins_per_decade = default_bins_per_decade);

/// r.m.s. of log10(empirical) - log10(model) over occupied bins. Throws
/// NumericError naming the bin when the model vanishes there.
double residual_rms(const DensityEstimate& density, const DensityModel& model);

/// Mean over shared bins of the cross-member standard deviation of
/// log10(density). A bin is shared when every member holds at least
/// `min_count` samples in it.
double collapse_metric(std::span<const DensityEstimate> densities, std::size_t min_count = 10);

}  // namespace durstat
