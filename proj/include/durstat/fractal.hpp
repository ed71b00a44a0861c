#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace durstat {

inline constexpr std::size_t min_fractal_length = 80;

/// Up to `count` log-spaced integer window sizes in [smin, smax], rounded and
/// deduplicated. smax = 0 selects N/4.
std::vector<std::size_t> make_scale_grid(std::size_t n, std::size_t smin = 20, std::size_t smax = 0,
                                         std::size_t count = 30);

/// Cumulative sums y_i = x_1 + ... + x_i.
std::vector<double> profile(std::span<const double> series);

/// r.m.s. residuals r_k(s) after removing a least-squares polynomial of the
/// given order from each window: floor(N/s) windows tiled from the start,
/// then as many tiled from the end.
std::vector<double> segment_fluctuations(std::span<const double> y, std::size_t s, int order = 1);

/// q-th order mean of the window residuals; q = 0 is the geometric mean.
double fluctuation_function(std::span<const double> residuals, double q);

struct ScalingFit {
    double exponent = 0.0;
    double std_error = 0.0;
};

/// OLS slope of ln F against ln s.
ScalingFit scaling_exponent(std::span<const std::size_t> scales, std::span<const double> fluctuations);

struct DfaResult {
    std::vector<std::size_t> scales;
    std::vector<double> fluctuation;  // F_2(s)
    double hurst = 0.0;
    double std_error = 0.0;
    int order = 1;
};

/// Empty `scales` selects make_scale_grid(series.size()).
DfaResult dfa(std::span<const double> series, std::vector<std::size_t> scales = {}, int order = 1);

/// {-6, ..., -1, -0.5, 0, 0.5, 1, ..., 6}.
std::vector<double> default_q_grid();
std::vector<double> make_q_grid(double qmin, double qmax);

struct FluctuationSurface {
    std::vector<double> q;
    std::vector<std::size_t> scales;
    std::vector<double> values;  // row per q, column per scale
    int order = 1;

    double at(std::size_t qi, std::size_t si) const { return values[qi * scales.size() + si]; }
};

struct Spectrum {
    std::vector<double> alpha;
    std::vector<double> f;
    double width = 0.0;     // alpha_max - alpha_min
    bool monotone = true;   // alpha non-increasing in q within tolerance
};

/// h'(q) by central differences (one-sided at the ends), then
/// alpha = q h' + h and f = q^2 h' + 1.
Spectrum legendre_spectrum(std::span<const double> q, std::span<const double> h);

struct MultifractalResult {
    FluctuationSurface surface;
    std::vector<double> h;
    std::vector<double> h_std_error;
    Spectrum spectrum;
    double hurst = 0.0;  // h(2) when 2 is on the q grid
    double hurst_std_error = 0.0;
};

MultifractalResult mfdfa(std::span<const double> series, std::vector<double> q_grid = default_q_grid(),
                         std::vector<std::size_t> scales = {}, int order = 1);

}  // namespace durstat
