#pragma once

#include "durstat/density.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>

namespace durstat {

enum class Family { weibull, qexp };
enum class Estimator { mle, nlse };

std::string_view family_name(Family f);
std::string_view estimator_name(Estimator e);
Family parse_family(std::string_view text);
Estimator parse_estimator(std::string_view text);

struct FitResult {
    Family family = Family::weibull;
    Estimator estimator = Estimator::mle;
    std::variant<WeibullParams, QExpParams> params;
    double chi = 0.0;  // residual r.m.s. in log10 density
    std::size_t sample_size = 0;
    int iterations = 0;
    double gradient_norm = 0.0;

    const WeibullParams& weibull() const { return std::get<WeibullParams>(params); }
    const QExpParams& qexp() const { return std::get<QExpParams>(params); }
    double pdf(double tau) const;
    DensityModel model() const;
};

struct FitOptions {
    int bins_per_decade = default_bins_per_decade;
    int max_iterations = 200;
};

/// Maximum likelihood via the profile equation in the shape, then the
/// closed-form scale. Needs at least 100 strictly positive samples.
/// For both MLE fits chi is +inf when the fitted density vanishes at an
/// occupied bin.
FitResult fit_weibull_mle(std::span<const double> samples, const FitOptions& opts = {});

/// Maximum likelihood by multi-start quasi-Newton in (log mu, log(q-1)).
/// Samples must be non-negative.
FitResult fit_qexp_mle(std::span<const double> samples, const FitOptions& opts = {});

/// Least squares in log10 density over the occupied bins (at least 10).
FitResult fit_weibull_nlse(const DensityEstimate& density, const FitOptions& opts = {});
FitResult fit_qexp_nlse(const DensityEstimate& density, const FitOptions& opts = {});

/// Dispatch used by the CLI and pipeline. MLE fits use `samples`; NLSE fits
/// bin them with opts.bins_per_decade first.
FitResult fit(std::span<const double> samples, Family family, Estimator estimator, const FitOptions& opts = {});

}  // namespace durstat
