#include "durstat/fit.hpp"

#include "durstat/error.hpp"
#include "optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace durstat {

using detail::OptimizeOptions;
using detail::OptimizeResult;
using detail::Vec2;

std::string_view family_name(Family f) { return f == Family::weibull ? "weibull" : "qexp"; }
std::string_view estimator_name(Estimator e) { return e == Estimator::mle ? "mle" : "nlse"; }

Family parse_family(std::string_view text) {
    if (text == "weibull") return Family::weibull;
    if (text == "qexp") return Family::qexp;
    throw InvalidArgument("unknown family '" + std::string(text) + "'");
}

Estimator parse_estimator(std::string_view text) {
    if (text == "mle") return Estimator::mle;
    if (text == "nlse") return Estimator::nlse;
    throw InvalidArgument("unknown estimator '" + std::string(text) + "'");
}

double FitResult::pdf(double tau) const {
    return family == Family::weibull ? weibull_pdf(tau, weibull()) : qexp_pdf(tau, qexp());
}

DensityModel FitResult::model() const {
    if (family == Family::weibull) {
        const auto p = weibull();
        return [p](double t) { return weibull_pdf(t, p); };
    }
    const auto p = qexp();
    return [p](double t) { return qexp_pdf(t, p); };
}

namespace {

constexpr std::size_t min_mle_samples = 100;
constexpr std::size_t min_nlse_bins = 10;
const double ln10 = std::numbers::ln10;

double chi_against_default_density(std::span<const double> samples, const FitResult& fit, int bpd) {
    std::vector<double> positive;
    positive.reserve(samples.size());
    for (double x : samples)
        if (x > 0.0) positive.push_back(x);
    try {
        return residual_rms(empirical_density(positive, bpd, 1), fit.model());
    } catch (const NumericError&) {
        // the fitted density underflows where data exist
        return std::numeric_limits<double>::infinity();
    }
}

OptimizeResult best_of(const std::vector<OptimizeResult>& runs, const char* what) {
    const OptimizeResult* best = nullptr;
    for (const auto& r : runs)
        if (r.converged && std::isfinite(r.value) && (!best || r.value < best->value)) best = &r;
    if (!best) {
        int iters = 0;
        double grad = std::numeric_limits<double>::infinity();
        for (const auto& r : runs) {
            iters = std::max(iters, r.iterations);
            grad = std::min(grad, r.gradient_norm);
        }
        throw ConvergenceError(std::string(what) + ": no start converged", iters, grad);
    }
    return *best;
}

struct Moments {
    double m1 = 0.0;
    double m2 = 0.0;
};

Moments density_moments(const DensityEstimate& d) {
    Moments m;
    double mass = 0.0;
    for (std::size_t i = 0; i < d.bins(); ++i) {
        const double p = d.density[i] * d.width(i);
        mass += p;
        m.m1 += d.centers[i] * p;
        m.m2 += d.centers[i] * d.centers[i] * p;
    }
    m.m1 /= mass;
    m.m2 /= mass;
    return m;
}

// Shape matching a squared coefficient of variation.
double weibull_shape_from_cv2(double cv2) {
    if (!(cv2 > 0.0) || !std::isfinite(cv2)) return 1.0;
    auto excess = [cv2](double b) {
        return std::exp(std::lgamma(1.0 + 2.0 / b) - 2.0 * std::lgamma(1.0 + 1.0 / b)) - 1.0 - cv2;
    };
    double lo = 0.05, hi = 20.0;  // excess decreases in b
    if (excess(lo) < 0.0) return lo;
    if (excess(hi) > 0.0) return hi;
    for (int i = 0; i < 100; ++i) {
        const double mid = std::sqrt(lo * hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

std::size_t check_nlse_input(const DensityEstimate& density) {
    const auto occupied = density.nonempty_bins();
    if (occupied < min_nlse_bins)
        throw InvalidArgument("least-squares fit needs at least " + std::to_string(min_nlse_bins) +
                              " occupied bins, got " + std::to_string(occupied));
    return occupied;
}

}  // namespace

FitResult fit_weibull_mle(std::span<const double> samples, const FitOptions& opts) {
    const std::size_t n = samples.size();
    if (n < min_mle_samples) throw InvalidArgument("Weibull MLE needs at least 100 samples");
    std::vector<double> l(n);
    double mean_log = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(samples[i] > 0.0) || !std::isfinite(samples[i]))
            throw InvalidArgument("Weibull MLE needs strictly positive samples");
        l[i] = std::log(samples[i]);
        mean_log += l[i];
    }
    mean_log /= static_cast<double>(n);
    double lmax = -std::numeric_limits<double>::infinity();
    for (auto& v : l) {
        v -= mean_log;
        lmax = std::max(lmax, v);
    }
    if (!(lmax > 0.0)) throw DegenerateSeriesError("Weibull MLE on identical samples");

    // Profile score in the shape b, with weights exp(b (l - lmax)):
    //   g(b) = sum w l / sum w - 1/b,  increasing in b.
    double s0 = 0.0;
    auto score = [&](double b, double& dg) {
        long double w0 = 0, w1 = 0, w2 = 0;
        for (double v : l) {
            const double w = std::exp(b * (v - lmax));
            w0 += w;
            w1 += w * v;
            w2 += w * v * v;
        }
        s0 = static_cast<double>(w0);
        const double m1 = static_cast<double>(w1 / w0);
        dg = static_cast<double>(w2 / w0) - m1 * m1 + 1.0 / (b * b);
        return m1 - 1.0 / b;
    };

    double dg = 0.0;
    double lo = 1.0, hi = 1.0;
    double g_lo = score(lo, dg), g_hi = g_lo;
    for (int k = 0; g_lo > 0.0 && k < 60; ++k) g_lo = score(lo *= 0.5, dg);
    for (int k = 0; g_hi < 0.0 && k < 60; ++k) g_hi = score(hi *= 2.0, dg);
    if (!(g_lo <= 0.0 && g_hi >= 0.0))
        throw ConvergenceError("Weibull MLE: profile score shows no sign change", 0, std::min(std::abs(g_lo), g_hi));

    double b = 0.5 * (lo + hi);
    double g = score(b, dg);
    int it = 0;
    bool converged = false;
    while (it < opts.max_iterations) {
        ++it;
        if (g == 0.0) {
            converged = true;
            break;
        }
        (g < 0.0 ? lo : hi) = b;
        double next = b - g / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double change = std::abs(next - b);
        b = next;
        g = score(b, dg);
        if (change < 1e-13 * b || hi - lo < 1e-14 * b) {
            converged = true;
            break;
        }
    }
    if (!converged) throw ConvergenceError("Weibull MLE did not converge", it, std::abs(g));

    FitResult res;
    res.family = Family::weibull;
    res.estimator = Estimator::mle;
    res.params = WeibullParams{std::exp(mean_log + lmax + std::log(s0 / static_cast<double>(n)) / b), b};
    res.sample_size = n;
    res.iterations = it;
    res.gradient_norm = std::abs(g);
    res.chi = chi_against_default_density(samples, res, opts.bins_per_decade);
    return res;
}

FitResult fit_qexp_mle(std::span<const double> samples, const FitOptions& opts) {
    const std::size_t n = samples.size();
    if (n < min_mle_samples) throw InvalidArgument("q-exponential MLE needs at least 100 samples");
    long double total = 0.0L;
    for (double x : samples) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("q-exponential MLE needs non-negative samples");
        total += x;
    }
    const double mean = static_cast<double>(total / static_cast<long double>(n));
    if (!(mean > 0.0)) throw DegenerateSeriesError("q-exponential MLE on all-zero samples");
    std::vector<double> y(samples.begin(), samples.end());
    for (auto& v : y) v /= mean;

    // Mean negative log-likelihood in theta = (log mu, log(q - 1)), mu in units of the sample mean.
    auto nll = [&](const Vec2& t, Vec2& grad) {
        const double inv_mu = std::exp(-t[0]);
        const double k = std::exp(t[1]);
        long double sum_log = 0.0L, sum_ratio = 0.0L;
        for (double v : y) {
            const double z = v * inv_mu;
            sum_log += std::log1p(k * z);
            sum_ratio += z / (1.0 + k * z);
        }
        const double L = static_cast<double>(sum_log / static_cast<long double>(n));
        const double T = static_cast<double>(sum_ratio / static_cast<long double>(n));
        grad = {1.0 - (1.0 + k) * T, -L / k + (1.0 + k) * T};
        return t[0] + (1.0 + k) / k * L;
    };

    OptimizeOptions o;
    o.max_iterations = opts.max_iterations;
    o.lower = {std::log(1e-12), std::log(1e-8)};
    o.upper = {std::log(1e6), std::log(50.0)};
    const Vec2 starts[] = {{0.0, std::log(0.5)},
                           {0.0, std::log(0.2)},
                           {0.0, std::log(0.8)},
                           {std::log(0.5), std::log(0.5)},
                           {std::log(2.0), std::log(0.5)}};
    std::vector<OptimizeResult> runs;
    for (const auto& s : starts) runs.push_back(detail::bfgs_minimize(nll, s, o));
    const auto best = best_of(runs, "q-exponential MLE");
    if (best.theta[1] >= o.upper[1] || best.theta[0] <= o.lower[0])
        throw ConvergenceError("q-exponential likelihood is unbounded on these samples", best.iterations,
                               best.gradient_norm);

    FitResult res;
    res.family = Family::qexp;
    res.estimator = Estimator::mle;
    res.params = QExpParams{mean * std::exp(best.theta[0]), 1.0 + std::exp(best.theta[1])};
    res.sample_size = n;
    res.iterations = best.iterations;
    res.gradient_norm = best.gradient_norm;
    res.chi = chi_against_default_density(samples, res, opts.bins_per_decade);
    return res;
}

FitResult fit_weibull_nlse(const DensityEstimate& density, const FitOptions& opts) {
    const auto occupied = check_nlse_input(density);
    std::vector<double> lc, target;
    lc.reserve(occupied);
    target.reserve(occupied);
    for (std::size_t i = 0; i < density.bins(); ++i) {
        if (density.empty_bin(i)) continue;
        lc.push_back(std::log(density.centers[i]));
        target.push_back(std::log10(density.density[i]));
    }

    // ln p(c) = log b - ln c + b z - exp(b z), z = ln c - ln a.
    auto residuals = [&](const Vec2& t, std::vector<double>& r, std::vector<double>& jac) {
        const double b = std::exp(t[1]);
        r.resize(lc.size());
        jac.resize(2 * lc.size());
        for (std::size_t i = 0; i < lc.size(); ++i) {
            const double bz = b * (lc[i] - t[0]);
            const double e = std::exp(bz);
            const double lnp = t[1] - lc[i] + bz - e;
            if (!std::isfinite(lnp) || !std::isfinite(e)) return false;
            r[i] = target[i] - lnp / ln10;
            jac[2 * i] = -(b * (e - 1.0)) / ln10;
            jac[2 * i + 1] = -(1.0 + bz * (1.0 - e)) / ln10;
        }
        return true;
    };

    const auto m = density_moments(density);
    const double b0 = weibull_shape_from_cv2(m.m2 / (m.m1 * m.m1) - 1.0);
    const double a0 = m.m1 / std::exp(std::lgamma(1.0 + 1.0 / b0));
    OptimizeOptions o;
    o.max_iterations = opts.max_iterations;
    o.lower = {-std::numeric_limits<double>::infinity(), std::log(0.01)};
    o.upper = {std::numeric_limits<double>::infinity(), std::log(20.0)};
    const Vec2 starts[] = {{std::log(a0), std::log(b0)},
                           {std::log(0.5 * a0), std::log(b0)},
                           {std::log(2.0 * a0), std::log(b0)},
                           {std::log(a0), std::log(0.7 * b0)},
                           {std::log(a0), std::log(1.4 * b0)}};
    std::vector<OptimizeResult> runs;
    for (const auto& s : starts) runs.push_back(detail::levenberg_marquardt(residuals, s, o));
    const auto best = best_of(runs, "Weibull least squares");

    FitResult res;
    res.family = Family::weibull;
    res.estimator = Estimator::nlse;
    res.params = WeibullParams{std::exp(best.theta[0]), std::exp(best.theta[1])};
    res.sample_size = density.sample_count;
    res.iterations = best.iterations;
    res.gradient_norm = best.gradient_norm;
    res.chi = residual_rms(density, res.model());
    return res;
}

FitResult fit_qexp_nlse(const DensityEstimate& density, const FitOptions& opts) {
    const auto occupied = check_nlse_input(density);
    std::vector<double> c, target;
    c.reserve(occupied);
    target.reserve(occupied);
    for (std::size_t i = 0; i < density.bins(); ++i) {
        if (density.empty_bin(i)) continue;
        c.push_back(density.centers[i]);
        target.push_back(std::log10(density.density[i]));
    }

    // ln p(c) = -ln mu - ((1 + k)/k) log1p(k c/mu), k = q - 1.
    auto residuals = [&](const Vec2& t, std::vector<double>& r, std::vector<double>& jac) {
        const double inv_mu = std::exp(-t[0]);
        const double k = std::exp(t[1]);
        r.resize(c.size());
        jac.resize(2 * c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double z = c[i] * inv_mu;
            const double lu = std::log1p(k * z);
            const double ratio = (1.0 + k) * z / (1.0 + k * z);
            const double lnp = -t[0] - (1.0 + k) / k * lu;
            if (!std::isfinite(lnp)) return false;
            r[i] = target[i] - lnp / ln10;
            jac[2 * i] = -(-1.0 + ratio) / ln10;
            jac[2 * i + 1] = -(lu / k - ratio) / ln10;
        }
        return true;
    };

    const double mu0 = density_moments(density).m1;
    OptimizeOptions o;
    o.max_iterations = opts.max_iterations;
    o.lower = {-std::numeric_limits<double>::infinity(), std::log(1e-8)};
    o.upper = {std::numeric_limits<double>::infinity(), std::log(50.0)};
    const Vec2 starts[] = {{std::log(mu0), std::log(0.5)},
                           {std::log(mu0), std::log(0.2)},
                           {std::log(mu0), std::log(0.8)},
                           {std::log(0.5 * mu0), std::log(0.5)},
                           {std::log(2.0 * mu0), std::log(0.5)}};
    std::vector<OptimizeResult> runs;
    for (const auto& s : starts) runs.push_back(detail::levenberg_marquardt(residuals, s, o));
    const auto best = best_of(runs, "q-exponential least squares");

    FitResult res;
    res.family = Family::qexp;
    res.estimator = Estimator::nlse;
    res.params = QExpParams{std::exp(best.theta[0]), 1.0 + std::exp(best.theta[1])};
    res.sample_size = density.sample_count;
    res.iterations = best.iterations;
    res.gradient_norm = best.gradient_norm;
    res.chi = residual_rms(density, res.model());
    return res;
}

FitResult fit(std::span<const double> samples, Family family, Estimator estimator, const FitOptions& opts) {
    if (estimator == Estimator::mle)
        return family == Family::weibull ? fit_weibull_mle(samples, opts) : fit_qexp_mle(samples, opts);
    const auto density = empirical_density(samples, opts.bins_per_decade);
    return family == Family::weibull ? fit_weibull_nlse(density, opts) : fit_qexp_nlse(density, opts);
}

}  // namespace durstat
