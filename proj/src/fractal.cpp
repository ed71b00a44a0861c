#include "durstat/fractal.hpp"

#include "durstat/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace durstat {

std::vector<std::size_t> make_scale_grid(std::size_t n, std::size_t smin, std::size_t smax, std::size_t count) {
    if (n < min_fractal_length)
        throw InvalidArgument("series of length " + std::to_string(n) + " is too short; need at least " +
                              std::to_string(min_fractal_length));
    if (smax == 0) smax = n / 4;
    if (smin < 2 || smax < smin || smax > n) throw InvalidArgument("scale range is empty or exceeds the series");
    if (count < 2) count = 2;
    std::vector<std::size_t> out;
    const double lmin = std::log(static_cast<double>(smin));
    const double lmax = std::log(static_cast<double>(smax));
    for (std::size_t i = 0; i < count; ++i) {
        const double l = lmin + (lmax - lmin) * static_cast<double>(i) / static_cast<double>(count - 1);
        const auto s = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::exp(l))), smin, smax);
        if (out.empty() || s > out.back()) out.push_back(s);
    }
    return out;
}

std::vector<double> profile(std::span<const double> series) {
    std::vector<double> y(series.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) y[i] = acc += series[i];
    return y;
}

namespace {

// Orthonormal polynomial basis on t = 0..s-1, rows of length s.
std::vector<std::vector<double>> window_basis(std::size_t s, int order) {
    std::vector<std::vector<double>> basis;
    const double mid = 0.5 * static_cast<double>(s - 1);
    const double half = std::max(mid, 1.0);
    for (int k = 0; k <= order; ++k) {
        std::vector<double> v(s);
        for (std::size_t t = 0; t < s; ++t) v[t] = std::pow((static_cast<double>(t) - mid) / half, k);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : basis) {
                double dot = 0.0;
                for (std::size_t t = 0; t < s; ++t) dot += b[t] * v[t];
                for (std::size_t t = 0; t < s; ++t) v[t] -= dot * b[t];
            }
        }
        double nrm = 0.0;
        for (double x : v) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (!(nrm > 0.0)) throw NumericError("detrending basis is degenerate for window " + std::to_string(s));
        for (auto& x : v) x /= nrm;
        basis.push_back(std::move(v));
    }
    return basis;
}

double window_rms(std::span<const double> w, const std::vector<std::vector<double>>& basis, std::vector<double>& res) {
    const std::size_t s = w.size();
    const double shift = w[0];
    for (std::size_t t = 0; t < s; ++t) res[t] = w[t] - shift;
    for (const auto& b : basis) {
        double c = 0.0;
        for (std::size_t t = 0; t < s; ++t) c += b[t] * res[t];
        for (std::size_t t = 0; t < s; ++t) res[t] -= c * b[t];
    }
    double ss = 0.0;
    for (double r : res) ss += r * r;
    return std::sqrt(ss / static_cast<double>(s));
}

}  // namespace

std::vector<double> segment_fluctuations(std::span<const double> y, std::size_t s, int order) {
    if (order < 0) throw InvalidArgument("detrending order must be non-negative");
    if (s < static_cast<std::size_t>(order) + 2)
        throw InvalidArgument("window size " + std::to_string(s) + " too small for detrending order " +
                              std::to_string(order));
    if (s > y.size()) throw InvalidArgument("window size exceeds the series length");
    const std::size_t n = y.size();
    const std::size_t ns = n / s;
    const auto basis = window_basis(s, order);
    std::vector<double> res(s);
    std::vector<double> r;
    r.reserve(2 * ns);
    for (std::size_t k = 0; k < ns; ++k) r.push_back(window_rms(y.subspan(k * s, s), basis, res));
    for (std::size_t k = 0; k < ns; ++k) r.push_back(window_rms(y.subspan(n - (k + 1) * s, s), basis, res));
    return r;
}

double fluctuation_function(std::span<const double> residuals, double q) {
    if (residuals.empty()) throw InvalidArgument("no window residuals");
    const double n = static_cast<double>(residuals.size());
    for (std::size_t k = 0; k < residuals.size(); ++k) {
        if (!(residuals[k] >= 0.0)) throw InvalidArgument("window residuals must be non-negative");
        if (q <= 0.0 && residuals[k] == 0.0)
            throw SingularWindowError("window " + std::to_string(k) + " has zero residual at q = " + std::to_string(q),
                                      k);
    }
    if (q == 0.0) {
        double s = 0.0;
        for (double r : residuals) s += std::log(r);
        return std::exp(s / n);
    }
    // log-sum-exp keeps r^q finite for large |q|
    double top = -std::numeric_limits<double>::infinity();
    for (double r : residuals)
        if (r > 0.0) top = std::max(top, q * std::log(r));
    if (top == -std::numeric_limits<double>::infinity()) return 0.0;
    double acc = 0.0;
    for (double r : residuals)
        if (r > 0.0) acc += std::exp(q * std::log(r) - top);
    return std::exp((top + std::log(acc / n)) / q);
}

ScalingFit scaling_exponent(std::span<const std::size_t> scales, std::span<const double> fluctuations) {
    if (scales.size() != fluctuations.size()) throw InvalidArgument("scale and fluctuation counts differ");
    const std::size_t n = scales.size();
    if (n < 5) throw InvalidArgument("scaling fit needs at least 5 scales");
    std::vector<double> x(n), y(n);
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(fluctuations[i] > 0.0) || !std::isfinite(fluctuations[i]))
            throw InvalidArgument("fluctuation function must be positive at every scale");
        x[i] = std::log(static_cast<double>(scales[i]));
        y[i] = std::log(fluctuations[i]);
        xm += x[i];
        ym += y[i];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    if (!(sxx > 0.0)) throw InvalidArgument("scales must not all be equal");
    const double slope = sxy / sxx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - ym - slope * (x[i] - xm);
        ssr += e * e;
    }
    return {slope, std::sqrt(ssr / static_cast<double>(n - 2) / sxx)};
}

DfaResult dfa(std::span<const double> series, std::vector<std::size_t> scales, int order) {
    if (series.size() < min_fractal_length) throw InvalidArgument("series too short for DFA");
    if (scales.empty()) scales = make_scale_grid(series.size());
    const auto y = profile(series);
    DfaResult out;
    out.order = order;
    out.scales = std::move(scales);
    out.fluctuation.reserve(out.scales.size());
    for (auto s : out.scales) out.fluctuation.push_back(fluctuation_function(segment_fluctuations(y, s, order), 2.0));
    const auto fit = scaling_exponent(out.scales, out.fluctuation);
    out.hurst = fit.exponent;
    out.std_error = fit.std_error;
    return out;
}

std::vector<double> default_q_grid() { return make_q_grid(-6.0, 6.0); }

std::vector<double> make_q_grid(double qmin, double qmax) {
    if (!(qmin < qmax)) throw InvalidArgument("q range must satisfy qmin < qmax");
    std::vector<double> q;
    for (double v = std::ceil(qmin); v <= qmax; v += 1.0) {
        if (v == 0.0) {
            if (-0.5 >= qmin) q.push_back(-0.5);
            q.push_back(0.0);
            if (0.5 <= qmax) q.push_back(0.5);
        } else {
            q.push_back(v);
        }
    }
    if (q.empty() || q.front() > qmin) q.insert(q.begin(), qmin);
    if (q.back() < qmax) q.push_back(qmax);
    std::sort(q.begin(), q.end());
    q.erase(std::unique(q.begin(), q.end()), q.end());
    return q;
}

Spectrum legendre_spectrum(std::span<const double> q, std::span<const double> h) {
    const std::size_t n = q.size();
    if (n != h.size()) throw InvalidArgument("q grid and h(q) differ in length");
    if (n < 3) throw InvalidArgument("Legendre transform needs h on at least 3 q points");
    for (std::size_t i = 1; i < n; ++i)
        if (!(q[i] > q[i - 1])) throw InvalidArgument("q grid must be strictly increasing");
    Spectrum sp;
    sp.alpha.resize(n);
    sp.f.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == n ? i : i + 1;
        const double dh = (h[hi] - h[lo]) / (q[hi] - q[lo]);
        sp.alpha[i] = q[i] * dh + h[i];
        sp.f[i] = q[i] * q[i] * dh + 1.0;
    }
    const auto [mn, mx] = std::minmax_element(sp.alpha.begin(), sp.alpha.end());
    sp.width = *mx - *mn;
    const double tol = 1e-3 * std::max(1.0, sp.width);
    for (std::size_t i = 1; i < n; ++i)
        if (sp.alpha[i] > sp.alpha[i - 1] + tol) sp.monotone = false;
    return sp;
}

MultifractalResult mfdfa(std::span<const double> series, std::vector<double> q_grid, std::vector<std::size_t> scales,
                         int order) {
    if (series.size() < min_fractal_length) throw InvalidArgument("series too short for MF-DFA");
    if (q_grid.size() < 3) throw InvalidArgument("MF-DFA needs at least three q values");
    if (scales.empty()) scales = make_scale_grid(series.size());
    const auto y = profile(series);

    MultifractalResult out;
    auto& surf = out.surface;
    surf.q = std::move(q_grid);
    surf.scales = std::move(scales);
    surf.order = order;
    const std::size_t nq = surf.q.size();
    const std::size_t ns = surf.scales.size();
    surf.values.assign(nq * ns, 0.0);
    for (std::size_t si = 0; si < ns; ++si) {
        const auto r = segment_fluctuations(y, surf.scales[si], order);
        for (std::size_t qi = 0; qi < nq; ++qi) surf.values[qi * ns + si] = fluctuation_function(r, surf.q[qi]);
    }
    out.h.resize(nq);
    out.h_std_error.resize(nq);
    std::vector<double> row(ns);
    for (std::size_t qi = 0; qi < nq; ++qi) {
        for (std::size_t si = 0; si < ns; ++si) row[si] = surf.at(qi, si);
        const auto fit = scaling_exponent(surf.scales, row);
        out.h[qi] = fit.exponent;
        out.h_std_error[qi] = fit.std_error;
        if (surf.q[qi] == 2.0) {
            out.hurst = fit.exponent;
            out.hurst_std_error = fit.std_error;
        }
    }
    out.spectrum = legendre_spectrum(surf.q, out.h);
    return out;
}

}  // namespace durstat
