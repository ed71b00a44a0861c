#include "optimize.hpp"

#include <algorithm>

namespace durstat::detail {

namespace {

Vec2 clamp_box(Vec2 t, const OptimizeOptions& o) {
    for (int i = 0; i < 2; ++i) t[i] = std::clamp(t[i], o.lower[i], o.upper[i]);
    return t;
}

double norm(const Vec2& v) { return std::hypot(v[0], v[1]); }

}  // namespace

OptimizeResult levenberg_marquardt(const ResidualFn& fn, Vec2 start, const OptimizeOptions& opts) {
    OptimizeResult res;
    std::vector<double> r, jac, r_try, jac_try;
    Vec2 theta = clamp_box(start, opts);
    if (!fn(theta, r, jac)) return res;

    auto cost_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::isfinite(s) ? 0.5 * s : std::numeric_limits<double>::infinity();
    };
    double cost = cost_of(r);
    if (!std::isfinite(cost)) return res;
    double lambda = 1e-3;

    for (int it = 1; it <= opts.max_iterations; ++it) {
        res.iterations = it;
        double a = 0, b = 0, c = 0, g0 = 0, g1 = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double j0 = jac[2 * i], j1 = jac[2 * i + 1];
            a += j0 * j0;
            b += j0 * j1;
            c += j1 * j1;
            g0 += j0 * r[i];
            g1 += j1 * r[i];
        }
        res.gradient_norm = std::hypot(g0, g1);
        if (res.gradient_norm < opts.gradient_tolerance) {
            res.converged = true;
            break;
        }

        bool accepted = false;
        while (!accepted) {
            const double da = a + lambda * std::max(a, 1e-12);
            const double dc = c + lambda * std::max(c, 1e-12);
            const double det = da * dc - b * b;
            if (!(std::abs(det) > 0.0)) {
                lambda *= 10.0;
                if (lambda > 1e16) break;
                continue;
            }
            const Vec2 step{-(dc * g0 - b * g1) / det, -(da * g1 - b * g0) / det};
            const Vec2 trial = clamp_box({theta[0] + step[0], theta[1] + step[1]}, opts);
            const Vec2 moved{trial[0] - theta[0], trial[1] - theta[1]};
            double trial_cost = std::numeric_limits<double>::infinity();
            if (fn(trial, r_try, jac_try)) trial_cost = cost_of(r_try);
            if (trial_cost <= cost) {
                const bool small = norm(moved) < opts.step_tolerance;
                theta = trial;
                cost = trial_cost;
                r.swap(r_try);
                jac.swap(jac_try);
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (small) {
                    res.converged = true;
                }
            } else {
                lambda *= 4.0;
                if (lambda > 1e16) break;
            }
        }
        if (!accepted) {
            // No descent step exists at any damping: theta is stationary to rounding.
            res.converged = res.gradient_norm < 1e-6 * (1.0 + cost);
            break;
        }
        if (res.converged) break;
    }
    res.theta = theta;
    res.value = cost;
    return res;
}

OptimizeResult bfgs_minimize(const ObjectiveFn& fn, Vec2 start, const OptimizeOptions& opts) {
    OptimizeResult res;
    Vec2 x = clamp_box(start, opts);
    Vec2 g{};
    double f = fn(x, g);
    if (!std::isfinite(f)) return res;
    // Inverse Hessian approximation, symmetric 2x2 stored as h00, h01, h11.
    double h00 = 1.0, h01 = 0.0, h11 = 1.0;

    auto projected_gradient = [&](const Vec2& at, const Vec2& grad) {
        Vec2 pg = grad;
        for (int i = 0; i < 2; ++i) {
            if (at[i] <= opts.lower[i] && grad[i] > 0.0) pg[i] = 0.0;
            if (at[i] >= opts.upper[i] && grad[i] < 0.0) pg[i] = 0.0;
        }
        return pg;
    };

    for (int it = 1; it <= opts.max_iterations; ++it) {
        res.iterations = it;
        const Vec2 pg = projected_gradient(x, g);
        res.gradient_norm = norm(pg);
        if (res.gradient_norm < opts.gradient_tolerance) {
            res.converged = true;
            break;
        }
        Vec2 d{-(h00 * pg[0] + h01 * pg[1]), -(h01 * pg[0] + h11 * pg[1])};
        for (int i = 0; i < 2; ++i)
            if (pg[i] == 0.0) d[i] = 0.0;
        double slope = d[0] * pg[0] + d[1] * pg[1];
        if (!(slope < 0.0)) {
            h00 = h11 = 1.0;
            h01 = 0.0;
            d = {-pg[0], -pg[1]};
            slope = -(pg[0] * pg[0] + pg[1] * pg[1]);
        }

        double t = 1.0;
        Vec2 xn{}, gn{};
        double fn_val = std::numeric_limits<double>::infinity();
        bool ok = false;
        for (int k = 0; k < 60; ++k) {
            xn = clamp_box({x[0] + t * d[0], x[1] + t * d[1]}, opts);
            fn_val = fn(xn, gn);
            const double actual = (xn[0] - x[0]) * pg[0] + (xn[1] - x[1]) * pg[1];
            if (std::isfinite(fn_val) && fn_val <= f + 1e-4 * std::min(actual, 0.0)) {
                ok = true;
                break;
            }
            t *= 0.5;
        }
        if (!ok) {
            // Line search exhausted: f is flat to rounding along every descent direction.
            res.converged = res.gradient_norm < 1e-6;
            break;
        }

        const Vec2 s{xn[0] - x[0], xn[1] - x[1]};
        const Vec2 y{gn[0] - g[0], gn[1] - g[1]};
        const double step = norm(s);
        x = xn;
        f = fn_val;
        g = gn;
        if (step < opts.step_tolerance) {
            res.gradient_norm = norm(projected_gradient(x, g));
            res.converged = true;
            break;
        }
        const double sy = s[0] * y[0] + s[1] * y[1];
        if (sy > 1e-14) {
            // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / sy;
            const double hy0 = h00 * y[0] + h01 * y[1];
            const double hy1 = h01 * y[0] + h11 * y[1];
            const double yhy = y[0] * hy0 + y[1] * hy1;
            const double k = rho * rho * yhy + rho;
            h00 += k * s[0] * s[0] - rho * (hy0 * s[0] + s[0] * hy0);
            h01 += k * s[0] * s[1] - rho * (hy0 * s[1] + s[0] * hy1);
            h11 += k * s[1] * s[1] - rho * (hy1 * s[1] + s[1] * hy1);
        }
    }
    res.theta = x;
    res.value = f;
    return res;
}

}  // namespace durstat::detail
