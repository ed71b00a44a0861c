#pragma once

// Small two-parameter optimizers shared by the distribution fits.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace durstat::detail {

using Vec2 = std::array<double, 2>;

struct OptimizeResult {
    Vec2 theta{};
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    double gradient_norm = std::numeric_limits<double>::infinity();
    bool converged = false;
};

struct OptimizeOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-8;
    double gradient_tolerance = 1e-10;
    Vec2 lower{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    Vec2 upper{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
};

/// Fills residuals and the n x 2 Jacobian (row-major); false when the model
/// is not finite at theta.
using ResidualFn = std::function<bool(const Vec2& theta, std::vector<double>& r, std::vector<double>& jac)>;

/// Damped Gauss-Newton (Levenberg-Marquardt) on 0.5 * sum r^2.
OptimizeResult levenberg_marquardt(const ResidualFn& fn, Vec2 start, const OptimizeOptions& opts = {});

/// Returns the objective and fills its gradient; +inf when undefined.
using ObjectiveFn = std::function<double(const Vec2& theta, Vec2& grad)>;

/// BFGS with Armijo backtracking, box constraints handled by projection.
OptimizeResult bfgs_minimize(const ObjectiveFn& fn, Vec2 start, const OptimizeOptions& opts = {});

}  // namespace durstat::detail
