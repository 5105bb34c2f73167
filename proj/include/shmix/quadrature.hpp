#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "shmix/error.hpp"

namespace shmix::quadrature {

struct Tolerance {
    double absolute = 1e-10;
    double relative = 1e-8;
};

namespace detail {

template <class F>
double integrate_segment(F& f, double a, double b, Tolerance tol) {
    if (a == b) return 0.0;
    using rule = boost::math::quadrature::gauss_kronrod<double, 61>;
    double error = 0.0;
    double l1 = 0.0;
    double value = rule::integrate(f, a, b, 0, 0.0, &error, &l1);
    // Boost's target is relative to the L1 norm only; fold the absolute
    // tolerance in so tiny segments are not refined below rounding level.
    const double target = std::max(tol.absolute, tol.relative * std::abs(l1)) * 1e-2;
    if (error > target && std::isfinite(value)) {
        const double relative = std::max(
            {target / std::max(std::abs(l1), std::numeric_limits<double>::min()),
             100.0 * std::numeric_limits<double>::epsilon()});
        value = rule::integrate(f, a, b, 15, relative, &error, &l1);
    }
    if (!std::isfinite(value) || error > std::max(tol.absolute, tol.relative * std::abs(l1))) {
        throw NumericError("quadrature did not converge on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "], error estimate " + std::to_string(error));
    }
    return value;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integral of f over [a, b]; either end may be infinite.
/// The range is split at every finite breakpoint inside it so that kinks and
/// peaks of the integrand sit on segment boundaries.
template <class F>
double integrate(F f, double a, double b, std::vector<double> breakpoints = {}, Tolerance tol = {}) {
    if (std::isnan(a) || std::isnan(b)) throw DomainError("quadrature bounds must not be NaN");
    if (a > b) return -integrate(f, b, a, std::move(breakpoints), tol);

    std::vector<double> cuts{a};
    std::sort(breakpoints.begin(), breakpoints.end());
    for (double x : breakpoints) {
        if (std::isfinite(x) && x > cuts.back() && x < b) cuts.push_back(x);
    }
    cuts.push_back(b);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        total += detail::integrate_segment(f, cuts[i], cuts[i + 1], tol);
    }
    return total;
}

}  // namespace shmix::quadrature
