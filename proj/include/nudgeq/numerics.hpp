#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>

namespace nudgeq::numerics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct RootResult {
    double root = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/*
 * Brent's method on a bracket [lo, hi] with f(lo) and f(hi) of opposite sign.
 * Terminates when the bracket is narrower than x_tol (absolute) or f hits 0.
 */
template <class F>
RootResult brent_root(F&& f, double lo, double hi, double x_tol, int max_iters = 200)
{
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return {a, 0.0, 0};
    if (fb == 0.0) return {b, 0.0, 0};
    if ((fa > 0) == (fb > 0)) {
        throw std::domain_error("brent_root: interval does not bracket a root");
    }
    double c = a, fc = fa;
    double d = b - a, e = d;
    int it = 0;
    for (; it < max_iters; ++it) {
        if ((fb > 0) == (fc > 0)) {
            c = a; fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * x_tol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0) break;

        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol) ? d : (m > 0 ? tol : -tol);
        fb = f(b);
    }
    return {b, fb, it};
}

// Adaptive quadrature of f over [a, b] (b may be +inf). Pieces are split at
// the given interior breakpoints; finite pieces use tanh-sinh, which tolerates
// integrable endpoint singularities, and a semi-infinite tail uses exp-sinh.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breakpoints = {}, double rel_tol = 1e-13);

// Central difference with step h.
template <class F>
double central_difference(F&& f, double x, double h)
{
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace nudgeq::numerics
