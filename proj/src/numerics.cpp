#include "nudgeq/numerics.hpp"

#include <algorithm>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace nudgeq::numerics {

namespace {

double integrate_finite(const std::function<double(double)>& f, double a, double b, double rel_tol)
{
    if (!(b > a)) return 0.0;
    static thread_local boost::math::quadrature::tanh_sinh<double> engine(15);
    double err = 0.0, l1 = 0.0;
    return engine.integrate(f, a, b, rel_tol, &err, &l1);
}

double integrate_tail(const std::function<double(double)>& f, double a, double rel_tol)
{
    static thread_local boost::math::quadrature::exp_sinh<double> engine(12);
    double err = 0.0, l1 = 0.0;
    // exp_sinh wants the lower limit at 0
    auto shifted = [&](double u) { return f(a + u); };
    return engine.integrate(shifted, 0.0, kInf, rel_tol, &err, &l1);
}

} // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breakpoints, double rel_tol)
{
    if (!(b > a)) return 0.0;
    std::vector<double> cuts{a};
    for (double x : breakpoints) {
        if (x > a && x < b) cuts.push_back(x);
    }
    std::sort(cuts.begin() + 1, cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    cuts.push_back(b);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i], hi = cuts[i + 1];
        total += std::isinf(hi) ? integrate_tail(f, lo, rel_tol)
                                : integrate_finite(f, lo, hi, rel_tol);
    }
    return total;
}

} // namespace nudgeq::numerics
