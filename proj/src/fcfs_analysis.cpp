#include "nudgeq/fcfs_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "nudgeq/errors.hpp"
#include "nudgeq/format.hpp"
#include "nudgeq/numerics.hpp"

namespace nudgeq {

namespace {

double load_of(double lambda, const JobSizeDistribution& dist)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("arrival rate must be positive and finite");
    }
    const double rho = lambda * dist.mean();
    if (!(rho < 1.0)) {
        std::ostringstream os;
        os << "unstable system: rho = " << rho << " >= 1";
        throw StabilityError(os.str());
    }
    return rho;
}

} // namespace

double theta_star(double lambda, const JobSizeDistribution& dist)
{
    load_of(lambda, dist);
    auto f = [&](double th) { return lambda * dist.lst(-th) - lambda - th; };

    const double sc = dist.s_crit();
    double hi;
    if (std::isfinite(sc)) {
        hi = sc * (1.0 - 2e-6);
        if (!(f(hi) > 0.0)) {
            std::ostringstream os;
            os << dist.label() << ": lambda S~(-theta) - lambda - theta has no sign change below s_crit = "
               << sc << "; the waiting time has no exponential decay rate";
            throw ClassIViolation(os.str());
        }
    } else {
        hi = 1.0 / dist.mean();
        while (!(f(hi) > 0.0)) {
            hi *= 2.0;
            if (hi > 1e8 / dist.mean()) throw NumericalError("theta*: failed to bracket the root");
        }
    }
    // f < 0 on (0, theta*) by convexity, since f(0) = 0 and f'(0) = rho - 1 < 0
    double lo = hi;
    for (int i = 0; f(lo) >= 0.0; ++i) {
        lo *= 0.5;
        if (i > 1100) throw NumericalError("theta*: failed to bracket the root from below");
    }
    return numerics::brent_root(f, lo, hi, 1e-15 * hi, 400).root;
}

FcfsModel::FcfsModel(double lambda, JobSizeDistribution dist)
    : lambda_(lambda), dist_(std::move(dist)), rho_(load_of(lambda, dist_)),
      theta_(nudgeq::theta_star(lambda, dist_)), lst_lambda_(dist_.lst(lambda))
{
}

double FcfsModel::waiting_lst(double s) const
{
    if (!(s > -theta_)) {
        std::ostringstream os;
        os.precision(17);
        os << "waiting-time transform evaluated at s = " << s << " <= -theta* = " << -theta_;
        throw std::domain_error(os.str());
    }
    // (1-rho)s / (lambda S~(s) - lambda + s) rewritten without the removable singularity at 0
    return (1.0 - rho_) / (1.0 - lambda_ * dist_.tail_lst(s));
}

double waiting_lst(double lambda, const JobSizeDistribution& dist, double s)
{
    return FcfsModel(lambda, dist).waiting_lst(s);
}

GridSpec default_grid(double lambda, const JobSizeDistribution& dist, double theta)
{
    return {std::min(1e-3, 1.0 / (50.0 * lambda)), std::max(30.0 / theta, 50.0 * dist.mean())};
}

DensityGrid waiting_density_grid(double lambda, const JobSizeDistribution& dist, double grid_step,
                                 double grid_horizon, kernels::ExecutionMode mode)
{
    const double rho = load_of(lambda, dist);
    if (!(grid_step > 0.0) || !(grid_horizon > grid_step)) {
        throw std::invalid_argument("density grid needs 0 < grid_step < grid_horizon");
    }
    const double n_steps = std::ceil(grid_horizon / grid_step - 1e-9);
    if (n_steps > 1e7) throw std::invalid_argument("density grid would exceed 1e7 points");
    const auto n = static_cast<std::size_t>(n_steps);

    std::vector<double> kernel(n + 1), forcing(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        kernel[k] = dist.sf(static_cast<double>(k) * grid_step);
        forcing[k] = (1.0 - rho) * lambda * kernel[k];
    }
    DensityGrid grid;
    grid.step = grid_step;
    grid.horizon = static_cast<double>(n) * grid_step;
    grid.f = kernels::march_volterra(forcing, kernel, lambda, grid_step, mode);
    for (double& v : grid.f) {
        if (v < -1e-9) {
            throw NumericalError("waiting density went negative; retry with a smaller grid_step");
        }
        v = std::max(v, 0.0);
    }
    return grid;
}

double g_star_limit(double lambda, const JobSizeDistribution& dist, double theta)
{
    const double rho = load_of(lambda, dist);
    return (1.0 - rho) * theta / (-lambda * dist.lst_derivative(-theta) - 1.0);
}

FcfsTailProfile g_profile(double lambda, const JobSizeDistribution& dist, double theta,
                          const DensityGrid& grid)
{
    FcfsTailProfile p;
    p.lambda = lambda;
    p.rho = load_of(lambda, dist);
    p.theta_star = theta;
    p.grid_step = grid.step;
    p.grid_horizon = grid.horizon;
    if (grid.horizon < 20.0 / theta * (1.0 - 1e-12)) {
        throw std::invalid_argument("g_profile needs grid_horizon >= 20/theta*");
    }
    p.f_values = grid.f;
    p.g_values.resize(grid.f.size());
    for (std::size_t k = 0; k < grid.f.size(); ++k) {
        p.g_values[k] = grid.f[k] * std::exp(theta * grid.t(k));
    }
    p.g_star = g_star_limit(lambda, dist, theta);
    const double tail = p.g_values.back();
    if (std::abs(tail - p.g_star) > 0.005 * p.g_star) {
        std::ostringstream os;
        os << "horizon too short: g(" << grid.horizon << ") = " << tail << " has not converged to g* = "
           << p.g_star << " within 0.5%";
        throw NumericalError(os.str());
    }
    const auto [mn, mx] = std::minmax_element(p.g_values.begin(), p.g_values.end());
    p.g_min_grid = std::min(*mn, p.g_star);
    p.g_max_grid = std::max(*mx, p.g_star);
    const double widen = 10.0 * grid.step * (lambda + theta);
    if (!(widen < 0.5)) throw std::invalid_argument("grid_step too coarse for a usable g bound");
    p.g_min = p.g_min_grid * (1.0 - widen);
    p.g_max = p.g_max_grid * (1.0 + widen);
    p.c_q_residue = p.g_star;
    p.lst_at_theta = dist.lst(-theta);
    p.c_fcfs = p.g_star * p.lst_at_theta / theta;
    return p;
}

FcfsTailProfile fcfs_tail_profile(double lambda, const JobSizeDistribution& dist, kernels::ExecutionMode mode)
{
    const double theta = theta_star(lambda, dist);
    const GridSpec spec = default_grid(lambda, dist, theta);
    return g_profile(lambda, dist, theta, waiting_density_grid(lambda, dist, spec.step, spec.horizon, mode));
}

void write_profile_csv(const FcfsTailProfile& profile, std::ostream& out, std::size_t stride)
{
    stride = std::max<std::size_t>(stride, 1);
    out << "t,f,g\n";
    for (std::size_t k = 0; k < profile.g_values.size(); k += stride) {
        out << format_double(static_cast<double>(k) * profile.grid_step) << ','
            << format_double(profile.f_values[k]) << ',' << format_double(profile.g_values[k]) << '\n';
    }
}

} // namespace nudgeq
