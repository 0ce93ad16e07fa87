#include "nudgeq/nudge_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "nudgeq/errors.hpp"
#include "nudgeq/format.hpp"
#include "nudgeq/numerics.hpp"

namespace nudgeq {

using numerics::kInf;

void NudgeParams::validate() const
{
    if (!(x1 >= 0.0) || !(x2 >= x1) || !(x3 >= x2)) {
        std::ostringstream os;
        os << "Nudge cutoffs must satisfy 0 <= x1 <= x2 <= x3, got (" << x1 << ", " << x2 << ", " << x3 << ")";
        throw std::invalid_argument(os.str());
    }
}

std::string to_key_value(const ImprovementReport& r)
{
    std::ostringstream os;
    auto b = [](bool v) { return v ? "true" : "false"; };
    os << "theta_star=" << format_double(r.theta_star) << '\n'
       << "p_small=" << format_double(r.p_small) << '\n'
       << "p_large=" << format_double(r.p_large) << '\n'
       << "lst_small_at_theta=" << format_double(r.lst_small_at_theta) << '\n'
       << "lst_large_at_theta=" << format_double(r.lst_large_at_theta) << '\n'
       << "g_min=" << format_double(r.g_min) << '\n'
       << "g_max=" << format_double(r.g_max) << '\n'
       << "g_bounds=" << (r.g_estimated ? "estimated" : "exact") << '\n'
       << "condition_ratio_lhs=" << format_double(r.condition_ratio_lhs) << '\n'
       << "asym_ratio_lhs=" << format_double(r.asym_ratio_lhs) << '\n'
       << "condition_ratio_rhs=" << format_double(r.condition_ratio_rhs) << '\n'
       << "condition_i=" << b(r.condition_i) << '\n'
       << "condition_ii=" << b(r.condition_ii) << '\n'
       << "stochastic_regime=" << b(r.stochastic_regime) << '\n'
       << "asym_condition=" << b(r.asym_condition) << '\n'
       << "asym_tir=" << format_double(r.asym_tir) << '\n';
    return os.str();
}

NudgeModel::NudgeModel(NudgeParams params, JobSizeDistribution dist, double lambda)
    : params_(params), fcfs_(lambda, std::move(dist))
{
    params_.validate();
    p_small_ = params_.x1 > 0.0 ? fcfs_.dist().band_probability(0.0, params_.x1) : 0.0;
    p_large_ = params_.x3 > params_.x2 ? fcfs_.dist().band_probability(params_.x2, params_.x3) : 0.0;
}

void NudgeModel::check_domain(double s) const
{
    if (!(s > -theta_star())) {
        std::ostringstream os;
        os.precision(17);
        os << "Nudge transform evaluated at s = " << s << " <= -theta* = " << -theta_star();
        throw std::domain_error(os.str());
    }
}

double NudgeModel::small_partial(double s) const
{
    return p_small_ > 0.0 ? dist().partial_lst(0.0, params_.x1, s) : 0.0;
}

double NudgeModel::large_partial(double s) const
{
    return p_large_ > 0.0 ? dist().partial_lst(params_.x2, params_.x3, s) : 0.0;
}

double NudgeModel::small_lst(double s) const
{
    if (!(p_small_ > 0.0)) throw DistributionError("small band [0, x1) is empty");
    return small_partial(s) / p_small_;
}

double NudgeModel::large_lst(double s) const
{
    if (!(p_large_ > 0.0)) throw DistributionError("large band [x2, x3) is empty");
    return large_partial(s) / p_large_;
}

double asym_tir(const NudgeParams& params, const JobSizeDistribution& dist, double lambda, double theta)
{
    params.validate();
    const double p_s = params.x1 > 0.0 ? dist.band_probability(0.0, params.x1) : 0.0;
    const double p_l = params.x3 > params.x2 ? dist.band_probability(params.x2, params.x3) : 0.0;
    if (!(p_s > 0.0) || !(p_l > 0.0)) return 0.0;
    // partial transforms P = p * S~_band(-theta*)
    const double ps_lst = dist.partial_lst(0.0, params.x1, -theta);
    const double pl_lst = dist.partial_lst(params.x2, params.x3, -theta);
    const double a = lambda / (lambda + theta);
    const double b = theta / (lambda + theta);
    return a * (p_s * pl_lst - a * p_l * ps_lst - b * pl_lst * ps_lst);
}

double NudgeModel::asym_tir() const { return nudgeq::asym_tir(params_, dist(), lambda(), theta_star()); }

double NudgeModel::h_divided_difference(double s) const
{
    const double lam = lambda();
    const auto& d = dist();
    if (std::abs(s - lam) < 1e-4 * lam) {
        // h'((lambda + s)/2) is second-order accurate for the symmetric difference
        const double m = 0.5 * (lam + s);
        const double sm = d.lst(m);
        return 1.0 / sm - m * d.lst_derivative(m) / (sm * sm);
    }
    return (lam / fcfs_.lst_at_lambda() - s / d.lst(s)) / (lam - s);
}

double NudgeModel::q_empty_no_interrupt(double s) const
{
    check_domain(s);
    // (1-rho)/S~(lambda) (lambda S~(s) - s S~(lambda))/(lambda - s) = (1-rho) S~(s) D_h(s)
    return (1.0 - rho()) * dist().lst(s) * h_divided_difference(s);
}

double NudgeModel::large_queueing_lst(double s) const
{
    check_domain(s);
    const double pass = p_small_ - small_partial(s);  // p_small (1 - S~_small(s))
    return (1.0 - pass) * fcfs_.waiting_lst(s) + pass * fcfs_.waiting_lst(lambda() + s);
}

double NudgeModel::small_queueing_lst(double s) const
{
    check_domain(s);
    const double passed = p_large_ - large_partial(s);  // p_large (1 - S~_large(s))
    const double tq = fcfs_.waiting_lst(s);
    return tq * (1.0 + passed / dist().lst(s)) - passed * (1.0 - rho()) * h_divided_difference(s);
}

double NudgeModel::response_lst(double s) const
{
    check_domain(s);
    const double tq = fcfs_.waiting_lst(s);
    const double lst = dist().lst(s);
    const double ps_part = small_partial(s), pl_part = large_partial(s);
    // p_s p_l S~_l (1 - S~_s) and p_s p_l S~_s (1 - S~_l)
    const double large_pushed = pl_part * (p_small_ - ps_part);
    const double small_pulled = ps_part * (p_large_ - pl_part);
    const double no_interrupt = (1.0 - rho()) * h_divided_difference(s);
    return tq * lst + large_pushed * (fcfs_.waiting_lst(lambda() + s) - tq) +
           small_pulled * (tq / lst - no_interrupt);
}

double NudgeModel::response_lst_mixture(double s) const
{
    check_domain(s);
    const double ps_part = small_partial(s), pl_part = large_partial(s);
    const double rest = dist().lst(s) - ps_part - pl_part;
    double total = rest * fcfs_.waiting_lst(s);
    if (p_small_ > 0.0) total += ps_part * small_queueing_lst(s);
    if (p_large_ > 0.0) total += pl_part * large_queueing_lst(s);
    return total;
}

namespace {

// E[e^{theta min(t, Z)}] for Z restricted to [lo, hi), unnormalized (times the band probability).
double exp_min_partial(const JobSizeDistribution& d, double theta, double t, double lo, double hi)
{
    const double below = d.partial_lst(lo, std::min(hi, t), -theta);
    const double above = t < hi ? d.band_probability(std::max(lo, t), hi) : 0.0;
    return below + std::exp(theta * t) * above;
}

// E[e^{theta min(t, X + Y)}] p_s p_l with X small and Y large, both independent.
double exp_min_sum_partial(const NudgeModel& m, double theta, double t)
{
    const auto& d = m.dist();
    const auto& p = m.params();
    const double et = std::exp(theta * t);
    auto inner = [&](double y) {
        // X-expectation given Y = y < t
        const double cut = t - y;
        return std::exp(theta * y) * d.partial_lst(0.0, std::min(p.x1, cut), -theta) +
               et * d.band_probability(std::max(0.0, cut), p.x1);
    };
    double total = 0.0;
    const double y_hi = std::min(p.x3, t);
    if (y_hi > p.x2) {
        std::vector<double> cuts{t - p.x1};
        auto f = [&](double y) {
            const double dens = d.pdf(y);
            return dens > 0.0 ? dens * inner(y) : 0.0;
        };
        total += numerics::integrate(f, p.x2, y_hi, cuts, 1e-11);
    }
    // Y >= t: the minimum is t whatever X is
    if (p.x3 > t) total += et * m.p_small() * d.band_probability(std::max(p.x2, t), p.x3);
    return total;
}

} // namespace

double NudgeModel::increase_upper_bound(double t, double g_max) const
{
    if (!(p_small_ > 0.0) || !(p_large_ > 0.0)) return 0.0;
    const double th = theta_star();
    const double sum_term = exp_min_sum_partial(*this, th, t);
    const double large_term = p_small_ * exp_min_partial(dist(), th, t, params_.x2, params_.x3);
    // the difference is nonnegative; clamp quadrature rounding
    return std::exp(-th * t) / th * g_max * std::max(0.0, sum_term - large_term);
}

double NudgeModel::decrease_lower_bound(double t, double g_min) const
{
    if (!(p_small_ > 0.0) || !(p_large_ > 0.0)) return 0.0;
    const double th = theta_star();
    const double lam = lambda();
    const double sum_term = exp_min_sum_partial(*this, th, t);
    const double small_term = p_large_ * exp_min_partial(dist(), th, t, 0.0, params_.x1);
    return std::exp(-th * t) / th * g_min * lam / (lam + th) * std::max(0.0, sum_term - small_term);
}

ImprovementReport check_regime(const NudgeParams& params, const FcfsTailProfile& profile,
                               const JobSizeDistribution& dist, double lambda)
{
    const NudgeModel m(params, dist, lambda);
    if (!(m.p_small() > 0.0)) throw DistributionError("small band [0, x1) has zero probability");
    if (!(m.p_large() > 0.0)) throw DistributionError("large band [x2, x3) has zero probability");
    ImprovementReport r;
    const double th = profile.theta_star > 0.0 ? profile.theta_star : m.theta_star();
    r.theta_star = th;
    r.p_small = m.p_small();
    r.p_large = m.p_large();
    r.lst_small_at_theta = m.small_lst(-th);
    r.lst_large_at_theta = m.large_lst(-th);
    r.g_min = profile.g_min;
    r.g_max = profile.g_max;
    r.g_estimated = profile.estimated;
    r.asym_ratio_lhs = (lambda + th) / lambda;
    r.condition_ratio_lhs = profile.g_max / profile.g_min * r.asym_ratio_lhs;
    r.condition_ratio_rhs = (1.0 - 1.0 / r.lst_large_at_theta) / (1.0 - 1.0 / r.lst_small_at_theta);
    r.condition_i = r.condition_ratio_lhs < r.condition_ratio_rhs;
    r.condition_ii = params.x1 + params.x3 <= 2.0 * params.x2;
    r.stochastic_regime = r.condition_i && r.condition_ii;
    r.asym_condition = r.asym_ratio_lhs < r.condition_ratio_rhs;
    r.asym_tir = nudgeq::asym_tir(params, dist, lambda, th);
    return r;
}

NudgeParams construct_params(const JobSizeDistribution& dist, double lambda, const FcfsTailProfile& profile,
                             double x3)
{
    const FcfsModel fcfs(lambda, dist);  // stability check
    if (dist.s_min() > 0.0) throw std::invalid_argument("construct_params requires s_min = 0");
    if (!(x3 > 0.0) || std::isinf(x3)) throw std::invalid_argument("construct_params requires a finite x3 > 0");
    const double th = profile.theta_star;
    NudgeParams p{0.0, 0.75 * x3, x3};
    const double p_large = dist.band_probability(p.x2, p.x3);
    if (!(p_large > 0.0)) throw DistributionError("large band [0.75 x3, x3) has zero probability");
    const double lst_large = dist.partial_lst(p.x2, p.x3, -th) / p_large;
    const double big_m = profile.g_max / profile.g_min * (lambda + th) / lambda;
    const double arg = 1.0 - (1.0 - 1.0 / lst_large) / big_m;
    const double log_bound = arg > 0.0 ? -std::log(arg) / th : kInf;
    const double bound = std::min(log_bound, 0.5 * x3);
    p.x1 = 0.5 * bound;
    const auto report = check_regime(p, profile, dist, lambda);
    if (!report.stochastic_regime) {
        throw NumericalError("constructed parameters failed the improvement-regime check");
    }
    return p;
}

double q_empty_no_interrupt(double lambda, const JobSizeDistribution& dist, double s)
{
    return NudgeModel({0.0, 0.0, 0.0}, dist, lambda).q_empty_no_interrupt(s);
}

double large_queueing_lst(const NudgeParams& params, const JobSizeDistribution& dist, double lambda, double s)
{
    return NudgeModel(params, dist, lambda).large_queueing_lst(s);
}

double small_queueing_lst(const NudgeParams& params, const JobSizeDistribution& dist, double lambda, double s)
{
    return NudgeModel(params, dist, lambda).small_queueing_lst(s);
}

double nudge_response_lst(const NudgeParams& params, const JobSizeDistribution& dist, double lambda, double s)
{
    return NudgeModel(params, dist, lambda).response_lst(s);
}

double nudge_tail_constant(const NudgeParams& params, const JobSizeDistribution& dist, double lambda,
                           const FcfsTailProfile& profile)
{
    return profile.c_fcfs * (1.0 - asym_tir(params, dist, lambda, profile.theta_star));
}

} // namespace nudgeq
