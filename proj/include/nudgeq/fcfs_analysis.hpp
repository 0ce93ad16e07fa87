#pragma once

#include <iosfwd>
#include <vector>

#include "nudgeq/distributions.hpp"
#include "nudgeq/kernels.hpp"

namespace nudgeq {

/// Least positive root of lambda*S~(-theta) - lambda - theta = 0.
double theta_star(double lambda, const JobSizeDistribution& dist);

/// Pollaczek-Khinchine waiting-time transform (1-rho)s / (lambda S~(s) - lambda + s).
double waiting_lst(double lambda, const JobSizeDistribution& dist, double s);

/*
 * M/G/1 FCFS quantities that are reused many times: load, theta* and the
 * waiting-time transform. Construction validates stability.
 */
class FcfsModel {
public:
    FcfsModel(double lambda, JobSizeDistribution dist);

    double lambda() const { return lambda_; }
    double rho() const { return rho_; }
    double theta_star() const { return theta_; }
    const JobSizeDistribution& dist() const { return dist_; }

    /// T~_Q(s); throws std::domain_error for s <= -theta*.
    double waiting_lst(double s) const;
    /// S~(lambda), used by the empty-queue identities.
    double lst_at_lambda() const { return lst_lambda_; }

private:
    double lambda_;
    JobSizeDistribution dist_;
    double rho_;
    double theta_;
    double lst_lambda_;
};

struct GridSpec {
    double step = 0.0;
    double horizon = 0.0;
};

/// step = min(1e-3, 1/(50 lambda)), horizon = max(30/theta*, 50 E[S]).
GridSpec default_grid(double lambda, const JobSizeDistribution& dist, double theta);

struct DensityGrid {
    double step = 0.0;
    double horizon = 0.0;
    std::vector<double> f;  // continuous part of the waiting density at t_k = k*step, k = 0..N

    double t(std::size_t k) const { return static_cast<double>(k) * step; }
};

/// Waiting-time density from the level-crossing equation, marched with trapezoidal convolution.
DensityGrid waiting_density_grid(double lambda, const JobSizeDistribution& dist, double grid_step,
                                 double grid_horizon,
                                 kernels::ExecutionMode mode = kernels::ExecutionMode::parallel);

struct FcfsTailProfile {
    double lambda = 0.0;
    double rho = 0.0;
    double theta_star = 0.0;
    double grid_step = 0.0;
    double grid_horizon = 0.0;
    std::vector<double> f_values;
    std::vector<double> g_values;  // g(t_k) = f(t_k) e^{theta* t_k}
    // extremes over the grid values and g_star
    double g_min_grid = 0.0;
    double g_max_grid = 0.0;
    // the same extremes widened by (1 -/+ 10 h (lambda + theta*)) to cover off-grid excursions
    double g_min = 0.0;
    double g_max = 0.0;
    double g_star = 0.0;
    double c_q_residue = 0.0;
    double c_fcfs = 0.0;
    double lst_at_theta = 0.0;  // S~(-theta*)
    bool estimated = true;      // g_min/g_max come from a grid, not a closed form

    double g_ratio() const { return g_max / g_min; }
};

/// g* = (1-rho) theta* / (-lambda S~'(-theta*) - 1).
double g_star_limit(double lambda, const JobSizeDistribution& dist, double theta);

FcfsTailProfile g_profile(double lambda, const JobSizeDistribution& dist, double theta,
                          const DensityGrid& grid);

/// theta*, default grid and profile in one call.
FcfsTailProfile fcfs_tail_profile(double lambda, const JobSizeDistribution& dist,
                                  kernels::ExecutionMode mode = kernels::ExecutionMode::parallel);

/// CSV with columns t,f,g; `stride` thins the grid.
void write_profile_csv(const FcfsTailProfile& profile, std::ostream& out, std::size_t stride = 1);

} // namespace nudgeq
