#pragma once

#include <string>

#include "nudgeq/distributions.hpp"
#include "nudgeq/fcfs_analysis.hpp"

namespace nudgeq {

/// Cutoffs: small [0,x1), medium [x1,x2), large [x2,x3), very large [x3,inf).
struct NudgeParams {
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;

    /// Throws std::invalid_argument unless 0 <= x1 <= x2 <= x3.
    void validate() const;
    bool is_small(double s) const { return s < x1; }
    bool is_large(double s) const { return s >= x2 && s < x3; }
};

struct ImprovementReport {
    double theta_star = 0.0;
    double p_small = 0.0;
    double p_large = 0.0;
    double lst_small_at_theta = 0.0;  // S~_small(-theta*)
    double lst_large_at_theta = 0.0;  // S~_large(-theta*)
    double g_min = 0.0;
    double g_max = 0.0;
    bool g_estimated = true;
    double condition_ratio_lhs = 0.0;  // (g_max/g_min)(lambda+theta*)/lambda
    double asym_ratio_lhs = 0.0;       // (lambda+theta*)/lambda
    double condition_ratio_rhs = 0.0;
    bool condition_i = false;
    bool condition_ii = false;
    bool stochastic_regime = false;
    bool asym_condition = false;
    double asym_tir = 0.0;
};

/// One "key=value" line per metric.
std::string to_key_value(const ImprovementReport& report);

/*
 * Nudge analysis for one (params, law, arrival rate): band probabilities and
 * transforms plus the FCFS model they build on. Immutable after construction.
 */
class NudgeModel {
public:
    NudgeModel(NudgeParams params, JobSizeDistribution dist, double lambda);

    const NudgeParams& params() const { return params_; }
    const FcfsModel& fcfs() const { return fcfs_; }
    const JobSizeDistribution& dist() const { return fcfs_.dist(); }
    double lambda() const { return fcfs_.lambda(); }
    double rho() const { return fcfs_.rho(); }
    double theta_star() const { return fcfs_.theta_star(); }
    double p_small() const { return p_small_; }
    double p_large() const { return p_large_; }

    /// E[e^{-sS}; S small] = p_small S~_small(s), and likewise for large.
    double small_partial(double s) const;
    double large_partial(double s) const;
    /// Conditional transforms; throw for an empty band.
    double small_lst(double s) const;
    double large_lst(double s) const;

    double asym_tir() const;
    double q_empty_no_interrupt(double s) const;
    double large_queueing_lst(double s) const;
    double small_queueing_lst(double s) const;
    /// Closed form of the Nudge response-time transform.
    double response_lst(double s) const;
    /// Same transform assembled as a mixture over job classes.
    double response_lst_mixture(double s) const;
    double fcfs_response_lst(double s) const { return fcfs_.waiting_lst(s) * dist().lst(s); }

    /// Upper bound on P{I_t} (swap pushes a large job's response time across t).
    double increase_upper_bound(double t, double g_max) const;
    /// Lower bound on P{D_t} (swap pulls a small job's response time below t).
    double decrease_lower_bound(double t, double g_min) const;

private:
    void check_domain(double s) const;
    // (h(lambda) - h(s)) / (lambda - s) for h(x) = x / S~(x)
    double h_divided_difference(double s) const;

    NudgeParams params_;
    FcfsModel fcfs_;
    double p_small_;
    double p_large_;
};

ImprovementReport check_regime(const NudgeParams& params, const FcfsTailProfile& profile,
                               const JobSizeDistribution& dist, double lambda);

NudgeParams construct_params(const JobSizeDistribution& dist, double lambda, const FcfsTailProfile& profile,
                             double x3);

double asym_tir(const NudgeParams& params, const JobSizeDistribution& dist, double lambda, double theta_star);

double q_empty_no_interrupt(double lambda, const JobSizeDistribution& dist, double s);
double large_queueing_lst(const NudgeParams& params, const JobSizeDistribution& dist, double lambda, double s);
double small_queueing_lst(const NudgeParams& params, const JobSizeDistribution& dist, double lambda, double s);
double nudge_response_lst(const NudgeParams& params, const JobSizeDistribution& dist, double lambda, double s);

/// C_Nudge = c_fcfs (1 - AsymTIR).
double nudge_tail_constant(const NudgeParams& params, const JobSizeDistribution& dist, double lambda,
                           const FcfsTailProfile& profile);

} // namespace nudgeq
