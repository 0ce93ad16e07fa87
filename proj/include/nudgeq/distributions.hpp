#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nudgeq/random_stream.hpp"

namespace nudgeq {

/// Invalid distribution parameters or spec objects.
class DistributionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {
class Family;
}

/*
 * A job-size law: density, CDF, Laplace-Stieltjes transform on its real
 * convergence region, sampler and support bounds.
 *
 * Immutable value type; copies share the underlying family object, so a
 * distribution can be used from several threads at once.
 */
class JobSizeDistribution {
public:
    static JobSizeDistribution exponential(double rate);
    static JobSizeDistribution hyperexponential(std::vector<double> probs, std::vector<double> rates);
    static JobSizeDistribution uniform(double lo, double hi);
    static JobSizeDistribution bounded_lomax(double scale, double max, double alpha);
    static JobSizeDistribution erlang(int k, double rate);
    static JobSizeDistribution scaled_beta(double alpha, double beta, double scale);
    static JobSizeDistribution triangle(double min, double mode, double max);
    static JobSizeDistribution inverse_gaussian(double mu, double shape);
    static JobSizeDistribution chi_squared(double k);
    static JobSizeDistribution mixed_uniform(std::vector<double> probs, std::vector<double> los,
                                             std::vector<double> his);
    static JobSizeDistribution point_mass(double value);

    /// Parses the mini-format, e.g. {"family": "uniform", "lo": 0, "hi": 2}.
    static JobSizeDistribution from_json(const nlohmann::json& spec);

    nlohmann::json spec() const;
    std::string family() const;
    /// Short human-readable label, e.g. "Uniform(0,2)".
    std::string label() const;

    double mean() const;
    double second_moment() const;
    double scv() const;
    double s_min() const;
    double s_max() const;
    /// s* such that -s* is the rightmost singularity of the transform (+inf if entire).
    double s_crit() const;
    bool continuous() const;
    /// True when the transform grows without bound at -s_crit.
    bool transform_diverges_at_singularity() const;

    double pdf(double x) const;
    double cdf(double x) const;
    double sf(double x) const;
    /// f_S(0+); may be +inf.
    double density_at_zero() const;

    /// E[e^{-sS}]; throws std::domain_error when s is not inside the convergence region.
    double lst(double s) const;
    /// Same quantity via quadrature of e^{-st} f(t), regardless of closed forms.
    double lst_by_quadrature(double s) const;
    bool has_closed_form_lst() const;
    /// d/ds E[e^{-sS}] = -E[S e^{-sS}].
    double lst_derivative(double s) const;

    /// int_0^inf e^{-sx} P{S > x} dx = (1 - S~(s))/s, equal to E[S] at s = 0.
    double tail_lst(double s) const;

    /// E[e^{-sS}; lo <= S < hi].
    double partial_lst(double lo, double hi, double s) const;
    /// P{lo <= S < hi}.
    double band_probability(double lo, double hi) const;

    double sample(RandomStream& stream) const;

    const std::shared_ptr<const detail::Family>& family_ptr() const { return impl_; }
    explicit JobSizeDistribution(std::shared_ptr<const detail::Family> impl);

private:
    void check_transform_domain(double s) const;
    double quadrature_partial(double lo, double hi, double s) const;
    std::shared_ptr<const detail::Family> impl_;
    double mean_ = 0.0;
    double second_moment_ = 0.0;
};

struct ClassIResult {
    double s_crit = 0.0;
    bool is_class_I = false;
};

/// Class-I classification; throws DistributionError for laws with atoms.
ClassIResult classify_class_I(const JobSizeDistribution& dist);

struct BandConditioned {
    JobSizeDistribution band_dist;  // law of [S | lo <= S < hi]
    double probability = 0.0;       // P{lo <= S < hi}
    double lo = 0.0;
    double hi = 0.0;
};

/// Throws DistributionError for an empty (zero-probability) band.
BandConditioned condition_to_band(const JobSizeDistribution& dist, double lo, double hi);

double evaluate_lst(const JobSizeDistribution& dist, double s);

struct Moments {
    double mean = 0.0;
    double scv = 0.0;
};

Moments moments(const JobSizeDistribution& dist);

inline double sample(const JobSizeDistribution& dist, RandomStream& stream)
{
    return dist.sample(stream);
}

} // namespace nudgeq
