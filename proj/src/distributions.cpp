#include "nudgeq/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "nudgeq/numerics.hpp"

namespace nudgeq {

using numerics::kInf;
using nlohmann::json;

namespace detail {

class Family {
public:
    virtual ~Family() = default;

    virtual std::string name() const = 0;
    virtual json spec() const = 0;
    virtual std::string label() const = 0;

    virtual double pdf(double x) const = 0;
    virtual double cdf(double x) const = 0;
    virtual double sf(double x) const { return 1.0 - cdf(x); }

    virtual double s_min() const = 0;
    virtual double s_max() const = 0;
    virtual double s_crit() const { return kInf; }
    virtual bool diverges_at_singularity() const { return true; }
    virtual bool continuous() const { return true; }
    virtual double density_at_zero() const { return s_min() > 0.0 ? 0.0 : pdf(0.0); }
    virtual std::vector<double> breakpoints() const { return {}; }

    virtual double mean() const
    {
        return s_min() + numerics::integrate([this](double x) { return sf(x); }, s_min(), s_max(),
                                             breakpoints(), 1e-12);
    }
    virtual double second_moment() const
    {
        // E[S^2] = 2 * int x P{S > x} dx
        const double lo = s_min();
        return lo * lo + numerics::integrate([this](double x) { return 2.0 * x * sf(x); }, lo,
                                             s_max(), breakpoints(), 1e-12);
    }

    virtual bool has_closed_lst() const { return false; }
    virtual double closed_lst(double) const { throw std::logic_error("no closed-form transform"); }
    virtual bool has_closed_lst_derivative() const { return false; }
    virtual double closed_lst_derivative(double) const
    {
        throw std::logic_error("no closed-form transform derivative");
    }
    virtual bool has_closed_partial() const { return false; }
    virtual double closed_partial(double, double, double) const
    {
        throw std::logic_error("no closed-form partial transform");
    }
    // (1 - S~(s))/s without cancellation near s = 0
    virtual bool has_closed_tail_lst() const { return false; }
    virtual double closed_tail_lst(double) const { throw std::logic_error("no closed-form tail transform"); }

    virtual double band_probability(double lo, double hi) const
    {
        lo = std::max(lo, s_min());
        if (!(hi > lo)) return 0.0;
        if (std::isinf(hi)) return sf(lo);
        if (cdf(lo) > 0.5) return std::max(0.0, sf(lo) - sf(hi));
        return std::max(0.0, cdf(hi) - cdf(lo));
    }

    virtual double quantile(double u) const
    {
        double lo = s_min();
        double hi = s_max();
        if (std::isinf(hi)) {
            hi = std::max(1.0, 2.0 * mean());
            while (cdf(hi) < u) hi *= 2.0;
        }
        if (u <= 0.0) return lo;
        auto f = [&](double x) { return u > 0.5 ? (1.0 - u) - sf(x) : cdf(x) - u; };
        if (f(lo) >= 0.0) return lo;
        if (f(hi) <= 0.0) return hi;
        return numerics::brent_root(f, lo, hi, 1e-14 * std::max(1.0, hi)).root;
    }

    virtual double sample(RandomStream& stream) const = 0;
};

namespace {

double require_positive(double v, const char* what)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DistributionError(std::string(what) + " must be positive and finite");
    }
    return v;
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// (1 - e^{-z}) / z, stable near 0
double one_minus_exp_over(double z)
{
    if (std::abs(z) < 1e-5) return 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
    return -std::expm1(-z) / z;
}

// P(a, x_hi) - P(a, x_lo), choosing the complement where it avoids cancellation.
double gamma_band(double a, double x_lo, double x_hi)
{
    if (!(x_hi > x_lo)) return 0.0;
    if (std::isinf(x_hi)) return boost::math::gamma_q(a, x_lo);
    if (x_lo > a) return boost::math::gamma_q(a, x_lo) - boost::math::gamma_q(a, x_hi);
    return boost::math::gamma_p(a, x_hi) - boost::math::gamma_p(a, x_lo);
}

class Exponential final : public Family {
public:
    explicit Exponential(double rate) : rate_(require_positive(rate, "exponential rate")) {}

    std::string name() const override { return "exponential"; }
    json spec() const override { return {{"family", "exponential"}, {"rate", rate_}}; }
    std::string label() const override { return "Exp(" + fmt(rate_) + ")"; }

    double pdf(double x) const override { return x < 0.0 ? 0.0 : rate_ * std::exp(-rate_ * x); }
    double cdf(double x) const override { return x <= 0.0 ? 0.0 : -std::expm1(-rate_ * x); }
    double sf(double x) const override { return x <= 0.0 ? 1.0 : std::exp(-rate_ * x); }
    double s_min() const override { return 0.0; }
    double s_max() const override { return kInf; }
    double s_crit() const override { return rate_; }
    double mean() const override { return 1.0 / rate_; }
    double second_moment() const override { return 2.0 / (rate_ * rate_); }

    bool has_closed_lst() const override { return true; }
    double closed_lst(double s) const override { return rate_ / (rate_ + s); }
    bool has_closed_lst_derivative() const override { return true; }
    double closed_lst_derivative(double s) const override
    {
        return -rate_ / ((rate_ + s) * (rate_ + s));
    }
    bool has_closed_partial() const override { return true; }
    double closed_partial(double lo, double hi, double s) const override
    {
        lo = std::max(lo, 0.0);
        if (!(hi > lo)) return 0.0;
        const double r = rate_ + s;
        const double head = std::exp(-r * lo);
        const double tail = std::isinf(hi) ? 0.0 : std::exp(-r * hi);
        return rate_ / r * (head - tail);
    }
    bool has_closed_tail_lst() const override { return true; }
    double closed_tail_lst(double s) const override { return 1.0 / (rate_ + s); }
    double quantile(double u) const override { return -std::log1p(-u) / rate_; }
    double sample(RandomStream& stream) const override { return stream.exponential(rate_); }

private:
    double rate_;
};

class Uniform final : public Family {
public:
    Uniform(double lo, double hi) : lo_(lo), hi_(hi)
    {
        if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) {
            throw DistributionError("uniform requires 0 <= lo < hi < inf");
        }
    }

    std::string name() const override { return "uniform"; }
    json spec() const override { return {{"family", "uniform"}, {"lo", lo_}, {"hi", hi_}}; }
    std::string label() const override { return "Uniform(" + fmt(lo_) + "," + fmt(hi_) + ")"; }

    double pdf(double x) const override { return (x >= lo_ && x <= hi_) ? 1.0 / (hi_ - lo_) : 0.0; }
    double cdf(double x) const override { return std::clamp((x - lo_) / (hi_ - lo_), 0.0, 1.0); }
    double sf(double x) const override { return std::clamp((hi_ - x) / (hi_ - lo_), 0.0, 1.0); }
    double s_min() const override { return lo_; }
    double s_max() const override { return hi_; }
    double density_at_zero() const override { return lo_ > 0.0 ? 0.0 : 1.0 / hi_; }
    double mean() const override { return 0.5 * (lo_ + hi_); }
    double second_moment() const override { return (lo_ * lo_ + lo_ * hi_ + hi_ * hi_) / 3.0; }

    bool has_closed_lst() const override { return true; }
    double closed_lst(double s) const override { return closed_partial(lo_, hi_, s); }
    bool has_closed_partial() const override { return true; }
    double closed_partial(double lo, double hi, double s) const override
    {
        const double a = std::max(lo, lo_);
        const double b = std::min(hi, hi_);
        if (!(b > a)) return 0.0;
        const double w = b - a;
        return std::exp(-s * a) * one_minus_exp_over(s * w) * w / (hi_ - lo_);
    }
    double quantile(double u) const override { return lo_ + u * (hi_ - lo_); }
    double sample(RandomStream& stream) const override
    {
        return lo_ + stream.uniform() * (hi_ - lo_);
    }

private:
    double lo_, hi_;
};

// Finite mixture; used for hyperexponential and mixed-uniform laws.
class Mixture final : public Family {
public:
    Mixture(std::string family_name, json spec, std::string label, std::vector<double> weights,
            std::vector<std::shared_ptr<const Family>> parts)
        : name_(std::move(family_name)), spec_(std::move(spec)), label_(std::move(label)),
          weights_(std::move(weights)), parts_(std::move(parts))
    {
        if (weights_.empty() || weights_.size() != parts_.size()) {
            throw DistributionError(name_ + ": branch lists must be non-empty and equally long");
        }
        double total = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0)) throw DistributionError(name_ + ": probabilities must be nonnegative");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw DistributionError(name_ + ": probabilities must sum to 1");
        }
        for (double& w : weights_) w /= total;
        cumulative_.resize(weights_.size());
        std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
    }

    std::string name() const override { return name_; }
    json spec() const override { return spec_; }
    std::string label() const override { return label_; }

    double pdf(double x) const override { return sum([x](const Family& f) { return f.pdf(x); }); }
    double cdf(double x) const override { return sum([x](const Family& f) { return f.cdf(x); }); }
    double sf(double x) const override { return sum([x](const Family& f) { return f.sf(x); }); }
    double s_min() const override
    {
        double v = kInf;
        for (std::size_t i = 0; i < parts_.size(); ++i)
            if (weights_[i] > 0.0) v = std::min(v, parts_[i]->s_min());
        return v;
    }
    double s_max() const override
    {
        double v = 0.0;
        for (std::size_t i = 0; i < parts_.size(); ++i)
            if (weights_[i] > 0.0) v = std::max(v, parts_[i]->s_max());
        return v;
    }
    double s_crit() const override
    {
        double v = kInf;
        for (std::size_t i = 0; i < parts_.size(); ++i)
            if (weights_[i] > 0.0) v = std::min(v, parts_[i]->s_crit());
        return v;
    }
    bool diverges_at_singularity() const override
    {
        const double sc = s_crit();
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            if (weights_[i] > 0.0 && parts_[i]->s_crit() == sc && parts_[i]->diverges_at_singularity())
                return true;
        }
        return false;
    }
    double density_at_zero() const override
    {
        return sum([](const Family& f) { return f.density_at_zero(); });
    }
    std::vector<double> breakpoints() const override
    {
        std::set<double> pts;
        for (const auto& p : parts_) {
            for (double b : p->breakpoints()) pts.insert(b);
            pts.insert(p->s_min());
            if (std::isfinite(p->s_max())) pts.insert(p->s_max());
        }
        return {pts.begin(), pts.end()};
    }
    double mean() const override { return sum([](const Family& f) { return f.mean(); }); }
    double second_moment() const override
    {
        return sum([](const Family& f) { return f.second_moment(); });
    }

    bool has_closed_lst() const override { return all_of(&Family::has_closed_lst); }
    double closed_lst(double s) const override
    {
        return sum([s](const Family& f) { return f.closed_lst(s); });
    }
    bool has_closed_lst_derivative() const override
    {
        return all_of(&Family::has_closed_lst_derivative);
    }
    double closed_lst_derivative(double s) const override
    {
        return sum([s](const Family& f) { return f.closed_lst_derivative(s); });
    }
    bool has_closed_tail_lst() const override { return all_of(&Family::has_closed_tail_lst); }
    double closed_tail_lst(double s) const override
    {
        return sum([s](const Family& f) { return f.closed_tail_lst(s); });
    }
    bool has_closed_partial() const override { return all_of(&Family::has_closed_partial); }
    double closed_partial(double lo, double hi, double s) const override
    {
        return sum([=](const Family& f) { return f.closed_partial(lo, hi, s); });
    }
    double band_probability(double lo, double hi) const override
    {
        return sum([=](const Family& f) { return f.band_probability(lo, hi); });
    }
    double sample(RandomStream& stream) const override
    {
        const double u = stream.uniform();
        std::size_t i = std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin();
        i = std::min(i, parts_.size() - 1);
        while (weights_[i] == 0.0 && i > 0) --i;
        return parts_[i]->sample(stream);
    }

private:
    template <class F>
    double sum(F&& f) const
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            if (weights_[i] > 0.0) acc += weights_[i] * f(*parts_[i]);
        }
        return acc;
    }
    bool all_of(bool (Family::*pred)() const) const
    {
        return std::all_of(parts_.begin(), parts_.end(), [pred](const auto& p) { return ((*p).*pred)(); });
    }

    std::string name_;
    json spec_;
    std::string label_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;
    std::vector<std::shared_ptr<const Family>> parts_;
};

// Lomax (Pareto II) density truncated to [0, max].
class BoundedLomax final : public Family {
public:
    BoundedLomax(double scale, double max, double alpha)
        : scale_(require_positive(scale, "bounded_lomax lambda")),
          max_(require_positive(max, "bounded_lomax max")),
          alpha_(require_positive(alpha, "bounded_lomax alpha")),
          norm_(-std::expm1(-alpha_ * std::log1p(max_ / scale_)))
    {
    }

    std::string name() const override { return "bounded_lomax"; }
    json spec() const override
    {
        return {{"family", "bounded_lomax"}, {"lambda", scale_}, {"max", max_}, {"alpha", alpha_}};
    }
    std::string label() const override
    {
        return "BoundedLomax(" + fmt(scale_) + "," + fmt(max_) + "," + fmt(alpha_) + ")";
    }

    double pdf(double x) const override
    {
        if (x < 0.0 || x > max_) return 0.0;
        return alpha_ / scale_ * std::pow(1.0 + x / scale_, -alpha_ - 1.0) / norm_;
    }
    double cdf(double x) const override
    {
        if (x <= 0.0) return 0.0;
        if (x >= max_) return 1.0;
        return -std::expm1(-alpha_ * std::log1p(x / scale_)) / norm_;
    }
    double sf(double x) const override
    {
        if (x <= 0.0) return 1.0;
        if (x >= max_) return 0.0;
        return (std::pow(1.0 + x / scale_, -alpha_) - std::pow(1.0 + max_ / scale_, -alpha_)) / norm_;
    }
    double s_min() const override { return 0.0; }
    double s_max() const override { return max_; }
    double quantile(double u) const override
    {
        return scale_ * std::expm1(-std::log1p(-u * norm_) / alpha_);
    }
    double sample(RandomStream& stream) const override
    {
        return std::min(quantile(stream.uniform()), max_);
    }

private:
    double scale_, max_, alpha_, norm_;
};

class Erlang final : public Family {
public:
    Erlang(int k, double rate) : k_(k), rate_(require_positive(rate, "erlang rate"))
    {
        if (k < 1) throw DistributionError("erlang k must be >= 1");
    }

    std::string name() const override { return "erlang"; }
    json spec() const override { return {{"family", "erlang"}, {"k", k_}, {"rate", rate_}}; }
    std::string label() const override { return "Erlang(" + std::to_string(k_) + "," + fmt(rate_) + ")"; }

    double pdf(double x) const override
    {
        if (x < 0.0) return 0.0;
        return boost::math::gamma_p_derivative(static_cast<double>(k_), rate_ * x) * rate_;
    }
    double cdf(double x) const override
    {
        return x <= 0.0 ? 0.0 : boost::math::gamma_p(static_cast<double>(k_), rate_ * x);
    }
    double sf(double x) const override
    {
        return x <= 0.0 ? 1.0 : boost::math::gamma_q(static_cast<double>(k_), rate_ * x);
    }
    double s_min() const override { return 0.0; }
    double s_max() const override { return kInf; }
    double s_crit() const override { return rate_; }
    double density_at_zero() const override { return k_ == 1 ? rate_ : 0.0; }
    double mean() const override { return k_ / rate_; }
    double second_moment() const override { return k_ * (k_ + 1.0) / (rate_ * rate_); }

    bool has_closed_lst() const override { return true; }
    double closed_lst(double s) const override { return std::pow(rate_ / (rate_ + s), k_); }
    bool has_closed_lst_derivative() const override { return true; }
    double closed_lst_derivative(double s) const override
    {
        return -k_ / (rate_ + s) * closed_lst(s);
    }
    bool has_closed_partial() const override { return true; }
    double closed_partial(double lo, double hi, double s) const override
    {
        lo = std::max(lo, 0.0);
        const double r = rate_ + s;
        return closed_lst(s) * gamma_band(k_, r * lo, std::isinf(hi) ? kInf : r * hi);
    }
    bool has_closed_tail_lst() const override { return true; }
    double closed_tail_lst(double s) const override
    {
        // (1 - q^k)/s with q = r/(r+s): sum_{j<k} q^j / (r+s)
        const double q = rate_ / (rate_ + s);
        double acc = 0.0, term = 1.0;
        for (int j = 0; j < k_; ++j, term *= q) acc += term;
        return acc / (rate_ + s);
    }
    double sample(RandomStream& stream) const override
    {
        double total = 0.0;
        for (int i = 0; i < k_; ++i) total += stream.exponential(rate_);
        return total;
    }

private:
    int k_;
    double rate_;
};

class ChiSquared final : public Family {
public:
    explicit ChiSquared(double k) : k_(require_positive(k, "chi_squared k")) {}

    std::string name() const override { return "chi_squared"; }
    json spec() const override { return {{"family", "chi_squared"}, {"k", k_}}; }
    std::string label() const override { return "ChiSquared(" + fmt(k_) + ")"; }

    double pdf(double x) const override
    {
        if (x <= 0.0) return x < 0.0 ? 0.0 : density_at_zero();
        return 0.5 * boost::math::gamma_p_derivative(0.5 * k_, 0.5 * x);
    }
    double cdf(double x) const override { return x <= 0.0 ? 0.0 : boost::math::gamma_p(0.5 * k_, 0.5 * x); }
    double sf(double x) const override { return x <= 0.0 ? 1.0 : boost::math::gamma_q(0.5 * k_, 0.5 * x); }
    double s_min() const override { return 0.0; }
    double s_max() const override { return kInf; }
    double s_crit() const override { return 0.5; }
    double density_at_zero() const override
    {
        if (k_ < 2.0) return kInf;
        return k_ == 2.0 ? 0.5 : 0.0;
    }
    double mean() const override { return k_; }
    double second_moment() const override { return 2.0 * k_ + k_ * k_; }

    bool has_closed_lst() const override { return true; }
    double closed_lst(double s) const override { return std::pow(1.0 + 2.0 * s, -0.5 * k_); }
    bool has_closed_lst_derivative() const override { return true; }
    double closed_lst_derivative(double s) const override
    {
        return -k_ * std::pow(1.0 + 2.0 * s, -0.5 * k_ - 1.0);
    }
    bool has_closed_partial() const override { return true; }
    double closed_partial(double lo, double hi, double s) const override
    {
        lo = std::max(lo, 0.0);
        const double r = 0.5 * (1.0 + 2.0 * s);
        return closed_lst(s) * gamma_band(0.5 * k_, r * lo, std::isinf(hi) ? kInf : r * hi);
    }
    bool has_closed_tail_lst() const override { return true; }
    double closed_tail_lst(double s) const override
    {
        if (s == 0.0) return k_;
        return -std::expm1(-0.5 * k_ * std::log1p(2.0 * s)) / s;
    }
    double sample(RandomStream& stream) const override { return 2.0 * stream.gamma(0.5 * k_); }

private:
    double k_;
};

// Beta(alpha, beta) stretched to [0, scale].
class ScaledBeta final : public Family {
public:
    ScaledBeta(double alpha, double beta, double scale)
        : alpha_(require_positive(alpha, "beta alpha")), beta_(require_positive(beta, "beta beta")),
          scale_(require_positive(scale, "beta scale")),
          log_norm_(std::log(boost::math::beta(alpha_, beta_)) + std::log(scale_))
    {
    }

    std::string name() const override { return "beta"; }
    json spec() const override
    {
        return {{"family", "beta"}, {"alpha", alpha_}, {"beta", beta_}, {"scale", scale_}};
    }
    std::string label() const override
    {
        return "Beta(" + fmt(alpha_) + "," + fmt(beta_) + ")*" + fmt(scale_);
    }

    double pdf(double x) const override
    {
        if (x < 0.0 || x > scale_) return 0.0;
        const double u = x / scale_;
        if (u == 0.0) return density_at_zero();
        if (u == 1.0) return beta_ < 1.0 ? kInf : (beta_ == 1.0 ? alpha_ / scale_ : 0.0);
        return std::exp((alpha_ - 1.0) * std::log(u) + (beta_ - 1.0) * std::log1p(-u) - log_norm_);
    }
    double cdf(double x) const override
    {
        if (x <= 0.0) return 0.0;
        if (x >= scale_) return 1.0;
        return boost::math::ibeta(alpha_, beta_, x / scale_);
    }
    double sf(double x) const override
    {
        if (x <= 0.0) return 1.0;
        if (x >= scale_) return 0.0;
        return boost::math::ibetac(alpha_, beta_, x / scale_);
    }
    double s_min() const override { return 0.0; }
    double s_max() const override { return scale_; }
    double density_at_zero() const override
    {
        if (alpha_ < 1.0) return kInf;
        return alpha_ == 1.0 ? beta_ / scale_ : 0.0;
    }
    double mean() const override { return scale_ * alpha_ / (alpha_ + beta_); }
    double second_moment() const override
    {
        const double ab = alpha_ + beta_;
        return scale_ * scale_ * alpha_ * (alpha_ + 1.0) / (ab * (ab + 1.0));
    }
    double quantile(double u) const override { return scale_ * boost::math::ibeta_inv(alpha_, beta_, u); }
    double sample(RandomStream& stream) const override
    {
        const double a = stream.gamma(alpha_);
        const double b = stream.gamma(beta_);
        return scale_ * a / (a + b);
    }

private:
    double alpha_, beta_, scale_, log_norm_;
};

class Triangle final : public Family {
public:
    Triangle(double lo, double mode, double hi) : lo_(lo), mode_(mode), hi_(hi)
    {
        if (!(lo >= 0.0) || !(mode >= lo) || !(hi >= mode) || !(hi > lo) || !std::isfinite(hi)) {
            throw DistributionError("triangle requires 0 <= min <= mode <= max, min < max");
        }
    }

    std::string name() const override { return "triangle"; }
    json spec() const override
    {
        return {{"family", "triangle"}, {"min", lo_}, {"mode", mode_}, {"max", hi_}};
    }
    std::string label() const override
    {
        return "Triangle(" + fmt(lo_) + "," + fmt(mode_) + "," + fmt(hi_) + ")";
    }

    double pdf(double x) const override
    {
        if (x < lo_ || x > hi_) return 0.0;
        const double w = hi_ - lo_;
        if (x < mode_) return 2.0 * (x - lo_) / (w * (mode_ - lo_));
        if (hi_ == mode_) return 2.0 / w;
        return 2.0 * (hi_ - x) / (w * (hi_ - mode_));
    }
    double cdf(double x) const override
    {
        if (x <= lo_) return 0.0;
        if (x >= hi_) return 1.0;
        const double w = hi_ - lo_;
        if (x <= mode_) return (x - lo_) * (x - lo_) / (w * (mode_ - lo_));
        return 1.0 - (hi_ - x) * (hi_ - x) / (w * (hi_ - mode_));
    }
    double sf(double x) const override
    {
        if (x <= lo_) return 1.0;
        if (x >= hi_) return 0.0;
        const double w = hi_ - lo_;
        if (x > mode_) return (hi_ - x) * (hi_ - x) / (w * (hi_ - mode_));
        return 1.0 - (x - lo_) * (x - lo_) / (w * (mode_ - lo_));
    }
    double s_min() const override { return lo_; }
    double s_max() const override { return hi_; }
    double density_at_zero() const override
    {
        if (lo_ > 0.0) return 0.0;
        return mode_ == lo_ ? 2.0 / hi_ : 0.0;
    }
    std::vector<double> breakpoints() const override { return {mode_}; }
    double mean() const override { return (lo_ + mode_ + hi_) / 3.0; }
    double second_moment() const override
    {
        const double var = (lo_ * lo_ + mode_ * mode_ + hi_ * hi_ - lo_ * mode_ - lo_ * hi_ - mode_ * hi_) / 18.0;
        const double m = mean();
        return var + m * m;
    }
    double quantile(double u) const override
    {
        const double w = hi_ - lo_;
        if (u < (mode_ - lo_) / w) return lo_ + std::sqrt(u * w * (mode_ - lo_));
        return hi_ - std::sqrt((1.0 - u) * w * (hi_ - mode_));
    }
    double sample(RandomStream& stream) const override { return quantile(stream.uniform()); }

private:
    double lo_, mode_, hi_;
};

// Inverse Gaussian (Wald). Its transform stays finite at the singularity.
class InverseGaussian final : public Family {
public:
    InverseGaussian(double mu, double shape)
        : mu_(require_positive(mu, "inverse_gaussian mu")),
          shape_(require_positive(shape, "inverse_gaussian shape"))
    {
    }

    std::string name() const override { return "inverse_gaussian"; }
    json spec() const override { return {{"family", "inverse_gaussian"}, {"mu", mu_}, {"shape", shape_}}; }
    std::string label() const override { return "InverseGaussian(" + fmt(mu_) + "," + fmt(shape_) + ")"; }

    double pdf(double x) const override
    {
        if (x <= 0.0) return 0.0;
        const double d = x - mu_;
        return std::sqrt(shape_ / (2.0 * M_PI * x * x * x)) *
               std::exp(-shape_ * d * d / (2.0 * mu_ * mu_ * x));
    }
    double cdf(double x) const override
    {
        if (x <= 0.0) return 0.0;
        return std::clamp(0.5 * std::erfc(-a(x) / M_SQRT2) + second_term(x), 0.0, 1.0);
    }
    double sf(double x) const override
    {
        if (x <= 0.0) return 1.0;
        return std::clamp(0.5 * std::erfc(a(x) / M_SQRT2) - second_term(x), 0.0, 1.0);
    }
    double s_min() const override { return 0.0; }
    double s_max() const override { return kInf; }
    double s_crit() const override { return shape_ / (2.0 * mu_ * mu_); }
    bool diverges_at_singularity() const override { return false; }
    double density_at_zero() const override { return 0.0; }
    double mean() const override { return mu_; }
    double second_moment() const override { return mu_ * mu_ * mu_ / shape_ + mu_ * mu_; }

    bool has_closed_lst() const override { return true; }
    double closed_lst(double s) const override
    {
        return std::exp(shape_ / mu_ * (1.0 - std::sqrt(1.0 + 2.0 * mu_ * mu_ * s / shape_)));
    }
    bool has_closed_lst_derivative() const override { return true; }
    double closed_lst_derivative(double s) const override
    {
        return -mu_ / std::sqrt(1.0 + 2.0 * mu_ * mu_ * s / shape_) * closed_lst(s);
    }
    bool has_closed_tail_lst() const override { return true; }
    double closed_tail_lst(double s) const override
    {
        if (s == 0.0) return mu_;
        // 1 - sqrt(1+x) = -x / (1 + sqrt(1+x))
        const double x = 2.0 * mu_ * mu_ * s / shape_;
        const double expo = -shape_ / mu_ * x / (1.0 + std::sqrt(1.0 + x));
        return -std::expm1(expo) / s;
    }
    double sample(RandomStream& stream) const override
    {
        const double nu = stream.normal();
        const double y = nu * nu;
        const double x = mu_ + mu_ * mu_ * y / (2.0 * shape_) -
                         mu_ / (2.0 * shape_) * std::sqrt(4.0 * mu_ * shape_ * y + mu_ * mu_ * y * y);
        return stream.uniform() <= mu_ / (mu_ + x) ? x : mu_ * mu_ / x;
    }

private:
    double a(double x) const { return std::sqrt(shape_ / x) * (x / mu_ - 1.0); }
    double second_term(double x) const
    {
        const double b = std::sqrt(shape_ / x) * (x / mu_ + 1.0);
        const double tail = 0.5 * std::erfc(b / M_SQRT2);
        if (tail <= 0.0) return 0.0;
        return std::exp(2.0 * shape_ / mu_ + std::log(tail));
    }

    double mu_, shape_;
};

class PointMass final : public Family {
public:
    explicit PointMass(double v) : v_(require_positive(v, "point_mass value")) {}

    std::string name() const override { return "point_mass"; }
    json spec() const override { return {{"family", "point_mass"}, {"value", v_}}; }
    std::string label() const override { return "PointMass(" + fmt(v_) + ")"; }

    double pdf(double) const override { throw DistributionError("point_mass has no density"); }
    double cdf(double x) const override { return x >= v_ ? 1.0 : 0.0; }
    double sf(double x) const override { return x < v_ ? 1.0 : 0.0; }
    double s_min() const override { return v_; }
    double s_max() const override { return v_; }
    bool continuous() const override { return false; }
    double density_at_zero() const override { return 0.0; }
    double mean() const override { return v_; }
    double second_moment() const override { return v_ * v_; }
    bool has_closed_lst() const override { return true; }
    double closed_lst(double s) const override { return std::exp(-s * v_); }
    bool has_closed_lst_derivative() const override { return true; }
    double closed_lst_derivative(double s) const override { return -v_ * std::exp(-s * v_); }
    bool has_closed_partial() const override { return true; }
    double closed_partial(double lo, double hi, double s) const override
    {
        return (v_ >= lo && v_ < hi) ? std::exp(-s * v_) : 0.0;
    }
    double band_probability(double lo, double hi) const override
    {
        return (v_ >= lo && v_ < hi) ? 1.0 : 0.0;
    }
    bool has_closed_tail_lst() const override { return true; }
    double closed_tail_lst(double s) const override { return v_ * one_minus_exp_over(s * v_); }
    double quantile(double) const override { return v_; }
    double sample(RandomStream&) const override { return v_; }

private:
    double v_;
};

// [S | lo <= S < hi] for a parent law S.
class Band final : public Family {
public:
    Band(std::shared_ptr<const Family> parent, double lo, double hi, double probability)
        : parent_(std::move(parent)), lo_(lo), hi_(hi), prob_(probability)
    {
    }

    std::string name() const override { return "band"; }
    json spec() const override
    {
        json hi = std::isinf(hi_) ? json(nullptr) : json(hi_);
        return {{"family", "band"}, {"base", parent_->spec()}, {"lo", lo_}, {"hi", hi}};
    }
    std::string label() const override
    {
        return parent_->label() + "|[" + fmt(lo_) + "," + (std::isinf(hi_) ? "inf" : fmt(hi_)) + ")";
    }

    double pdf(double x) const override
    {
        return (x >= lo_ && x < hi_) ? parent_->pdf(x) / prob_ : 0.0;
    }
    double cdf(double x) const override
    {
        if (x <= lo_) return 0.0;
        if (x >= hi_) return 1.0;
        return std::min(1.0, parent_->band_probability(lo_, x) / prob_);
    }
    double sf(double x) const override
    {
        if (x <= lo_) return 1.0;
        if (x >= hi_) return 0.0;
        return std::min(1.0, parent_->band_probability(x, hi_) / prob_);
    }
    double band_probability(double lo, double hi) const override
    {
        const double a = std::max(lo, lo_);
        const double b = std::min(hi, hi_);
        if (!(b > a)) return 0.0;
        return std::min(1.0, parent_->band_probability(a, b) / prob_);
    }
    double s_min() const override { return std::max(lo_, parent_->s_min()); }
    double s_max() const override { return std::min(hi_, parent_->s_max()); }
    double s_crit() const override { return std::isinf(hi_) ? parent_->s_crit() : kInf; }
    bool diverges_at_singularity() const override
    {
        return std::isinf(hi_) ? parent_->diverges_at_singularity() : true;
    }
    double density_at_zero() const override
    {
        return lo_ > 0.0 ? 0.0 : parent_->density_at_zero() / prob_;
    }
    std::vector<double> breakpoints() const override
    {
        std::vector<double> pts;
        for (double b : parent_->breakpoints())
            if (b > lo_ && b < hi_) pts.push_back(b);
        return pts;
    }

    bool has_closed_lst() const override { return parent_->has_closed_partial(); }
    double closed_lst(double s) const override { return parent_->closed_partial(lo_, hi_, s) / prob_; }
    bool has_closed_partial() const override { return parent_->has_closed_partial(); }
    double closed_partial(double lo, double hi, double s) const override
    {
        const double a = std::max(lo, lo_);
        const double b = std::min(hi, hi_);
        if (!(b > a)) return 0.0;
        return parent_->closed_partial(a, b, s) / prob_;
    }

    double sample(RandomStream& stream) const override
    {
        if (prob_ >= 0.01) {
            for (;;) {
                const double x = parent_->sample(stream);
                if (x >= lo_ && x < hi_) return x;
            }
        }
        return quantile(stream.uniform());
    }

private:
    std::shared_ptr<const Family> parent_;
    double lo_, hi_, prob_;
};

} // namespace
} // namespace detail

// ---------------------------------------------------------------------------

JobSizeDistribution::JobSizeDistribution(std::shared_ptr<const detail::Family> impl)
    : impl_(std::move(impl))
{
    if (impl_->continuous() && impl_->s_min() < 0.0) {
        throw DistributionError("job sizes must be nonnegative");
    }
    mean_ = impl_->mean();
    second_moment_ = impl_->second_moment();
    if (!(mean_ > 0.0) || !std::isfinite(mean_)) {
        throw DistributionError(impl_->label() + ": mean must be positive and finite");
    }
}

JobSizeDistribution JobSizeDistribution::exponential(double rate)
{
    return JobSizeDistribution(std::make_shared<detail::Exponential>(rate));
}

JobSizeDistribution JobSizeDistribution::hyperexponential(std::vector<double> probs,
                                                          std::vector<double> rates)
{
    if (probs.size() != rates.size() || probs.empty()) {
        throw DistributionError("hyperexp: probs and rates must be non-empty and equally long");
    }
    std::vector<std::shared_ptr<const detail::Family>> parts;
    std::string label = "H" + std::to_string(probs.size()) + "(";
    for (std::size_t i = 0; i < rates.size(); ++i) {
        parts.push_back(std::make_shared<detail::Exponential>(rates[i]));
        label += (i ? ";" : "") + detail::fmt(probs[i]) + "@" + detail::fmt(rates[i]);
    }
    json spec = {{"family", "hyperexp"}, {"probs", probs}, {"rates", rates}};
    return JobSizeDistribution(std::make_shared<detail::Mixture>("hyperexp", spec, label + ")",
                                                                 std::move(probs), std::move(parts)));
}

JobSizeDistribution JobSizeDistribution::uniform(double lo, double hi)
{
    return JobSizeDistribution(std::make_shared<detail::Uniform>(lo, hi));
}

JobSizeDistribution JobSizeDistribution::bounded_lomax(double scale, double max, double alpha)
{
    return JobSizeDistribution(std::make_shared<detail::BoundedLomax>(scale, max, alpha));
}

JobSizeDistribution JobSizeDistribution::erlang(int k, double rate)
{
    return JobSizeDistribution(std::make_shared<detail::Erlang>(k, rate));
}

JobSizeDistribution JobSizeDistribution::scaled_beta(double alpha, double beta, double scale)
{
    return JobSizeDistribution(std::make_shared<detail::ScaledBeta>(alpha, beta, scale));
}

JobSizeDistribution JobSizeDistribution::triangle(double min, double mode, double max)
{
    return JobSizeDistribution(std::make_shared<detail::Triangle>(min, mode, max));
}

JobSizeDistribution JobSizeDistribution::inverse_gaussian(double mu, double shape)
{
    return JobSizeDistribution(std::make_shared<detail::InverseGaussian>(mu, shape));
}

JobSizeDistribution JobSizeDistribution::chi_squared(double k)
{
    return JobSizeDistribution(std::make_shared<detail::ChiSquared>(k));
}

JobSizeDistribution JobSizeDistribution::mixed_uniform(std::vector<double> probs,
                                                       std::vector<double> los,
                                                       std::vector<double> his)
{
    if (probs.size() != los.size() || probs.size() != his.size() || probs.empty()) {
        throw DistributionError("mixed_uniform: probs, lo and hi must be non-empty and equally long");
    }
    std::vector<std::shared_ptr<const detail::Family>> parts;
    std::string label = "MixedUniform(";
    for (std::size_t i = 0; i < probs.size(); ++i) {
        parts.push_back(std::make_shared<detail::Uniform>(los[i], his[i]));
        label += (i ? ";" : "") + detail::fmt(probs[i]) + "@[" + detail::fmt(los[i]) + "," +
                 detail::fmt(his[i]) + ")";
    }
    json spec = {{"family", "mixed_uniform"}, {"probs", probs}, {"lo", los}, {"hi", his}};
    return JobSizeDistribution(std::make_shared<detail::Mixture>(
        "mixed_uniform", spec, label + ")", std::move(probs), std::move(parts)));
}

JobSizeDistribution JobSizeDistribution::point_mass(double value)
{
    return JobSizeDistribution(std::make_shared<detail::PointMass>(value));
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || it.key() == k;
        if (!ok) {
            throw DistributionError("unknown key '" + it.key() + "' for family " +
                                    j.at("family").get<std::string>());
        }
    }
    for (const char* k : allowed) {
        if (!j.contains(k)) throw DistributionError(std::string("missing key '") + k + "'");
    }
}

double num(const json& j, const char* key)
{
    const json& v = j.at(key);
    if (v.is_null()) return kInf;
    if (!v.is_number()) throw DistributionError(std::string("key '") + key + "' must be a number");
    return v.get<double>();
}

std::vector<double> nums(const json& j, const char* key)
{
    const json& v = j.at(key);
    if (!v.is_array()) throw DistributionError(std::string("key '") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw DistributionError(std::string("key '") + key + "' must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

} // namespace

JobSizeDistribution JobSizeDistribution::from_json(const json& j)
{
    if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
        throw DistributionError("distribution spec must be an object with a string 'family'");
    }
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "exponential") {
        check_keys(j, {"family", "rate"});
        return exponential(num(j, "rate"));
    }
    if (fam == "hyperexp") {
        check_keys(j, {"family", "probs", "rates"});
        return hyperexponential(nums(j, "probs"), nums(j, "rates"));
    }
    if (fam == "uniform") {
        check_keys(j, {"family", "lo", "hi"});
        return uniform(num(j, "lo"), num(j, "hi"));
    }
    if (fam == "bounded_lomax") {
        check_keys(j, {"family", "lambda", "max", "alpha"});
        return bounded_lomax(num(j, "lambda"), num(j, "max"), num(j, "alpha"));
    }
    if (fam == "erlang") {
        check_keys(j, {"family", "k", "rate"});
        const double k = num(j, "k");
        if (k != std::floor(k)) throw DistributionError("erlang k must be an integer");
        return erlang(static_cast<int>(k), num(j, "rate"));
    }
    if (fam == "beta") {
        check_keys(j, {"family", "alpha", "beta", "scale"});
        return scaled_beta(num(j, "alpha"), num(j, "beta"), num(j, "scale"));
    }
    if (fam == "triangle") {
        check_keys(j, {"family", "min", "mode", "max"});
        return triangle(num(j, "min"), num(j, "mode"), num(j, "max"));
    }
    if (fam == "inverse_gaussian") {
        check_keys(j, {"family", "mu", "shape"});
        return inverse_gaussian(num(j, "mu"), num(j, "shape"));
    }
    if (fam == "chi_squared") {
        check_keys(j, {"family", "k"});
        return chi_squared(num(j, "k"));
    }
    if (fam == "mixed_uniform") {
        check_keys(j, {"family", "probs", "lo", "hi"});
        return mixed_uniform(nums(j, "probs"), nums(j, "lo"), nums(j, "hi"));
    }
    if (fam == "point_mass") {
        check_keys(j, {"family", "value"});
        return point_mass(num(j, "value"));
    }
    if (fam == "band") {
        check_keys(j, {"family", "base", "lo", "hi"});
        return condition_to_band(from_json(j.at("base")), num(j, "lo"), num(j, "hi")).band_dist;
    }
    throw DistributionError("unknown distribution family '" + fam + "'");
}

json JobSizeDistribution::spec() const { return impl_->spec(); }
std::string JobSizeDistribution::family() const { return impl_->name(); }
std::string JobSizeDistribution::label() const { return impl_->label(); }
double JobSizeDistribution::mean() const { return mean_; }
double JobSizeDistribution::second_moment() const { return second_moment_; }
double JobSizeDistribution::scv() const
{
    return std::max(0.0, second_moment_ / (mean_ * mean_) - 1.0);
}
double JobSizeDistribution::s_min() const { return impl_->s_min(); }
double JobSizeDistribution::s_max() const { return impl_->s_max(); }
double JobSizeDistribution::s_crit() const { return impl_->s_crit(); }
bool JobSizeDistribution::continuous() const { return impl_->continuous(); }
bool JobSizeDistribution::transform_diverges_at_singularity() const
{
    return impl_->diverges_at_singularity();
}
double JobSizeDistribution::pdf(double x) const { return impl_->pdf(x); }
double JobSizeDistribution::cdf(double x) const { return impl_->cdf(x); }
double JobSizeDistribution::sf(double x) const { return impl_->sf(x); }
double JobSizeDistribution::density_at_zero() const { return impl_->density_at_zero(); }
bool JobSizeDistribution::has_closed_form_lst() const { return impl_->has_closed_lst(); }

void JobSizeDistribution::check_transform_domain(double s) const
{
    const double sc = impl_->s_crit();
    if (std::isnan(s) || (std::isfinite(sc) && s <= -sc * (1.0 - 1e-6))) {
        std::ostringstream os;
        os.precision(17);
        os << "transform of " << impl_->label() << " evaluated at s = " << s
           << " outside its convergence region s > -s_crit, s_crit = " << sc;
        throw std::domain_error(os.str());
    }
}

double JobSizeDistribution::quadrature_partial(double lo, double hi, double s) const
{
    const double a = std::max(lo, impl_->s_min());
    const double b = std::min(hi, impl_->s_max());
    if (!(b > a)) return 0.0;
    const auto& fam = *impl_;
    auto integrand = [&fam, s](double x) {
        const double p = fam.pdf(x);
        if (!(p > 0.0)) return 0.0;
        if (std::isinf(p)) return p;
        return std::exp(-s * x + std::log(p));
    };
    return numerics::integrate(integrand, a, b, fam.breakpoints(), 1e-13);
}

double JobSizeDistribution::lst(double s) const
{
    check_transform_domain(s);
    if (s == 0.0) return 1.0;
    if (impl_->has_closed_lst()) return impl_->closed_lst(s);
    return quadrature_partial(-kInf, kInf, s);
}

double JobSizeDistribution::lst_by_quadrature(double s) const
{
    check_transform_domain(s);
    if (!impl_->continuous()) throw DistributionError("quadrature transform needs a density");
    return quadrature_partial(-kInf, kInf, s);
}

double JobSizeDistribution::lst_derivative(double s) const
{
    check_transform_domain(s);
    if (impl_->has_closed_lst_derivative()) return impl_->closed_lst_derivative(s);
    const double a = impl_->s_min();
    const double b = impl_->s_max();
    const auto& fam = *impl_;
    auto integrand = [&fam, s](double x) {
        const double p = fam.pdf(x);
        if (!(p > 0.0) || x == 0.0) return 0.0;
        if (std::isinf(p)) return -p;
        return -std::exp(-s * x + std::log(x) + std::log(p));
    };
    return numerics::integrate(integrand, a, b, fam.breakpoints(), 1e-13);
}

double JobSizeDistribution::tail_lst(double s) const
{
    check_transform_domain(s);
    if (impl_->has_closed_tail_lst()) return impl_->closed_tail_lst(s);
    if (s == 0.0) return mean_;
    if (std::abs(s) * mean_ > 0.1) return (1.0 - lst(s)) / s;
    const auto& fam = *impl_;
    auto integrand = [&fam, s](double x) {
        const double q = fam.sf(x);
        return q > 0.0 ? std::exp(-s * x + std::log(q)) : 0.0;
    };
    return numerics::integrate(integrand, 0.0, fam.s_max(), fam.breakpoints(), 1e-13);
}

double JobSizeDistribution::partial_lst(double lo, double hi, double s) const
{
    if (!(hi > lo)) return 0.0;
    // a band bounded above has an entire partial transform
    if (std::isinf(hi)) check_transform_domain(s);
    if (impl_->has_closed_partial()) return impl_->closed_partial(lo, hi, s);
    return quadrature_partial(lo, hi, s);
}

double JobSizeDistribution::band_probability(double lo, double hi) const
{
    return impl_->band_probability(lo, hi);
}

double JobSizeDistribution::sample(RandomStream& stream) const { return impl_->sample(stream); }

ClassIResult classify_class_I(const JobSizeDistribution& dist)
{
    if (!dist.continuous()) {
        throw DistributionError(dist.label() + " has an atom; a continuous job size law is required");
    }
    return {dist.s_crit(), dist.transform_diverges_at_singularity()};
}

BandConditioned condition_to_band(const JobSizeDistribution& dist, double lo, double hi)
{
    if (!(lo >= 0.0) || !(hi > lo)) {
        throw DistributionError("band requires 0 <= lo < hi");
    }
    if (lo <= dist.s_min() && hi >= dist.s_max() && dist.continuous()) {
        return {dist, 1.0, lo, hi};
    }
    const double p = dist.band_probability(lo, hi);
    if (!(p > 0.0)) {
        std::ostringstream os;
        os << "band [" << lo << ", " << hi << ") has zero probability under " << dist.label();
        throw DistributionError(os.str());
    }
    auto band = std::make_shared<detail::Band>(dist.family_ptr(), lo, hi, p);
    return {JobSizeDistribution(band), p, lo, hi};
}

double evaluate_lst(const JobSizeDistribution& dist, double s) { return dist.lst(s); }

Moments moments(const JobSizeDistribution& dist) { return {dist.mean(), dist.scv()}; }

} // namespace nudgeq
