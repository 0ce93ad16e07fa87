#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nudgeq/distributions.hpp"

using nudgeq::JobSizeDistribution;
using nudgeq::RandomStream;

namespace {

struct Case {
    const char* name;
    JobSizeDistribution dist;
};

std::vector<Case> catalogue()
{
    return {
        {"exp", JobSizeDistribution::exponential(1.0)},
        {"hyperexp", JobSizeDistribution::hyperexponential({0.8, 0.2}, {2.0, 1.0 / 3.0})},
        {"uniform", JobSizeDistribution::uniform(0.0, 2.0)},
        {"bounded_lomax", JobSizeDistribution::bounded_lomax(2.0, 4.0, 2.0)},
        {"erlang", JobSizeDistribution::erlang(3, 3.0)},
        {"beta", JobSizeDistribution::scaled_beta(2.0, 2.0, 2.0)},
        {"triangle", JobSizeDistribution::triangle(0.0, 0.0, 3.0)},
        {"inverse_gaussian", JobSizeDistribution::inverse_gaussian(1.0, 0.5)},
        {"chi_squared", JobSizeDistribution::chi_squared(1.0)},
        {"mixed_uniform", JobSizeDistribution::mixed_uniform({0.9, 0.1}, {0.0, 0.0}, {1.0, 11.0})},
    };
}

// Independent oracle: Gauss-Kronrod on a finite window, with a substitution
// x = u^2 that removes 1/sqrt(x) singularities at the origin.
template <class F>
double gk_integral(F f, double lo, double hi)
{
    using boost::math::quadrature::gauss_kronrod;
    auto g = [&](double u) { return 2.0 * u * f(lo + u * u); };
    return gauss_kronrod<double, 61>::integrate(g, 0.0, std::sqrt(hi - lo), 25, 1e-14);
}

double oracle_upper(const JobSizeDistribution& d, double s)
{
    if (std::isfinite(d.s_max())) return d.s_max();
    // far enough that the neglected tail is below 1e-13 for s >= -s_crit/2
    double hi = 50.0;
    while (d.sf(hi) * std::exp(std::max(0.0, -s) * hi) > 1e-15) hi *= 1.5;
    return hi * 1.5;
}

double oracle_lst(const JobSizeDistribution& d, double s)
{
    auto f = [&](double x) {
        const double p = d.pdf(x);
        return (p > 0.0 && std::isfinite(p)) ? std::exp(-s * x) * p : 0.0;
    };
    // split at the kinks of the piecewise families
    std::vector<double> cuts{d.s_min(), oracle_upper(d, s)};
    for (double c : {0.0, 1.0, 2.0, 3.0, 4.0, 11.0}) {
        if (c > cuts.front() && c < cuts.back()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += gk_integral(f, cuts[i], cuts[i + 1]);
    return total;
}

} // namespace

TEST_CASE("exponential transform values")
{
    const auto e = JobSizeDistribution::exponential(1.0);
    CHECK(nudgeq::evaluate_lst(e, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(nudgeq::evaluate_lst(e, -0.2) == doctest::Approx(1.25).epsilon(1e-14));
    for (const auto& c : catalogue()) {
        CAPTURE(c.name);
        CHECK(nudgeq::evaluate_lst(c.dist, 0.0) == 1.0);
    }
}

TEST_CASE("transform refuses arguments at or beyond the singularity")
{
    const auto e = JobSizeDistribution::exponential(1.0);
    CHECK_THROWS_AS(e.lst(-1.0), std::domain_error);
    CHECK_THROWS_AS(e.lst(-1.5), std::domain_error);
    CHECK_THROWS_AS(e.lst(-(1.0 - 1e-7)), std::domain_error);
    CHECK_NOTHROW(e.lst(-(1.0 - 1e-5)));
    try {
        e.lst(-2.0);
        FAIL("expected domain error");
    } catch (const std::domain_error& err) {
        CHECK(std::string(err.what()).find("s_crit = 1") != std::string::npos);
    }
    // bounded support: any negative argument is fine
    CHECK(std::isfinite(JobSizeDistribution::uniform(0.0, 2.0).lst(-50.0)));
}

TEST_CASE("class I classification")
{
    auto r = nudgeq::classify_class_I(JobSizeDistribution::exponential(1.0));
    CHECK(r.s_crit == 1.0);
    CHECK(r.is_class_I);
    r = nudgeq::classify_class_I(JobSizeDistribution::uniform(0.0, 2.0));
    CHECK(std::isinf(r.s_crit));
    CHECK(r.is_class_I);
    r = nudgeq::classify_class_I(JobSizeDistribution::inverse_gaussian(1.0, 0.5));
    CHECK(r.s_crit == doctest::Approx(0.25));
    CHECK_FALSE(r.is_class_I);
    r = nudgeq::classify_class_I(JobSizeDistribution::chi_squared(1.0));
    CHECK(r.s_crit == 0.5);
    CHECK(r.is_class_I);
    CHECK_THROWS_AS(nudgeq::classify_class_I(JobSizeDistribution::point_mass(1.0)),
                    nudgeq::DistributionError);
}

TEST_CASE("band conditioning")
{
    const auto e = JobSizeDistribution::exponential(1.0);
    auto small = nudgeq::condition_to_band(e, 0.0, 1.0);
    CHECK(small.probability == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    CHECK(small.probability == doctest::Approx(0.632121).epsilon(1e-6));

    auto all = nudgeq::condition_to_band(e, 0.0, INFINITY);
    CHECK(all.probability == 1.0);
    CHECK(all.band_dist.lst(0.3) == e.lst(0.3));

    auto large = nudgeq::condition_to_band(e, 1.0, INFINITY);
    CHECK(large.band_dist.lst(-0.2) == doctest::Approx(std::exp(0.2) * 1.25).epsilon(1e-12));
    CHECK(large.band_dist.lst(-0.2) == doctest::Approx(1.5267535).epsilon(1e-7));
    // band with finite upper end has an entire transform
    auto mid = nudgeq::condition_to_band(e, 1.0, 3.0);
    CHECK(std::isinf(mid.band_dist.s_crit()));
    CHECK(std::isfinite(mid.band_dist.lst(-5.0)));

    CHECK_THROWS_AS(nudgeq::condition_to_band(JobSizeDistribution::uniform(0.0, 2.0), 3.0, 4.0),
                    nudgeq::DistributionError);
    CHECK_THROWS_AS(nudgeq::condition_to_band(e, 2.0, 1.0), nudgeq::DistributionError);
}

TEST_CASE("band probabilities agree with the CDF and partition the support")
{
    for (const auto& c : catalogue()) {
        CAPTURE(c.name);
        for (double x1 : {0.1, 0.5, 1.0, 1.7}) {
            const auto lo = nudgeq::condition_to_band(c.dist, 0.0, x1);
            const auto hi = nudgeq::condition_to_band(c.dist, x1, INFINITY);
            CHECK(lo.probability + hi.probability == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::abs(lo.probability - (c.dist.cdf(x1) - c.dist.cdf(0.0))) < 1e-10);
            const auto mid = nudgeq::condition_to_band(c.dist, x1, x1 + 0.8);
            CHECK(std::abs(mid.probability - (c.dist.cdf(x1 + 0.8) - c.dist.cdf(x1))) < 1e-10);
            // conditional transform is the restricted integral over the probability
            const double s = 0.7;
            const double direct = c.dist.partial_lst(0.0, x1, s) / lo.probability;
            CHECK(lo.band_dist.lst(s) == doctest::Approx(direct).epsilon(1e-10));
        }
    }
}

TEST_CASE("moments")
{
    auto m = nudgeq::moments(JobSizeDistribution::hyperexponential({0.8, 0.2}, {2.0, 1.0 / 3.0}));
    CHECK(m.mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.scv == doctest::Approx(3.0).epsilon(1e-12));
    m = nudgeq::moments(JobSizeDistribution::exponential(1.0));
    CHECK(m.mean == 1.0);
    CHECK(m.scv == doctest::Approx(1.0));
    m = nudgeq::moments(JobSizeDistribution::uniform(0.0, 2.0));
    CHECK(m.mean == 1.0);
    CHECK(m.scv == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // every catalogued figure distribution has mean 1
    const double scv[] = {1.0, 3.0, 1.0 / 3.0, -1.0, 1.0 / 3.0, 0.2, 0.5, 2.0, 2.0, 10.0 / 3.0};
    auto cat = catalogue();
    for (std::size_t i = 0; i < cat.size(); ++i) {
        CAPTURE(cat[i].name);
        CHECK(cat[i].dist.mean() == doctest::Approx(1.0).epsilon(1e-9));
        if (scv[i] >= 0.0) CHECK(cat[i].dist.scv() == doctest::Approx(scv[i]).epsilon(1e-2));
    }
    // Mixed uniform: E[S^2] = 0.9/3 + 0.1*121/3 = 4.333.., C^2 = 3.333..
    CHECK(cat[9].dist.scv() == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("density integrates to one")
{
    for (const auto& c : catalogue()) {
        CAPTURE(c.name);
        CHECK(std::abs(oracle_lst(c.dist, 0.0) - 1.0) < 1e-8);
    }
}

TEST_CASE("closed form and quadrature transforms agree on random arguments")
{
    RandomStream rs(2024);
    for (const auto& c : catalogue()) {
        CAPTURE(c.name);
        const double left = std::min(c.dist.s_crit() / 2.0, 5.0);
        for (int i = 0; i < 100; ++i) {
            const double s = -left + rs.uniform_open() * (10.0 + left);
            CAPTURE(s);
            const double quad = c.dist.lst_by_quadrature(s);
            if (c.dist.has_closed_form_lst()) {
                CHECK(std::abs(c.dist.lst(s) - quad) < 1e-8 * std::max(1.0, quad));
            }
            if (i % 10 == 0) {
                CHECK(std::abs(oracle_lst(c.dist, s) - quad) < 1e-8 * std::max(1.0, quad));
            }
        }
    }
}

TEST_CASE("transform derivative matches a difference quotient")
{
    for (const auto& c : catalogue()) {
        CAPTURE(c.name);
        for (double s : {-0.1, 0.0, 0.4, 2.0}) {
            const double h = 1e-5;
            const double fd = (c.dist.lst(s + h) - c.dist.lst(s - h)) / (2.0 * h);
            CHECK(c.dist.lst_derivative(s) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
    CHECK(JobSizeDistribution::exponential(1.0).lst_derivative(0.0) == -1.0);
}

TEST_CASE("transform is convex")
{
    RandomStream rs(99);
    for (const auto& c : catalogue()) {
        CAPTURE(c.name);
        const double left = std::min(c.dist.s_crit() / 2.0, 5.0);
        for (int i = 0; i < 200; ++i) {
            double s1 = -left + rs.uniform() * (10.0 + left);
            double s2 = -left + rs.uniform() * (10.0 + left);
            if (s1 > s2) std::swap(s1, s2);
            const double mid = c.dist.lst(0.5 * (s1 + s2));
            CHECK(mid <= 0.5 * (c.dist.lst(s1) + c.dist.lst(s2)) + 1e-12);
        }
    }
}

TEST_CASE("sampling is deterministic and supported")
{
    const auto u = JobSizeDistribution::uniform(0.0, 2.0);
    RandomStream a(7), b(7);
    for (int i = 0; i < 1000; ++i) CHECK(u.sample(a) == u.sample(b));
    RandomStream rs(11);
    for (int i = 0; i < 100000; ++i) {
        const double x = nudgeq::sample(u, rs);
        REQUIRE(x >= 0.0);
        REQUIRE(x < 2.0);
    }
}

TEST_CASE("exponential sample mean")
{
    const auto e = JobSizeDistribution::exponential(1.0);
    RandomStream rs(12345);
    double total = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) total += e.sample(rs);
    CHECK(std::abs(total / n - 1.0) < 0.01);
}

TEST_CASE("Kolmogorov-Smirnov fit of samplers")
{
    // critical value of sqrt(n) D_n at significance 1e-3
    const double crit = 1.9495;
    const int n = 1000000;
    auto cat = catalogue();
    cat.push_back({"band_exp_tail", nudgeq::condition_to_band(JobSizeDistribution::exponential(1.0),
                                                              12.0, INFINITY).band_dist});
    cat.push_back({"band_hyp_mid", nudgeq::condition_to_band(
                                       JobSizeDistribution::hyperexponential({0.8, 0.2}, {2.0, 1.0 / 3.0}),
                                       0.5, 2.0).band_dist});
    for (const auto& c : cat) {
        CAPTURE(c.name);
        RandomStream rs(31337);
        std::vector<double> xs(n);
        for (auto& x : xs) x = c.dist.sample(rs);
        std::sort(xs.begin(), xs.end());
        double d = 0.0;
        for (int i = 0; i < n; ++i) {
            const double f = c.dist.cdf(xs[i]);
            d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
        }
        CHECK(std::sqrt(static_cast<double>(n)) * d < crit);
        CHECK(xs.front() >= c.dist.s_min());
    }
}

TEST_CASE("density at zero")
{
    CHECK(JobSizeDistribution::exponential(2.0).density_at_zero() == 2.0);
    CHECK(std::isinf(JobSizeDistribution::chi_squared(1.0).density_at_zero()));
    CHECK(JobSizeDistribution::uniform(0.0, 2.0).density_at_zero() == 0.5);
    CHECK(JobSizeDistribution::uniform(0.5, 2.0).density_at_zero() == 0.0);
    CHECK(JobSizeDistribution::erlang(3, 3.0).density_at_zero() == 0.0);
    CHECK(JobSizeDistribution::triangle(0.0, 0.0, 3.0).density_at_zero() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("spec mini-format")
{
    using nlohmann::json;
    auto h = JobSizeDistribution::from_json(json::parse(
        R"({"family": "hyperexp", "probs": [0.8, 0.2], "rates": [2.0, 0.333333]})"));
    CHECK(h.mean() == doctest::Approx(1.0).epsilon(1e-5));
    auto u = JobSizeDistribution::from_json(json::parse(R"({"family": "uniform", "lo": 0, "hi": 2})"));
    CHECK(u.scv() == doctest::Approx(1.0 / 3.0));
    auto l = JobSizeDistribution::from_json(
        json::parse(R"({"family": "bounded_lomax", "lambda": 2, "max": 4, "alpha": 2})"));
    CHECK(l.mean() == doctest::Approx(1.0).epsilon(1e-10));

    CHECK_THROWS_AS(JobSizeDistribution::from_json(
                        json::parse(R"({"family": "uniform", "lo": 0, "hi": 2, "mode": 1})")),
                    nudgeq::DistributionError);
    CHECK_THROWS_AS(JobSizeDistribution::from_json(json::parse(R"({"family": "uniform", "lo": 0})")),
                    nudgeq::DistributionError);
    CHECK_THROWS_AS(JobSizeDistribution::from_json(json::parse(R"({"family": "pareto", "a": 1})")),
                    nudgeq::DistributionError);
    CHECK_THROWS_AS(JobSizeDistribution::from_json(json::parse(R"({"family": "exponential", "rate": -1})")),
                    nudgeq::DistributionError);
    CHECK_THROWS_AS(JobSizeDistribution::from_json(
                        json::parse(R"({"family": "hyperexp", "probs": [0.5, 0.2], "rates": [1, 2]})")),
                    nudgeq::DistributionError);

    for (const auto& c : catalogue()) {
        CAPTURE(c.name);
        const auto back = JobSizeDistribution::from_json(c.dist.spec());
        CHECK(back.spec() == c.dist.spec());
        CHECK(back.lst(0.37) == c.dist.lst(0.37));
    }
    const auto band = nudgeq::condition_to_band(JobSizeDistribution::exponential(1.0), 1.0, INFINITY);
    CHECK(JobSizeDistribution::from_json(band.band_dist.spec()).lst(0.5) == band.band_dist.lst(0.5));
}

TEST_CASE("tail transform equals (1 - S~(s))/s and the mean at zero")
{
    for (const auto& c : catalogue()) {
        CAPTURE(c.name);
        CHECK(c.dist.tail_lst(0.0) == doctest::Approx(c.dist.mean()).epsilon(1e-12));
        for (double s : {-0.1, 0.05, 0.3, 1.0, 4.0}) {
            CHECK(c.dist.tail_lst(s) == doctest::Approx((1.0 - c.dist.lst(s)) / s).epsilon(1e-9));
        }
        // tiny arguments: compare with the two-term expansion m1 - m2 s / 2
        const double s = 1e-7;
        CHECK(c.dist.tail_lst(s) == doctest::Approx(c.dist.mean() - 0.5 * c.dist.second_moment() * s).epsilon(1e-11));
    }
}
