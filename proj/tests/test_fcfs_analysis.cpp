#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "nudgeq/errors.hpp"
#include "nudgeq/fcfs_analysis.hpp"

using nudgeq::JobSizeDistribution;

namespace {

JobSizeDistribution fig2_hyperexp()
{
    return JobSizeDistribution::hyperexponential({0.8, 0.2}, {2.0, 1.0 / 3.0});
}

// Plain bisection on the defining equation using the hyperexponential transform
// written out by hand.
double bisection_theta_hyperexp(double lambda)
{
    auto lst = [](double s) { return 0.8 * 2.0 / (2.0 + s) + 0.2 * (1.0 / 3.0) / (1.0 / 3.0 + s); };
    auto f = [&](double th) { return lambda * lst(-th) - lambda - th; };
    double lo = 1e-9, hi = 1.0 / 3.0 - 1e-12;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Erlang(2, r) waiting density: the continuous part of
// (1-rho)(r+s)^2 / (s^2 + (2r - lambda)s + r^2 - 2 lambda r) is
// (1-rho) lambda (s + 2r) / ((s - s1)(s - s2)).
double erlang2_waiting_density(double lambda, double r, double t)
{
    const double rho = 2.0 * lambda / r;
    const double b = 2.0 * r - lambda;
    const double c = r * r - 2.0 * lambda * r;
    const double disc = std::sqrt(b * b - 4.0 * c);
    const double s1 = (-b + disc) / 2.0, s2 = (-b - disc) / 2.0;
    const double a1 = (s1 + 2.0 * r) / (s1 - s2);
    const double a2 = (s2 + 2.0 * r) / (s2 - s1);
    return (1.0 - rho) * lambda * (a1 * std::exp(s1 * t) + a2 * std::exp(s2 * t));
}

} // namespace

TEST_CASE("theta* for M/M/1")
{
    const auto e = JobSizeDistribution::exponential(1.0);
    CHECK(std::abs(nudgeq::theta_star(0.8, e) - 0.2) < 1e-10);
    CHECK(std::abs(nudgeq::theta_star(0.4, e) - 0.6) < 1e-10);
}

TEST_CASE("theta* for the hyperexponential agrees with a bisection oracle")
{
    const auto h = fig2_hyperexp();
    for (double lambda : {0.4, 0.8}) {
        const double th = nudgeq::theta_star(lambda, h);
        CHECK(th == doctest::Approx(bisection_theta_hyperexp(lambda)).epsilon(1e-10));
        CHECK(std::abs(lambda * h.lst(-th) - lambda - th) <= 1e-10);
        CHECK(h.lst(-th) == doctest::Approx((lambda + th) / lambda).epsilon(1e-9));
    }
}

TEST_CASE("theta* decreases with load")
{
    const JobSizeDistribution cases[] = {
        JobSizeDistribution::exponential(1.0), fig2_hyperexp(), JobSizeDistribution::uniform(0.0, 2.0),
        JobSizeDistribution::scaled_beta(2.0, 2.0, 2.0), JobSizeDistribution::inverse_gaussian(1.0, 0.5),
        JobSizeDistribution::chi_squared(1.0)};
    for (const auto& d : cases) {
        CAPTURE(d.label());
        double prev = INFINITY;
        // the inverse Gaussian has a decay rate only once lambda (S~(-s_crit) - 1) > s_crit
        const int first = d.family() == "inverse_gaussian" ? 4 : 1;
        for (int i = first; i <= 9; ++i) {
            const double lambda = 0.1 * i / d.mean();
            const double th = nudgeq::theta_star(lambda, d);
            CHECK(th > 0.0);
            CHECK(th < prev);
            CHECK(std::abs(lambda * d.lst(-th) - lambda - th) <= 1e-10);
            prev = th;
        }
    }
}

TEST_CASE("theta* preconditions")
{
    const auto e = JobSizeDistribution::exponential(1.0);
    CHECK_THROWS_AS(nudgeq::theta_star(1.0, e), nudgeq::StabilityError);
    CHECK_THROWS_AS(nudgeq::theta_star(1.3, e), nudgeq::StabilityError);
    // inverse Gaussian at very low load: the transform stays finite at -s_crit,
    // so the defining equation has no root
    CHECK_THROWS_AS(nudgeq::theta_star(0.01, JobSizeDistribution::inverse_gaussian(1.0, 0.5)),
                    nudgeq::ClassIViolation);
}

TEST_CASE("waiting-time transform")
{
    const auto e = JobSizeDistribution::exponential(1.0);
    const nudgeq::FcfsModel m(0.8, e);
    CHECK(m.waiting_lst(0.0) == 1.0);
    CHECK(m.waiting_lst(1e-12) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.waiting_lst(-1e-12) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(m.waiting_lst(0.8) - 0.36) < 1e-12);
    for (double s : {1e-7, 1e-6, 3e-6, 1e-4, 0.01, 0.3, 1.0, 2.7, 10.0, -0.1, -0.19}) {
        const double closed = 0.2 + 0.8 * 0.2 / (0.2 + s);
        CHECK(std::abs(m.waiting_lst(s) - closed) <= 1e-10);
    }
    CHECK_THROWS_AS(m.waiting_lst(-0.2), std::domain_error);
    CHECK_THROWS_AS(m.waiting_lst(-0.5), std::domain_error);
    CHECK(nudgeq::waiting_lst(0.8, e, 1.0) == doctest::Approx(0.2 + 0.16 / 1.2));
    // T~_Q(lambda) = (1-rho)/S~(lambda) holds for every law
    const auto h = fig2_hyperexp();
    const nudgeq::FcfsModel mh(0.8, h);
    CHECK(mh.waiting_lst(0.8) == doctest::Approx(0.2 / h.lst(0.8)).epsilon(1e-12));
}

TEST_CASE("M/M/1 density grid matches the closed form")
{
    const auto e = JobSizeDistribution::exponential(1.0);
    const auto grid = nudgeq::waiting_density_grid(0.8, e, 1e-3, 100.0);
    double err = 0.0;
    for (std::size_t k = 0; k < grid.f.size(); ++k) {
        err = std::max(err, std::abs(grid.f[k] - 0.16 * std::exp(-0.2 * grid.t(k))));
    }
    CHECK(err <= 1e-4);
    CHECK(grid.f[0] == doctest::Approx(0.16).epsilon(1e-15));

    const auto prof = nudgeq::g_profile(0.8, e, 0.2, grid);
    CHECK(prof.g_star == doctest::Approx(0.16).epsilon(1e-12));
    CHECK(std::abs(prof.g_min_grid - 0.16) <= 1e-4);
    CHECK(std::abs(prof.g_max_grid - 0.16) <= 1e-4);
    CHECK(prof.g_max_grid / prof.g_min_grid == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(prof.c_q_residue == prof.g_star);
    CHECK(prof.c_fcfs == doctest::Approx(1.0).epsilon(5e-3));
    CHECK(prof.g_min <= prof.g_min_grid);
    CHECK(prof.g_max >= prof.g_max_grid);
    CHECK(prof.g_max / prof.g_min == doctest::Approx((1 + 1e-2) / (1 - 1e-2)).epsilon(1e-4));
}

TEST_CASE("Erlang-2 density grid matches the phase-type oracle")
{
    const double lambda = 0.5, r = 2.0;
    const auto d = JobSizeDistribution::erlang(2, r);
    const auto grid = nudgeq::waiting_density_grid(lambda, d, 1e-3, 30.0);
    double err = 0.0;
    for (std::size_t k = 0; k < grid.f.size(); ++k) {
        err = std::max(err, std::abs(grid.f[k] - erlang2_waiting_density(lambda, r, grid.t(k))));
    }
    CHECK(err <= 1e-3);
    CHECK(err <= 1e-5);
}

TEST_CASE("boundary value, positivity and serial reference")
{
    const JobSizeDistribution cases[] = {
        JobSizeDistribution::exponential(1.0), fig2_hyperexp(), JobSizeDistribution::uniform(0.0, 2.0),
        JobSizeDistribution::bounded_lomax(2.0, 4.0, 2.0), JobSizeDistribution::chi_squared(1.0),
        JobSizeDistribution::triangle(0.0, 0.0, 3.0),
        JobSizeDistribution::mixed_uniform({0.9, 0.1}, {0.0, 0.0}, {1.0, 11.0})};
    for (const auto& d : cases) {
        CAPTURE(d.label());
        const double lambda = 0.6 / d.mean();
        const auto par = nudgeq::waiting_density_grid(lambda, d, 5e-3, 20.0, nudgeq::kernels::ExecutionMode::parallel);
        const auto ser = nudgeq::waiting_density_grid(lambda, d, 5e-3, 20.0, nudgeq::kernels::ExecutionMode::serial);
        CHECK(par.f[0] == doctest::Approx(0.4 * lambda).epsilon(1e-14));
        for (std::size_t k = 0; k < par.f.size(); ++k) {
            REQUIRE(par.f[k] >= 0.0);
            REQUIRE(std::abs(par.f[k] - ser.f[k]) <= 1e-12 * std::max(1.0, ser.f[k]));
        }
    }
}

TEST_CASE("density mass, convergence to g* and residue")
{
    const JobSizeDistribution cases[] = {fig2_hyperexp(), JobSizeDistribution::uniform(0.0, 2.0),
                                         JobSizeDistribution::chi_squared(1.0),
                                         JobSizeDistribution::bounded_lomax(2.0, 4.0, 2.0)};
    for (const auto& d : cases) {
        CAPTURE(d.label());
        const double lambda = 0.4;
        const nudgeq::FcfsModel m(lambda, d);
        const double th = m.theta_star();
        const double horizon = std::max(30.0 / th, 50.0 * d.mean());
        const auto grid = nudgeq::waiting_density_grid(lambda, d, 4e-3, horizon);
        const auto prof = nudgeq::g_profile(lambda, d, th, grid);

        double mass = 1.0 - m.rho();
        for (std::size_t k = 0; k + 1 < grid.f.size(); ++k) mass += 0.5 * grid.step * (grid.f[k] + grid.f[k + 1]);
        mass += prof.g_star / th * std::exp(-th * grid.horizon);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));

        CHECK(prof.g_min > 0.0);
        CHECK(prof.g_min <= prof.g_star);
        CHECK(prof.g_star <= prof.g_max);
        CHECK(std::abs(prof.g_values.back() - prof.g_star) <= 0.005 * prof.g_star);

        // s * T~_Q(s - theta*) -> g* as s -> 0, linear extrapolation from two points
        const double s1 = 1e-4, s2 = 1e-5;
        const double v1 = s1 * m.waiting_lst(s1 - th), v2 = s2 * m.waiting_lst(s2 - th);
        const double limit = (s1 * v2 - s2 * v1) / (s1 - s2);
        CHECK(limit == doctest::Approx(prof.g_star).epsilon(5e-3));
        CHECK(prof.c_fcfs == doctest::Approx(prof.g_star * d.lst(-th) / th).epsilon(1e-14));
    }
}

TEST_CASE("profile guards")
{
    const auto e = JobSizeDistribution::exponential(1.0);
    nudgeq::DensityGrid fake;
    fake.step = 0.1;
    fake.horizon = 200.0;
    fake.f.assign(2001, 0.01);  // g grows like e^{0.2 t}, never settles
    CHECK_THROWS_AS(nudgeq::g_profile(0.8, e, 0.2, fake), nudgeq::NumericalError);
    fake.horizon = 50.0;
    CHECK_THROWS_AS(nudgeq::g_profile(0.8, e, 0.2, fake), std::invalid_argument);
    CHECK_THROWS_AS(nudgeq::waiting_density_grid(0.8, e, 1e-6, 100.0), std::invalid_argument);
    CHECK_THROWS_AS(nudgeq::waiting_density_grid(1.2, e, 1e-3, 10.0), nudgeq::StabilityError);
}

TEST_CASE("default grid and CSV export")
{
    const auto e = JobSizeDistribution::exponential(1.0);
    const auto spec = nudgeq::default_grid(0.8, e, 0.2);
    CHECK(spec.step == 1e-3);
    CHECK(spec.horizon == 150.0);
    CHECK(nudgeq::default_grid(40.0, JobSizeDistribution::exponential(100.0), 20.0).step == 5e-4);

    const auto prof = nudgeq::g_profile(0.8, e, 0.2, nudgeq::waiting_density_grid(0.8, e, 0.01, 100.0));
    std::ostringstream os;
    nudgeq::write_profile_csv(prof, os, 1000);
    const std::string csv = os.str();
    CHECK(csv.rfind("t,f,g\n0,0.1", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
}

TEST_CASE("kernels: OpenMP against the serial reference")
{
    using nudgeq::kernels::ExecutionMode;
    std::vector<double> a(100'003), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = std::sin(0.01 * i);
        b[i] = 1.0 / (1.0 + i);
    }
    const double ser = nudgeq::kernels::dot_serial(a.data(), b.data(), a.size());
    CHECK(nudgeq::kernels::dot_parallel(a.data(), b.data(), a.size()) == doctest::Approx(ser).epsilon(1e-12));
    CHECK(nudgeq::kernels::dot_serial(a.data(), b.data(), 0) == 0.0);

    // f = a e^{-t} + c int_0^t f(v) e^{-(t-v)} dv has solution a e^{-(1-c)t}
    const double h = 1e-3, c = 0.8;
    const std::size_t n = 20'000;
    std::vector<double> forcing(n + 1), kernel(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        kernel[i] = std::exp(-h * i);
        forcing[i] = 0.16 * kernel[i];
    }
    const auto fs = nudgeq::kernels::march_volterra(forcing, kernel, c, h, ExecutionMode::serial);
    const auto fp = nudgeq::kernels::march_volterra(forcing, kernel, c, h, ExecutionMode::parallel);
    REQUIRE(fs.size() == n + 1);
    REQUIRE(fp.size() == n + 1);
    double err = 0.0, gap = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        err = std::max(err, std::abs(fs[i] - 0.16 * std::exp(-(1.0 - c) * h * i)));
        gap = std::max(gap, std::abs(fs[i] - fp[i]));
    }
    CHECK(err < 1e-7);
    CHECK(gap < 1e-13);
}
