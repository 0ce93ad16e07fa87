#include "nudgeq/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include <omp.h>

namespace nudgeq::kernels {

int thread_budget()
{
    if (const char* env = std::getenv("NUDGEQ_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
}

double dot_serial(const double* a, const double* b, std::size_t n)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double dot_parallel(const double* a, const double* b, std::size_t n)
{
    const auto len = static_cast<long long>(n);
    double acc = 0.0;
#pragma omp parallel for simd reduction(+ : acc) schedule(static) num_threads(thread_budget()) if (len > 32768)
    for (long long i = 0; i < len; ++i) acc += a[i] * b[i];
    return acc;
}

std::vector<double> march_volterra(const std::vector<double>& forcing, const std::vector<double>& kernel,
                                   double c, double h, ExecutionMode mode)
{
    if (forcing.size() != kernel.size() || forcing.empty()) {
        throw std::invalid_argument("march_volterra: forcing and kernel must share a non-empty grid");
    }
    const std::size_t n_pts = forcing.size();
    const std::size_t last = n_pts - 1;
    // reversed kernel: K[n-k] for k = 1..n-1 becomes a contiguous run of rev
    std::vector<double> rev(n_pts);
    for (std::size_t j = 0; j < n_pts; ++j) rev[j] = kernel[last - j];

    std::vector<double> f(n_pts, 0.0);
    const double diag = 1.0 - 0.5 * c * h * kernel[0];
    if (!(diag > 0.0)) throw std::invalid_argument("march_volterra: step too large for the kernel");
    f[0] = forcing[0];
    for (std::size_t n = 1; n < n_pts; ++n) {
        double conv = 0.5 * f[0] * kernel[n];
        if (n > 1) conv += dot(mode, f.data() + 1, rev.data() + (last - n + 1), n - 1);
        f[n] = (forcing[n] + c * h * conv) / diag;
    }
    return f;
}

} // namespace nudgeq::kernels
