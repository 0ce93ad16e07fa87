#pragma once

#include <cstddef>
#include <vector>

namespace nudgeq::kernels {

enum class ExecutionMode { serial, parallel };

/// Thread budget: NUDGEQ_THREADS if set, otherwise the OpenMP default.
int thread_budget();

double dot_serial(const double* a, const double* b, std::size_t n);
double dot_parallel(const double* a, const double* b, std::size_t n);

inline double dot(ExecutionMode mode, const double* a, const double* b, std::size_t n)
{
    return mode == ExecutionMode::parallel ? dot_parallel(a, b, n) : dot_serial(a, b, n);
}

/*
 * Trapezoidal marching for the renewal-type equation
 *     f(t) = forcing(t) + c * int_0^t f(v) K(t - v) dv
 * on t_n = n*h, n = 0..N, where forcing and K are sampled on the same grid.
 * The implicit diagonal term is solved for explicitly since the scheme is linear.
 */
std::vector<double> march_volterra(const std::vector<double>& forcing, const std::vector<double>& kernel,
                                   double c, double h, ExecutionMode mode);

} // namespace nudgeq::kernels
