#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

namespace nudgeq::sim {

/// Simulation clock unit: 2^-30 time units.
inline constexpr double kTicksPerUnit = 0x1.0p30;

struct Tick {
    std::int64_t count = 0;

    constexpr Tick() = default;
    constexpr explicit Tick(std::int64_t c) : count(c) {}

    constexpr double time() const { return static_cast<double>(count) / kTicksPerUnit; }
    constexpr Tick operator+(Tick o) const { return Tick(count + o.count); }
    constexpr Tick operator-(Tick o) const { return Tick(count - o.count); }
    constexpr Tick& operator+=(Tick o) { count += o.count; return *this; }
    constexpr Tick& operator-=(Tick o) { count -= o.count; return *this; }
    constexpr auto operator<=>(const Tick&) const = default;
};

/// Nearest tick, at least one (sizes and gaps are never zero).
Tick to_ticks(double t);

/// Nearest tick, zero allowed.
Tick round_to_ticks(double t);

/// Welford accumulator with an exact-order pairwise merge.
struct RunningStats {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x)
    {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    void merge(const RunningStats& o);
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

/*
 * Ascending threshold edges on the tick lattice. bin(T) is the number of
 * edges strictly below T, so T > edge(j) exactly when j < bin(T).
 */
class ThresholdGrid {
public:
    explicit ThresholdGrid(std::vector<Tick> edges);

    /// Edge 0 plus `count` log-spaced edges over [lo, hi].
    static ThresholdGrid log_spaced(double lo, double hi, std::size_t count);

    std::size_t size() const { return edges_.size(); }
    Tick edge(std::size_t j) const { return edges_[j]; }
    double time(std::size_t j) const { return edges_[j].time(); }
    std::size_t bin(Tick t) const;
    /// Index of the edge nearest to t (in log distance above the first positive edge).
    std::size_t nearest(double t) const;
    bool operator==(const ThresholdGrid& o) const { return edges_ == o.edges_; }

private:
    std::vector<Tick> edges_;
};

/// Exact exceedance counts on a grid; doubles as the fixed-bin histogram.
class TailCounter {
public:
    TailCounter() = default;
    explicit TailCounter(std::shared_ptr<const ThresholdGrid> grid);

    void add(Tick response) { ++bins_[grid_->bin(response)]; ++total_; }
    void add_bin(std::size_t b) { ++bins_[b]; ++total_; }
    void merge(const TailCounter& o);

    const ThresholdGrid& grid() const { return *grid_; }
    const std::shared_ptr<const ThresholdGrid>& grid_ptr() const { return grid_; }
    std::uint64_t total() const { return total_; }
    const std::vector<std::uint64_t>& bins() const { return bins_; }
    /// N{T > edge(j)} for every j.
    std::vector<std::uint64_t> exceedances() const;

private:
    std::shared_ptr<const ThresholdGrid> grid_;
    std::vector<std::uint64_t> bins_;
    std::uint64_t total_ = 0;
};

/*
 * Paired swap-event counts for coupled systems: N{I_t} (FCFS <= t < Nudge)
 * and N{D_t} (Nudge <= t < FCFS) on the same grid, via difference arrays.
 */
class SwapEventCounter {
public:
    SwapEventCounter() = default;
    explicit SwapEventCounter(std::size_t grid_size);

    void add(std::size_t bin_fcfs, std::size_t bin_nudge);
    void merge(const SwapEventCounter& o);
    std::vector<std::uint64_t> increases() const;
    std::vector<std::uint64_t> decreases() const;

private:
    std::vector<std::int64_t> diff_i_;
    std::vector<std::int64_t> diff_d_;
};

struct TirCurve {
    std::vector<double> thresholds;
    std::vector<double> tail_a;
    std::vector<double> tail_b;
    std::vector<double> tir;  // NaN where undefined
    std::vector<double> ci_low;
    std::vector<double> ci_high;
    std::vector<std::uint64_t> n_tail_a;
    std::vector<std::uint64_t> n_tail_b;
    std::vector<bool> defined;         // tail_a > 0
    std::vector<bool> low_confidence;  // fewer than 100 tail samples in either system
    bool paired = false;
    std::uint64_t n_a = 0;
    std::uint64_t n_b = 0;
};

/// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;
inline constexpr std::uint64_t kLowConfidenceCount = 100;

/// Tail/TIR from independent samples (binomial delta-method band).
TirCurve tir_unpaired(const TailCounter& a, const TailCounter& b, const std::vector<std::size_t>& edges);

/// Tail/TIR from coupled samples; the band uses the joint counts.
TirCurve tir_paired(const TailCounter& fcfs, const TailCounter& nudge, const SwapEventCounter& events,
                    const std::vector<std::size_t>& edges);

/// Grid indices for requested thresholds (ascending; each snapped to its nearest edge).
std::vector<std::size_t> snap_thresholds(const ThresholdGrid& grid, const std::vector<double>& thresholds);

/// `count` log-spaced thresholds from `lo` up to the empirical (1 - tail)-quantile, snapped and deduplicated.
std::vector<std::size_t> log_thresholds(const TailCounter& reference, double lo, std::size_t count, double tail);

struct LstEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Mean of e^{-sT} with a batch-means standard error (32 batches once n >= 3200).
LstEstimate empirical_lst(const std::vector<double>& samples, double s);

/// Standard error of the mean of x from `batches` contiguous batch means.
double batch_means_se(const std::vector<double>& x, std::size_t batches);

/// Columns: t,tail_fcfs,tail_nudge,tir,ci_low,ci_high,n_tail_fcfs,n_tail_nudge
void write_tir_csv(const TirCurve& curve, std::ostream& out);
/// Columns: t,tail_fcfs,n_tail_fcfs
void write_tail_csv(const TailCounter& counter, const std::vector<std::size_t>& edges, std::ostream& out);

} // namespace nudgeq::sim
