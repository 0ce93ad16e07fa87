#include "nudgeq/tail_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "nudgeq/errors.hpp"
#include "nudgeq/format.hpp"

namespace nudgeq::sim {

Tick to_ticks(double t)
{
    const Tick r = round_to_ticks(t);
    return r.count < 1 ? Tick(1) : r;
}

Tick round_to_ticks(double t)
{
    if (!(t >= 0.0) || !(t * kTicksPerUnit < 9.0e18)) {
        throw std::invalid_argument("time value outside the tick range");
    }
    return Tick(std::llround(t * kTicksPerUnit));
}

void RunningStats::merge(const RunningStats& o)
{
    if (o.n == 0) return;
    if (n == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double d = o.mean - mean;
    const double tot = na + nb;
    mean += d * nb / tot;
    m2 += o.m2 + d * d * na * nb / tot;
    n += o.n;
}

ThresholdGrid::ThresholdGrid(std::vector<Tick> edges) : edges_(std::move(edges))
{
    if (edges_.empty()) throw std::invalid_argument("threshold grid needs at least one edge");
    for (std::size_t j = 1; j < edges_.size(); ++j) {
        if (!(edges_[j - 1] < edges_[j])) throw std::invalid_argument("threshold edges must be strictly increasing");
    }
    if (edges_.front().count < 0) throw std::invalid_argument("threshold edges must be nonnegative");
}

ThresholdGrid ThresholdGrid::log_spaced(double lo, double hi, std::size_t count)
{
    if (!(lo > 0.0) || !(hi > lo) || count < 2) {
        throw std::invalid_argument("log-spaced grid needs 0 < lo < hi and count >= 2");
    }
    std::vector<Tick> edges{Tick(0)};
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) {
        const Tick e = round_to_ticks(lo * std::exp(step * static_cast<double>(k)));
        if (e > edges.back()) edges.push_back(e);
    }
    return ThresholdGrid(std::move(edges));
}

std::size_t ThresholdGrid::bin(Tick t) const
{
    return static_cast<std::size_t>(std::lower_bound(edges_.begin(), edges_.end(), t) - edges_.begin());
}

std::size_t ThresholdGrid::nearest(double t) const
{
    if (!(t > 0.0)) return 0;
    const auto it = std::lower_bound(edges_.begin(), edges_.end(), round_to_ticks(t));
    if (it == edges_.end()) return edges_.size() - 1;
    const auto j = static_cast<std::size_t>(it - edges_.begin());
    if (j == 0) return 0;
    const double below = time(j - 1);
    if (!(below > 0.0)) return j;
    return std::log(t / below) < std::log(time(j) / t) ? j - 1 : j;
}

TailCounter::TailCounter(std::shared_ptr<const ThresholdGrid> grid)
    : grid_(std::move(grid)), bins_(grid_->size() + 1, 0)
{
}

void TailCounter::merge(const TailCounter& o)
{
    if (!grid_) {
        *this = o;
        return;
    }
    if (!(*grid_ == *o.grid_)) throw std::invalid_argument("cannot merge tail counters on different grids");
    for (std::size_t b = 0; b < bins_.size(); ++b) bins_[b] += o.bins_[b];
    total_ += o.total_;
}

std::vector<std::uint64_t> TailCounter::exceedances() const
{
    std::vector<std::uint64_t> out(grid_->size());
    std::uint64_t above = 0;
    for (std::size_t j = grid_->size(); j-- > 0;) {
        above += bins_[j + 1];
        out[j] = above;
    }
    return out;
}

SwapEventCounter::SwapEventCounter(std::size_t grid_size) : diff_i_(grid_size + 1, 0), diff_d_(grid_size + 1, 0) {}

void SwapEventCounter::add(std::size_t bin_fcfs, std::size_t bin_nudge)
{
    if (bin_fcfs < bin_nudge) {
        ++diff_i_[bin_fcfs];
        --diff_i_[bin_nudge];
    } else if (bin_nudge < bin_fcfs) {
        ++diff_d_[bin_nudge];
        --diff_d_[bin_fcfs];
    }
}

void SwapEventCounter::merge(const SwapEventCounter& o)
{
    if (diff_i_.empty()) {
        *this = o;
        return;
    }
    if (diff_i_.size() != o.diff_i_.size()) throw std::invalid_argument("swap counters on different grids");
    for (std::size_t b = 0; b < diff_i_.size(); ++b) {
        diff_i_[b] += o.diff_i_[b];
        diff_d_[b] += o.diff_d_[b];
    }
}

namespace {

std::vector<std::uint64_t> prefix(const std::vector<std::int64_t>& diff)
{
    std::vector<std::uint64_t> out(diff.size() - 1);
    std::int64_t run = 0;
    for (std::size_t j = 0; j + 1 < diff.size(); ++j) {
        run += diff[j];
        out[j] = static_cast<std::uint64_t>(run);
    }
    return out;
}

TirCurve empty_curve(const TailCounter& a, const TailCounter& b, std::size_t n)
{
    TirCurve c;
    c.n_a = a.total();
    c.n_b = b.total();
    c.thresholds.reserve(n);
    return c;
}

void push_point(TirCurve& c, double t, std::uint64_t na, std::uint64_t nb, double var_tir)
{
    const double pa = static_cast<double>(na) / static_cast<double>(c.n_a);
    const double pb = static_cast<double>(nb) / static_cast<double>(c.n_b);
    c.thresholds.push_back(t);
    c.tail_a.push_back(pa);
    c.tail_b.push_back(pb);
    c.n_tail_a.push_back(na);
    c.n_tail_b.push_back(nb);
    c.low_confidence.push_back(na < kLowConfidenceCount || nb < kLowConfidenceCount);
    if (na == 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        c.defined.push_back(false);
        c.tir.push_back(nan);
        c.ci_low.push_back(nan);
        c.ci_high.push_back(nan);
        return;
    }
    const double tir = 1.0 - pb / pa;
    const double half = kZ95 * std::sqrt(std::max(var_tir, 0.0));
    c.defined.push_back(true);
    c.tir.push_back(tir);
    c.ci_low.push_back(tir - half);
    c.ci_high.push_back(tir + half);
}

void check_edges(const ThresholdGrid& grid, const std::vector<std::size_t>& edges)
{
    for (std::size_t k = 0; k < edges.size(); ++k) {
        if (edges[k] >= grid.size()) throw std::invalid_argument("threshold index outside the grid");
        if (k > 0 && edges[k] <= edges[k - 1]) throw std::invalid_argument("thresholds must be ascending");
    }
}

} // namespace

std::vector<std::uint64_t> SwapEventCounter::increases() const { return prefix(diff_i_); }
std::vector<std::uint64_t> SwapEventCounter::decreases() const { return prefix(diff_d_); }

TirCurve tir_unpaired(const TailCounter& a, const TailCounter& b, const std::vector<std::size_t>& edges)
{
    if (!(a.grid() == b.grid())) throw std::invalid_argument("outcomes were counted on different grids");
    if (a.total() == 0 || b.total() == 0) throw std::invalid_argument("empty outcome");
    check_edges(a.grid(), edges);
    const auto ea = a.exceedances(), eb = b.exceedances();
    TirCurve c = empty_curve(a, b, edges.size());
    const double na = static_cast<double>(a.total()), nb = static_cast<double>(b.total());
    for (std::size_t j : edges) {
        const double pa = static_cast<double>(ea[j]) / na, pb = static_cast<double>(eb[j]) / nb;
        double var = 0.0;
        if (ea[j] > 0) {
            const double va = pa * (1.0 - pa) / na, vb = pb * (1.0 - pb) / nb;
            var = vb / (pa * pa) + pb * pb * va / (pa * pa * pa * pa);
        }
        push_point(c, a.grid().time(j), ea[j], eb[j], var);
    }
    return c;
}

TirCurve tir_paired(const TailCounter& fcfs, const TailCounter& nudge, const SwapEventCounter& events,
                    const std::vector<std::size_t>& edges)
{
    if (!(fcfs.grid() == nudge.grid())) throw std::invalid_argument("outcomes were counted on different grids");
    if (fcfs.total() != nudge.total() || fcfs.total() == 0) {
        throw std::invalid_argument("paired outcomes need equal nonzero job counts");
    }
    check_edges(fcfs.grid(), edges);
    const auto ef = fcfs.exceedances(), en = nudge.exceedances();
    const auto ni = events.increases(), nd = events.decreases();
    TirCurve c = empty_curve(fcfs, nudge, edges.size());
    c.paired = true;
    const double n = static_cast<double>(fcfs.total());
    for (std::size_t j : edges) {
        const double pf = static_cast<double>(ef[j]) / n, pn = static_cast<double>(en[j]) / n;
        double var = 0.0;
        if (ef[j] > 0) {
            // X = 1{T^F > t}, Y = 1{T^N > t}; E[XY] = p_F - p_D
            const double pd = static_cast<double>(nd[j]) / n;
            const double vx = pf * (1.0 - pf) / n, vy = pn * (1.0 - pn) / n;
            const double cov = (pf - pd - pf * pn) / n;
            var = vy / (pf * pf) + pn * pn * vx / (pf * pf * pf * pf) - 2.0 * pn * cov / (pf * pf * pf);
        }
        push_point(c, fcfs.grid().time(j), ef[j], en[j], var);
    }
    return c;
}

std::vector<std::size_t> snap_thresholds(const ThresholdGrid& grid, const std::vector<double>& thresholds)
{
    std::vector<std::size_t> out;
    out.reserve(thresholds.size());
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
        if (k > 0 && !(thresholds[k] > thresholds[k - 1])) {
            throw std::invalid_argument("thresholds must be strictly increasing");
        }
        const std::size_t j = grid.nearest(thresholds[k]);
        if (out.empty() || j > out.back()) out.push_back(j);
    }
    return out;
}

std::vector<std::size_t> log_thresholds(const TailCounter& reference, double lo, std::size_t count, double tail)
{
    if (!(lo > 0.0) || count < 1 || !(tail > 0.0 && tail < 1.0)) {
        throw std::invalid_argument("log thresholds need lo > 0, count >= 1 and tail in (0,1)");
    }
    const auto ex = reference.exceedances();
    const double cap = std::max(tail * static_cast<double>(reference.total()), 1.0);
    std::size_t q = ex.size() - 1;
    for (std::size_t j = 0; j < ex.size(); ++j) {
        if (static_cast<double>(ex[j]) <= cap) {
            q = j;
            break;
        }
    }
    const double hi = reference.grid().time(q);
    const auto& grid = reference.grid();
    std::vector<std::size_t> out;
    if (!(hi > lo) || count == 1) {
        out.push_back(grid.nearest(lo));
        return out;
    }
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t j = grid.nearest(lo * std::exp(step * static_cast<double>(k)));
        if (out.empty() || j > out.back()) out.push_back(j);
    }
    return out;
}

double batch_means_se(const std::vector<double>& x, std::size_t batches)
{
    if (batches < 2 || x.size() < batches) throw std::invalid_argument("batch means need n >= batches >= 2");
    const std::size_t len = x.size() / batches;
    RunningStats means;
    for (std::size_t b = 0; b < batches; ++b) {
        double sum = 0.0;
        for (std::size_t i = b * len; i < (b + 1) * len; ++i) sum += x[i];
        means.add(sum / static_cast<double>(len));
    }
    return std::sqrt(means.variance() / static_cast<double>(batches));
}

LstEstimate empirical_lst(const std::vector<double>& samples, double s)
{
    if (!(s >= 0.0)) throw std::domain_error("empirical transform needs s >= 0");
    if (samples.empty()) throw std::invalid_argument("no samples");
    std::vector<double> v(samples.size());
    std::transform(samples.begin(), samples.end(), v.begin(), [s](double t) { return std::exp(-s * t); });
    if (v.size() >= 3200) {
        const std::size_t len = v.size() / 32;
        double sum = 0.0;
        for (std::size_t i = 0; i < 32 * len; ++i) sum += v[i];
        return {sum / static_cast<double>(32 * len), batch_means_se(v, 32)};
    }
    RunningStats st;
    for (double e : v) st.add(e);
    return {st.mean, std::sqrt(st.variance() / static_cast<double>(st.n))};
}

void write_tir_csv(const TirCurve& c, std::ostream& out)
{
    out << "t,tail_fcfs,tail_nudge,tir,ci_low,ci_high,n_tail_fcfs,n_tail_nudge\n";
    for (std::size_t k = 0; k < c.thresholds.size(); ++k) {
        out << format_double(c.thresholds[k]) << ',' << format_double(c.tail_a[k]) << ','
            << format_double(c.tail_b[k]) << ',' << format_double(c.tir[k]) << ','
            << format_double(c.ci_low[k]) << ',' << format_double(c.ci_high[k]) << ',' << c.n_tail_a[k] << ','
            << c.n_tail_b[k] << '\n';
    }
}

void write_tail_csv(const TailCounter& counter, const std::vector<std::size_t>& edges, std::ostream& out)
{
    check_edges(counter.grid(), edges);
    const auto ex = counter.exceedances();
    const double n = static_cast<double>(counter.total());
    out << "t,tail_fcfs,n_tail_fcfs\n";
    for (std::size_t j : edges) {
        out << format_double(counter.grid().time(j)) << ',' << format_double(static_cast<double>(ex[j]) / n) << ','
            << ex[j] << '\n';
    }
}

} // namespace nudgeq::sim
