#include "nudgeq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include <omp.h>

#include "nudgeq/errors.hpp"
#include "nudgeq/fcfs_analysis.hpp"
#include "nudgeq/format.hpp"
#include "nudgeq/random_stream.hpp"

namespace nudgeq::sim {

void Policy::validate() const
{
    if (kind == PolicyKind::fcfs) return;
    params.validate();
    if (budget < 1) throw ConfigError("nudge_budget needs k >= 1");
    if (!(prob >= 0.0 && prob <= 1.0)) throw ConfigError("nudge_prob needs p in [0,1]");
}

std::string Policy::label() const
{
    if (kind == PolicyKind::fcfs) return "fcfs";
    std::string base =
        format_double(params.x1) + "," + format_double(params.x2) + "," + format_double(params.x3);
    switch (kind) {
    case PolicyKind::nudge: return "nudge(" + base + ")";
    case PolicyKind::nudge_budget: return "nudge_budget(" + base + ";k=" + std::to_string(budget) + ")";
    case PolicyKind::nudge_prob: return "nudge_prob(" + base + ";p=" + format_double(prob) + ")";
    default: return "fcfs";
    }
}

JobClass classify(const NudgeParams& p, double size)
{
    if (size < p.x1) return JobClass::small;
    if (size < p.x2) return JobClass::medium;
    if (size < p.x3) return JobClass::large;
    return JobClass::very_large;
}

Tick QueueState::workload(Tick now) const
{
    const Tick in_service = busy_until_ > now ? busy_until_ - now : Tick(0);
    return in_service + queued_work_;
}

bool QueueState::swap_eligible(const Job& job, int budget) const
{
    if (waiting_.empty() || job.cls != JobClass::small || job.swapped) return false;
    const Job& back = waiting_.back();
    return back.cls == JobClass::large && back.passes < budget;
}

void QueueState::append(Job job)
{
    queued_work_ += job.size;
    waiting_.push_back(job);
}

void QueueState::insert_ahead_of_back(Job job)
{
    if (waiting_.empty()) throw ConsistencyError("swap requested on an empty queue");
    if (job.swapped) throw ConsistencyError("a small job tried to swap twice");
    Job back = waiting_.back();
    waiting_.pop_back();
    job.swapped = true;
    job.partner = back.index;
    job.partner_work = back.size;
    back.swapped = true;
    ++back.passes;
    back.partner = job.index;
    back.partner_work += job.size;
    queued_work_ += job.size;
    waiting_.push_back(job);
    waiting_.push_back(back);
}

bool QueueState::try_start(const Job& job, Tick now, Tick& completion)
{
    if (!waiting_.empty() || busy_until_ > now) return false;
    busy_until_ = now + job.size;
    completion = busy_until_;
    return true;
}

bool nudge_enqueue(QueueState& state, Job job)
{
    if (state.swap_eligible(job, 1)) {
        state.insert_ahead_of_back(job);
        return true;
    }
    state.append(job);
    return false;
}

void SimConfig::validate() const
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive and finite");
    const double rho = lambda * dist.mean();
    if (!(rho < 1.0)) throw StabilityError("unstable configuration: rho = " + format_double(rho) + " >= 1");
    if (n_arrivals < 1) throw ConfigError("n_arrivals must be at least 1");
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (warmup && *warmup >= n_arrivals) throw ConfigError("warmup must be below n_arrivals");
    // int64 ticks cover about 8.6e9 time units
    if (static_cast<double>(n_arrivals) / lambda > 2.0e9) {
        throw ConfigError("run too long for the tick clock (n_arrivals / lambda > 2e9)");
    }
    policy.validate();
}

std::uint64_t SimConfig::resolved_warmup() const
{
    if (warmup) return *warmup;
    return std::min<std::uint64_t>(std::max<std::uint64_t>(100'000, n_arrivals / 100), n_arrivals / 10);
}

std::shared_ptr<const ThresholdGrid> SimConfig::resolved_grid() const
{
    return grid ? grid : default_grid(dist, lambda);
}

std::shared_ptr<const ThresholdGrid> default_grid(const JobSizeDistribution& dist, double lambda)
{
    double hi = 200.0 * dist.mean();
    try {
        hi = std::max(hi, 40.0 / theta_star(lambda, dist));
    } catch (const std::exception&) {
        // no exponential tail rate; keep the moment-based horizon
    }
    return std::make_shared<const ThresholdGrid>(ThresholdGrid::log_spaced(1e-3 * dist.mean(), hi, 10'000));
}

namespace {

struct Streams {
    RandomStream arrivals;
    RandomStream sizes;
    RandomStream coin;
};

Streams streams_for(const SimConfig& c, std::uint32_t rep)
{
    return {RandomStream::derive(c.seed, rep, StreamPurpose::arrivals),
            RandomStream::derive(c.seed, rep, StreamPurpose::sizes),
            RandomStream::derive(c.seed, rep, StreamPurpose::coin)};
}

class Recorder {
public:
    Recorder(SimulationOutcome& out, const SimConfig& c, std::shared_ptr<const ThresholdGrid> grid, Policy policy)
        : out_(out), warmup_(c.resolved_warmup())
    {
        out_.policy = policy;
        out_.n_jobs = c.n_arrivals - warmup_;
        out_.tails = TailCounter(std::move(grid));
        if (out_.n_jobs <= c.raw_sample_limit) out_.response.assign(out_.n_jobs, 0.0);
    }

    bool measured(std::uint64_t index) const { return index >= warmup_; }

    // returns the grid bin of the response time
    std::size_t record(const Job& j, Tick completion)
    {
        const Tick t = completion - j.arrival;
        const double tt = t.time();
        const std::size_t b = out_.tails.grid().bin(t);
        out_.tails.add_bin(b);
        out_.stats.add(tt);
        out_.response_sum += tt;
        if (!out_.response.empty()) out_.response[j.index - warmup_] = tt;
        if (j.index == warmup_) first_arrival_ = j.arrival;
        last_completion_ = std::max(last_completion_, completion);
        return b;
    }

    void finish() { out_.span = (last_completion_ - first_arrival_).time(); }

private:
    SimulationOutcome& out_;
    std::uint64_t warmup_;
    Tick first_arrival_;
    Tick last_completion_;
};

struct Arrival {
    Tick gap;
    Tick size;
};

Arrival next_arrival(const SimConfig& c, Streams& s)
{
    const double gap = s.arrivals.exponential(c.lambda);
    const double size = c.dist.sample(s.sizes);
    return {to_ticks(gap), to_ticks(size)};
}

SimulationOutcome run_fcfs(const SimConfig& c, std::uint32_t rep, std::shared_ptr<const ThresholdGrid> grid)
{
    SimulationOutcome out;
    Recorder rec(out, c, std::move(grid), c.policy);
    Streams s = streams_for(c, rep);
    Tick now, after;  // workload just after the previous arrival
    for (std::uint64_t i = 0; i < c.n_arrivals; ++i) {
        const Arrival a = next_arrival(c, s);
        now += a.gap;
        const Tick wait = after > a.gap ? after - a.gap : Tick(0);
        after = wait + a.size;
        if (rec.measured(i)) {
            Job j;
            j.index = i;
            j.arrival = now;
            j.size = a.size;
            rec.record(j, now + after);
        }
    }
    rec.finish();
    return out;
}

// Candidate large job seen from the FCFS side: the swap predicate uses only FCFS quantities.
struct Candidate {
    bool active = false;
    Tick arrival;
    Tick wait;
    Tick passed;
    int passes = 0;
};

struct NudgeEngine {
    const SimConfig& c;
    Streams s;
    QueueState q;
    const int budget;

    NudgeEngine(const SimConfig& cfg, std::uint32_t rep)
        : c(cfg), s(streams_for(cfg, rep)), budget(cfg.policy.kind == PolicyKind::nudge_budget ? cfg.policy.budget : 1)
    {
    }

    Job make_job(std::uint64_t i, Tick now, Tick size) const
    {
        Job j;
        j.index = i;
        j.arrival = now;
        j.size = size;
        j.cls = classify(c.policy.params, size.time());
        return j;
    }

    // queue-side decision; `eligible` reports the three swap conditions before the coin
    bool place(const Job& j, Tick now, bool& eligible, Tick& completion, bool& started)
    {
        started = q.try_start(j, now, completion);
        eligible = false;
        if (started) return false;
        eligible = q.swap_eligible(j, budget);
        bool swap = eligible;
        if (eligible && c.policy.kind == PolicyKind::nudge_prob) swap = s.coin.uniform() < c.policy.prob;
        if (swap) {
            q.insert_ahead_of_back(j);
        } else {
            q.append(j);
        }
        return swap;
    }
};

SimulationOutcome run_nudge(const SimConfig& c, std::uint32_t rep, std::shared_ptr<const ThresholdGrid> grid)
{
    SimulationOutcome out;
    Recorder rec(out, c, std::move(grid), c.policy);
    NudgeEngine e(c, rep);
    auto done = [&](const Job& j, Tick completion) {
        if (rec.measured(j.index)) rec.record(j, completion);
    };
    Tick now;
    for (std::uint64_t i = 0; i < c.n_arrivals; ++i) {
        const Arrival a = next_arrival(c, e.s);
        now += a.gap;
        e.q.serve_before(now, done);
        const Job j = e.make_job(i, now, a.size);
        bool eligible = false, started = false;
        Tick completion;
        const bool swapped = e.place(j, now, eligible, completion, started);
        if (started) done(j, completion);
        if (swapped && rec.measured(i)) ++out.swaps;
    }
    e.q.serve_before(Tick(INT64_MAX), done);
    rec.finish();
    return out;
}

[[noreturn]] void inconsistent(const std::string& what, std::uint64_t index)
{
    throw ConsistencyError(what + " at job " + std::to_string(index));
}

CoupledOutcome run_coupled(const SimConfig& c, std::uint32_t rep, std::shared_ptr<const ThresholdGrid> grid,
                           const CoupledHooks& hooks)
{
    CoupledOutcome out;
    out.policy = c.policy;
    Recorder rec_f(out.fcfs, c, grid, Policy::fcfs());
    Recorder rec_n(out.nudge, c, grid, c.policy);
    out.events = SwapEventCounter(grid->size());
    const std::uint64_t warmup = c.resolved_warmup();
    if (!out.fcfs.response.empty()) out.records.assign(out.fcfs.n_jobs, JobRecord{});
    NudgeEngine e(c, rep);

    auto done = [&](const Job& j, Tick completion) {
        const Tick tn = completion - j.arrival;
        Tick expected = j.fcfs_response;
        SwapDirection dir = SwapDirection::none;
        if (j.cls == JobClass::small && j.swapped) {
            expected -= j.partner_work;
            dir = SwapDirection::ahead;
        } else if (j.passes > 0) {
            expected += j.partner_work;
            dir = SwapDirection::behind;
        }
        if (tn != expected) inconsistent("response time differs from FCFS by more than the swap partner", j.index);
        if (dir != SwapDirection::none && e.budget == 1) {
            const std::uint64_t gap = j.index > j.partner ? j.index - j.partner : j.partner - j.index;
            if (gap != 1) inconsistent("swap between non-adjacent arrivals", j.index);
        }
        ++out.relation_checks;
        if (!rec_n.measured(j.index)) return;
        const std::size_t bn = rec_n.record(j, completion);
        const std::size_t bf = rec_f.record(j, j.arrival + j.fcfs_response);
        out.events.add(bf, bn);
        if (dir == SwapDirection::ahead) ++out.swapped_ahead;
        if (dir == SwapDirection::behind) ++out.swapped_behind;
        if (!out.records.empty()) {
            out.records[j.index - warmup] = {j.fcfs_response.time(), tn.time(), j.partner_work.time(), dir};
        }
    };

    Candidate cand;
    Tick now, after;
    for (std::uint64_t i = 0; i < c.n_arrivals; ++i) {
        const Arrival a = next_arrival(c, e.s);
        now += a.gap;
        const Tick wait = after > a.gap ? after - a.gap : Tick(0);
        after = wait + a.size;

        e.q.serve_before(now, done);
        if (e.q.workload(now) != wait) inconsistent("FCFS and Nudge workloads differ", i);
        ++out.work_checks;

        Job j = e.make_job(i, now, a.size);
        j.fcfs_response = wait + a.size;

        bool predicate = cand.active && cand.passes < e.budget && j.cls == JobClass::small &&
                         now <= cand.arrival + cand.wait + cand.passed;
        if (hooks.predicate_filter) predicate = hooks.predicate_filter(i, predicate);

        bool eligible = false, started = false;
        Tick completion;
        const bool swapped = e.place(j, now, eligible, completion, started);
        if (eligible != predicate) inconsistent("queue swap disagrees with the swap-event predicate", i);
        ++out.predicate_checks;
        if (started) done(j, completion);
        if (swapped && rec_n.measured(i)) ++out.nudge.swaps;

        if (swapped) {
            ++cand.passes;
            cand.passed += a.size;
        } else if (j.cls == JobClass::large) {
            cand = {true, now, wait, Tick(0), 0};
        } else {
            cand.active = false;
        }
    }
    e.q.serve_before(Tick(INT64_MAX), done);
    rec_f.finish();
    rec_n.finish();

    const auto ef = out.fcfs.tails.exceedances(), en = out.nudge.tails.exceedances();
    const auto ni = out.events.increases(), nd = out.events.decreases();
    for (std::size_t k = 0; k < ef.size(); ++k) {
        const auto lhs = static_cast<std::int64_t>(en[k]) - static_cast<std::int64_t>(ef[k]);
        const auto rhs = static_cast<std::int64_t>(ni[k]) - static_cast<std::int64_t>(nd[k]);
        if (lhs != rhs) inconsistent("threshold counting identity fails", k);
    }
    return out;
}

void merge_into(SimulationOutcome& into, SimulationOutcome&& part, std::size_t limit)
{
    if (into.tails.grid_ptr() == nullptr) {
        into = std::move(part);
        return;
    }
    const bool keep = into.n_jobs + part.n_jobs <= limit && !into.response.empty() && !part.response.empty();
    if (keep) {
        into.response.insert(into.response.end(), part.response.begin(), part.response.end());
    } else {
        into.response.clear();
        into.response.shrink_to_fit();
    }
    into.n_jobs += part.n_jobs;
    into.tails.merge(part.tails);
    into.stats.merge(part.stats);
    into.span += part.span;
    into.response_sum += part.response_sum;
    into.swaps += part.swaps;
}

template <class T, class F>
std::vector<T> for_replications(const SimConfig& c, kernels::ExecutionMode mode, F&& body)
{
    std::vector<T> parts(c.replications);
    std::vector<std::exception_ptr> errors(c.replications);
    const int n = static_cast<int>(c.replications);
    if (mode == kernels::ExecutionMode::parallel && n > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(kernels::thread_budget())
        for (int r = 0; r < n; ++r) {
            try {
                parts[r] = body(static_cast<std::uint32_t>(r));
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    } else {
        for (int r = 0; r < n; ++r) parts[r] = body(static_cast<std::uint32_t>(r));
    }
    for (auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
    return parts;
}

SimConfig with_grid(const SimConfig& config)
{
    config.validate();
    SimConfig c = config;
    c.grid = config.resolved_grid();
    return c;
}

} // namespace

SimulationOutcome run_replication(const SimConfig& config, std::uint32_t rep)
{
    const SimConfig c = with_grid(config);
    return c.policy.nudge_family() ? run_nudge(c, rep, c.grid) : run_fcfs(c, rep, c.grid);
}

CoupledOutcome coupled_replication(const SimConfig& config, std::uint32_t rep, const CoupledHooks& hooks)
{
    const SimConfig c = with_grid(config);
    if (!c.policy.nudge_family()) throw ConfigError("coupled runs need a nudge-family policy");
    return run_coupled(c, rep, c.grid, hooks);
}

SimulationOutcome run(const SimConfig& config, kernels::ExecutionMode mode)
{
    const SimConfig c = with_grid(config);
    auto parts = for_replications<SimulationOutcome>(c, mode, [&](std::uint32_t r) { return run_replication(c, r); });
    SimulationOutcome out;
    for (auto& p : parts) merge_into(out, std::move(p), c.raw_sample_limit);
    return out;
}

CoupledOutcome coupled_run(const SimConfig& config, kernels::ExecutionMode mode, const CoupledHooks& hooks)
{
    const SimConfig c = with_grid(config);
    if (!c.policy.nudge_family()) throw ConfigError("coupled runs need a nudge-family policy");
    auto parts = for_replications<CoupledOutcome>(
        c, mode, [&](std::uint32_t r) { return run_coupled(c, r, c.grid, hooks); });
    CoupledOutcome out = std::move(parts.front());
    for (std::size_t r = 1; r < parts.size(); ++r) {
        auto& p = parts[r];
        const bool keep = !out.records.empty() && !p.records.empty() &&
                          out.records.size() + p.records.size() <= c.raw_sample_limit;
        if (keep) {
            out.records.insert(out.records.end(), p.records.begin(), p.records.end());
        } else {
            out.records.clear();
        }
        merge_into(out.fcfs, std::move(p.fcfs), c.raw_sample_limit);
        merge_into(out.nudge, std::move(p.nudge), c.raw_sample_limit);
        out.events.merge(p.events);
        out.swapped_ahead += p.swapped_ahead;
        out.swapped_behind += p.swapped_behind;
        out.predicate_checks += p.predicate_checks;
        out.work_checks += p.work_checks;
        out.relation_checks += p.relation_checks;
    }
    return out;
}

TirCurve tail_and_tir(const SimulationOutcome& a, const SimulationOutcome& b, const std::vector<double>& thresholds)
{
    return tir_unpaired(a.tails, b.tails, snap_thresholds(a.tails.grid(), thresholds));
}

TirCurve tail_and_tir(const CoupledOutcome& o, const std::vector<double>& thresholds)
{
    return tir_paired(o.fcfs.tails, o.nudge.tails, o.events, snap_thresholds(o.fcfs.tails.grid(), thresholds));
}

namespace {

void summary_lines(std::ostringstream& os, const std::string& prefix, const SimulationOutcome& o)
{
    os << prefix << "policy=" << o.policy.label() << '\n'
       << prefix << "jobs=" << o.n_jobs << '\n'
       << prefix << "mean_response=" << format_double(o.stats.mean) << '\n'
       << prefix << "var_response=" << format_double(o.stats.variance()) << '\n'
       << prefix << "mean_number_in_system=" << format_double(o.mean_number_in_system()) << '\n';
    if (o.policy.nudge_family()) {
        const double rate = o.n_jobs ? static_cast<double>(o.swaps) / static_cast<double>(o.n_jobs) : 0.0;
        os << prefix << "swaps=" << o.swaps << '\n' << prefix << "swap_rate=" << format_double(rate) << '\n';
    }
}

} // namespace

std::string summary_text(const SimulationOutcome& o)
{
    std::ostringstream os;
    summary_lines(os, "", o);
    return os.str();
}

std::string summary_text(const CoupledOutcome& o)
{
    std::ostringstream os;
    summary_lines(os, "fcfs.", o.fcfs);
    summary_lines(os, "nudge.", o.nudge);
    os << "swapped_ahead=" << o.swapped_ahead << '\n' << "swapped_behind=" << o.swapped_behind << '\n';
    return os.str();
}

} // namespace nudgeq::sim
