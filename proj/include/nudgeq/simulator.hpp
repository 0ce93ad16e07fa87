#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nudgeq/distributions.hpp"
#include "nudgeq/kernels.hpp"
#include "nudgeq/nudge_analysis.hpp"
#include "nudgeq/tail_stats.hpp"

namespace nudgeq::sim {

enum class PolicyKind { fcfs, nudge, nudge_budget, nudge_prob };

struct Policy {
    PolicyKind kind = PolicyKind::fcfs;
    NudgeParams params{};
    int budget = 1;      // smalls that may pass one large job
    double prob = 1.0;   // chance an eligible swap happens

    static Policy fcfs() { return {}; }
    static Policy nudge(NudgeParams p) { return {PolicyKind::nudge, p, 1, 1.0}; }
    static Policy nudge_budget(NudgeParams p, int k) { return {PolicyKind::nudge_budget, p, k, 1.0}; }
    static Policy nudge_prob(NudgeParams p, double prob) { return {PolicyKind::nudge_prob, p, 1, prob}; }

    bool nudge_family() const { return kind != PolicyKind::fcfs; }
    void validate() const;
    /// e.g. "fcfs", "nudge(1,1,inf)", "nudge_budget(1,1,inf;k=2)", "nudge_prob(1,1,inf;p=0.5)"
    std::string label() const;
};

enum class JobClass : std::uint8_t { small, medium, large, very_large };

JobClass classify(const NudgeParams& params, double size);

enum class SwapDirection : std::uint8_t { none, ahead, behind };

struct Job {
    std::uint64_t index = 0;
    Tick size;
    Tick arrival;
    JobClass cls = JobClass::medium;
    bool swapped = false;
    int passes = 0;                // smalls that moved ahead of this job
    Tick partner_work;             // total size of swap partners
    std::uint64_t partner = 0;     // last partner index
    Tick fcfs_response;            // coupled mode only
};

/*
 * Waiting line in service order plus the server's busy horizon. The job in
 * service is not stored; only its completion tick matters.
 */
class QueueState {
public:
    const std::deque<Job>& waiting() const { return waiting_; }
    bool empty() const { return waiting_.empty(); }
    std::size_t size() const { return waiting_.size(); }
    Tick busy_until() const { return busy_until_; }
    Tick queued_work() const { return queued_work_; }
    /// Remaining work at time `now`, in service plus waiting.
    Tick workload(Tick now) const;

    /// Whether `job` may move ahead of the back job (budget = passes allowed per large job).
    bool swap_eligible(const Job& job, int budget) const;
    void append(Job job);
    /// Inserts `job` second-to-last and records the swap on both jobs.
    void insert_ahead_of_back(Job job);

    /// Starts every waiting job whose start tick is strictly before `now`; calls done(job, completion).
    template <class F>
    void serve_before(Tick now, F&& done);
    /// Takes an arrival at `now` when the line is empty and the server idle.
    bool try_start(const Job& job, Tick now, Tick& completion);

private:
    std::deque<Job> waiting_;
    Tick busy_until_;
    Tick queued_work_;
};

/// Arrival-time rule: swap ahead of an unswapped large job at the back, otherwise append.
/// Returns whether the job was swapped.
bool nudge_enqueue(QueueState& state, Job job);

struct SimConfig {
    double lambda = 0.0;
    JobSizeDistribution dist = JobSizeDistribution::exponential(1.0);
    Policy policy;
    std::uint64_t n_arrivals = 0;             // per replication
    std::optional<std::uint64_t> warmup;      // default: resolved_warmup()
    std::uint64_t seed = 0;
    std::uint32_t replications = 1;
    std::size_t raw_sample_limit = 10'000'000;
    std::shared_ptr<const ThresholdGrid> grid;  // default: default_grid()

    /// Throws StabilityError or ConfigError.
    void validate() const;
    std::uint64_t resolved_warmup() const;
    std::shared_ptr<const ThresholdGrid> resolved_grid() const;
};

/// Edge 0 and 10^4 log-spaced edges from 1e-3 mean to max(200 mean, 40/theta*).
std::shared_ptr<const ThresholdGrid> default_grid(const JobSizeDistribution& dist, double lambda);

struct SimulationOutcome {
    Policy policy;
    std::uint64_t n_jobs = 0;        // post-warmup jobs
    std::vector<double> response;    // arrival order; empty above the raw limit
    TailCounter tails;
    RunningStats stats;
    double span = 0.0;               // post-warmup time, arrival of first to last completion
    double response_sum = 0.0;
    std::uint64_t swaps = 0;         // swap events among post-warmup arrivals

    bool has_samples() const { return !response.empty() || n_jobs == 0; }
    /// Time-average number in system over the measured window.
    double mean_number_in_system() const { return span > 0.0 ? response_sum / span : 0.0; }
};

struct JobRecord {
    double t_fcfs = 0.0;
    double t_nudge = 0.0;
    double partner_size = 0.0;
    SwapDirection direction = SwapDirection::none;
};

struct CoupledOutcome {
    Policy policy;
    SimulationOutcome fcfs;
    SimulationOutcome nudge;
    SwapEventCounter events;
    std::vector<JobRecord> records;    // empty above the raw limit
    std::uint64_t swapped_ahead = 0;
    std::uint64_t swapped_behind = 0;
    std::uint64_t predicate_checks = 0;
    std::uint64_t work_checks = 0;
    std::uint64_t relation_checks = 0;

    std::uint64_t n_jobs() const { return fcfs.n_jobs; }
    std::vector<std::uint64_t> increases() const { return events.increases(); }
    std::vector<std::uint64_t> decreases() const { return events.decreases(); }
};

/// Test hook: maps the independently computed swap predicate before it is compared.
struct CoupledHooks {
    std::function<bool(std::uint64_t index, bool predicate)> predicate_filter;
};

SimulationOutcome run(const SimConfig& config, kernels::ExecutionMode mode = kernels::ExecutionMode::parallel);

CoupledOutcome coupled_run(const SimConfig& config, kernels::ExecutionMode mode = kernels::ExecutionMode::parallel,
                           const CoupledHooks& hooks = {});

/// Single replication, with the streams of replication `rep`.
SimulationOutcome run_replication(const SimConfig& config, std::uint32_t rep);
CoupledOutcome coupled_replication(const SimConfig& config, std::uint32_t rep, const CoupledHooks& hooks = {});

/// Unpaired TIR of b against a at the given thresholds (snapped to the grid).
TirCurve tail_and_tir(const SimulationOutcome& a, const SimulationOutcome& b, const std::vector<double>& thresholds);
/// Paired TIR of Nudge against FCFS.
TirCurve tail_and_tir(const CoupledOutcome& outcome, const std::vector<double>& thresholds);

/// Mean, variance and swap-rate block.
std::string summary_text(const CoupledOutcome& outcome);
std::string summary_text(const SimulationOutcome& outcome);

template <class F>
void QueueState::serve_before(Tick now, F&& done)
{
    while (!waiting_.empty() && busy_until_ < now) {
        Job j = waiting_.front();
        waiting_.pop_front();
        queued_work_ -= j.size;
        busy_until_ += j.size;
        done(j, busy_until_);
    }
}

} // namespace nudgeq::sim
