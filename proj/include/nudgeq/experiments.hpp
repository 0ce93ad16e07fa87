#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nudgeq/distributions.hpp"
#include "nudgeq/nudge_analysis.hpp"
#include "nudgeq/simulator.hpp"

namespace nudgeq::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct ThresholdSpec {
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
    bool log = true;

    std::vector<double> values() const;
};

struct ExperimentConfig {
    JobSizeDistribution dist = JobSizeDistribution::exponential(1.0);
    std::optional<double> lambda;
    std::optional<double> rho;
    NudgeParams params{1.0, 1.0, INFINITY};
    std::vector<sim::Policy> policies{sim::Policy::fcfs(), sim::Policy::nudge({1.0, 1.0, INFINITY})};
    std::uint64_t n_arrivals = 100'000'000;
    std::uint64_t seed = 1;
    std::uint32_t replications = 1;
    std::optional<std::uint64_t> warmup;
    std::optional<ThresholdSpec> thresholds;  // default: 200 log points from E[S] to the 1e-5 quantile
    std::string out_dir = "out";

    double resolved_lambda() const;
    sim::SimConfig sim_config(const sim::Policy& policy) const;
};

/// Throws ConfigError for unknown keys, bad types or violated invariants.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
/// Fully resolved form; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& c);

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> arrivals;
    std::optional<std::uint32_t> replications;
    std::optional<std::string> out_dir;

    void apply(ExperimentConfig& c) const;
};

/// Regime report; returns 0 when the asymptotic condition holds, 2 when not, 1 on error.
int cmd_check(const ExperimentConfig& c, std::ostream& out, std::ostream& err);

/// Simulates every listed policy and writes CSVs, manifest.json and summary.txt under out_dir.
/// Removes what it wrote if anything fails.
void cmd_run(const ExperimentConfig& c, std::ostream& log);

struct FigureSeries {
    std::string id;
    std::string group;
    JobSizeDistribution dist;
    double rho = 0.0;
    NudgeParams params;
};

/// Series for "fig2", "fig3" or "fig4"; throws ConfigError otherwise.
std::vector<FigureSeries> figure_series(const std::string& name);
void cmd_figure(const std::string& name, const Overrides& o, std::ostream& log);

struct Table1Row {
    std::string name;
    JobSizeDistribution dist;
    std::vector<double> x1;
    std::vector<bool> expected_improves;
};

std::vector<Table1Row> table1_rows();

struct Table1Cell {
    std::string distribution;
    double x1 = 0.0;
    double asym_tir = 0.0;
    bool analytic_improves = false;
    bool simulated_improves = false;
    std::size_t n_thresholds = 0;
    double tir_largest = 0.0;
    double ci_low_largest = 0.0;
    double ci_high_largest = 0.0;

    bool agree() const { return analytic_improves == simulated_improves; }
};

/*
 * Stochastic-improvement verdict on a TIR curve. Points count when both
 * tails hold at least 100 samples; "improved" means no such point has its
 * band entirely below zero and the TIR at the largest one is positive.
 */
bool stochastic_verdict(const sim::TirCurve& curve);

Table1Cell table1_cell(const Table1Row& row, std::size_t k, std::uint64_t n_arrivals, std::uint64_t seed,
                       std::uint32_t replications, kernels::ExecutionMode mode = kernels::ExecutionMode::parallel);
void cmd_table1(const Overrides& o, std::ostream& log);

/// Thresholds for a TIR export from the FCFS reference tail.
std::vector<std::size_t> resolve_thresholds(const ExperimentConfig& c, const sim::TailCounter& reference);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
    /// Numeric cell; "NA" is NaN, "inf"/"-inf" are infinities.
    double number(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

} // namespace nudgeq::cli
