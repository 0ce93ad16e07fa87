#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "nudgeq/errors.hpp"
#include "nudgeq/experiments.hpp"

using namespace nudgeq;
using namespace nudgeq::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ostringstream quiet;

json exp_config(double rho, double x1)
{
    return {{"distribution", {{"family", "exponential"}, {"rate", 1.0}}},
            {"rho", rho},
            {"params", {{"x1", x1}, {"x2", x1}, {"x3", "inf"}}},
            {"n_arrivals", 60000},
            {"seed", 5}};
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("nudgeq_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(NUDGEQ_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

} // namespace

TEST_CASE("config parsing and defaults")
{
    json j = {{"distribution", {{"family", "uniform"}, {"lo", 0.0}, {"hi", 2.0}}}, {"lambda", 0.5}};
    const auto c = parse_config(j);
    CHECK(c.resolved_lambda() == 0.5);
    CHECK(c.params.x1 == 1.0);
    CHECK(c.params.x2 == 1.0);
    CHECK(std::isinf(c.params.x3));
    REQUIRE(c.policies.size() == 2);
    CHECK(c.policies[0].kind == sim::PolicyKind::fcfs);
    CHECK(c.policies[1].label() == "nudge(1,1,inf)");
    CHECK(c.n_arrivals == 100'000'000);
    CHECK_FALSE(c.thresholds);

    json both = j;
    both["rho"] = 0.5;
    CHECK_THROWS_AS(parse_config(both), ConfigError);
    json none = j;
    none.erase("lambda");
    CHECK_THROWS_AS(parse_config(none), ConfigError);
    json extra = j;
    extra["colour"] = "blue";
    CHECK_THROWS_AS(parse_config(extra), ConfigError);
    json unstable = j;
    unstable["lambda"] = 1.2;
    CHECK_THROWS_AS(parse_config(unstable), StabilityError);
    json bad_params = j;
    bad_params["params"] = {{"x1", 2}, {"x2", 1}};
    CHECK_THROWS_AS(parse_config(bad_params), ConfigError);
    json bad_t = j;
    bad_t["thresholds"] = {{"min", 5}, {"max", 1}, {"count", 10}};
    CHECK_THROWS_AS(parse_config(bad_t), ConfigError);
    bad_t["thresholds"] = {{"min", 1}, {"max", 5}, {"count", 10}, {"spacing", "cubic"}};
    CHECK_THROWS_AS(parse_config(bad_t), ConfigError);
    json bad_pol = j;
    bad_pol["policies"] = {"srpt"};
    CHECK_THROWS_AS(parse_config(bad_pol), ConfigError);

    json full = j;
    full["policies"] = json::array({"fcfs", {{"policy", "nudge_budget"}, {"k", 2}}, {{"policy", "nudge_prob"}, {"p", 0.25}}});
    full["thresholds"] = {{"min", 0.0}, {"max", 10.0}, {"count", 11}, {"spacing", "linear"}};
    full["warmup"] = 1000;
    const auto f = parse_config(full);
    CHECK(f.policies[1].budget == 2);
    CHECK(f.policies[2].prob == 0.25);
    CHECK(f.thresholds->values()[3] == doctest::Approx(3.0));
    const auto again = parse_config(to_json(f));
    CHECK(to_json(again) == to_json(f));
    CHECK(to_json(again)["params"]["x3"] == "inf");
}

TEST_CASE("check command statuses")
{
    std::ostringstream out, err;
    CHECK(cmd_check(parse_config(exp_config(0.4, 1.0)), out, err) == 0);
    CHECK(out.str().find("asym_condition=true\n") != std::string::npos);
    std::ostringstream out2;
    CHECK(cmd_check(parse_config(exp_config(0.4, 8.0)), out2, err) == 2);
    CHECK(out2.str().find("asym_condition=false\n") != std::string::npos);
    auto c = parse_config(exp_config(0.4, 1.0));
    c.params = {0.0, 0.0, INFINITY};
    std::ostringstream err3;
    CHECK(cmd_check(c, out, err3) == 1);
    CHECK(err3.str().rfind("error: ", 0) == 0);
}

TEST_CASE("run command outputs")
{
    const auto dir = scratch("run");
    auto j = exp_config(0.8, 1.0);
    j["out_dir"] = (dir / "a").string();
    cmd_run(parse_config(j), quiet);
    j["out_dir"] = (dir / "b").string();
    cmd_run(parse_config(j), quiet);
    for (const char* f : {"tir.csv", "summary.txt", "manifest.json"}) {
        CAPTURE(f);
        REQUIRE(fs::exists(dir / "a" / f));
        if (std::string(f) != "manifest.json") CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    const auto manifest = json::parse(slurp(dir / "a" / "manifest.json"));
    CHECK(manifest["version"] == kToolVersion);
    CHECK(parse_config(manifest["config"]).seed == 5);

    // reader round trip
    const auto t = read_csv_file((dir / "a" / "tir.csv").string());
    CHECK(t.header.size() == 8);
    CHECK(t.rows.size() > 50);
    const auto cfg = parse_config(j);
    const auto o = sim::coupled_run(cfg.sim_config(cfg.policies[1]));
    const auto curve = sim::tir_paired(o.fcfs.tails, o.nudge.tails, o.events, resolve_thresholds(cfg, o.fcfs.tails));
    REQUIRE(curve.thresholds.size() == t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        CHECK(t.number(r, "t") == curve.thresholds[r]);
        CHECK(t.number(r, "tail_nudge") == curve.tail_b[r]);
        if (curve.defined[r]) CHECK(t.number(r, "ci_high") == curve.ci_high[r]);
        CHECK(t.number(r, "n_tail_fcfs") == static_cast<double>(curve.n_tail_a[r]));
    }
    std::ostringstream rewritten;
    sim::write_tir_csv(curve, rewritten);
    CHECK(rewritten.str() == slurp(dir / "a" / "tir.csv"));

    // fcfs only: no TIR columns
    j["policies"] = {"fcfs"};
    j["out_dir"] = (dir / "c").string();
    j["thresholds"] = {{"min", 1}, {"max", 20}, {"count", 30}};
    cmd_run(parse_config(j), quiet);
    CHECK_FALSE(fs::exists(dir / "c" / "tir.csv"));
    const auto tail = read_csv_file((dir / "c" / "tail.csv").string());
    CHECK(tail.header == std::vector<std::string>{"t", "tail_fcfs", "n_tail_fcfs"});
    CHECK(tail.rows.size() == 30);

    // several nudge-family policies get numbered files
    j["policies"] = json::array({"nudge", {{"policy", "nudge_prob"}, {"p", 0.5}}});
    j["out_dir"] = (dir / "d").string();
    cmd_run(parse_config(j), quiet);
    CHECK(fs::exists(dir / "d" / "tir_1.csv"));
    CHECK(fs::exists(dir / "d" / "tir_2.csv"));
}

TEST_CASE("failed runs leave no partial output")
{
    const auto dir = scratch("partial");
    fs::create_directories(dir / "out" / "summary.txt");  // a directory where a file must go
    auto j = exp_config(0.8, 1.0);
    j["out_dir"] = (dir / "out").string();
    CHECK_THROWS_WITH_AS(cmd_run(parse_config(j), quiet), doctest::Contains("summary.txt"), std::runtime_error);
    CHECK_FALSE(fs::exists(dir / "out" / "tir.csv"));
}

TEST_CASE("figure and table definitions")
{
    const auto f2 = figure_series("fig2");
    REQUIRE(f2.size() == 4);
    CHECK(f2[2].dist.scv() == doctest::Approx(3.0));
    for (const auto& s : f2) {
        CHECK(s.rho == 0.8);
        CHECK(s.dist.mean() == doctest::Approx(1.0));
    }
    const auto f3 = figure_series("fig3");
    REQUIRE(f3.size() == 5);
    bool finite_x3 = false, split = false;
    for (const auto& s : f3) {
        finite_x3 = finite_x3 || std::isfinite(s.params.x3);
        split = split || s.params.x1 != s.params.x2;
    }
    CHECK(finite_x3);
    CHECK(split);
    const auto f4 = figure_series("fig4");
    REQUIRE(f4.size() == 8);
    for (const auto& s : f4) {
        CAPTURE(s.id);
        CHECK(s.rho == 0.4);
        CHECK(s.dist.mean() == doctest::Approx(1.0).epsilon(1e-9));
        if (s.group == "high_variance") {
            CHECK(s.dist.scv() >= 2.0 - 1e-9);
            CHECK(s.params.x1 == 1.0);
        } else {
            CHECK(s.dist.scv() <= 0.5 + 1e-9);
            CHECK(s.params.x1 == 0.2);
        }
    }
    CHECK_THROWS_AS(figure_series("fig9"), ConfigError);

    const auto rows = table1_rows();
    REQUIRE(rows.size() == 5);
    for (const auto& r : rows) {
        CHECK(r.x1.size() == 5);
        CHECK(r.expected_improves.size() == 5);
    }
}

TEST_CASE("verdict rule")
{
    sim::TirCurve c;
    auto add = [&](double tir, double half, std::uint64_t n) {
        c.tir.push_back(tir);
        c.ci_low.push_back(tir - half);
        c.ci_high.push_back(tir + half);
        c.defined.push_back(true);
        c.n_tail_a.push_back(n);
        c.n_tail_b.push_back(n);
    };
    add(0.01, 0.02, 10000);
    add(0.03, 0.02, 1000);
    add(-0.5, 0.1, 50);  // too few samples to count
    CHECK(stochastic_verdict(c));
    add(-0.01, 0.02, 500);  // last counted point not positive
    CHECK_FALSE(stochastic_verdict(c));
    c.tir.back() = 0.02;
    c.ci_high.back() = 0.04;
    CHECK(stochastic_verdict(c));
    c.ci_high[0] = -0.001;  // significantly worse somewhere
    CHECK_FALSE(stochastic_verdict(c));
    CHECK_FALSE(stochastic_verdict(sim::TirCurve{}));
}

TEST_CASE("figure and table commands at smoke scale")
{
    const auto dir = scratch("fig");
    Overrides o;
    o.arrivals = 30000;
    o.out_dir = (dir / "fig2").string();
    cmd_figure("fig2", o, quiet);
    const auto idx = read_csv_file((dir / "fig2" / "index.csv").string());
    REQUIRE(idx.rows.size() == 4);
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(fs::exists(dir / "fig2" / idx.rows[r][idx.column("file")]));
        CHECK(idx.number(r, "asym_tir") > 0.0);
    }
    const auto rows = table1_rows();
    const auto cell = table1_cell(rows[0], 1, 50000, 3, 1);
    CHECK(cell.analytic_improves);
    CHECK(cell.asym_tir == doctest::Approx(0.0437).epsilon(1e-3));
    CHECK(cell.n_thresholds > 10);
}

TEST_CASE("command-line front end")
{
    const auto dir = scratch("cli");
    auto write = [&](const std::string& name, const json& j) {
        std::ofstream(dir / name) << j.dump();
        return (dir / name).string();
    };
    const auto good = write("good.json", exp_config(0.4, 1.0));
    const auto bad = write("bad.json", exp_config(0.4, 8.0));
    auto unstable_j = exp_config(0.4, 1.0);
    unstable_j["rho"] = 1.2;
    const auto unstable = write("unstable.json", unstable_j);
    CHECK(run_cli("check --config " + good) == 0);
    CHECK(run_cli("check --config " + bad) == 2);
    CHECK(run_cli("check --config " + unstable) == 1);
    CHECK(run_cli("check --config " + (dir / "missing.json").string()) == 1);
    CHECK(run_cli("check") == 1);

    const std::string out1 = (dir / "r1").string(), out2 = (dir / "r2").string();
    CHECK(run_cli("run --config " + good + " --arrivals 40000 --seed 9 --out-dir " + out1) == 0);
    CHECK(run_cli("--config " + good + " --arrivals 40000 --seed 9 --out-dir " + out2 + " run") == 0);
    CHECK(slurp(fs::path(out1) / "tir.csv") == slurp(fs::path(out2) / "tir.csv"));
    const auto m = json::parse(slurp(fs::path(out1) / "manifest.json"));
    CHECK(m["config"]["n_arrivals"] == 40000);
    CHECK(m["config"]["seed"] == 9);
    CHECK(run_cli("figure fig7 --arrivals 1000") == 1);
}
