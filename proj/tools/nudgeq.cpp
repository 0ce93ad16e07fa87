#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nudgeq/errors.hpp"
#include "nudgeq/experiments.hpp"

using namespace nudgeq;

int main(int argc, char** argv)
{
    CLI::App app{"Nudge vs FCFS scheduling for M/G/1: regime checks, coupled simulation, figure and table CSVs"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed, arrivals;
    std::optional<std::uint32_t> replications;
    std::optional<std::string> out_dir;
    app.add_option("--config", config_path, "experiment config (JSON)");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--arrivals", arrivals, "arrivals per replication");
    app.add_option("--replications", replications, "independent replications");
    app.add_option("--out-dir", out_dir, "output directory");

    auto* check = app.add_subcommand("check", "analytic regime report; exit 0 if asymptotic improvement, 2 if not");
    auto* run = app.add_subcommand("run", "simulate the configured policies and write CSVs");
    auto* figure = app.add_subcommand("figure", "TIR curve sets: fig2, fig3 or fig4");
    std::string figure_name;
    figure->add_option("name", figure_name, "fig2 | fig3 | fig4")->required();
    auto* table1 = app.add_subcommand("table1", "x1 sign grid over five laws: analytic sign vs simulated verdict");
    for (auto* sub : {check, run, figure, table1}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    const cli::Overrides overrides{seed, arrivals, replications, out_dir};
    try {
        if (*check || *run) {
            if (config_path.empty()) {
                std::cerr << "error: --config is required for this command\n";
                return 1;
            }
            auto config = cli::load_config(config_path);
            overrides.apply(config);
            if (*check) return cli::cmd_check(config, std::cout, std::cerr);
            cli::cmd_run(config, std::cerr);
        } else if (*figure) {
            cli::cmd_figure(figure_name, overrides, std::cerr);
        } else if (*table1) {
            cli::cmd_table1(overrides, std::cerr);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
