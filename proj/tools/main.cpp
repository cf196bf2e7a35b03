#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spheroid/cli.hpp"

namespace cli = spheroid::cli;

namespace {

struct CommonArgs {
    std::optional<std::string> config_path;
    cli::Overrides ov;
};

void add_common(CLI::App* app, CommonArgs& a) {
    app->add_option("--config", a.config_path, "JSON config file (a manifest also works)");
    app->add_option("--seed", a.ov.seed, "RNG seed");
    app->add_option("--out", a.ov.out_dir, "output directory");
    app->add_option("--cell-line", a.ov.cell_line, "L-5178Y, V-79, B-16 or custom");
    app->add_option("--data", a.ov.data_path, "dataset CSV (time_day,value_mm)");
    app->add_option("--unit", a.ov.unit, "diameter or radius");
    app->add_option("--window", a.ov.window, "time window T0:T1 [day]");
    app->add_option("--iterations", a.ov.iterations, "MCMC iterations");
    app->add_option("--burn-in", a.ov.burn_in, "burn-in iterations");
    app->add_option("--particles", a.ov.particles, "particle count N");
    app->add_option("--r-max", a.ov.r_max, "grid end R0 [mm]");
    app->add_option("--time-step", a.ov.time_step, "RK4 step [day]");
    app->add_option("--alpha", a.ov.alpha, "proliferation rate [1/day]");
    app->add_option("--sigma-k", a.ov.sigma_k, "kernel radius [mm]");
    app->add_option("--sigma-o", a.ov.sigma_o, "observation noise SD");
    app->add_option("--sigma-i", a.ov.sigma_i, "initial colony radius [mm]");
    app->add_option("--horizon", a.ov.horizon_days, "simulation horizon [day]");
    app->add_option("--counts", a.ov.particle_counts, "comma-separated particle counts");
    app->add_option("--chain", a.ov.chain_path, "existing chain CSV (diagnose)");
    app->add_option("--chains", a.ov.chains, "number of concurrent chains");
}

cli::RunConfig resolve(const CommonArgs& a) {
    cli::RunConfig cfg;
    if (a.config_path) cfg = cli::load_config(*a.config_path);
    cli::apply_overrides(cfg, a.ov);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-local spheroid growth: particle solver and Bayesian calibration"};
    app.require_subcommand(1);

    CommonArgs sim_args, inf_args, conv_args, diag_args;
    CLI::App* sim = app.add_subcommand("simulate", "forward run at explicit parameters");
    add_common(sim, sim_args);
    CLI::App* inf = app.add_subcommand("infer", "Metropolis-Hastings calibration on a dataset");
    add_common(inf, inf_args);
    CLI::App* conv = app.add_subcommand("converge", "particle-count convergence study");
    add_common(conv, conv_args);
    CLI::App* diag = app.add_subcommand("diagnose", "re-run diagnostics on an existing chain");
    add_common(diag, diag_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cli::cmd_simulate(resolve(sim_args), std::cout);
        if (inf->parsed()) return cli::cmd_infer(resolve(inf_args), std::cout);
        if (conv->parsed()) return cli::cmd_converge(resolve(conv_args), std::cout);
        if (diag->parsed()) return cli::cmd_diagnose(resolve(diag_args), std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
