#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spheroid/data.hpp"
#include "spheroid/inference.hpp"

namespace spheroid::cli {

// Flat, typed run configuration. Every field is validated against the owning
// module's preconditions before any computation; precedence is
// command-line flags > config file > defaults.
struct RunConfig {
    // priors
    std::string cell_line = "custom";
    std::optional<PriorSpec> custom_prior;

    // discretization
    int particles = 200;
    std::optional<double> r_max;  // infer default: 3x largest observed radius
    double time_step = 0.01;
    int q_exponent = 13;
    std::optional<double> sigma_tilde_ratio;  // default per cell line

    // quantile
    double quantile_level = 0.95;
    bool regularize = false;
    double epsilon = 1e-3;

    // mcmc
    std::size_t iterations = 450000;
    std::size_t burn_in = 50000;
    std::uint64_t seed = 1;
    double initial_step_size = 0.1;
    double target_acceptance = 0.23;
    int chains = 1;
    std::size_t predictive_draws = 200;
    std::size_t max_lag = 200;

    // io
    std::string data_path;
    LengthUnit unit = LengthUnit::diameter;
    std::optional<std::pair<double, double>> window;
    std::string out_dir = "out";

    // explicit theta (simulate / converge)
    std::optional<double> alpha;
    std::optional<double> sigma_k;
    std::optional<double> sigma_o;
    std::optional<double> sigma_i;
    double horizon_days = 30.0;
    double output_interval_days = 0.5;
    bool dump_states = false;

    // converge
    std::vector<int> particle_counts;

    // diagnose
    std::string chain_path;

    DiscretizationConfig discretization() const;  // requires r_max resolved
    QuantileConfig quantile() const;
    McmcOptions mcmc() const;
    PriorSpec prior() const;
    ModelParams explicit_theta() const;  // throws naming the missing field
    double resolved_sigma_tilde_ratio() const;
};

// Optional command-line overrides, applied on top of the config file.
struct Overrides {
    std::optional<std::string> cell_line;
    std::optional<std::string> data_path;
    std::optional<std::string> out_dir;
    std::optional<std::string> unit;
    std::optional<std::string> window;  // "T0:T1"
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> burn_in;
    std::optional<int> particles;
    std::optional<double> r_max;
    std::optional<double> time_step;
    std::optional<double> alpha;
    std::optional<double> sigma_k;
    std::optional<double> sigma_o;
    std::optional<double> sigma_i;
    std::optional<double> horizon_days;
    std::optional<std::string> particle_counts;  // comma-separated
    std::optional<std::string> chain_path;
    std::optional<int> chains;
};

RunConfig parse_config_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);  // accepts a manifest too
void apply_overrides(RunConfig& cfg, const Overrides& ov);
nlohmann::json config_to_json(const RunConfig& cfg);

// Commands. Each writes its declared outputs plus manifest.json under
// cfg.out_dir, removes partial outputs on failure, and returns 0 only when
// every output was written and validated.
int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_infer(const RunConfig& cfg, std::ostream& log);
int cmd_converge(const RunConfig& cfg, std::ostream& log);
int cmd_diagnose(const RunConfig& cfg, std::ostream& log);

}  // namespace spheroid::cli
