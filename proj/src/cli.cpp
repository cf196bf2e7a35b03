#include "spheroid/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <ostream>
#include <set>
#include <sstream>

#include "spheroid/format.hpp"
#include "spheroid/measures.hpp"

namespace fs = std::filesystem;

namespace spheroid::cli {

DiscretizationConfig RunConfig::discretization() const {
    if (!r_max) throw std::invalid_argument("config field r_max is required but missing");
    DiscretizationConfig d;
    d.n_particles = particles;
    d.r_max = *r_max;
    d.q_exponent = q_exponent;
    d.sigma_tilde_ratio = resolved_sigma_tilde_ratio();
    d.time_step = time_step;
    d.validate();
    return d;
}

QuantileConfig RunConfig::quantile() const {
    QuantileConfig q{quantile_level, regularize, epsilon};
    q.validate();
    return q;
}

McmcOptions RunConfig::mcmc() const {
    McmcOptions m{iterations, burn_in, seed, initial_step_size, target_acceptance};
    m.validate();
    return m;
}

PriorSpec RunConfig::prior() const {
    if (custom_prior) {
        custom_prior->validate();
        return *custom_prior;
    }
    if (!is_builtin_cell_line(cell_line))
        throw std::invalid_argument(
            "config: cell_line '" + cell_line +
            "' has no builtin priors; supply the prior_* fields or a known cell line");
    return builtin_priors(cell_line);
}

ModelParams RunConfig::explicit_theta() const {
    if (!alpha) throw std::invalid_argument("config field alpha is required but missing");
    if (!sigma_k) throw std::invalid_argument("config field sigma_k is required but missing");
    if (!sigma_i) throw std::invalid_argument("config field sigma_i is required but missing");
    // sigma_o does not enter the forward model; default to 1 when absent
    return ModelParams::from_natural(*alpha, *sigma_k, sigma_o.value_or(1.0), *sigma_i);
}

double RunConfig::resolved_sigma_tilde_ratio() const {
    if (sigma_tilde_ratio) return *sigma_tilde_ratio;
    return default_sigma_tilde_ratio(cell_line);
}

namespace {

const std::set<std::string> kKnownKeys = {
    "cell_line", "prior_alpha_location", "prior_alpha_scale", "prior_sigma_k_location",
    "prior_sigma_k_scale", "prior_sigma_o_location", "prior_sigma_o_scale",
    "prior_sigma_i_location", "prior_sigma_i_scale", "particles", "r_max", "time_step", "q",
    "sigma_tilde_ratio", "quantile_level", "regularize", "epsilon", "iterations", "burn_in",
    "seed", "initial_step_size", "target_acceptance", "chains", "predictive_draws", "max_lag",
    "data", "unit", "window_start", "window_end", "out", "alpha", "sigma_k", "sigma_o",
    "sigma_i", "horizon_days", "output_interval_days", "dump_states", "particle_counts",
    "chain"};

LengthUnit parse_unit(const std::string& s) {
    if (s == "radius") return LengthUnit::radius;
    if (s == "diameter") return LengthUnit::diameter;
    throw std::invalid_argument("config field unit must be 'radius' or 'diameter', got '" + s +
                                "'");
}

std::pair<double, double> parse_window(const std::string& s) {
    const auto parts = split(s, ':');
    if (parts.size() != 2)
        throw std::invalid_argument("window must have the form T0:T1, got '" + s + "'");
    const auto a = parse_double(parts[0]);
    const auto b = parse_double(parts[1]);
    if (!a || !b) throw std::invalid_argument("window must have the form T0:T1, got '" + s + "'");
    if (!(*a < *b)) throw std::invalid_argument("window start must precede window end");
    return {*a, *b};
}

}  // namespace

RunConfig parse_config_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kKnownKeys.contains(key))
            throw std::invalid_argument("config: unknown key '" + key + "'");

    RunConfig c;
    auto get = [&](const char* key, auto& out) {
        if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
    };
    get("cell_line", c.cell_line);
    get("particles", c.particles);
    if (j.contains("r_max")) c.r_max = j.at("r_max").get<double>();
    get("time_step", c.time_step);
    get("q", c.q_exponent);
    if (j.contains("sigma_tilde_ratio"))
        c.sigma_tilde_ratio = j.at("sigma_tilde_ratio").get<double>();
    get("quantile_level", c.quantile_level);
    get("regularize", c.regularize);
    get("epsilon", c.epsilon);
    get("iterations", c.iterations);
    get("burn_in", c.burn_in);
    get("seed", c.seed);
    get("initial_step_size", c.initial_step_size);
    get("target_acceptance", c.target_acceptance);
    get("chains", c.chains);
    get("predictive_draws", c.predictive_draws);
    get("max_lag", c.max_lag);
    get("data", c.data_path);
    if (j.contains("unit")) c.unit = parse_unit(j.at("unit").get<std::string>());
    if (j.contains("window_start") != j.contains("window_end"))
        throw std::invalid_argument("config: window_start and window_end must come together");
    if (j.contains("window_start"))
        c.window = {j.at("window_start").get<double>(), j.at("window_end").get<double>()};
    get("out", c.out_dir);
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("sigma_k")) c.sigma_k = j.at("sigma_k").get<double>();
    if (j.contains("sigma_o")) c.sigma_o = j.at("sigma_o").get<double>();
    if (j.contains("sigma_i")) c.sigma_i = j.at("sigma_i").get<double>();
    get("horizon_days", c.horizon_days);
    get("output_interval_days", c.output_interval_days);
    get("dump_states", c.dump_states);
    if (j.contains("particle_counts"))
        c.particle_counts = j.at("particle_counts").get<std::vector<int>>();
    get("chain", c.chain_path);

    const bool any_prior = j.contains("prior_alpha_location");
    if (any_prior) {
        PriorSpec p;
        auto field = [&](const char* key) {
            if (!j.contains(key))
                throw std::invalid_argument(std::string("config: custom prior requires ") + key);
            return j.at(key).get<double>();
        };
        p.alpha = {field("prior_alpha_location"), field("prior_alpha_scale")};
        p.sigma_k = {field("prior_sigma_k_location"), field("prior_sigma_k_scale")};
        p.sigma_o = {field("prior_sigma_o_location"), field("prior_sigma_o_scale")};
        p.sigma_i = {field("prior_sigma_i_location"), field("prior_sigma_i_scale")};
        p.validate();
        c.custom_prior = p;
    }
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file " + path.string());
    nlohmann::json j = nlohmann::json::parse(f);
    // a manifest wraps the config under "config"
    if (j.is_object() && j.contains("config")) j = j.at("config");
    return parse_config_json(j);
}

void apply_overrides(RunConfig& c, const Overrides& ov) {
    if (ov.cell_line) c.cell_line = *ov.cell_line;
    if (ov.data_path) c.data_path = *ov.data_path;
    if (ov.out_dir) c.out_dir = *ov.out_dir;
    if (ov.unit) c.unit = parse_unit(*ov.unit);
    if (ov.window) c.window = parse_window(*ov.window);
    if (ov.seed) c.seed = *ov.seed;
    if (ov.iterations) c.iterations = *ov.iterations;
    if (ov.burn_in) c.burn_in = *ov.burn_in;
    if (ov.particles) c.particles = *ov.particles;
    if (ov.r_max) c.r_max = *ov.r_max;
    if (ov.time_step) c.time_step = *ov.time_step;
    if (ov.alpha) c.alpha = *ov.alpha;
    if (ov.sigma_k) c.sigma_k = *ov.sigma_k;
    if (ov.sigma_o) c.sigma_o = *ov.sigma_o;
    if (ov.sigma_i) c.sigma_i = *ov.sigma_i;
    if (ov.horizon_days) c.horizon_days = *ov.horizon_days;
    if (ov.chains) c.chains = *ov.chains;
    if (ov.chain_path) c.chain_path = *ov.chain_path;
    if (ov.particle_counts) {
        c.particle_counts.clear();
        for (const auto& tok : split(*ov.particle_counts, ',')) {
            const auto v = parse_double(tok);
            if (!v || *v != std::floor(*v) || *v < 2)
                throw std::invalid_argument("particle counts must be integers >= 2");
            c.particle_counts.push_back(static_cast<int>(*v));
        }
    }
}

nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["cell_line"] = c.cell_line;
    j["particles"] = c.particles;
    if (c.r_max) j["r_max"] = *c.r_max;
    j["time_step"] = c.time_step;
    j["q"] = c.q_exponent;
    j["sigma_tilde_ratio"] = c.resolved_sigma_tilde_ratio();
    j["quantile_level"] = c.quantile_level;
    j["regularize"] = c.regularize;
    j["epsilon"] = c.epsilon;
    j["iterations"] = c.iterations;
    j["burn_in"] = c.burn_in;
    j["seed"] = c.seed;
    j["initial_step_size"] = c.initial_step_size;
    j["target_acceptance"] = c.target_acceptance;
    j["chains"] = c.chains;
    j["predictive_draws"] = c.predictive_draws;
    j["max_lag"] = c.max_lag;
    if (!c.data_path.empty()) j["data"] = c.data_path;
    j["unit"] = c.unit == LengthUnit::diameter ? "diameter" : "radius";
    if (c.window) {
        j["window_start"] = c.window->first;
        j["window_end"] = c.window->second;
    }
    j["out"] = c.out_dir;
    if (c.alpha) j["alpha"] = *c.alpha;
    if (c.sigma_k) j["sigma_k"] = *c.sigma_k;
    if (c.sigma_o) j["sigma_o"] = *c.sigma_o;
    if (c.sigma_i) j["sigma_i"] = *c.sigma_i;
    j["horizon_days"] = c.horizon_days;
    j["output_interval_days"] = c.output_interval_days;
    j["dump_states"] = c.dump_states;
    if (!c.particle_counts.empty()) j["particle_counts"] = c.particle_counts;
    if (!c.chain_path.empty()) j["chain"] = c.chain_path;
    if (c.custom_prior) {
        j["prior_alpha_location"] = c.custom_prior->alpha.location;
        j["prior_alpha_scale"] = c.custom_prior->alpha.scale;
        j["prior_sigma_k_location"] = c.custom_prior->sigma_k.location;
        j["prior_sigma_k_scale"] = c.custom_prior->sigma_k.scale;
        j["prior_sigma_o_location"] = c.custom_prior->sigma_o.location;
        j["prior_sigma_o_scale"] = c.custom_prior->sigma_o.scale;
        j["prior_sigma_i_location"] = c.custom_prior->sigma_i.location;
        j["prior_sigma_i_scale"] = c.custom_prior->sigma_i.scale;
    }
    return j;
}

namespace {

// Declared command outputs: written one by one, removed together on failure,
// verified present and non-empty before the command reports success.
class OutputSet {
public:
    explicit OutputSet(const fs::path& dir) : dir_(dir) { fs::create_directories(dir); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void write(const std::string& name, const std::function<void(std::ostream&)>& fn) {
        const fs::path p = path(name);
        std::ofstream f(p);
        if (!f) throw std::runtime_error("cannot open output file " + p.string());
        fn(f);
        f.flush();
        if (!f) throw std::runtime_error("failed while writing " + p.string());
        written_.push_back(p);
    }

    void rollback() {
        for (const fs::path& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        written_.clear();
    }

    void verify() const {
        for (const fs::path& p : written_)
            if (!fs::exists(p) || fs::file_size(p) == 0)
                throw std::runtime_error("declared output missing or empty: " + p.string());
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const fs::path& p : written_) out.push_back(p.filename().string());
        return out;
    }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

void write_manifest(OutputSet& outputs, const std::string& command, const RunConfig& resolved,
                    const nlohmann::json& extra) {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config_to_json(resolved);
    j["outputs"] = outputs.names();
    for (const auto& [k, v] : extra.items()) j[k] = v;
    outputs.write("manifest.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

std::vector<double> output_times(double horizon, double interval) {
    if (!(horizon >= 0.0)) throw std::invalid_argument("horizon_days must be >= 0");
    if (!(interval > 0.0)) throw std::invalid_argument("output_interval_days must be > 0");
    std::vector<double> times{0.0};
    for (double t = interval; t < horizon + 1e-12; t += interval) times.push_back(std::min(t, horizon));
    return times;
}

bool tail_check(const DiscreteMeasure& final_state, double r_max) {
    const double tv = tv_norm(final_state);
    return tail_mass(final_state, 0.9 * r_max) < 1e-6 * tv;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    RunConfig resolved = cfg;
    const ModelParams theta = resolved.explicit_theta();
    const DiscretizationConfig disc = resolved.discretization();
    const QuantileConfig qcfg = resolved.quantile();
    const std::vector<double> times =
        output_times(resolved.horizon_days, resolved.output_interval_days);

    OutputSet outputs(resolved.out_dir);
    try {
        const DiscreteMeasure initial = initial_masses(theta, disc);
        const Trajectory traj = integrate(initial, theta, disc, times, qcfg);

        outputs.write("trajectory.csv",
                      [&](std::ostream& os) { write_trajectory_csv(os, traj); });
        outputs.write("diameter_curve.csv", [&](std::ostream& os) {
            os << "time_day,diameter_mm\n";
            for (std::size_t k = 0; k < traj.times.size(); ++k)
                os << format_double(traj.times[k]) << ',' << format_double(2.0 * traj.radii[k])
                   << '\n';
        });
        if (resolved.dump_states) {
            for (std::size_t k = 0; k < traj.states.size(); ++k) {
                char name[32];
                std::snprintf(name, sizeof(name), "state_%04zu.csv", k);
                outputs.write(name,
                              [&](std::ostream& os) { write_state_csv(os, traj.states[k]); });
            }
        }
        const bool tail_ok = tail_check(traj.states.back(), disc.r_max);
        if (!tail_ok)
            log << "warning: mass near the grid end exceeds 1e-6 of total; increase r_max\n";
        write_manifest(outputs, "simulate", resolved, {{"tail_check_passed", tail_ok}});
        outputs.verify();
    } catch (...) {
        outputs.rollback();
        throw;
    }
    log << "wrote " << outputs.names().size() << " files to " << resolved.out_dir << "\n";
    return 0;
}

int cmd_infer(const RunConfig& cfg, std::ostream& log) {
    RunConfig resolved = cfg;
    if (resolved.data_path.empty())
        throw std::invalid_argument("config field data is required but missing");
    LoadOptions lo{resolved.unit, resolved.window, resolved.cell_line};
    const Dataset data = load_dataset(resolved.data_path, lo);
    if (data.observations.empty())
        throw std::invalid_argument("dataset is empty after window selection");

    if (!resolved.r_max) {
        double rmax_obs = 0.0;
        for (const Observation& o : data.observations) rmax_obs = std::max(rmax_obs, o.radius);
        resolved.r_max = 3.0 * rmax_obs;
    }
    const DiscretizationConfig disc = resolved.discretization();
    const QuantileConfig qcfg = resolved.quantile();
    const PriorSpec prior = resolved.prior();
    const McmcOptions base_opts = resolved.mcmc();
    if (resolved.chains < 1) throw std::invalid_argument("config field chains must be >= 1");

    OutputSet outputs(resolved.out_dir);
    try {
        std::vector<Chain> chains(static_cast<std::size_t>(resolved.chains));
        {
            std::vector<std::future<Chain>> futs;
            for (int c = 0; c < resolved.chains; ++c) {
                McmcOptions opts = base_opts;
                opts.seed = base_opts.seed + static_cast<std::uint64_t>(c);
                futs.push_back(std::async(std::launch::async, [&, opts]() {
                    return run_chain(data, prior, disc, qcfg, opts);
                }));
            }
            for (int c = 0; c < resolved.chains; ++c)
                chains[static_cast<std::size_t>(c)] = futs[static_cast<std::size_t>(c)].get();
        }

        const std::size_t retained = base_opts.iterations - base_opts.burn_in;
        const std::size_t lag = std::min(resolved.max_lag, retained - 1);
        if (resolved.chains == 1) {
            outputs.write("chain.csv",
                          [&](std::ostream& os) { write_chain_csv(os, chains[0]); });
            const Diagnostics d = diagnostics(chains[0], lag);
            outputs.write("diagnostics.json",
                          [&](std::ostream& os) { write_diagnostics_json(os, d); });
            log << "acceptance rate " << d.acceptance_rate << "\n";
        } else {
            for (int c = 0; c < resolved.chains; ++c) {
                outputs.write("chain_" + std::to_string(c) + ".csv", [&](std::ostream& os) {
                    write_chain_csv(os, chains[static_cast<std::size_t>(c)]);
                });
                const Diagnostics d = diagnostics(chains[static_cast<std::size_t>(c)], lag);
                outputs.write("diagnostics_" + std::to_string(c) + ".json",
                              [&](std::ostream& os) { write_diagnostics_json(os, d); });
            }
            // merged summary over the pooled retained samples
            Chain pooled;
            pooled.burn_in = 0;
            pooled.seed = base_opts.seed;
            for (const Chain& ch : chains)
                for (const ChainSample& s : ch.retained()) pooled.samples.push_back(s);
            pooled.iterations = pooled.samples.size();
            const Diagnostics merged =
                diagnostics(pooled, std::min(resolved.max_lag, pooled.samples.size() - 1));
            outputs.write("diagnostics.json",
                          [&](std::ostream& os) { write_diagnostics_json(os, merged); });
        }

        Rng pred_rng(base_opts.seed ^ 0xda7a5eedULL);
        const PredictiveBand band = posterior_predictive(chains[0], data, disc, qcfg,
                                                         resolved.predictive_draws, pred_rng);
        if (band.skipped_draws > 0)
            log << "warning: " << band.skipped_draws << " predictive draws failed and were skipped\n";
        outputs.write("predictive.csv",
                      [&](std::ostream& os) { write_predictive_csv(os, band); });

        const ModelParams map = map_estimate(chains[0]);
        nlohmann::json extra;
        extra["map_estimate"] = {{"alpha", map.alpha()},
                                 {"sigma_k", map.sigma_k()},
                                 {"sigma_o", map.sigma_o()},
                                 {"sigma_i", map.sigma_i()}};
        extra["predictive_skipped_draws"] = band.skipped_draws;
        write_manifest(outputs, "infer", resolved, extra);
        outputs.verify();
        log << "MAP alpha " << map.alpha() << " sigma_k " << map.sigma_k() << " sigma_o "
            << map.sigma_o() << " sigma_i " << map.sigma_i() << "\n";
    } catch (...) {
        outputs.rollback();
        throw;
    }
    log << "wrote " << outputs.names().size() << " files to " << resolved.out_dir << "\n";
    return 0;
}

int cmd_converge(const RunConfig& cfg, std::ostream& log) {
    RunConfig resolved = cfg;
    const std::vector<int>& counts = resolved.particle_counts;
    if (counts.size() < 3)
        throw std::invalid_argument("converge needs at least 3 particle counts");
    for (std::size_t i = 1; i < counts.size(); ++i)
        if (counts[i] <= counts[i - 1])
            throw std::invalid_argument("particle counts must be strictly increasing");
    const ModelParams theta = resolved.explicit_theta();
    if (!resolved.r_max) throw std::invalid_argument("config field r_max is required but missing");
    const QuantileConfig qcfg = resolved.quantile();

    std::vector<double> times;
    for (double t = resolved.output_interval_days; t < resolved.horizon_days + 1e-12;
         t += resolved.output_interval_days)
        times.push_back(std::min(t, resolved.horizon_days));
    if (times.empty()) throw std::invalid_argument("horizon too short for any observation time");

    OutputSet outputs(resolved.out_dir);
    try {
        std::vector<Trajectory> trajs;
        for (int n : counts) {
            DiscretizationConfig d = resolved.discretization();
            d.n_particles = n;
            d.validate();
            trajs.push_back(integrate(initial_masses(theta, d), theta, d, times, qcfg));
        }
        const Trajectory& ref = trajs.back();
        std::vector<double> errors(counts.size(), 0.0);
        for (std::size_t c = 0; c + 1 < counts.size(); ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < times.size(); ++k)
                acc += weighted_flat_norm(difference(trajs[c].states[k], ref.states[k]), 1);
            errors[c] = acc / static_cast<double>(times.size());
        }

        // fitted decay exponent of error ~ N^-p over the non-reference counts
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const std::size_t m = counts.size() - 1;
        for (std::size_t c = 0; c < m; ++c) {
            const double lx = std::log(static_cast<double>(counts[c]));
            const double ly = std::log(errors[c]);
            sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        }
        const double slope = (static_cast<double>(m) * sxy - sx * sy) /
                             (static_cast<double>(m) * sxx - sx * sx);
        const double exponent = -slope;

        outputs.write("convergence.csv", [&](std::ostream& os) {
            os << "n_particles,error\n";
            for (std::size_t c = 0; c < counts.size(); ++c)
                os << counts[c] << ',' << format_double(errors[c]) << '\n';
        });
        log << "fitted decay exponent " << exponent << "\n";
        for (std::size_t c = 0; c + 2 < counts.size(); ++c)
            log << "error ratio " << counts[c] << "/" << counts[c + 1] << " = "
                << errors[c] / errors[c + 1] << "\n";
        write_manifest(outputs, "converge", resolved, {{"decay_exponent", exponent}});
        outputs.verify();
    } catch (...) {
        outputs.rollback();
        throw;
    }
    log << "wrote " << outputs.names().size() << " files to " << resolved.out_dir << "\n";
    return 0;
}

int cmd_diagnose(const RunConfig& cfg, std::ostream& log) {
    RunConfig resolved = cfg;
    if (resolved.chain_path.empty())
        throw std::invalid_argument("config field chain is required but missing");
    std::ifstream f(resolved.chain_path);
    if (!f) throw std::invalid_argument("cannot open chain file " + resolved.chain_path);
    const Chain chain = read_chain_csv(f, resolved.burn_in, resolved.chain_path);
    const std::size_t retained = chain.samples.size() - chain.burn_in;
    const Diagnostics d = diagnostics(chain, std::min(resolved.max_lag, retained - 1));

    OutputSet outputs(resolved.out_dir);
    try {
        outputs.write("diagnostics.json",
                      [&](std::ostream& os) { write_diagnostics_json(os, d); });
        write_manifest(outputs, "diagnose", resolved, {});
        outputs.verify();
    } catch (...) {
        outputs.rollback();
        throw;
    }
    log << "acceptance rate " << d.acceptance_rate << "\n";
    log << "wrote " << outputs.names().size() << " files to " << resolved.out_dir << "\n";
    return 0;
}

}  // namespace spheroid::cli
