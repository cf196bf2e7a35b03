#include "spheroid/inference.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "spheroid/format.hpp"

namespace spheroid {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_logpdf(double x, double loc, double scale) {
    const double z = (x - loc) / scale;
    return -0.5 * std::log(2.0 * M_PI * scale * scale) - 0.5 * z * z;
}
}  // namespace

void McmcOptions::validate() const {
    if (iterations == 0 || iterations <= burn_in)
        throw std::invalid_argument("McmcOptions: iterations must exceed burn_in");
    if (!(initial_step_size > 0.0))
        throw std::invalid_argument("McmcOptions: initial_step_size must be > 0");
    if (!(target_acceptance > 0.0) || !(target_acceptance < 1.0))
        throw std::invalid_argument("McmcOptions: target_acceptance must lie in (0,1)");
}

double log_prior(const ModelParams& theta, const PriorSpec& prior) {
    prior.validate();
    return normal_logpdf(theta.log_alpha, prior.alpha.location, prior.alpha.scale) +
           normal_logpdf(theta.log_sigma_k, prior.sigma_k.location, prior.sigma_k.scale) +
           normal_logpdf(theta.log_sigma_o, prior.sigma_o.location, prior.sigma_o.scale) +
           normal_logpdf(theta.log_sigma_i, prior.sigma_i.location, prior.sigma_i.scale);
}

double log_likelihood(const ModelParams& theta, const Dataset& data,
                      const DiscretizationConfig& cfg, const QuantileConfig& qcfg) {
    if (data.observations.empty())
        throw std::invalid_argument("log_likelihood: dataset is empty");
    std::vector<double> times;
    times.reserve(data.observations.size());
    for (const Observation& o : data.observations) {
        if (!(o.radius > 0.0)) throw std::invalid_argument("log_likelihood: observed radius <= 0");
        times.push_back(o.time);
    }
    Trajectory traj;
    try {
        const DiscreteMeasure initial = initial_masses(theta, cfg);
        traj = integrate(initial, theta, cfg, times, qcfg);
    } catch (const SolverError&) {
        return kNegInf;
    } catch (const std::invalid_argument&) {
        // unintegrable configuration for this theta (e.g. support beyond r_max)
        return kNegInf;
    }
    const double so = theta.sigma_o();
    double ll = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double res = std::log(data.observations[i].radius) - std::log(traj.radii[i]);
        ll += -std::log(std::sqrt(2.0 * M_PI) * so) - res * res / (2.0 * so * so);
    }
    return ll;
}

ModelParams propose(const ModelParams& current, double step_size, Rng& rng) {
    if (!(step_size > 0.0)) throw std::invalid_argument("propose: step_size must be > 0");
    ModelParams next = current;
    next.log_alpha += step_size * rng.normal();
    next.log_sigma_k += step_size * rng.normal();
    next.log_sigma_o += step_size * rng.normal();
    next.log_sigma_i += step_size * rng.normal();
    return next;
}

double accept_probability(double log_post_current, double log_post_candidate) {
    if (!std::isfinite(log_post_current))
        throw std::invalid_argument("accept_probability: current log-posterior must be finite");
    if (log_post_candidate == kNegInf) return 0.0;
    return std::min(1.0, std::exp(log_post_candidate - log_post_current));
}

Chain run_random_walk(const LogTarget& target, const ModelParams& theta0,
                      const McmcOptions& opts) {
    opts.validate();
    Rng rng(opts.seed);
    return run_random_walk_with_rng(target, theta0, opts, rng);
}

Chain run_random_walk_with_rng(const LogTarget& target, const ModelParams& theta0,
                               const McmcOptions& opts, Rng& rng) {
    opts.validate();
    ModelParams theta = theta0;
    double lp = target(theta);
    if (!std::isfinite(lp))
        throw std::invalid_argument("run_random_walk: initial state has non-finite target");

    Chain chain;
    chain.seed = opts.seed;
    chain.burn_in = opts.burn_in;
    chain.iterations = opts.iterations;
    chain.samples.reserve(opts.iterations);
    chain.step_trace.reserve(opts.burn_in);

    double log_step = std::log(opts.initial_step_size);
    for (std::size_t it = 1; it <= opts.iterations; ++it) {
        const double step = std::exp(log_step);
        const ModelParams candidate = propose(theta, step, rng);
        const double lp_candidate = target(candidate);
        const double a = std::isfinite(lp) ? accept_probability(lp, lp_candidate) : 0.0;
        const double u = rng.uniform();
        const bool accepted = a > 0.0 && u <= a;
        if (accepted) {
            theta = candidate;
            lp = lp_candidate;
        }
        if (it <= opts.burn_in) {
            const double gamma = std::pow(static_cast<double>(it), -0.6);
            log_step += gamma * ((accepted ? 1.0 : 0.0) - opts.target_acceptance);
            chain.step_trace.push_back(std::exp(log_step));
        }
        chain.samples.push_back({theta, lp, accepted});
    }
    return chain;
}

Chain run_chain(const Dataset& data, const PriorSpec& prior, const DiscretizationConfig& cfg,
                const QuantileConfig& qcfg, const McmcOptions& opts) {
    opts.validate();
    prior.validate();
    cfg.validate();
    qcfg.validate();
    data.validate();

    const bool empty_data = data.observations.empty();
    LogTarget target = [&](const ModelParams& theta) {
        const double lp = log_prior(theta, prior);
        if (empty_data) return lp;
        const double ll = log_likelihood(theta, data, cfg, qcfg);
        return std::isfinite(ll) ? lp + ll : kNegInf;
    };

    Rng rng(opts.seed);
    ModelParams theta0;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        theta0.log_alpha = prior.alpha.location + prior.alpha.scale * rng.normal();
        theta0.log_sigma_k = prior.sigma_k.location + prior.sigma_k.scale * rng.normal();
        theta0.log_sigma_o = prior.sigma_o.location + prior.sigma_o.scale * rng.normal();
        theta0.log_sigma_i = prior.sigma_i.location + prior.sigma_i.scale * rng.normal();
        ok = std::isfinite(target(theta0));
    }
    if (!ok)
        throw std::runtime_error("run_chain: no prior draw gave a finite posterior in 100 tries");
    return run_random_walk_with_rng(target, theta0, opts, rng);
}

ModelParams map_estimate(const Chain& chain) {
    const auto retained = chain.retained();
    if (retained.empty()) throw std::invalid_argument("map_estimate: empty chain");
    std::size_t best = 0;
    for (std::size_t i = 1; i < retained.size(); ++i)
        if (retained[i].log_posterior > retained[best].log_posterior) best = i;
    return retained[best].params;
}

namespace {

// biased sample autocorrelation, rho_0 = 1
std::vector<double> autocorr(std::span<const double> x, std::size_t max_lag, bool& degenerate) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : x) c0 += (v - mean) * (v - mean);
    c0 /= static_cast<double>(n);
    std::vector<double> rho(max_lag + 1, 0.0);
    rho[0] = 1.0;
    degenerate = !(c0 > 0.0);
    if (degenerate) return rho;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) c += (x[t] - mean) * (x[t + lag] - mean);
        rho[lag] = c / static_cast<double>(n) / c0;
    }
    return rho;
}

// Geyer initial-positive-sequence truncation of tau = 1 + 2 sum rho_l
double ess_from_autocorr(const std::vector<double>& rho, std::size_t n) {
    double sum_pairs = 0.0;
    for (std::size_t m = 0; 2 * m + 1 < rho.size(); ++m) {
        const double pair = rho[2 * m] + rho[2 * m + 1];
        if (pair <= 0.0) break;
        sum_pairs += pair;
    }
    const double tau = std::max(1.0, 2.0 * sum_pairs - 1.0);
    return static_cast<double>(n) / tau;
}

std::array<double, 3> central_quantiles(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    auto interp = [&](double p) {
        const double pos = p * (static_cast<double>(v.size()) - 1.0);
        const std::size_t i = static_cast<std::size_t>(pos);
        if (i + 1 >= v.size()) return v.back();
        const double frac = pos - static_cast<double>(i);
        return v[i] * (1.0 - frac) + v[i + 1] * frac;
    };
    return {interp(0.025), interp(0.5), interp(0.975)};
}

}  // namespace

Diagnostics diagnostics(const Chain& chain, std::size_t max_lag) {
    const auto retained = chain.retained();
    if (retained.size() < max_lag + 1)
        throw std::invalid_argument("diagnostics: need at least max_lag + 1 retained samples");
    Diagnostics d;
    std::size_t accepted = 0;
    for (const ChainSample& s : retained) accepted += s.accepted ? 1 : 0;
    d.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(retained.size());

    for (std::size_t p = 0; p < 4; ++p) {
        std::vector<double> x(retained.size());
        for (std::size_t i = 0; i < retained.size(); ++i)
            x[i] = retained[i].params.log_values()[p];
        bool degen = false;
        d.autocorrelation[p] = autocorr(x, max_lag, degen);
        d.degenerate[p] = degen;
        d.effective_sample_size[p] =
            degen ? 0.0 : ess_from_autocorr(d.autocorrelation[p], retained.size());
        d.low_ess[p] = d.effective_sample_size[p] < kLowEssThreshold;
        d.quantiles[p] = central_quantiles(std::move(x));
    }
    return d;
}

PredictiveBand posterior_predictive(const Chain& chain, const Dataset& data,
                                    const DiscretizationConfig& cfg, const QuantileConfig& qcfg,
                                    std::size_t n_draws, Rng& rng) {
    const auto retained = chain.retained();
    if (retained.empty()) throw std::invalid_argument("posterior_predictive: empty chain");
    if (n_draws == 0) throw std::invalid_argument("posterior_predictive: n_draws must be >= 1");
    std::vector<double> times;
    times.reserve(data.observations.size());
    for (const Observation& o : data.observations) times.push_back(o.time);
    if (times.empty()) throw std::invalid_argument("posterior_predictive: dataset has no times");

    // forward solves are cached per distinct theta; rejected iterations
    // repeat parameters exactly, so draws often hit the cache
    std::map<std::array<double, 4>, std::vector<double>> cache;
    std::vector<std::vector<double>> curves;
    curves.reserve(n_draws);
    std::size_t skipped = 0;
    for (std::size_t k = 0; k < n_draws; ++k) {
        const std::size_t idx =
            std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(retained.size())),
                     retained.size() - 1);
        const ModelParams& theta = retained[idx].params;
        auto key = theta.log_values();
        auto it = cache.find(key);
        if (it == cache.end()) {
            try {
                const DiscreteMeasure initial = initial_masses(theta, cfg);
                const Trajectory traj = integrate(initial, theta, cfg, times, qcfg);
                it = cache.emplace(key, traj.radii).first;
            } catch (const std::exception&) {
                ++skipped;
                continue;
            }
        }
        curves.push_back(it->second);
    }
    if (curves.empty())
        throw std::runtime_error("posterior_predictive: every draw failed the forward model");

    PredictiveBand band;
    band.times = times;
    band.skipped_draws = skipped;
    band.lo.resize(times.size());
    band.med.resize(times.size());
    band.hi.resize(times.size());
    for (std::size_t t = 0; t < times.size(); ++t) {
        std::vector<double> vals(curves.size());
        for (std::size_t c = 0; c < curves.size(); ++c) vals[c] = curves[c][t];
        const auto q = central_quantiles(std::move(vals));
        band.lo[t] = q[0];
        band.med[t] = q[1];
        band.hi[t] = q[2];
    }
    return band;
}

void write_chain_csv(std::ostream& os, const Chain& chain) {
    os << "iter,log_alpha,log_sigma_k,log_sigma_o,log_sigma_i,log_posterior,accepted\n";
    for (std::size_t i = 0; i < chain.samples.size(); ++i) {
        const ChainSample& s = chain.samples[i];
        os << (i + 1) << ',' << format_double(s.params.log_alpha) << ','
           << format_double(s.params.log_sigma_k) << ',' << format_double(s.params.log_sigma_o)
           << ',' << format_double(s.params.log_sigma_i) << ','
           << format_double(s.log_posterior) << ',' << (s.accepted ? 1 : 0) << '\n';
    }
}

Chain read_chain_csv(std::istream& is, std::size_t burn_in, const std::string& origin) {
    Chain chain;
    chain.burn_in = burn_in;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        if (!header_seen) {
            if (sv != "iter,log_alpha,log_sigma_k,log_sigma_o,log_sigma_i,log_posterior,accepted")
                throw ParseError(origin + ":" + std::to_string(lineno) + ": unexpected header");
            header_seen = true;
            continue;
        }
        const auto cols = split(sv, ',');
        if (cols.size() != 7)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 7 columns");
        std::array<double, 4> v{};
        for (std::size_t p = 0; p < 4; ++p) {
            const auto x = parse_double(cols[p + 1]);
            if (!x) throw ParseError(origin + ":" + std::to_string(lineno) + ": malformed number");
            v[p] = *x;
        }
        const auto lp = parse_double(cols[5]);
        const auto acc = parse_double(cols[6]);
        if (!lp || !acc)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": malformed number");
        chain.samples.push_back({ModelParams::from_log(v), *lp, *acc != 0.0});
    }
    if (!header_seen) throw ParseError(origin + ": missing chain header");
    if (chain.samples.size() <= burn_in)
        throw std::invalid_argument("read_chain_csv: burn_in >= stored iterations");
    chain.iterations = chain.samples.size();
    return chain;
}

void write_diagnostics_json(std::ostream& os, const Diagnostics& d) {
    nlohmann::json j;
    j["acceptance_rate"] = d.acceptance_rate;
    static const char* names[4] = {"log_alpha", "log_sigma_k", "log_sigma_o", "log_sigma_i"};
    for (std::size_t p = 0; p < 4; ++p) {
        j["ess"][names[p]] = d.effective_sample_size[p];
        j["autocorrelation"][names[p]] = d.autocorrelation[p];
        j["quantiles"][names[p]] = {{"q2.5", d.quantiles[p][0]},
                                    {"q50", d.quantiles[p][1]},
                                    {"q97.5", d.quantiles[p][2]}};
        j["degenerate"][names[p]] = d.degenerate[p];
        j["low_ess"][names[p]] = d.low_ess[p];
    }
    os << j.dump(2) << '\n';
}

void write_predictive_csv(std::ostream& os, const PredictiveBand& band) {
    os << "time_day,radius_lo_mm,radius_med_mm,radius_hi_mm\n";
    for (std::size_t i = 0; i < band.times.size(); ++i)
        os << format_double(band.times[i]) << ',' << format_double(band.lo[i]) << ','
           << format_double(band.med[i]) << ',' << format_double(band.hi[i]) << '\n';
}

}  // namespace spheroid
