#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "spheroid/data.hpp"
#include "spheroid/model.hpp"
#include "spheroid/rng.hpp"
#include "spheroid/solver.hpp"

namespace spheroid {

struct ChainSample {
    ModelParams params;
    double log_posterior = 0.0;
    bool accepted = false;
};

struct Chain {
    std::vector<ChainSample> samples;  // one per iteration, burn-in included
    std::vector<double> step_trace;    // step size after each burn-in update
    std::uint64_t seed = 0;
    std::size_t burn_in = 0;
    std::size_t iterations = 0;

    std::span<const ChainSample> retained() const {
        return std::span<const ChainSample>(samples).subspan(burn_in);
    }
};

struct McmcOptions {
    std::size_t iterations = 450000;
    std::size_t burn_in = 50000;
    std::uint64_t seed = 1;
    double initial_step_size = 0.1;
    double target_acceptance = 0.23;

    void validate() const;  // iterations > burn_in, step and target sane
};

struct Diagnostics {
    double acceptance_rate = 0.0;                          // over the retained phase
    std::array<std::vector<double>, 4> autocorrelation;    // per parameter, lags 0..max_lag
    std::array<double, 4> effective_sample_size = {};      // initial-positive-sequence estimate
    std::array<std::array<double, 3>, 4> quantiles = {};   // 2.5%, 50%, 97.5% of log-params
    std::array<bool, 4> degenerate = {};                   // constant-chain flag per parameter
    std::array<bool, 4> low_ess = {};                      // ESS below kLowEssThreshold
};

inline constexpr double kLowEssThreshold = 400.0;

struct PredictiveBand {
    std::vector<double> times;
    std::vector<double> lo;   // 2.5%
    std::vector<double> med;  // 50%
    std::vector<double> hi;   // 97.5%
    std::size_t skipped_draws = 0;
};

// Sum of normal log-densities of the log-parameters, normalization included.
double log_prior(const ModelParams& theta, const PriorSpec& prior);

// Gaussian log-likelihood of log-radii residuals against the forward model.
// Forward-model failures (instability, truncated support) yield -infinity.
double log_likelihood(const ModelParams& theta, const Dataset& data,
                      const DiscretizationConfig& cfg, const QuantileConfig& qcfg);

// Random-walk proposal: independent N(0, step_size^2) increments on each of
// the four log-parameters.
ModelParams propose(const ModelParams& current, double step_size, Rng& rng);

// min(1, exp(candidate - current)); -infinity candidate gives 0
double accept_probability(double log_post_current, double log_post_candidate);

using LogTarget = std::function<double(const ModelParams&)>;

// Generic random-walk Metropolis driver over the 4 log-parameters. During
// burn-in the log step size follows the Robbins-Monro recursion
// log s += k^-0.6 (accept_indicator - target); it is frozen afterwards so the
// retained chain is a valid MH chain. Per iteration the stream consumes four
// normals then one uniform, so runs are bit-reproducible from the seed.
Chain run_random_walk(const LogTarget& target, const ModelParams& theta0,
                      const McmcOptions& opts);

// Same driver continuing an existing stream (used by run_chain so that the
// initial prior draw and the walk share one seeded stream).
Chain run_random_walk_with_rng(const LogTarget& target, const ModelParams& theta0,
                               const McmcOptions& opts, Rng& rng);

// Posterior chain: target = log_prior + log_likelihood (likelihood omitted
// when the dataset is empty), theta0 drawn from the prior (re-drawn while the
// posterior is -infinity).
Chain run_chain(const Dataset& data, const PriorSpec& prior, const DiscretizationConfig& cfg,
                const QuantileConfig& qcfg, const McmcOptions& opts);

// Retained sample with maximal log-posterior; earliest on ties.
ModelParams map_estimate(const Chain& chain);

Diagnostics diagnostics(const Chain& chain, std::size_t max_lag);

// Pointwise predictive quantiles of the noise-free forward radius over
// n_draws parameter draws taken uniformly from the retained samples. Draws
// whose forward model fails are skipped and counted.
PredictiveBand posterior_predictive(const Chain& chain, const Dataset& data,
                                    const DiscretizationConfig& cfg, const QuantileConfig& qcfg,
                                    std::size_t n_draws, Rng& rng);

// CSV with header iter,log_alpha,log_sigma_k,log_sigma_o,log_sigma_i,log_posterior,accepted
void write_chain_csv(std::ostream& os, const Chain& chain);
Chain read_chain_csv(std::istream& is, std::size_t burn_in, const std::string& origin);

void write_diagnostics_json(std::ostream& os, const Diagnostics& d);
void write_predictive_csv(std::ostream& os, const PredictiveBand& band);

}  // namespace spheroid
