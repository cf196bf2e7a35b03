#include "spheroid/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "spheroid/format.hpp"

namespace spheroid {

void QuantileConfig::validate() const {
    if (!(level > 0.0) || !(level < 1.0))
        throw std::invalid_argument("quantile level must lie strictly between 0 and 1");
    if (regularize && !(epsilon > 0.0))
        throw std::invalid_argument("quantile epsilon must be > 0");
}

KernelBand::KernelBand(const std::vector<double>& grid, double alpha, double sigma_k) {
    n_ = static_cast<int>(grid.size());
    const double dx = grid.size() > 1 ? grid[1] - grid[0] : grid[0];
    // |i - j| * dx >= sigma_k implies L = 0
    int half = static_cast<int>(std::ceil(sigma_k / dx)) - 1;
    half_ = std::clamp(half, 0, n_ - 1);
    band_.assign(static_cast<std::size_t>(n_) * (2 * half_ + 1), 0.0);
    for (int i = 0; i < n_; ++i) {
        for (int off = -half_; off <= half_; ++off) {
            const int j = i + off;
            if (j < 0 || j >= n_) continue;
            band_[static_cast<std::size_t>(i) * (2 * half_ + 1) + (off + half_)] =
                kernel_L(grid[static_cast<std::size_t>(i)], grid[static_cast<std::size_t>(j)],
                         alpha, sigma_k);
        }
    }
}

double KernelBand::at(int i, int j) const {
    const int off = j - i;
    if (off < -half_ || off > half_) return 0.0;
    return band_[static_cast<std::size_t>(i) * (2 * half_ + 1) + (off + half_)];
}

void KernelBand::apply(std::span<const double> masses, std::span<double> out) const {
    const int w = 2 * half_ + 1;
    for (int i = 0; i < n_; ++i) {
        const int jlo = std::max(0, i - half_);
        const int jhi = std::min(n_ - 1, i + half_);
        const double* row = band_.data() + static_cast<std::size_t>(i) * w + half_ - i;
        double acc = 0.0;
        for (int j = jlo; j <= jhi; ++j) acc += row[j] * masses[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = acc;
    }
}

namespace {

std::vector<double> particle_caps(const std::vector<double>& grid, double dx) {
    std::vector<double> cap(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) cap[i] = 4.0 * M_PI * grid[i] * grid[i] * dx;
    return cap;
}

void eval_rhs(const KernelBand& band, const std::vector<double>& cap,
              const std::vector<double>& m, std::vector<double>& growth,
              std::vector<double>& out) {
    band.apply(m, growth);
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = (cap[i] - m[i]) * growth[i];
}

}  // namespace

std::vector<double> rhs(const DiscreteMeasure& state, const ModelParams& params,
                        const DiscretizationConfig& cfg) {
    cfg.validate();
    const std::vector<double> grid = cfg.grid();
    if (state.locations() != grid)
        throw std::invalid_argument("rhs: state is not on the canonical grid");
    KernelBand band(grid, params.alpha(), params.sigma_k());
    const std::vector<double> cap = particle_caps(grid, cfg.cell_width());
    std::vector<double> growth(grid.size()), out(grid.size());
    eval_rhs(band, cap, state.masses(), growth, out);
    return out;
}

Trajectory integrate(const DiscreteMeasure& initial, const ModelParams& params,
                     const DiscretizationConfig& cfg, std::span<const double> obs_times,
                     const QuantileConfig& qcfg) {
    cfg.validate();
    qcfg.validate();
    if (obs_times.empty()) throw std::invalid_argument("integrate: obs_times is empty");
    for (std::size_t k = 0; k < obs_times.size(); ++k) {
        if (!(obs_times[k] >= 0.0))
            throw std::invalid_argument("integrate: obs_times must start at >= 0");
        if (k > 0 && !(obs_times[k] > obs_times[k - 1]))
            throw std::invalid_argument("integrate: obs_times must be strictly increasing");
    }
    const std::vector<double> grid = cfg.grid();
    if (initial.locations() != grid)
        throw std::invalid_argument("integrate: initial state is not on the canonical grid");

    KernelBand band(grid, params.alpha(), params.sigma_k());
    const std::vector<double> cap = particle_caps(grid, cfg.cell_width());
    const std::size_t n = grid.size();

    std::vector<double> m = initial.masses();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), growth(n);

    Trajectory traj;
    traj.times.assign(obs_times.begin(), obs_times.end());
    traj.states.reserve(obs_times.size());
    traj.radii.reserve(obs_times.size());

    double t = 0.0;
    for (double target : obs_times) {
        while (t < target - 1e-12) {
            const double h = std::min(cfg.time_step, target - t);
            const double tv_before = std::accumulate(m.begin(), m.end(), 0.0);

            eval_rhs(band, cap, m, growth, k1);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = m[i] + 0.5 * h * k1[i];
            eval_rhs(band, cap, tmp, growth, k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = m[i] + 0.5 * h * k2[i];
            eval_rhs(band, cap, tmp, growth, k3);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = m[i] + h * k3[i];
            eval_rhs(band, cap, tmp, growth, k4);
            for (std::size_t i = 0; i < n; ++i)
                m[i] += (h / 6.0) * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
            t += h;

            const double neg_tol = 1e-12 * tv_before;
            for (std::size_t i = 0; i < n; ++i) {
                if (m[i] < 0.0) {
                    if (m[i] < -neg_tol)
                        throw SolverError("integrate: mass went negative beyond tolerance at t=" +
                                          format_double(t));
                    m[i] = 0.0;
                }
                if (m[i] > cap[i] * (1.0 + 1e-9))
                    throw SolverError("integrate: mass exceeded its cap at t=" + format_double(t));
            }
        }
        DiscreteMeasure state(grid, m);
        // the zero measure is a fixed point with no quantile radius
        traj.radii.push_back(tv_norm(state) > 0.0 ? radius(state, qcfg)
                                                  : std::numeric_limits<double>::quiet_NaN());
        traj.states.push_back(std::move(state));
    }
    return traj;
}

double radius(const DiscreteMeasure& state, const QuantileConfig& qcfg) {
    qcfg.validate();
    const double tv = tv_norm(state);
    if (!(tv > 0.0)) throw std::invalid_argument("radius: measure has zero total mass");
    if (!qcfg.regularize) {
        double cum = 0.0;
        const double threshold = qcfg.level * tv;
        for (std::size_t i = 0; i < state.size(); ++i) {
            cum += state.masses()[i];
            if (cum > threshold) return state.locations()[i];
        }
        return state.locations().back();  // cum == tv > threshold is blocked only by roundoff
    }
    const double eps = qcfg.epsilon;
    double lo = state.locations().front() - 60.0 * eps;
    double hi = state.locations().back() + 60.0 * eps;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (regularized_cdf(mid, state, eps) < qcfg.level)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double regularized_cdf(double x, const DiscreteMeasure& state, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("regularized_cdf: epsilon must be > 0");
    const double tv = tv_norm(state);
    if (!(tv > 0.0)) throw std::invalid_argument("regularized_cdf: measure has zero total mass");
    // integral of the Laplace density up to z: e^z/2 for z < 0, 1 - e^-z/2 otherwise
    double acc = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double z = (x - state.locations()[i]) / epsilon;
        const double cdf = z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
        acc += state.masses()[i] * cdf;
    }
    return acc / tv;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
    os << "time_day,radius_mm,total_mass\n";
    for (std::size_t k = 0; k < t.times.size(); ++k)
        os << format_double(t.times[k]) << ',' << format_double(t.radii[k]) << ','
           << format_double(tv_norm(t.states[k])) << '\n';
}

void write_state_csv(std::ostream& os, const DiscreteMeasure& state) {
    os << "x_mm,mass\n";
    for (std::size_t i = 0; i < state.size(); ++i)
        os << format_double(state.locations()[i]) << ',' << format_double(state.masses()[i])
           << '\n';
}

}  // namespace spheroid
