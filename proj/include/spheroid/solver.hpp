#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "spheroid/measures.hpp"
#include "spheroid/model.hpp"

namespace spheroid {

// Raised when a step leaves the admissible mass box (negative beyond
// tolerance, or above the per-particle cap).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuantileConfig {
    double level = 0.95;
    bool regularize = false;
    double epsilon = 1e-3;  // Laplace kernel scale [mm], used when regularize is on

    void validate() const;
};

// Time-indexed particle states on one static grid plus the extracted colony
// radii at the requested observation times.
struct Trajectory {
    std::vector<double> times;
    std::vector<DiscreteMeasure> states;
    std::vector<double> radii;
};

// Interaction kernel sampled on the static grid, stored as a band: rows i,
// offsets j - i with |x_i - x_j| < sigma_k. Built once per parameter vector.
class KernelBand {
public:
    KernelBand(const std::vector<double>& grid, double alpha, double sigma_k);

    int size() const { return n_; }
    int halfwidth() const { return half_; }
    double at(int i, int j) const;  // L(x_i, x_j), zero outside the band

    // out_i = sum_j L(x_i, x_j) m_j, summed in ascending j order
    void apply(std::span<const double> masses, std::span<double> out) const;

private:
    int n_ = 0;
    int half_ = 0;
    std::vector<double> band_;
};

// dm_i/dt = (4 pi x_i^2 R0/N - m_i) * sum_j L(x_i, x_j) m_j
std::vector<double> rhs(const DiscreteMeasure& state, const ModelParams& params,
                        const DiscretizationConfig& cfg);

// Classical fixed-step RK4 with step cfg.time_step, landing exactly on each
// observation time (final substep shortened). Masses are clamped to 0 when a
// step produces a negative of magnitude <= 1e-12 * TV; larger negatives and
// cap overshoots beyond 1e-9 relative raise SolverError.
Trajectory integrate(const DiscreteMeasure& initial, const ModelParams& params,
                     const DiscretizationConfig& cfg, std::span<const double> obs_times,
                     const QuantileConfig& qcfg = {});

// Colony radius: smallest grid location whose cumulative mass strictly
// exceeds level * TV; with regularization on, the unique solution of the
// Laplace-smoothed CDF equation found by bisection.
double radius(const DiscreteMeasure& state, const QuantileConfig& qcfg);

// (integral_{-inf}^x of mu * rho_eps) / TV with rho_eps the Laplace density;
// evaluated in closed form per atom. Non-decreasing in x, tends to 1.
double regularized_cdf(double x, const DiscreteMeasure& state, double epsilon);

// CSV with header time_day,radius_mm,total_mass
void write_trajectory_csv(std::ostream& os, const Trajectory& t);

// CSV with header x_mm,mass
void write_state_csv(std::ostream& os, const DiscreteMeasure& state);

}  // namespace spheroid
