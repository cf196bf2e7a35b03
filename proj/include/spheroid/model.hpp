#pragma once

#include <array>
#include <vector>

#include "spheroid/measures.hpp"

namespace spheroid {

// Model parameter vector, stored in log space so every component is
// positive by construction: proliferation rate alpha [1/day], kernel radius
// sigma_k [mm], observation noise SD sigma_o on log-radius, and initial
// colony radius sigma_i [mm].
struct ModelParams {
    double log_alpha = 0.0;
    double log_sigma_k = 0.0;
    double log_sigma_o = 0.0;
    double log_sigma_i = 0.0;

    static ModelParams from_natural(double alpha, double sigma_k, double sigma_o, double sigma_i);
    static ModelParams from_log(const std::array<double, 4>& v);

    double alpha() const;
    double sigma_k() const;
    double sigma_o() const;
    double sigma_i() const;

    std::array<double, 4> log_values() const {
        return {log_alpha, log_sigma_k, log_sigma_o, log_sigma_i};
    }

    bool operator==(const ModelParams&) const = default;
};

// Fixed discretization and initial-condition shape constants.
struct DiscretizationConfig {
    int n_particles = 200;          // N
    double r_max = 3.0;             // R0 [mm], grid end
    int q_exponent = 13;            // edge-mollifier exponent q
    double sigma_tilde_ratio = 1.065;  // sigma_tilde / sigma_i
    double time_step = 0.01;        // [day]

    void validate() const;  // throws std::invalid_argument
    double cell_width() const { return r_max / n_particles; }
    // x_i = (i/N) R0, i = 1..N
    std::vector<double> grid() const;
};

// Radial interaction kernel
//   L(R,r) = 3 alpha / (16 pi sigma_k^3) * (min{(R+r)^2, sigma_k^2} - min{(R-r)^2, sigma_k^2}) / (R r).
// Non-negative, symmetric, zero for |R-r| >= sigma_k, and equal to
// 3 alpha / (4 pi sigma_k^3) whenever R + r <= sigma_k.
double kernel_L(double R, double r, double alpha, double sigma_k);

// Ball kernel in Cartesian form: 3/(4 pi) sigma_k^-3 on [0, sigma_k], else 0.
// Kept as the reference profile that kernel_L is the spherical reduction of.
double cartesian_kernel_K(double distance, double sigma_k);

// Initial radial density p(r,0) = 4 pi r^2 (1 - (r/sigma_tilde)^q) on
// [0, sigma_tilde], else 0, with sigma_tilde = sigma_tilde_ratio * sigma_i.
double initial_density(double r, double sigma_i, const DiscretizationConfig& cfg);

// Antiderivative of the initial density evaluated exactly:
// integral over [0, min(r, sigma_tilde)].
double initial_density_integral(double r, double sigma_tilde, int q);

// Total initial mass 4 pi sigma_tilde^3 q / (3 (q+3)).
double total_initial_mass(double sigma_tilde, int q);

// Cell-integrated initial masses on the canonical grid, via the closed-form
// antiderivative. Throws if sigma_tilde >= r_max (support would be cut).
DiscreteMeasure initial_masses(const ModelParams& params, const DiscretizationConfig& cfg);

}  // namespace spheroid
