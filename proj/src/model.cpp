#include "spheroid/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spheroid {

namespace {
void require_positive_finite(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string(name) + " must be positive and finite");
}
}  // namespace

ModelParams ModelParams::from_natural(double alpha, double sigma_k, double sigma_o, double sigma_i) {
    require_positive_finite(alpha, "alpha");
    require_positive_finite(sigma_k, "sigma_k");
    require_positive_finite(sigma_o, "sigma_o");
    require_positive_finite(sigma_i, "sigma_i");
    return {std::log(alpha), std::log(sigma_k), std::log(sigma_o), std::log(sigma_i)};
}

ModelParams ModelParams::from_log(const std::array<double, 4>& v) {
    return {v[0], v[1], v[2], v[3]};
}

double ModelParams::alpha() const { return std::exp(log_alpha); }
double ModelParams::sigma_k() const { return std::exp(log_sigma_k); }
double ModelParams::sigma_o() const { return std::exp(log_sigma_o); }
double ModelParams::sigma_i() const { return std::exp(log_sigma_i); }

void DiscretizationConfig::validate() const {
    if (n_particles < 2) throw std::invalid_argument("n_particles must be >= 2");
    require_positive_finite(r_max, "r_max");
    if (q_exponent < 1) throw std::invalid_argument("q_exponent must be >= 1");
    require_positive_finite(sigma_tilde_ratio, "sigma_tilde_ratio");
    require_positive_finite(time_step, "time_step");
}

std::vector<double> DiscretizationConfig::grid() const {
    std::vector<double> x(static_cast<std::size_t>(n_particles));
    for (int i = 1; i <= n_particles; ++i)
        x[static_cast<std::size_t>(i - 1)] = (static_cast<double>(i) / n_particles) * r_max;
    return x;
}

double kernel_L(double R, double r, double alpha, double sigma_k) {
    if (!(R > 0.0) || !(r > 0.0))
        throw std::invalid_argument("kernel_L: R and r must be > 0");
    require_positive_finite(alpha, "alpha");
    require_positive_finite(sigma_k, "sigma_k");
    const double s2 = sigma_k * sigma_k;
    const double plus = R + r;
    const double minus = R - r;
    const double num = std::min(plus * plus, s2) - std::min(minus * minus, s2);
    return 3.0 * alpha / (16.0 * M_PI * sigma_k * sigma_k * sigma_k) * num / (R * r);
}

double cartesian_kernel_K(double distance, double sigma_k) {
    if (!(distance >= 0.0)) throw std::invalid_argument("cartesian_kernel_K: distance must be >= 0");
    require_positive_finite(sigma_k, "sigma_k");
    if (distance > sigma_k) return 0.0;
    return 3.0 / (4.0 * M_PI * sigma_k * sigma_k * sigma_k);
}

double initial_density(double r, double sigma_i, const DiscretizationConfig& cfg) {
    if (!(r >= 0.0)) throw std::invalid_argument("initial_density: r must be >= 0");
    require_positive_finite(sigma_i, "sigma_i");
    const double st = cfg.sigma_tilde_ratio * sigma_i;
    if (r > st) return 0.0;
    return 4.0 * M_PI * r * r * (1.0 - std::pow(r / st, cfg.q_exponent));
}

double initial_density_integral(double r, double sigma_tilde, int q) {
    const double rc = std::clamp(r, 0.0, sigma_tilde);
    return 4.0 * M_PI *
           (rc * rc * rc / 3.0 -
            std::pow(rc, q + 3) / ((q + 3) * std::pow(sigma_tilde, q)));
}

double total_initial_mass(double sigma_tilde, int q) {
    return 4.0 * M_PI * sigma_tilde * sigma_tilde * sigma_tilde * q / (3.0 * (q + 3));
}

DiscreteMeasure initial_masses(const ModelParams& params, const DiscretizationConfig& cfg) {
    cfg.validate();
    const double st = cfg.sigma_tilde_ratio * params.sigma_i();
    if (st >= cfg.r_max)
        throw std::invalid_argument("initial_masses: sigma_tilde >= r_max, support truncated");
    std::vector<double> x = cfg.grid();
    std::vector<double> m(x.size());
    double prev = 0.0;  // antiderivative at the left cell edge, starting at 0
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double cur = initial_density_integral(x[i], st, cfg.q_exponent);
        m[i] = std::max(cur - prev, 0.0);
        prev = cur;
    }
    return DiscreteMeasure(std::move(x), std::move(m));
}

}  // namespace spheroid
