#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spheroid/measures.hpp"
#include "spheroid/model.hpp"
#include "spheroid/solver.hpp"

using namespace spheroid;

namespace {
const ModelParams kMap = ModelParams::from_natural(1.7264, 0.0806, 0.0957, 0.2469);

DiscretizationConfig small_cfg(int n = 100, double r_max = 2.0) {
    DiscretizationConfig cfg;
    cfg.n_particles = n;
    cfg.r_max = r_max;
    return cfg;
}

std::vector<double> caps(const DiscretizationConfig& cfg) {
    std::vector<double> c;
    for (double x : cfg.grid()) c.push_back(4.0 * M_PI * x * x * cfg.cell_width());
    return c;
}
}  // namespace

TEST_CASE("rhs vanishes for the zero measure and at the cap") {
    const auto cfg = small_cfg();
    const auto grid = cfg.grid();
    const DiscreteMeasure zero(grid, std::vector<double>(grid.size(), 0.0));
    for (double v : rhs(zero, kMap, cfg)) CHECK(v == 0.0);

    const DiscreteMeasure at_cap(grid, caps(cfg));
    for (double v : rhs(at_cap, kMap, cfg)) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rhs with a single loaded particle matches the hand formula") {
    const auto cfg = small_cfg();
    const auto grid = cfg.grid();
    std::vector<double> m(grid.size(), 0.0);
    const std::size_t j0 = 40;
    m[j0] = 0.01;
    const DiscreteMeasure state(grid, m);
    const auto rates = rhs(state, kMap, cfg);
    const auto cap = caps(cfg);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double expected = (cap[i] - m[i]) *
                                kernel_L(grid[i], grid[j0], kMap.alpha(), kMap.sigma_k()) * m[j0];
        CHECK(rates[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("integrate validates its inputs") {
    const auto cfg = small_cfg();
    const auto grid = cfg.grid();
    const DiscreteMeasure init = initial_masses(kMap, cfg);
    CHECK_THROWS_AS(integrate(init, kMap, cfg, std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(integrate(init, kMap, cfg, std::vector<double>{2.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(integrate(init, kMap, cfg, std::vector<double>{-1.0, 1.0}),
                    std::invalid_argument);
    DiscretizationConfig other = cfg;
    other.n_particles = 50;
    CHECK_THROWS_AS(integrate(initial_masses(kMap, other), kMap, cfg, std::vector<double>{1.0}),
                    std::invalid_argument);
}

TEST_CASE("zero initial measure is a fixed point") {
    const auto cfg = small_cfg();
    const auto grid = cfg.grid();
    const DiscreteMeasure zero(grid, std::vector<double>(grid.size(), 0.0));
    const Trajectory t = integrate(zero, kMap, cfg, std::vector<double>{0.5, 1.0});
    for (const auto& s : t.states)
        for (double m : s.masses()) CHECK(m == 0.0);
}

TEST_CASE("masses stay in the box and grow monotonically below the cap") {
    auto cfg = small_cfg(150, 2.5);
    const DiscreteMeasure init = initial_masses(kMap, cfg);
    std::vector<double> times;
    for (double t = 0.5; t <= 10.0; t += 0.5) times.push_back(t);
    const Trajectory traj = integrate(init, kMap, cfg, times);
    const auto cap = caps(cfg);
    const double tv0 = tv_norm(init);
    for (const auto& s : traj.states) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(s.masses()[i] >= 0.0);
            CHECK(s.masses()[i] <= cap[i] * (1.0 + 1e-9));
        }
    }
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        for (std::size_t i = 0; i < cap.size(); ++i) {
            const double before = traj.states[k - 1].masses()[i];
            const double after = traj.states[k].masses()[i];
            if (after < cap[i] * (1.0 - 1e-6)) CHECK(after >= before - 1e-12 * tv0);
        }
    }
    // total mass is non-decreasing as well
    for (std::size_t k = 1; k < traj.states.size(); ++k)
        CHECK(tv_norm(traj.states[k]) >= tv_norm(traj.states[k - 1]) - 1e-12);
}

TEST_CASE("self-convergence against a hundredfold finer step") {
    auto cfg = small_cfg(80, 2.0);
    const DiscreteMeasure init = initial_masses(kMap, cfg);
    const std::vector<double> times{2.0};
    auto run = [&](double h) {
        auto c = cfg;
        c.time_step = h;
        return integrate(init, kMap, c, times).states[0].masses();
    };
    const auto ref = run(0.002);
    auto sup_diff = [&](const std::vector<double>& a) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - ref[i]));
        return d;
    };
    const double e_coarse = sup_diff(run(0.2));
    const double e_half = sup_diff(run(0.1));
    CHECK(e_coarse < 1e-4);
    CHECK(e_coarse > 0.0);
    // fourth-order integrator: halving the step shrinks the error ~16x
    CHECK(e_coarse / e_half > 8.0);
}

TEST_CASE("exp-moment growth admits a stable finite rate") {
    // fitted C with exp_moment(t) <= e^{Ct} exp_moment(0); C should barely
    // move under refinement
    std::vector<double> fitted;
    for (int n : {100, 200}) {
        auto cfg = small_cfg(n, 2.5);
        const DiscreteMeasure init = initial_masses(kMap, cfg);
        std::vector<double> times{1.0, 2.0, 4.0, 8.0};
        const Trajectory traj = integrate(init, kMap, cfg, times);
        const double m0 = exp_moment(init);
        double c = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k)
            c = std::max(c, std::log(exp_moment(traj.states[k]) / m0) / times[k]);
        CHECK(std::isfinite(c));
        fitted.push_back(c);
    }
    CHECK(fitted[0] == doctest::Approx(fitted[1]).epsilon(0.05));
}

TEST_CASE("radius of frozen examples") {
    const DiscreteMeasure m({1.0, 2.0, 3.0, 4.0}, {1.0, 1.0, 1.0, 1.0});
    CHECK(radius(m, QuantileConfig{}) == doctest::Approx(4.0));
    const DiscreteMeasure single({0.7}, {3.0});
    CHECK(radius(single, QuantileConfig{}) == doctest::Approx(0.7));
    CHECK(radius(single, QuantileConfig{0.05, false, 1e-3}) == doctest::Approx(0.7));
    const DiscreteMeasure empty_mass({1.0}, {0.0});
    CHECK_THROWS_AS(radius(empty_mass, QuantileConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(radius(m, QuantileConfig{1.5, false, 1e-3}), std::invalid_argument);
}

TEST_CASE("regularized_cdf closed-form values") {
    const DiscreteMeasure single({2.0}, {1.5});
    CHECK(regularized_cdf(2.0, single, 0.1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(regularized_cdf(60.0, single, 0.1) == doctest::Approx(1.0).epsilon(1e-12));
    const DiscreteMeasure two({1.0, 3.0}, {1.0, 1.0});
    CHECK(regularized_cdf(2.0, two, 0.1) == doctest::Approx(0.5).epsilon(1e-12));
    // non-decreasing in x
    double prev = 0.0;
    for (double x = 0.0; x <= 4.0; x += 0.05) {
        const double v = regularized_cdf(x, two, 0.2);
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
    CHECK_THROWS_AS(regularized_cdf(1.0, two, 0.0), std::invalid_argument);
}

TEST_CASE("regularized radius solves the smoothed quantile equation") {
    const DiscreteMeasure m({0.5, 1.0, 1.5, 2.0}, {0.4, 0.6, 0.8, 0.2});
    QuantileConfig q{0.95, true, 0.05};
    const double r = radius(m, q);
    CHECK(regularized_cdf(r, m, q.epsilon) == doctest::Approx(0.95).epsilon(1e-10));
}

TEST_CASE("regularized and raw radius agree within one cell on smooth states") {
    auto cfg = small_cfg(200, 3.0);
    const DiscreteMeasure init = initial_masses(kMap, cfg);
    std::vector<double> times;
    for (double t = 1.0; t <= 12.0; t += 1.0) times.push_back(t);
    const Trajectory traj = integrate(init, kMap, cfg, times);
    QuantileConfig reg{0.95, true, 0.5 * cfg.cell_width()};
    for (const auto& s : traj.states)
        CHECK(std::abs(radius(s, QuantileConfig{}) - radius(s, reg)) < cfg.cell_width());
}

TEST_CASE("unregularized radius is non-decreasing along a growing trajectory") {
    auto cfg = small_cfg(120, 2.5);
    const DiscreteMeasure init = initial_masses(kMap, cfg);
    std::vector<double> times;
    for (double t = 0.5; t <= 10.0; t += 0.5) times.push_back(t);
    const Trajectory traj = integrate(init, kMap, cfg, times);
    for (std::size_t k = 1; k < traj.radii.size(); ++k)
        CHECK(traj.radii[k] >= traj.radii[k - 1]);
}

TEST_CASE("trajectory csv export") {
    auto cfg = small_cfg(60, 2.0);
    const DiscreteMeasure init = initial_masses(kMap, cfg);
    const Trajectory traj = integrate(init, kMap, cfg, std::vector<double>{0.5, 1.0});
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    const std::string s = os.str();
    CHECK(s.rfind("time_day,radius_mm,total_mass\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 3);
}
