#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "spheroid/measures.hpp"
#include "spheroid/rng.hpp"

using namespace spheroid;

namespace {
SignedAtomList make_signed(std::initializer_list<Atom> atoms) {
    return SignedAtomList(std::vector<Atom>(atoms));
}

SignedAtomList random_signed(Rng& rng, int max_atoms, bool positive_locations) {
    const int n = 1 + static_cast<int>(rng.uniform() * max_atoms);
    std::vector<Atom> atoms;
    for (int i = 0; i < n; ++i) {
        const double loc = (positive_locations ? 0.05 : 0.0) + 3.0 * rng.uniform();
        const double mass = (0.2 + 1.8 * rng.uniform()) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        atoms.push_back({loc, mass});
    }
    return SignedAtomList(std::move(atoms));
}
}  // namespace

TEST_CASE("DiscreteMeasure invariants") {
    CHECK_NOTHROW(DiscreteMeasure({1.0, 2.0}, {0.5, 0.0}));
    CHECK_THROWS_AS(DiscreteMeasure({0.0, 1.0}, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteMeasure({2.0, 1.0}, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteMeasure({1.0, 1.0}, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DiscreteMeasure({1.0, 2.0}, {-0.1, 1.0}), std::invalid_argument);
}

TEST_CASE("tv_norm") {
    CHECK(tv_norm(DiscreteMeasure({1.0, 2.0}, {0.5, 0.5})) == doctest::Approx(1.0));
    CHECK(tv_norm(DiscreteMeasure()) == 0.0);
    CHECK(tv_norm(DiscreteMeasure({0.3}, {2.5})) == doctest::Approx(2.5));
}

TEST_CASE("signed list merges duplicates and drops zeros") {
    const auto d = make_signed({{1.0, 1.0}, {1.0, -1.0}, {2.0, 0.5}});
    CHECK(d.size() == 1);
    CHECK(d.atoms()[0].location == 2.0);
    CHECK(weighted_flat_norm(make_signed({{1.0, 1.0}, {1.0, -1.0}}), 1) == 0.0);
}

TEST_CASE("flat_norm frozen examples") {
    // single positive atom: psi == 1 is optimal
    CHECK(flat_norm(make_signed({{0.7, 0.25}})) == doctest::Approx(0.25).epsilon(1e-12));
    // dipole at distance 1: min(|x-y|, 2) * m
    const auto d1 = make_signed({{0.0, 1.0}, {1.0, -1.0}});
    CHECK(flat_norm(d1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(oracle::flat_norm_oracle(d1) == doctest::Approx(1.0).epsilon(1e-9));
    // far-apart dipole: capped by the sup-norm bound
    const auto d2 = make_signed({{0.0, 1.0}, {5.0, -1.0}});
    CHECK(flat_norm(d2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(oracle::flat_norm_oracle(d2) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("weighted_flat_norm frozen examples") {
    CHECK(weighted_flat_norm(make_signed({{2.0, 4.0}}), 1) == doctest::Approx(2.0).epsilon(1e-12));
    const auto d = make_signed({{1.0, 1.0}, {1.5, -1.0}});
    const double expected = oracle::weighted_flat_norm_oracle(d, 1);
    CHECK(weighted_flat_norm(d, 1) == doctest::Approx(expected).epsilon(1e-9));
    CHECK_THROWS_AS(weighted_flat_norm(make_signed({{0.0, 1.0}}), 1), std::invalid_argument);
    CHECK_THROWS_AS(weighted_flat_norm(make_signed({{1.0, 1.0}}), 3), std::invalid_argument);
}

TEST_CASE("flat distance of two equal-mass atoms is m*min(|x-y|,2)") {
    Rng rng(21);
    for (int t = 0; t < 50; ++t) {
        const double x = 3.0 * rng.uniform();
        const double y = 3.0 * rng.uniform();
        if (x == y) continue;
        const double m = 0.2 + 2.0 * rng.uniform();
        const auto d = make_signed({{x, m}, {y, -m}});
        CHECK(flat_norm(d) ==
              doctest::Approx(m * std::min(std::abs(x - y), 2.0)).epsilon(1e-12));
    }
}

TEST_CASE("flat_norm equals brute-force grid search on random instances") {
    Rng rng(42);
    for (int t = 0; t < 60; ++t) {
        const auto d = random_signed(rng, 6, false);
        CHECK(flat_norm(d) == doctest::Approx(oracle::flat_norm_oracle(d)).epsilon(1e-9));
    }
}

TEST_CASE("flat_norm is dominated by TV, equal for one-signed lists") {
    Rng rng(43);
    for (int t = 0; t < 60; ++t) {
        const auto d = random_signed(rng, 6, false);
        CHECK(flat_norm(d) <= tv_norm(d) + 1e-12);
        std::vector<Atom> positive;
        for (const Atom& a : d.atoms()) positive.push_back({a.location, std::abs(a.mass)});
        const SignedAtomList p(std::move(positive));
        CHECK(flat_norm(p) == doctest::Approx(tv_norm(p)).epsilon(1e-12));
    }
}

TEST_CASE("flat_norm norm axioms on random instances") {
    Rng rng(44);
    for (int t = 0; t < 40; ++t) {
        const auto d = random_signed(rng, 5, false);
        const double c = -2.0 + 4.0 * rng.uniform();
        std::vector<Atom> scaled;
        for (const Atom& a : d.atoms()) scaled.push_back({a.location, c * a.mass});
        CHECK(flat_norm(SignedAtomList(std::move(scaled))) ==
              doctest::Approx(std::abs(c) * flat_norm(d)).epsilon(1e-10));

        const auto e = random_signed(rng, 5, false);
        std::vector<Atom> sum;
        for (const Atom& a : d.atoms()) sum.push_back(a);
        for (const Atom& a : e.atoms()) sum.push_back(a);
        CHECK(flat_norm(SignedAtomList(std::move(sum))) <=
              flat_norm(d) + flat_norm(e) + 1e-10);
    }
}

TEST_CASE("weighted norm equals flat norm of the mass-rescaled list") {
    Rng rng(45);
    for (int t = 0; t < 40; ++t) {
        const auto d = random_signed(rng, 6, true);
        for (int e = 1; e <= 2; ++e) {
            std::vector<Atom> scaled;
            for (const Atom& a : d.atoms())
                scaled.push_back({a.location, a.mass / std::pow(a.location, e)});
            CHECK(weighted_flat_norm(d, e) ==
                  doctest::Approx(flat_norm(SignedAtomList(std::move(scaled)))).epsilon(1e-12));
        }
    }
}

TEST_CASE("weighted norm matches its own oracle") {
    Rng rng(46);
    for (int t = 0; t < 30; ++t) {
        const auto d = random_signed(rng, 5, true);
        CHECK(weighted_flat_norm(d, 1) ==
              doctest::Approx(oracle::weighted_flat_norm_oracle(d, 1)).epsilon(1e-9));
    }
}

TEST_CASE("exp_moment") {
    CHECK(exp_moment(DiscreteMeasure()) == 0.0);
    CHECK(exp_moment(DiscreteMeasure({1.0}, {2.0})) == doctest::Approx(2.0 * std::exp(1.0)));
    // a zero-location atom is not representable in DiscreteMeasure; the
    // e^0 = 1 case is covered by the limit location -> 0
    CHECK(exp_moment(DiscreteMeasure({1e-300}, {1.0})) == doctest::Approx(1.0));
}

TEST_CASE("tail_mass") {
    const DiscreteMeasure m({1.0, 2.0, 3.0}, {1.0, 1.0, 1.0});
    CHECK(tail_mass(m, 2.5) == doctest::Approx(1.0));
    CHECK(tail_mass(m, 5.0) == 0.0);
    CHECK(tail_mass(m, 1e-12) == doctest::Approx(tv_norm(m)));
    CHECK_THROWS_AS(tail_mass(m, 0.0), std::invalid_argument);
}

TEST_CASE("difference builds a merged signed list") {
    const DiscreteMeasure a({1.0, 2.0}, {1.0, 0.5});
    const DiscreteMeasure b({1.0, 3.0}, {0.25, 0.75});
    const auto d = difference(a, b);
    REQUIRE(d.size() == 3);
    CHECK(d.atoms()[0].mass == doctest::Approx(0.75));
    CHECK(d.atoms()[1].mass == doctest::Approx(0.5));
    CHECK(d.atoms()[2].mass == doctest::Approx(-0.75));
}
