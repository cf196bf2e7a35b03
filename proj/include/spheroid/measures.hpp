#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spheroid {

struct Atom {
    double location = 0.0;  // [mm]
    double mass = 0.0;
};

// Non-negative discrete Radon measure on the open half-line. Locations are
// strictly increasing and strictly positive (the interaction kernel and the
// 1/r weights are singular at 0); masses are >= 0.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    // throws std::invalid_argument on any invariant violation
    DiscreteMeasure(std::vector<double> locations, std::vector<double> masses);

    const std::vector<double>& locations() const { return locations_; }
    const std::vector<double>& masses() const { return masses_; }
    std::size_t size() const { return locations_.size(); }
    bool empty() const { return locations_.empty(); }

    // replaces masses, keeping the grid; validates non-negativity
    void set_masses(std::vector<double> masses);

private:
    std::vector<double> locations_;
    std::vector<double> masses_;
};

// Signed atom list representing a difference of measures. Atoms are kept
// sorted by location; atoms at identical locations are merged and exact
// zeros dropped. Location 0 is allowed here (the unweighted norms are well
// defined there); the weighted norms reject it.
class SignedAtomList {
public:
    SignedAtomList() = default;
    explicit SignedAtomList(std::vector<Atom> atoms);

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }

private:
    std::vector<Atom> atoms_;
};

// a - b as a signed atom list
SignedAtomList difference(const DiscreteMeasure& a, const DiscreteMeasure& b);

// total variation = sum of masses (all atoms non-negative)
double tv_norm(const DiscreteMeasure& m);

// TV of a signed list: sum of |mass|
double tv_norm(const SignedAtomList& d);

// Flat (bounded-Lipschitz) norm: sup of sum psi(x_k) w_k over test functions
// with ||psi||_inf <= 1 and Lip(psi) <= 1. Computed exactly: in one dimension
// the dual program only constrains psi at the atom locations, with
// |psi_k - psi_l| <= |x_k - x_l| needed for adjacent pairs only (telescoping
// implies the rest). Solved by propagating the concave piecewise-linear value
// function of the partial problem across atoms.
double flat_norm(const SignedAtomList& d);

// Flat norm with test functions psi(r)/r^e, e in {1, 2}. Same program with
// objective coefficients w_k / x_k^e. Rejects atoms at location <= 0.
double weighted_flat_norm(const SignedAtomList& d, int weight_exponent);

// integral of e^x against the measure; used for decay-estimate checks
double exp_moment(const DiscreteMeasure& m);

// mass strictly beyond r0
double tail_mass(const DiscreteMeasure& m, double r0);

}  // namespace spheroid
