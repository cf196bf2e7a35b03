#include "spheroid/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spheroid {

DiscreteMeasure::DiscreteMeasure(std::vector<double> locations, std::vector<double> masses)
    : locations_(std::move(locations)), masses_(std::move(masses)) {
    if (locations_.size() != masses_.size())
        throw std::invalid_argument("DiscreteMeasure: location/mass size mismatch");
    double prev = 0.0;
    for (std::size_t i = 0; i < locations_.size(); ++i) {
        const double x = locations_[i];
        if (!(x > 0.0) || !std::isfinite(x))
            throw std::invalid_argument("DiscreteMeasure: locations must be strictly positive");
        if (i > 0 && !(x > prev))
            throw std::invalid_argument("DiscreteMeasure: locations must be strictly increasing");
        prev = x;
        if (!(masses_[i] >= 0.0) || !std::isfinite(masses_[i]))
            throw std::invalid_argument("DiscreteMeasure: masses must be non-negative and finite");
    }
}

void DiscreteMeasure::set_masses(std::vector<double> masses) {
    if (masses.size() != locations_.size())
        throw std::invalid_argument("DiscreteMeasure: mass vector size mismatch");
    for (double m : masses)
        if (!(m >= 0.0) || !std::isfinite(m))
            throw std::invalid_argument("DiscreteMeasure: masses must be non-negative and finite");
    masses_ = std::move(masses);
}

SignedAtomList::SignedAtomList(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (const Atom& a : atoms_)
        if (!std::isfinite(a.location) || !std::isfinite(a.mass))
            throw std::invalid_argument("SignedAtomList: non-finite atom");
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const Atom& a, const Atom& b) { return a.location < b.location; });
    std::vector<Atom> merged;
    merged.reserve(atoms_.size());
    for (const Atom& a : atoms_) {
        if (!merged.empty() && merged.back().location == a.location)
            merged.back().mass += a.mass;
        else
            merged.push_back(a);
    }
    std::erase_if(merged, [](const Atom& a) { return a.mass == 0.0; });
    atoms_ = std::move(merged);
}

SignedAtomList difference(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    std::vector<Atom> atoms;
    atoms.reserve(a.size() + b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        atoms.push_back({a.locations()[i], a.masses()[i]});
    for (std::size_t i = 0; i < b.size(); ++i)
        atoms.push_back({b.locations()[i], -b.masses()[i]});
    return SignedAtomList(std::move(atoms));
}

double tv_norm(const DiscreteMeasure& m) {
    double s = 0.0;
    for (double v : m.masses()) s += v;
    return s;
}

double tv_norm(const SignedAtomList& d) {
    double s = 0.0;
    for (const Atom& a : d.atoms()) s += std::abs(a.mass);
    return s;
}

namespace {

// Concave piecewise-linear function on [-1, 1]. pieces_[i] is valid on
// [pieces_[i].x, pieces_[i+1].x) with the last piece extending to 1.
// Slopes are non-increasing (concavity), which the two update operations
// preserve exactly.
struct ConcavePl {
    struct Piece {
        double x;
        double value;  // value at x
        double slope;
    };
    std::vector<Piece> pieces;

    static ConcavePl linear(double w) { return ConcavePl{{{-1.0, -w, w}}}; }

    void add_linear(double w) {
        for (Piece& p : pieces) {
            p.value += w * p.x;
            p.slope += w;
        }
    }

    double max_value() const {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const double xr = (i + 1 < pieces.size()) ? pieces[i + 1].x : 1.0;
            best = std::max(best, pieces[i].value);
            best = std::max(best, pieces[i].value + pieces[i].slope * (xr - pieces[i].x));
        }
        return best;
    }

    // Replaces V by psi -> max{ V(u) : |u - psi| <= d, u in [-1,1] }, then
    // restricts to [-1, 1]. For concave V this shifts the rising part left by
    // d, the falling part right by d, and inserts a flat plateau at the max.
    void window_max(double d) {
        // argmax interval [p, q]
        std::size_t first_nonpos = pieces.size();
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            if (pieces[i].slope <= 0.0) {
                first_nonpos = i;
                break;
            }
        }
        double p, q, vmax;
        if (first_nonpos == pieces.size()) {
            // strictly increasing everywhere: max at the right end
            const Piece& last = pieces.back();
            p = q = 1.0;
            vmax = last.value + last.slope * (1.0 - last.x);
        } else {
            p = pieces[first_nonpos].x;
            vmax = pieces[first_nonpos].value;
            q = p;
            // extend across an exactly-flat top
            std::size_t j = first_nonpos;
            while (j < pieces.size() && pieces[j].slope == 0.0) {
                q = (j + 1 < pieces.size()) ? pieces[j + 1].x : 1.0;
                ++j;
            }
        }

        std::vector<Piece> out;
        out.reserve(pieces.size() + 2);
        for (std::size_t i = 0; i < first_nonpos; ++i)
            out.push_back({pieces[i].x - d, pieces[i].value, pieces[i].slope});
        out.push_back({p - d, vmax, 0.0});
        for (std::size_t i = first_nonpos; i < pieces.size(); ++i)
            if (pieces[i].slope < 0.0)
                out.push_back({pieces[i].x + d, pieces[i].value, pieces[i].slope});

        // clip to [-1, 1]
        std::vector<Piece> clipped;
        clipped.reserve(out.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double xr = (i + 1 < out.size()) ? out[i + 1].x : 1.0;
            if (xr <= -1.0) continue;
            Piece pc = out[i];
            if (pc.x < -1.0) {
                pc.value += pc.slope * (-1.0 - pc.x);
                pc.x = -1.0;
            }
            if (pc.x >= 1.0) continue;
            clipped.push_back(pc);
        }
        if (clipped.empty()) clipped.push_back({-1.0, vmax, 0.0});
        pieces = std::move(clipped);
    }
};

double flat_norm_core(std::span<const double> locations, std::span<const double> weights) {
    if (locations.empty()) return 0.0;
    ConcavePl v = ConcavePl::linear(weights[0]);
    for (std::size_t k = 1; k < locations.size(); ++k) {
        v.window_max(locations[k] - locations[k - 1]);
        v.add_linear(weights[k]);
    }
    return v.max_value();
}

}  // namespace

double flat_norm(const SignedAtomList& d) {
    std::vector<double> xs, ws;
    xs.reserve(d.size());
    ws.reserve(d.size());
    for (const Atom& a : d.atoms()) {
        xs.push_back(a.location);
        ws.push_back(a.mass);
    }
    return flat_norm_core(xs, ws);
}

double weighted_flat_norm(const SignedAtomList& d, int weight_exponent) {
    if (weight_exponent != 1 && weight_exponent != 2)
        throw std::invalid_argument("weighted_flat_norm: exponent must be 1 or 2");
    std::vector<double> xs, ws;
    xs.reserve(d.size());
    ws.reserve(d.size());
    for (const Atom& a : d.atoms()) {
        if (!(a.location > 0.0))
            throw std::invalid_argument("weighted_flat_norm: atom at location <= 0");
        xs.push_back(a.location);
        const double x_e = weight_exponent == 1 ? a.location : a.location * a.location;
        ws.push_back(a.mass / x_e);
    }
    return flat_norm_core(xs, ws);
}

double exp_moment(const DiscreteMeasure& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += std::exp(m.locations()[i]) * m.masses()[i];
    return s;
}

double tail_mass(const DiscreteMeasure& m, double r0) {
    if (!(r0 > 0.0)) throw std::invalid_argument("tail_mass: r0 must be > 0");
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m.locations()[i] > r0) s += m.masses()[i];
    return s;
}

}  // namespace spheroid
