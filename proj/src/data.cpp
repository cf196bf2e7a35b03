#include "spheroid/data.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "spheroid/format.hpp"
#include "spheroid/rng.hpp"

namespace spheroid {

void Dataset::validate() const {
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const Observation& o = observations[i];
        if (!std::isfinite(o.time) || !std::isfinite(o.radius))
            throw std::invalid_argument("Dataset: non-finite observation");
        if (!(o.radius > 0.0)) throw std::invalid_argument("Dataset: radii must be > 0");
        if (i > 0 && !(o.time > observations[i - 1].time))
            throw std::invalid_argument("Dataset: times must be strictly increasing");
        if (window && (o.time < window->first || o.time > window->second))
            throw std::invalid_argument("Dataset: observation outside the declared window");
    }
    if (window && !(window->first < window->second))
        throw std::invalid_argument("Dataset: window start must precede window end");
}

Dataset parse_dataset(std::istream& is, const LoadOptions& options, const std::string& origin) {
    Dataset d;
    d.cell_line = options.cell_line;
    d.window = options.window;

    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        if (!header_seen) {
            auto cols = split(sv, ',');
            if (cols.size() != 2 || trim(cols[0]) != "time_day" || trim(cols[1]) != "value_mm")
                throw ParseError(origin + ":" + std::to_string(lineno) +
                                 ": expected header time_day,value_mm");
            header_seen = true;
            continue;
        }
        auto cols = split(sv, ',');
        if (cols.size() != 2)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected two columns");
        const auto t = parse_double(cols[0]);
        const auto v = parse_double(cols[1]);
        if (!t || !v)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": malformed number");
        if (!(*v > 0.0))
            throw ParseError(origin + ":" + std::to_string(lineno) + ": value must be > 0");
        if (options.window && (*t < options.window->first || *t > options.window->second))
            continue;
        const double radius = options.unit == LengthUnit::diameter ? *v / 2.0 : *v;
        if (!d.observations.empty() && !(*t > d.observations.back().time))
            throw ParseError(origin + ":" + std::to_string(lineno) +
                             ": times must be strictly increasing");
        d.observations.push_back({*t, radius});
    }
    if (!header_seen) throw ParseError(origin + ": missing header time_day,value_mm");
    d.validate();
    return d;
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open dataset file " + path.string());
    return parse_dataset(f, options, path.string());
}

void write_dataset(std::ostream& os, const Dataset& d) {
    os << "time_day,value_mm\n";
    for (const Observation& o : d.observations)
        os << format_double(o.time) << ',' << format_double(o.radius) << '\n';
}

Dataset synthesize(const ModelParams& theta_true, const DiscretizationConfig& cfg,
                   const QuantileConfig& qcfg, std::span<const double> times,
                   std::uint64_t seed) {
    const DiscreteMeasure initial = initial_masses(theta_true, cfg);
    const Trajectory traj = integrate(initial, theta_true, cfg, times, qcfg);
    Rng rng(seed);
    Dataset d;
    d.cell_line = "synthetic";
    d.observations.reserve(times.size());
    const double so = theta_true.sigma_o();
    for (std::size_t i = 0; i < times.size(); ++i)
        d.observations.push_back({times[i], traj.radii[i] * std::exp(so * rng.normal())});
    d.validate();
    return d;
}

void PriorSpec::validate() const {
    for (const ParamPrior* p : {&alpha, &sigma_k, &sigma_o, &sigma_i})
        if (!(p->scale > 0.0) || !std::isfinite(p->scale) || !std::isfinite(p->location))
            throw std::invalid_argument("PriorSpec: scales must be > 0 and finite");
}

bool is_builtin_cell_line(const std::string& cell_line) {
    return cell_line == "L-5178Y" || cell_line == "V-79" || cell_line == "B-16";
}

PriorSpec builtin_priors(const std::string& cell_line) {
    PriorSpec s;
    if (cell_line == "L-5178Y") {
        s.alpha = {std::log(1.4), 1.0};
        s.sigma_k = {std::log(0.06), 1.0};
        s.sigma_i = {std::log(0.264), 1.0};
    } else if (cell_line == "V-79") {
        s.alpha = {std::log(1.04), 1.0};
        s.sigma_k = {std::log(0.06), 1.0};
        s.sigma_i = {std::log(0.403), 1.0};
    } else if (cell_line == "B-16") {
        s.alpha = {std::log(0.9), 1.0};
        s.sigma_k = {std::log(0.09), 1.0};
        s.sigma_i = {std::log(0.733), 1.0};
    } else {
        throw std::invalid_argument("unknown cell line '" + cell_line +
                                    "'; custom lines must supply a full prior spec");
    }
    s.sigma_o = {0.0, 5.0};
    return s;
}

double default_sigma_tilde_ratio(const std::string& cell_line) {
    return cell_line == "B-16" ? 1.06 : 1.065;
}

}  // namespace spheroid
