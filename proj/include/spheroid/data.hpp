#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spheroid/model.hpp"
#include "spheroid/solver.hpp"

namespace spheroid {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Observation {
    double time = 0.0;    // [day]
    double radius = 0.0;  // [mm]
    bool operator==(const Observation&) const = default;
};

// Observed spheroid radii over time. Internally everything is a radius;
// diameters are halved at ingestion.
struct Dataset {
    std::string cell_line = "custom";
    std::vector<Observation> observations;
    std::optional<std::pair<double, double>> window;  // [day, day]

    void validate() const;  // strictly increasing times, radii > 0, window respected
};

enum class LengthUnit { radius, diameter };

struct LoadOptions {
    LengthUnit unit = LengthUnit::diameter;
    std::optional<std::pair<double, double>> window;
    std::string cell_line = "custom";
};

// CSV with header time_day,value_mm; lines starting with # are comments.
// Values are halved when unit is diameter; rows outside the window dropped.
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options);
Dataset parse_dataset(std::istream& is, const LoadOptions& options, const std::string& origin);

// Inverse of load_dataset for unit=radius files; round-trips bit-exactly.
void write_dataset(std::ostream& os, const Dataset& d);

// Forward-model radii at the given times multiplied by lognormal noise
// exp(sigma_o * z), z ~ N(0,1), drawn from the seeded stream.
Dataset synthesize(const ModelParams& theta_true, const DiscretizationConfig& cfg,
                   const QuantileConfig& qcfg, std::span<const double> times,
                   std::uint64_t seed);

struct ParamPrior {
    double location = 0.0;  // mean of the log-parameter
    double scale = 1.0;     // SD of the log-parameter
};

struct PriorSpec {
    ParamPrior alpha;
    ParamPrior sigma_k;
    ParamPrior sigma_o;
    ParamPrior sigma_i;

    void validate() const;  // all scales > 0
};

// Per-cell-line log-normal priors: locations are logs of the literature
// medians (alpha 1.4/1.04/0.9, sigma_k 0.06/0.06/0.09, sigma_i
// 0.264/0.403/0.733 for L-5178Y/V-79/B-16), sigma_o location 0; scales 1
// except sigma_o with scale 5.
PriorSpec builtin_priors(const std::string& cell_line);

// 1.065 for L-5178Y and V-79, 1.06 for B-16
double default_sigma_tilde_ratio(const std::string& cell_line);

bool is_builtin_cell_line(const std::string& cell_line);

}  // namespace spheroid
