#pragma once

#include "liqtimer/boundary.hpp"
#include "liqtimer/mc_oracle.hpp"
#include "liqtimer/models.hpp"
#include "liqtimer/vi_solver.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace liqtimer {

/// Bad configuration file: syntax, schema or parameter validation.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ProblemKind { Liquidation, Purchase, Sequential };

struct GridConfig {
    int M = 200;
    int K = 400;
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
};

struct BoundaryConfig {
    /// Action-region threshold; negative means 10 * solver tol.
    double eps = -1.0;
    BoundaryInterpolation interpolation = BoundaryInterpolation::SmoothFit;
    std::optional<Side> side;
};

struct McConfig {
    long paths = 100000;
    std::uint64_t seed = 20240601;
    int steps_per_year = 500;
    DefaultHandling defaults = DefaultHandling::Sampled;
};

struct VerifyConfig {
    /// Grid cells by which the boundary is moved before the V = P + L check.
    int boundary_shift_cells = 0;
    int perturbation_cells = 2;
};

struct RunConfig {
    RunConfig(MeasurePair p, ClaimSpec c) : pair(std::move(p)), claim(std::move(c)) {}

    MeasurePair pair;
    ClaimSpec claim;
    double t0 = 0.0;
    /// Initial state in the model layout (OU {r, lambda}, CIR x, TopDown {lambda, n, upsilon}).
    StateVector state0;
    ProblemKind problem = ProblemKind::Liquidation;
    GridConfig grid;
    SolverConfig solver;
    BoundaryConfig boundary;
    McConfig mc;
    VerifyConfig verify;
    std::string out_dir = "out";
    std::string name;
    /// FNV-1a of the canonical (sorted-key) JSON text.
    std::string hash;

    double boundary_eps() const { return boundary.eps >= 0 ? boundary.eps : 10.0 * solver.tol; }
};

RunConfig parse_config(const std::string& text, const std::string& name = "config");
RunConfig load_config(const std::string& path);

std::string fnv1a_hex(const std::string& s);
const char* to_string(ProblemKind k);

} // namespace liqtimer
