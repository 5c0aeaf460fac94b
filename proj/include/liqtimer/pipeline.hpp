#pragma once

#include "liqtimer/boundary.hpp"
#include "liqtimer/config.hpp"
#include "liqtimer/mc_oracle.hpp"
#include "liqtimer/problem.hpp"
#include "liqtimer/vi_solver.hpp"

#include <optional>
#include <string>
#include <vector>

// Orchestration shared by the command line front end and the tests.

namespace liqtimer {

/// State components other than lambda that the one-factor problem needs.
StateVector problem_base(const RunConfig& c);

/// Market intensity of the configured initial state.
double initial_lambda(const RunConfig& c);

struct NamedBoundary {
    std::string name;
    Boundary boundary;
};

struct SolveResult {
    OneFactorProblem problem;
    Grid grid;
    std::optional<PremiumSurface> liquidation;
    std::optional<PremiumSurface> purchase;
    /// Sequential buy-then-sell premium U.
    std::optional<PremiumSurface> sequential;
    std::vector<NamedBoundary> boundaries;
    double seconds = 0.0;

    const Boundary& boundary(const std::string& name) const;
};

/// Solves the configured problem and extracts its boundaries:
///   liquidation -> "liquidation"; purchase -> "purchase";
///   sequential  -> "liquidation", "purchase", "purchase_constrained"
/// (the last one is the region {U - Lhat <= eps}).
SolveResult run_solve(const RunConfig& c);

/// Lambda where G changes sign on each time row (linear interpolation).
struct LocusPoint {
    double t;
    double lambda;
};
std::vector<LocusPoint> drift_zero_locus(const Grid& g, const std::vector<std::vector<double>>& drift);

struct Check {
    std::string name;
    double estimate = 0.0;
    double target = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    bool pass = false;
    std::string note;
};

/// Oracle suite: MC price vs closed form, strategy value vs C + Lhat (or
/// C - Lhat^b for purchases), and the boundary perturbation check.
std::vector<Check> run_verify(const RunConfig& c, const SolveResult& s);

} // namespace liqtimer
