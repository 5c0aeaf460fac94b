#pragma once

#include "liqtimer/drift.hpp"
#include "liqtimer/problem.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace liqtimer {

/// Uniform time x intensity lattice.
struct Grid {
    std::vector<double> t_nodes;
    std::vector<double> lambda_nodes;

    static Grid uniform(double T, int M, double lambda_min, double lambda_max, int K);

    int M() const { return static_cast<int>(t_nodes.size()) - 1; }
    int K() const { return static_cast<int>(lambda_nodes.size()) - 1; }
    double dt() const { return t_nodes[1] - t_nodes[0]; }
    double h() const { return lambda_nodes[1] - lambda_nodes[0]; }
    double lambda_min() const { return lambda_nodes.front(); }
    double lambda_max() const { return lambda_nodes.back(); }
    bool same_as(const Grid& o) const;
};

/// Grid over [0, T] with the problem's default lambda range unless overridden.
Grid make_grid(const OneFactorProblem& p, int M, int K, std::optional<double> lambda_min = {},
               std::optional<double> lambda_max = {});

enum class JumpMode { Taylor2, ExactInterp };

struct SolverConfig {
    double omega = 1.5;
    double tol = 1e-9;
    int max_iter = 10000;
    JumpMode jump_mode = JumpMode::Taylor2;
};

enum class PremiumKind { Liquidation, Purchase, Cdx, Sequential };

const char* to_string(PremiumKind k);

struct PremiumSurface {
    PremiumKind kind = PremiumKind::Liquidation;
    Grid grid;
    /// values[m][k] at (t_nodes[m], lambda_nodes[k]).
    std::vector<std::vector<double>> values;
    /// Drift function G on the same lattice (unsigned; the purchase problem
    /// uses -G as its source).
    std::vector<std::vector<double>> drift;
    std::vector<int> iterations;
    /// Worst complementarity residual |min(A x - b, x - obstacle)| per step.
    std::vector<double> residuals;
    double omega_used = 1.5;
    int upwinded_nodes = 0;
    std::vector<std::string> warnings;

    double max_residual() const;
    /// Bilinear interpolation, clamped to the lattice.
    double interpolate(double t, double lambda) const;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double worst_residual, int step)
        : std::runtime_error(what), worst_residual(worst_residual), step(step) {}
    double worst_residual;
    int step;
};

/// min(-dL/dt - L_{b~,lambda~} L - G, L) = 0, L(T) = 0.
PremiumSurface solve_liquidation_vi(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg);

/// Same obstacle problem with source -G.
PremiumSurface solve_purchase_vi(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg);

/// CDX premium: discounting at r only, jump term per cfg.jump_mode.
PremiumSurface solve_cdx_vi(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg);

/// min(-dU/dt - L U, U - Lhat) = 0, U(T) = 0.  Throws DomainError when the
/// grids differ.
PremiumSurface solve_sequential_vi(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg,
                                   const PremiumSurface& lhat);

/// Value of a fixed stopping rule (stop[m][k] true where the holder acts) for
/// the liquidation (+G), purchase (-G) or CDX source: one direct tridiagonal
/// solve per step, no projection.
std::vector<std::vector<double>> evaluate_policy(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg,
                                                 PremiumKind kind, const std::vector<std::vector<char>>& stop);

/// Unconstrained buy-sell value: the optimal sell rule {Lhat = 0} and the
/// optimal buy rule {Lhat^b = 0} evaluated independently and added.
std::vector<std::vector<double>> unconstrained_round_trip(const OneFactorProblem& p, const Grid& g,
                                                          const SolverConfig& cfg, const PremiumSurface& lhat,
                                                          const PremiumSurface& lbhat);

/// G on every lattice node.
std::vector<std::vector<double>> drift_grid(const OneFactorProblem& p, const Grid& g);

struct DeterministicPremium {
    double value = 0.0;
    double t_star = 0.0;
    std::vector<double> candidates;
};

/// sup over t <= s <= T of int_t^s e^{-int (r + lambda~)} G du, evaluated at
/// the candidate times {t, T} and the roots of G.
DeterministicPremium deterministic_premium(const DeterministicInputs& in, double t, double T);

} // namespace liqtimer
