#pragma once

#include "liqtimer/boundary.hpp"
#include "liqtimer/models.hpp"
#include "liqtimer/problem.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace liqtimer {

/// Per-path random stream; the seed is derived from (seed, path, salt) so a
/// batch is reproducible regardless of how paths are split across threads.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t path, std::uint64_t salt = 0);
    double uniform();
    double normal();
    double exponential();
    long poisson(double mean);
    double gamma(double shape, double scale);
    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_;
};

struct PathBatch {
    ModelKind kind = ModelKind::Ou;
    Measure measure = Measure::Market;
    int n_paths = 0;
    int n_steps = 0;
    std::uint64_t seed = 0;
    int dim = 0;
    std::vector<double> times;
    /// states[(path * (n_steps + 1) + step) * dim + component]
    std::vector<double> states;
    /// Integral of the measure's default intensity (lambda under Q, lambda~
    /// under Q~) from times[0], per path and step.
    std::vector<double> integrated_intensity;
    std::vector<double> integrated_rate;
    std::string scheme;

    double state(int path, int step, int comp) const
    {
        return states[(static_cast<std::size_t>(path) * (n_steps + 1) + step) * dim + comp];
    }
    double intensity_integral(int path, int step) const
    {
        return integrated_intensity[static_cast<std::size_t>(path) * (n_steps + 1) + step];
    }
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
    std::uint64_t seed = 0;

    /// (mean - target) / std_error; 0 when both coincide with zero error.
    double z(double target) const;
};

/// Worker threads: LIQTIMER_THREADS if set, else hardware concurrency.
int mc_threads();

/// OU by the exact Gaussian transition, CIR by the exact noncentral
/// chi-square transition.  x0 uses the model state layout.
PathBatch simulate_paths(const MeasurePair& pair, Measure measure, const StateVector& x0, double horizon,
                         int n_paths, int n_steps, std::uint64_t seed);

/// Top-down (lambda, N, Upsilon) paths.  Between events lambda follows the
/// exact square-root transition; events come from thinning on each substep
/// against max(lambda_start, lambda_end) with lambda linear inside the substep.
PathBatch simulate_topdown(const MeasurePair& pair, Measure measure, const StateVector& x0, double horizon,
                           int n_paths, std::uint64_t seed, int steps_per_year = 100);

/// Default times (absolute, from times[0]) by inverting the integrated
/// intensity against unit exponentials; +inf when never reached.
std::vector<double> simulate_default(const PathBatch& batch, std::uint64_t seed);

struct McOptions {
    int steps_per_year = 500;
};

/// Survival-weighted estimator of the pre-default market price.  CDX claims
/// are priced from simulated top-down legs.
McEstimate estimate_price(const ClaimSpec& claim, const ModelParams& market, double t0, const StateVector& x0,
                          long n_paths, std::uint64_t seed, const McOptions& opt = {});

enum class DefaultHandling {
    /// Explicit default draw against the investor intensity.
    Sampled,
    /// Default conditioned out: survival weights exp(-int lambda~).
    SurvivalWeighted,
};

struct StrategyOptions {
    int steps_per_year = 500;
    DefaultHandling defaults = DefaultHandling::Sampled;
};

/**
 * E^{Q~}[e^{-int r} P_tau] for tau = first time (t, lambda) enters the
 * boundary's action region, or default, or maturity.  P is the cumulative
 * market price: pre-default closed-form price plus dividends and recovery
 * received.  Throws DomainError when the boundary does not span [t0, T].
 */
McEstimate evaluate_strategy(const ClaimSpec& claim, const MeasurePair& pair, const Boundary& boundary, double t0,
                             const StateVector& x0, long n_paths, std::uint64_t seed,
                             const StrategyOptions& opt = {});

} // namespace liqtimer
