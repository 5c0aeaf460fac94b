#pragma once

#include "liqtimer/models.hpp"

#include <functional>
#include <vector>

// One-factor reduction of a (claim, measure pair) in the market Q-intensity
// coordinate lambda.  This is what the finite-difference pricer and the VI
// solver discretize.

namespace liqtimer {

/// d lambda = speed (level - lambda) dt + sqrt(var_const + var_linear lambda) dW.
struct LambdaDynamics {
    double speed = 0.0;
    double level = 0.0;
    double var_const = 0.0;
    double var_linear = 0.0;

    double drift(double l) const { return speed * (level - l); }
    double variance(double l) const { return std::max(0.0, var_const + var_linear * l); }
};

/// Jumps of lambda at rate `rate_scale * lambda`, size sizes[j] with prob probs[j].
struct LambdaJumps {
    double rate_scale = 0.0;
    std::vector<double> sizes;
    std::vector<double> probs;

    bool empty() const { return sizes.empty() || rate_scale == 0.0; }
    double mean() const;
    double second_moment() const;
};

struct OneFactorProblem {
    ModelKind kind = ModelKind::Ou;
    ClaimSpec claim = ZeroRecoveryBond{1.0};
    double maturity = 1.0;
    double intensity_ratio = 1.0;
    /// lambda >= 0 (square-root models); otherwise Gaussian with lambda_min < 0.
    bool nonnegative = false;
    /// Investor discounting includes the investor intensity (single-name claims).
    bool killing = true;

    LambdaDynamics market;
    LambdaDynamics investor;
    LambdaJumps market_jumps;
    LambdaJumps investor_jumps;

    /// Short rate as a function of lambda.
    std::function<double(double)> rate;
    /// Market pre-default price, investor price (both at market lambda).
    std::function<double(double t, double l)> price;
    std::function<double(double t, double l)> investor_price;
    /// dC/dlambda (closed form).
    std::function<double(double t, double l)> price_slope;
    /// G(t, .) evaluated on a row of lambdas.
    std::function<std::vector<double>(double t, const std::vector<double>& l)> drift_row;
    /// Recovery paid at default, dividend rate.
    std::function<double(double t, double l)> recovery;
    std::function<double(double t)> dividend;
    double payoff = 1.0;
    /// Full model state for a lambda (used for reporting and Monte Carlo).
    std::function<StateVector(double l)> state_of;
    std::function<double(const StateVector& x)> lambda_of;

    /// Market minus investor drift of lambda.
    double drift_gap(double l) const { return market.drift(l) - investor.drift(l); }
    double investor_discount(double l) const { return rate(l) + (killing ? intensity_ratio * l : 0.0); }
    double market_discount(double l) const { return rate(l) + (killing ? l : 0.0); }

    /// Default domain: [0 or lambda_min, lambda_max].
    double default_lambda_min() const;
    double default_lambda_max() const;
};

/**
 * Builds the one-factor problem.  `base` supplies state components that are
 * not lambda: the constant short rate for OU ({r, lambda}) and the default
 * count for TopDown ({lambda, n, upsilon}).  OU requires a constant rate
 * (kappa_r = sigma_r = 0); CIR requires a single factor with w_l > 0.
 */
OneFactorProblem make_problem(const MeasurePair& pair, const ClaimSpec& claim, const StateVector& base);

/// Market or investor measure selector.
enum class Measure { Market, Investor };

} // namespace liqtimer
