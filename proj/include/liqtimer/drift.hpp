#pragma once

#include "liqtimer/models.hpp"
#include "liqtimer/pricers.hpp"

#include <functional>

// Drift function G(t, x) of the delayed liquidation premium.  Positive G means
// the investor gains by waiting, negative G favours an immediate sale.

namespace liqtimer {

using PriceFunction = std::function<double(double t, const StateVector& x)>;
using RecoveryFunction = std::function<double(double t, const StateVector& x)>;

/// Core two-term formula: -grad(C) . (Sigma phi) + (R - C)(mu~ - mu) lambda_hat.
double g_from_gradient(const MeasurePair& pair, double t, const StateVector& x, double price,
                       const StateVector& gradient, double recovery);

/// G with the gradient of C taken by centered differences of step h per
/// coordinate (one-sided when x_i - h would leave a nonnegative domain).
double g_general(const MeasurePair& pair, const PriceFunction& price, const RecoveryFunction& recovery,
                 double t, const StateVector& x, double h = 1e-5);

/// Closed-form drifts.
double g_bond_ou(const MeasurePair& pair, double t, double T, double r, double lambda);
double g_bond_cir(const MeasurePair& pair, double t, double T, const StateVector& x);
double g_rt(const MeasurePair& pair, double t, double T, const StateVector& x, double c);
double g_cds(const MeasurePair& pair, double t, double T, const StateVector& x, double p0);
double g_cdx(const MeasurePair& pair, double p0, double t, double T, double lambda);

/// Dispatch on the claim; x in market coordinates.
double g_claim(const MeasurePair& pair, const ClaimSpec& claim, double t, const StateVector& x);

/// g_claim over many states at one time (CDS quadrature shared).
std::vector<double> g_claim_row(const MeasurePair& pair, const ClaimSpec& claim, double t,
                                const std::vector<StateVector>& xs);

/**
 * G on a one-factor price surface values[i][k] over (t_nodes[i],
 * lambda_nodes[k]).  dC/dlambda by centered differences, one-sided at the
 * edges.  gap(lambda) is the market minus investor drift of lambda and
 * recovery(t, lambda) the recovery.  Throws DomainError for fewer than 3
 * lambda nodes.
 */
std::vector<std::vector<double>> g_from_surface(const std::vector<double>& t_nodes,
                                                const std::vector<double>& lambda_nodes,
                                                const std::vector<std::vector<double>>& values,
                                                const std::function<double(double)>& gap,
                                                const std::function<double(double, double)>& recovery,
                                                double intensity_ratio);

// ---------------------------------------------------------------------------
// Deterministic special case
// ---------------------------------------------------------------------------

/// Piecewise-linear schedule, constant beyond its end points.
struct Schedule {
    std::vector<double> times;
    std::vector<double> values;

    static Schedule constant(double v) { return {{0.0}, {v}}; }
    double operator()(double t) const;
};

struct DeterministicInputs {
    Schedule r;
    Schedule lambda_hat;
    Schedule mu;
    Schedule mu_investor;
    Schedule recovery;
    Schedule dividend = Schedule::constant(0.0);
    double maturity = 1.0;
    double payoff = 1.0;
};

/// C on the uniform grid t + j (T - t)/n, j = 0..n.
std::vector<double> deterministic_price_path(const DeterministicInputs& in, double t, int n);

/// Market pre-default price C(t) of the deterministic claim.
double deterministic_price(const DeterministicInputs& in, double t);

/// G(t) = (R(t) - C(t)) (mu~(t) - mu(t)) lambda_hat(t).
double g_deterministic(const DeterministicInputs& in, double t);

} // namespace liqtimer
