#pragma once

#include "liqtimer/models.hpp"

// Closed-form pre-default market prices.  All intensities passed in are the
// pricing intensity of the parameter set given (lambda = mu * lambda_hat).

namespace liqtimer {

double ou_bond_price(const OuParams& p, double t, double T, double r, double lambda);
double ou_default_free_bond(const OuParams& p, double t, double T, double r);
/// Recovery of market value: intensity weight scaled by (1 - c).
double ou_rmv_bond_price(const OuParams& p, double t, double T, double r, double lambda, double c);

double cir_bond_price(const CirParams& p, double t, double T, const StateVector& x);
double cir_default_free_bond(const CirParams& p, double t, double T, const StateVector& x);
double cir_rmv_bond_price(const CirParams& p, double t, double T, const StateVector& x, double c);

double default_free_bond(const ModelParams& m, double t, double T, const StateVector& x);
double zero_recovery_bond_price(const ModelParams& m, double t, double T, const StateVector& x);
double rt_bond_price(const ModelParams& m, double t, double T, const StateVector& x, double c);
double rmv_bond_price(const ModelParams& m, double t, double T, const StateVector& x, double c);

/// Digital CDS (unit protection, premium rate p0) for the protection buyer.
double cds_price_ou(const OuParams& p, double t, double T, double r, double lambda, double p0);
double cds_price_cir(const CirParams& p, double t, double T, const StateVector& x, double p0);
double cds_price(const ModelParams& m, double t, double T, const StateVector& x, double p0);

/// Batched CDS evaluation: for every state returns {C, dC/dx_1, ...}.  The
/// maturity-integral is shared across states.
std::vector<StateVector> cds_value_gradient(const ModelParams& m, double t, double T,
                                            const std::vector<StateVector>& xs, double p0);

/// Forward CDS with protection on (Ta, T].  Requires t < Ta <= T.
double forward_cds_price(const ModelParams& m, double t, double Ta, double T, const StateVector& x,
                         double pa);

struct CdxCoefficients {
    double k2 = 0.0;
    double k1 = 0.0;
    double k0 = 0.0;
};

/// Coefficients of C^CDX(t, lambda, n) = k2 lambda + k1 n + k0.  The formulas
/// have removable singularities at r = 0 and rho_eff = 0 which are rejected.
CdxCoefficients cdx_coefficients(const TopDownParams& p, double p0, double t, double T);

struct CdxMoments {
    double defaults = 0.0; ///< E[N_u]
    double loss = 0.0;     ///< E[Upsilon_u]
};

CdxMoments cdx_moments(const TopDownParams& p, double t, double u, double lambda, double n,
                       double upsilon);

double cdx_price(const TopDownParams& p, double p0, double t, double T, double lambda, double n);

// ---------------------------------------------------------------------------
// Generic claim interface.  State vectors follow the model layout.
// ---------------------------------------------------------------------------

/// Pre-default price C(t, x) of the claim.
double claim_price(const ModelParams& m, const ClaimSpec& c, double t, const StateVector& x);

/// Analytic gradient of C with respect to the state vector.
StateVector claim_gradient(const ModelParams& m, const ClaimSpec& c, double t, const StateVector& x);

/// Recovery R(t, x) paid at default.
double claim_recovery(const ModelParams& m, const ClaimSpec& c, double t, const StateVector& x);

/// Continuous dividend rate q(t) (premium outflow for swaps).
double claim_dividend_rate(const ClaimSpec& c, double t);

/// Terminal payoff Y at maturity.
double terminal_payoff(const ClaimSpec& c);

/// Pricing intensity of the state vector under the given parameter set.
double pricing_intensity(const ModelParams& m, const StateVector& x);

/// Short rate of the state vector.
double short_rate(const ModelParams& m, const StateVector& x);

/// Converts a state written in market-intensity coordinates into the
/// coordinates the investor parameter set expects (lambda~ = (mu~/mu) lambda).
StateVector investor_state(const MeasurePair& pair, const StateVector& x);

} // namespace liqtimer
