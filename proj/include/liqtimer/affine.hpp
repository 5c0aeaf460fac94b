#pragma once

#include <functional>

// Building blocks for the affine closed forms: exponential integrals of the
// Gaussian model and Riccati solutions of the square-root model.

namespace liqtimer::affine {

/// (1 - e^{-k s}) / k, equal to s at k = 0.
double decay(double k, double s);

/// Integral over [0,s] of decay(k, z) dz.
double decay_integral(double k, double s);

/// Integral over [0,s] of decay(a, z) * decay(b, z) dz.
double decay_product_integral(double a, double b, double s);

/// Integral over [0,s] of e^{-a v} * decay(b, v) dv.
double discounted_decay_integral(double a, double b, double s);

/// Fixed-order Gauss-Legendre rule on [a,b]; exact for the smooth integrands
/// used here when the interval is short relative to the rates involved.
double gauss_legendre(const std::function<double(double)>& f, double a, double b);

/// Adaptive Simpson quadrature; used in tests and as a fallback.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol);

/// Composite Simpson over [a,b] starting at `panels`, doubled until two
/// successive estimates agree within `tol` (Richardson check).  Throws
/// std::runtime_error reporting the achieved tolerance on failure.
double composite_simpson(const std::function<double(double)>& f, double a, double b,
                         int panels = 400, double tol = 1e-8, int max_panels = 409600);

/**
 * One CIR factor dX = kappa (theta - X) dt + sigma sqrt(X) dW discounted at
 * weight * X:  E[exp(-int weight X)] = exp(log_a(s) - b(s) x).
 */
struct CirFactor {
    double kappa;
    double theta;
    double sigma;
    double weight;

    double xi() const;
    double log_a(double s) const;
    double b(double s) const;
    /// d b / d s.
    double b_prime(double s) const;
};

/**
 * Gaussian two-factor exponent for E[exp(-int (r + w lambda))] under
 *   dr = kr (tr - r) dt + sr dW1,
 *   dlambda = kl (ll - lambda) dt + sl (rho dW1 + sqrt(1-rho^2) dW2)
 * where ll and sl are the long-run level and volatility of lambda itself.
 * Result: exp(a(s) - decay(kr,s) r - w decay(kl,s) lambda).
 */
struct GaussianExponent {
    double kr, tr, sr;
    double kl, ll, sl;
    double rho;
    double w;

    double a(double s) const;
};

} // namespace liqtimer::affine
