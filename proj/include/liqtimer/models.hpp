#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace liqtimer {

/// Thrown for inputs outside a function's domain (t > T, c out of range, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a parameter set or measure pair is inconsistent.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using StateVector = std::vector<double>;

/**
 * Two-factor Gaussian model for the short rate r and the historical default
 * intensity.  Parameters are stated for the historical-intensity coordinate;
 * the pricing intensity is lambda = mu * lambda_hat, so its volatility is
 * mu * sigma_l and its long-run level mu * theta_l.
 *
 * A constant short rate is expressed as kappa_r = sigma_r = 0; the rate then
 * stays at the value carried in the state vector.
 *
 * State vector layout: {r, lambda}.
 */
struct OuParams {
    double kappa_r = 0.0;
    double theta_r = 0.0;
    double sigma_r = 0.0;
    double kappa_l = 0.0;
    double theta_l = 0.0;
    double sigma_l = 0.0;
    double rho = 0.0;
    double mu = 1.0;

    double lambda_level() const { return mu * theta_l; }
    double lambda_vol() const { return mu * sigma_l; }
    bool constant_rate() const { return kappa_r == 0.0 && sigma_r == 0.0; }
};

/**
 * Multifactor CIR model.  r = r_const + sum w_r[i] x[i] and the historical
 * intensity is sum w_l[i] x[i]; the pricing intensity is mu times that.
 *
 * State vector layout: {x_1, ..., x_n}.
 */
struct CirParams {
    std::vector<double> kappa;
    std::vector<double> theta;
    std::vector<double> sigma;
    std::vector<double> w_r;
    std::vector<double> w_l;
    double mu = 1.0;
    double r_const = 0.0;

    std::size_t factors() const { return kappa.size(); }
    /// Discount weight of factor i in C0: w_r[i] + mu * w_l[i].
    double discount_weight(std::size_t i) const { return w_r[i] + mu * w_l[i]; }
};

/// Per-default loss law.  Constant losses have a single atom.
struct LossDistribution {
    std::vector<double> values;
    std::vector<double> probs;

    static LossDistribution constant(double c) { return {{c}, {1.0}}; }
    static LossDistribution discrete(std::vector<double> v, std::vector<double> p) {
        return {std::move(v), std::move(p)};
    }
    double mean() const;
    bool is_constant() const { return values.size() == 1; }
};

/**
 * Self-exciting top-down intensity model for portfolio defaults.  Parameters
 * are historical; under the pricing measure the intensity lambda = mu *
 * lambda_hat follows
 *   d lambda = kappa (mu theta - lambda) dt + sigma sqrt(mu lambda) dW + mu eta dUpsilon.
 *
 * State vector layout: {lambda, n, upsilon}.
 */
struct TopDownParams {
    double kappa = 0.0;
    double theta = 0.0;
    double sigma = 0.0;
    double eta = 0.0;
    double mu = 1.0;
    LossDistribution loss = LossDistribution::constant(1.0);
    int names = 1;
    double r = 0.0;

    double mean_loss() const { return loss.mean(); }
    /// Effective reversion speed kappa - mu eta c of the self-exciting intensity.
    double rho_eff() const { return kappa - mu * eta * mean_loss(); }
};

enum class ModelKind { Ou, Cir, TopDown };

using ModelParams = std::variant<OuParams, CirParams, TopDownParams>;

ModelKind kind_of(const ModelParams& p);
const char* to_string(ModelKind k);

/**
 * Market (Q) and investor (Q~) parameter sets of the same model kind.  The two
 * measures are equivalent, so they may differ in drift, event premium and loss
 * law only.  The constructor throws ModelError otherwise.
 */
class MeasurePair {
public:
    MeasurePair(ModelParams market, ModelParams investor);

    const ModelParams& market() const { return market_; }
    const ModelParams& investor() const { return investor_; }
    ModelKind kind() const { return kind_of(market_); }

    double mu() const;
    double mu_investor() const;
    /// mu~/mu: maps market intensity to investor intensity.
    double intensity_ratio() const { return mu_investor() / mu(); }

    template <class P> const P& market_as() const { return std::get<P>(market_); }
    template <class P> const P& investor_as() const { return std::get<P>(investor_); }

    /// Pair with the investor measure equal to the market measure.
    static MeasurePair agreeing(const ModelParams& market) { return {market, market}; }

private:
    ModelParams market_;
    ModelParams investor_;
};

struct ValidationIssue {
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
    std::string summary() const;
};

ValidationReport validate(const ModelParams& p, const std::string& prefix = "");
ValidationReport validate(const MeasurePair& pair);

/// Relative mark-to-market premium phi^{Q~,Q}(t, x).  Throws ModelError for a
/// degenerate diffusion coefficient.  TopDown takes {lambda, ...}.
std::vector<double> relative_mtm_premium(const MeasurePair& pair, double t, const StateVector& x);

/// Sigma * phi^{Q~,Q}, i.e. the market drift minus the investor drift of the
/// state vector (OU {r, lambda}, CIR x, TopDown lambda; lambda is the market
/// intensity).  Well defined even where Sigma is singular.
std::vector<double> drift_gap(const MeasurePair& pair, double t, const StateVector& x);

// ---------------------------------------------------------------------------
// Claims
// ---------------------------------------------------------------------------

struct ZeroRecoveryBond {
    double maturity;
};
/// Recovery of treasury: c times the default-free bond, paid at default.
struct RtBond {
    double maturity;
    double recovery;
};
/// Recovery of market value: c times the pre-default value, paid at default.
struct RmvBond {
    double maturity;
    double recovery;
};
/// Digital CDS, protection buyer, premium rate `spread`.
struct Cds {
    double maturity;
    double spread;
};
struct ForwardCds {
    double start;
    double maturity;
    double spread;
};
/// Credit default index swap, protection buyer.  Number of names and rate come
/// from the TopDown model.
struct Cdx {
    double maturity;
    double spread;
};

using ClaimSpec = std::variant<ZeroRecoveryBond, RtBond, RmvBond, Cds, ForwardCds, Cdx>;

double maturity_of(const ClaimSpec& c);
std::string claim_name(const ClaimSpec& c);
void validate_claim(const ClaimSpec& c);

} // namespace liqtimer
