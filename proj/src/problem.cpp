#include "liqtimer/problem.hpp"

#include "liqtimer/drift.hpp"
#include "liqtimer/pricers.hpp"

#include <algorithm>
#include <cmath>

namespace liqtimer {

double LambdaJumps::mean() const
{
    double m = 0.0;
    for (std::size_t j = 0; j < sizes.size(); ++j)
        m += sizes[j] * probs[j];
    return m;
}

double LambdaJumps::second_moment() const
{
    double m = 0.0;
    for (std::size_t j = 0; j < sizes.size(); ++j)
        m += sizes[j] * sizes[j] * probs[j];
    return m;
}

double OneFactorProblem::default_lambda_max() const
{
    if (kind == ModelKind::TopDown) {
        // Upper bound of the self-exciting long-run means of both measures.
        const double rho_m = market.speed - market_jumps.rate_scale * market_jumps.mean();
        const double rho_i = investor.speed - investor_jumps.rate_scale * investor_jumps.mean();
        const double rho = std::min(rho_m, rho_i);
        const double drive = std::max(market.speed * market.level, investor.speed * investor.level);
        if (rho > 0)
            return 10.0 * drive / rho;
        return 50.0 * std::max(market.level, investor.level);
    }
    const double level = std::max(market.level, investor.level);
    if (level > 0)
        return 10.0 * level;
    return 1.0;
}

double OneFactorProblem::default_lambda_min() const
{
    if (nonnegative)
        return 0.0;
    const double level = std::min(market.level, investor.level);
    const double vol = std::sqrt(std::max(market.var_const, investor.var_const));
    const double speed = std::min(market.speed, investor.speed);
    if (speed > 0)
        return level - 6.0 * vol / std::sqrt(2.0 * speed);
    return level - 6.0 * vol * std::sqrt(maturity);
}

namespace {

void require_single_name_claim(const ClaimSpec& claim, const char* model)
{
    if (std::holds_alternative<Cdx>(claim))
        throw ModelError(std::string("CDX claims require the top-down model, got ") + model);
}

OneFactorProblem make_ou(const MeasurePair& pair, const ClaimSpec& claim, const StateVector& base)
{
    require_single_name_claim(claim, "ou");
    const auto& m = pair.market_as<OuParams>();
    const auto& i = pair.investor_as<OuParams>();
    if (!m.constant_rate() || !i.constant_rate())
        throw ModelError("the one-factor solver needs a constant short rate (kappa_r = sigma_r = 0)");
    const double r0 = base.at(0);

    OneFactorProblem p;
    p.kind = ModelKind::Ou;
    p.nonnegative = false;
    p.market = {m.kappa_l, m.lambda_level(), m.lambda_vol() * m.lambda_vol(), 0.0};
    // Investor drift written in the market intensity coordinate.
    p.investor = {i.kappa_l, m.mu * i.theta_l, m.lambda_vol() * m.lambda_vol(), 0.0};
    p.rate = [r0](double) { return r0; };
    p.state_of = [r0](double l) { return StateVector{r0, l}; };
    p.lambda_of = [](const StateVector& x) { return x.at(1); };
    return p;
}

OneFactorProblem make_cir(const MeasurePair& pair, const ClaimSpec& claim)
{
    require_single_name_claim(claim, "cir");
    const auto& m = pair.market_as<CirParams>();
    const auto& i = pair.investor_as<CirParams>();
    if (m.factors() != 1)
        throw ModelError("the one-factor solver supports single-factor CIR models only");
    if (!(m.w_l[0] > 0))
        throw ModelError("the one-factor solver needs w_l > 0 so that lambda identifies the state");
    const double s = m.mu * m.w_l[0];
    const double wr = m.w_r[0];
    const double rc = m.r_const;

    OneFactorProblem p;
    p.kind = ModelKind::Cir;
    p.nonnegative = true;
    p.market = {m.kappa[0], s * m.theta[0], 0.0, s * m.sigma[0] * m.sigma[0]};
    p.investor = {i.kappa[0], s * i.theta[0], 0.0, s * m.sigma[0] * m.sigma[0]};
    p.rate = [rc, wr, s](double l) { return rc + wr * l / s; };
    p.state_of = [s](double l) { return StateVector{l / s}; };
    p.lambda_of = [s](const StateVector& x) { return s * x.at(0); };
    return p;
}

OneFactorProblem make_topdown(const MeasurePair& pair, const ClaimSpec& claim, const StateVector& base)
{
    const auto* cdx = std::get_if<Cdx>(&claim);
    if (!cdx)
        throw ModelError("the top-down model prices CDX claims only");
    const auto& m = pair.market_as<TopDownParams>();
    const auto& i = pair.investor_as<TopDownParams>();
    const double n = base.size() > 1 ? base[1] : 0.0;
    const double ups = base.size() > 2 ? base[2] : 0.0;

    OneFactorProblem p;
    p.kind = ModelKind::TopDown;
    p.nonnegative = true;
    p.killing = false;
    p.market = {m.kappa, m.mu * m.theta, 0.0, m.sigma * m.sigma * m.mu};
    p.investor = {i.kappa, m.mu * i.theta, 0.0, m.sigma * m.sigma * m.mu};
    p.market_jumps.rate_scale = 1.0;
    p.investor_jumps.rate_scale = pair.intensity_ratio();
    for (double v : m.loss.values)
        p.market_jumps.sizes.push_back(m.mu * m.eta * v);
    p.market_jumps.probs = m.loss.probs;
    for (double v : i.loss.values)
        p.investor_jumps.sizes.push_back(m.mu * m.eta * v);
    p.investor_jumps.probs = i.loss.probs;
    const double r = m.r;
    p.rate = [r](double) { return r; };
    p.state_of = [n, ups](double l) { return StateVector{l, n, ups}; };
    p.lambda_of = [](const StateVector& x) { return x.at(0); };
    return p;
}

} // namespace

OneFactorProblem make_problem(const MeasurePair& pair, const ClaimSpec& claim, const StateVector& base)
{
    validate_claim(claim);
    OneFactorProblem p;
    switch (pair.kind()) {
    case ModelKind::Ou: p = make_ou(pair, claim, base); break;
    case ModelKind::Cir: p = make_cir(pair, claim); break;
    case ModelKind::TopDown: p = make_topdown(pair, claim, base); break;
    }
    p.claim = claim;
    p.maturity = maturity_of(claim);
    p.intensity_ratio = pair.intensity_ratio();
    p.payoff = terminal_payoff(claim);

    const ModelParams market = pair.market();
    const ModelParams investor = pair.investor();
    auto state_of = p.state_of;
    const std::size_t lambda_index = pair.kind() == ModelKind::Ou ? 1 : 0;
    const double slope_scale = pair.kind() == ModelKind::Cir ? 1.0 / pair.market_as<CirParams>().mu /
                                                                   pair.market_as<CirParams>().w_l[0]
                                                             : 1.0;

    p.price = [market, claim, state_of](double t, double l) { return claim_price(market, claim, t, state_of(l)); };
    p.investor_price = [pair, investor, claim, state_of](double t, double l) {
        return claim_price(investor, claim, t, investor_state(pair, state_of(l)));
    };
    p.price_slope = [market, claim, state_of, lambda_index, slope_scale](double t, double l) {
        return claim_gradient(market, claim, t, state_of(l)).at(lambda_index) * slope_scale;
    };
    p.drift_row = [pair, claim, state_of](double t, const std::vector<double>& ls) {
        std::vector<StateVector> xs;
        xs.reserve(ls.size());
        for (double l : ls)
            xs.push_back(state_of(l));
        return g_claim_row(pair, claim, t, xs);
    };
    p.recovery = [market, claim, state_of](double t, double l) {
        return claim_recovery(market, claim, t, state_of(l));
    };
    p.dividend = [claim](double t) { return claim_dividend_rate(claim, t); };
    return p;
}

} // namespace liqtimer
