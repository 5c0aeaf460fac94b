#include "liqtimer/drift.hpp"

#include "liqtimer/affine.hpp"

#include <algorithm>
#include <cmath>

namespace liqtimer {

using affine::CirFactor;
using affine::decay;

namespace {

double intensity_gap_term(const MeasurePair& pair, const StateVector& x)
{
    return (pair.intensity_ratio() - 1.0) * pricing_intensity(pair.market(), x);
}

} // namespace

double g_from_gradient(const MeasurePair& pair, double t, const StateVector& x, double price,
                       const StateVector& gradient, double recovery)
{
    const auto gap = drift_gap(pair, t, x);
    double g = 0.0;
    for (std::size_t i = 0; i < gap.size(); ++i)
        g -= gradient.at(i) * gap[i];
    return g + (recovery - price) * intensity_gap_term(pair, x);
}

double g_general(const MeasurePair& pair, const PriceFunction& price, const RecoveryFunction& recovery,
                 double t, const StateVector& x, double h)
{
    const bool nonneg = pair.kind() != ModelKind::Ou;
    StateVector grad(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (pair.kind() == ModelKind::TopDown && i > 0)
            break;
        StateVector up = x, dn = x;
        up[i] += h;
        if (nonneg && x[i] - h < 0) {
            grad[i] = (price(t, up) - price(t, x)) / h;
            continue;
        }
        dn[i] -= h;
        grad[i] = (price(t, up) - price(t, dn)) / (2.0 * h);
    }
    return g_from_gradient(pair, t, x, price(t, x), grad, recovery(t, x));
}

double g_bond_ou(const MeasurePair& pair, double t, double T, double r, double lambda)
{
    const auto& m = pair.market_as<OuParams>();
    const auto& i = pair.investor_as<OuParams>();
    const double c0 = ou_bond_price(m, t, T, r, lambda);
    const double s = std::max(0.0, T - t);
    const double b = decay(m.kappa_r, s);
    const double d = decay(m.kappa_l, s);
    const double rate = b * ((i.kappa_r - m.kappa_r) * r + m.kappa_r * m.theta_r - i.kappa_r * i.theta_r);
    const double intensity = d * ((i.kappa_l - m.kappa_l) * lambda +
                                  m.mu * (m.kappa_l * m.theta_l - i.kappa_l * i.theta_l));
    return c0 * (rate + intensity - (pair.intensity_ratio() - 1.0) * lambda);
}

double g_bond_cir(const MeasurePair& pair, double t, double T, const StateVector& x)
{
    const auto& m = pair.market_as<CirParams>();
    const auto& i = pair.investor_as<CirParams>();
    const double c0 = cir_bond_price(m, t, T, x);
    const double s = std::max(0.0, T - t);
    double bracket = 0.0;
    for (std::size_t k = 0; k < m.factors(); ++k) {
        const CirFactor f{m.kappa[k], m.theta[k], m.sigma[k], m.discount_weight(k)};
        const double b = f.b(s);
        bracket += (b * (i.kappa[k] - m.kappa[k]) - (i.mu - m.mu) * m.w_l[k]) * x.at(k) +
                   b * (m.kappa[k] * m.theta[k] - i.kappa[k] * i.theta[k]);
    }
    return bracket * c0;
}

double g_rt(const MeasurePair& pair, double t, double T, const StateVector& x, double c)
{
    const RtBond claim{T, c};
    const auto grad = claim_gradient(pair.market(), claim, t, x);
    const auto gap = drift_gap(pair, t, x);
    double g = 0.0;
    for (std::size_t k = 0; k < gap.size(); ++k)
        g -= grad[k] * gap[k];
    const double c0 = zero_recovery_bond_price(pair.market(), t, T, x);
    return g + (c - 1.0) * intensity_gap_term(pair, x) * c0;
}

double g_cds(const MeasurePair& pair, double t, double T, const StateVector& x, double p0)
{
    const auto vg = cds_value_gradient(pair.market(), t, T, {x}, p0).front();
    const StateVector grad(vg.begin() + 1, vg.end());
    return g_from_gradient(pair, t, x, vg[0], grad, 1.0);
}

double g_cdx(const MeasurePair& pair, double p0, double t, double T, double lambda)
{
    const auto& m = pair.market_as<TopDownParams>();
    const auto& i = pair.investor_as<TopDownParams>();
    const auto k = cdx_coefficients(m, p0, t, T);
    const double ratio = pair.intensity_ratio();
    const double c = m.mean_loss();
    const double ci = i.mean_loss();
    const double slope = (m.mu * m.eta * k.k2 + 1.0) * (ratio * ci - c) + k.k1 * (ratio - 1.0) -
                         k.k2 * (i.kappa - m.kappa);
    return slope * lambda + k.k2 * m.mu * (i.kappa * i.theta - m.kappa * m.theta);
}

double g_claim(const MeasurePair& pair, const ClaimSpec& claim, double t, const StateVector& x)
{
    if (auto* d = std::get_if<Cdx>(&claim))
        return g_cdx(pair, d->spread, t, d->maturity, x.at(0));
    const auto& m = pair.market();
    return g_from_gradient(pair, t, x, claim_price(m, claim, t, x), claim_gradient(m, claim, t, x),
                           claim_recovery(m, claim, t, x));
}

std::vector<double> g_claim_row(const MeasurePair& pair, const ClaimSpec& claim, double t,
                                const std::vector<StateVector>& xs)
{
    std::vector<double> out(xs.size());
    const auto& m = pair.market();
    auto cds_row = [&](double T, double p0, std::vector<StateVector>& vg) {
        vg = cds_value_gradient(m, t, T, xs, p0);
    };
    if (auto* s = std::get_if<Cds>(&claim)) {
        std::vector<StateVector> vg;
        cds_row(s->maturity, s->spread, vg);
        for (std::size_t k = 0; k < xs.size(); ++k)
            out[k] = g_from_gradient(pair, t, xs[k], vg[k][0], StateVector(vg[k].begin() + 1, vg[k].end()), 1.0);
        return out;
    }
    if (auto* f = std::get_if<ForwardCds>(&claim)) {
        std::vector<StateVector> vg, va;
        cds_row(f->maturity, f->spread, vg);
        if (t < f->start)
            cds_row(f->start, f->spread, va);
        for (std::size_t k = 0; k < xs.size(); ++k) {
            StateVector v = vg[k];
            if (!va.empty())
                for (std::size_t j = 0; j < v.size(); ++j)
                    v[j] -= va[k][j];
            out[k] = g_from_gradient(pair, t, xs[k], v[0], StateVector(v.begin() + 1, v.end()),
                                     claim_recovery(m, claim, t, xs[k]));
        }
        return out;
    }
    for (std::size_t k = 0; k < xs.size(); ++k)
        out[k] = g_claim(pair, claim, t, xs[k]);
    return out;
}

std::vector<std::vector<double>> g_from_surface(const std::vector<double>& t_nodes,
                                                const std::vector<double>& lambda_nodes,
                                                const std::vector<std::vector<double>>& values,
                                                const std::function<double(double)>& gap,
                                                const std::function<double(double, double)>& recovery,
                                                double intensity_ratio)
{
    const std::size_t K = lambda_nodes.size();
    if (K < 3)
        throw DomainError("surface too coarse for a gradient: need at least 3 lambda nodes");
    std::vector<std::vector<double>> g(t_nodes.size(), std::vector<double>(K));
    for (std::size_t i = 0; i < t_nodes.size(); ++i) {
        const auto& c = values.at(i);
        for (std::size_t k = 0; k < K; ++k) {
            double slope;
            if (k == 0)
                slope = (-3.0 * c[0] + 4.0 * c[1] - c[2]) / (lambda_nodes[2] - lambda_nodes[0]);
            else if (k == K - 1)
                slope = (3.0 * c[K - 1] - 4.0 * c[K - 2] + c[K - 3]) / (lambda_nodes[K - 1] - lambda_nodes[K - 3]);
            else
                slope = (c[k + 1] - c[k - 1]) / (lambda_nodes[k + 1] - lambda_nodes[k - 1]);
            const double l = lambda_nodes[k];
            g[i][k] = -slope * gap(l) + (recovery(t_nodes[i], l) - c[k]) * (intensity_ratio - 1.0) * l;
        }
    }
    return g;
}

double Schedule::operator()(double t) const
{
    if (times.empty())
        return 0.0;
    if (t <= times.front())
        return values.front();
    if (t >= times.back())
        return values.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - times.begin());
    const double w = (t - times[j - 1]) / (times[j] - times[j - 1]);
    return values[j - 1] + w * (values[j] - values[j - 1]);
}

std::vector<double> deterministic_price_path(const DeterministicInputs& in, double t, int n)
{
    if (t > in.maturity)
        throw DomainError("evaluation time exceeds maturity");
    auto hazard = [&](double u) { return in.r(u) + in.mu(u) * in.lambda_hat(u); };
    auto flow = [&](double u) { return in.mu(u) * in.lambda_hat(u) * in.recovery(u) + in.dividend(u); };
    const double T = in.maturity;
    const double h = (T - t) / n;
    std::vector<double> c(n + 1);
    c[n] = in.payoff;
    // C(a) = e^{-I(a,b)} C(b) + int_a^b e^{-I(a,u)} (lambda R + q)(u) du per cell.
    for (int j = n - 1; j >= 0; --j) {
        const double a = t + j * h;
        const double m = a + 0.5 * h;
        const double b = a + h;
        const double i_am = h / 12.0 * (hazard(a) + 4.0 * hazard(a + 0.25 * h) + hazard(m));
        const double i_ab = h / 6.0 * (hazard(a) + 4.0 * hazard(m) + hazard(b));
        const double src = h / 6.0 * (flow(a) + 4.0 * std::exp(-i_am) * flow(m) + std::exp(-i_ab) * flow(b));
        c[j] = std::exp(-i_ab) * c[j + 1] + src;
    }
    return c;
}

double deterministic_price(const DeterministicInputs& in, double t)
{
    if (in.maturity - t <= 0.0) {
        if (t > in.maturity)
            throw DomainError("evaluation time exceeds maturity");
        return in.payoff;
    }
    return deterministic_price_path(in, t, 2000).front();
}

double g_deterministic(const DeterministicInputs& in, double t)
{
    const double dmu = in.mu_investor(t) - in.mu(t);
    if (dmu == 0.0)
        return 0.0;
    return (in.recovery(t) - deterministic_price(in, t)) * dmu * in.lambda_hat(t);
}

} // namespace liqtimer
