#include "liqtimer/pricers.hpp"

#include "liqtimer/affine.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace liqtimer {

using affine::CirFactor;
using affine::decay;
using affine::GaussianExponent;

namespace {

constexpr double kTimeSlack = 1e-12;
constexpr int kCdsPanels = 400;
constexpr double kCdsTol = 1e-8;

double horizon(double t, double T)
{
    if (t > T + kTimeSlack) {
        std::ostringstream os;
        os << "evaluation time t = " << t << " exceeds maturity T = " << T;
        throw DomainError(os.str());
    }
    return std::max(0.0, T - t);
}

GaussianExponent ou_exponent(const OuParams& p, double w)
{
    return {p.kappa_r, p.theta_r, p.sigma_r, p.kappa_l, p.lambda_level(), p.lambda_vol(), p.rho, w};
}

double ou_weighted(const OuParams& p, double s, double r, double lambda, double w)
{
    const double a = ou_exponent(p, w).a(s);
    return std::exp(a - decay(p.kappa_r, s) * r - w * decay(p.kappa_l, s) * lambda);
}

CirFactor cir_factor(const CirParams& p, std::size_t i, double w_l_scale)
{
    return {p.kappa[i], p.theta[i], p.sigma[i], p.w_r[i] + p.mu * p.w_l[i] * w_l_scale};
}

CirFactor cir_rate_factor(const CirParams& p, std::size_t i)
{
    return {p.kappa[i], p.theta[i], p.sigma[i], p.w_r[i]};
}

template <class MakeFactor>
double cir_product(const CirParams& p, double s, const StateVector& x, MakeFactor make)
{
    if (x.size() != p.factors())
        throw DomainError("CIR state vector length does not match factor count");
    double log_v = -p.r_const * s;
    for (std::size_t i = 0; i < p.factors(); ++i) {
        if (x[i] < 0)
            throw DomainError("CIR state must be nonnegative");
        const CirFactor f = make(i);
        log_v += f.log_a(s) - f.b(s) * x[i];
    }
    return std::exp(log_v);
}

template <class MakeFactor>
StateVector cir_product_gradient(const CirParams& p, double s, const StateVector& x, MakeFactor make)
{
    const double v = cir_product(p, s, x, make);
    StateVector g(p.factors());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = -make(i).b(s) * v;
    return g;
}

// Composite Simpson over tau in [0, len] applied to `width` integrands at
// once.  eval(tau, out) fills out[0..width).  The half-resolution estimate
// reuses the even nodes, so the Richardson check is free.
template <class Eval>
std::vector<double> simpson_rows(double len, std::size_t width, Eval eval, int panels = kCdsPanels,
                                 double tol = kCdsTol)
{
    std::vector<double> fine(width, 0.0);
    if (len <= 0.0)
        return fine;
    std::vector<double> buf(width);
    for (;;) {
        std::vector<double> coarse(width, 0.0);
        std::fill(fine.begin(), fine.end(), 0.0);
        const double h = len / panels;
        for (int j = 0; j <= panels; ++j) {
            eval(j * h, buf);
            const double wf = (j == 0 || j == panels) ? 1.0 : ((j % 2) ? 4.0 : 2.0);
            const bool even = (j % 2) == 0;
            const int jc = j / 2;
            const double wc = (jc == 0 || jc == panels / 2) ? 1.0 : ((jc % 2) ? 4.0 : 2.0);
            for (std::size_t k = 0; k < width; ++k) {
                fine[k] += wf * buf[k];
                if (even)
                    coarse[k] += wc * buf[k];
            }
        }
        double worst = 0.0;
        for (std::size_t k = 0; k < width; ++k) {
            fine[k] *= h / 3.0;
            coarse[k] *= 2.0 * h / 3.0;
            worst = std::max(worst, std::abs(fine[k] - coarse[k]));
        }
        if (worst <= tol)
            return fine;
        if (panels >= 409600) {
            std::ostringstream os;
            os << "CDS quadrature did not converge: achieved tolerance " << worst << " (requested "
               << tol << ")";
            throw std::runtime_error(os.str());
        }
        panels *= 2;
    }
}

// Rows of [value, d/dr, d/dlambda] of the OU CDS, one per state.
std::vector<double> ou_cds_batch(const OuParams& p, double s, const std::vector<StateVector>& xs, double p0)
{
    const double kr = p.kappa_r;
    const double kl = p.kappa_l;
    const double sl = p.lambda_vol();
    const GaussianExponent ex = ou_exponent(p, 1.0);
    const double cov = p.rho * p.sigma_r * sl;
    return simpson_rows(s, 3 * xs.size(), [&](double tau, std::vector<double>& out) {
        const double b = decay(kr, tau);
        const double d = decay(kl, tau);
        const double a = ex.a(tau);
        const double ek = std::exp(-kl * tau);
        double f0 = kl * p.lambda_level() * d;
        if (cov != 0.0)
            f0 -= cov * affine::discounted_decay_integral(kl, kr, tau);
        if (sl != 0.0)
            f0 -= sl * sl * affine::discounted_decay_integral(kl, kl, tau);
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double r = xs[k].at(0);
            const double lambda = xs[k].at(1);
            const double c0 = std::exp(a - b * r - d * lambda);
            const double net = lambda * ek + f0 - p0;
            out[3 * k] = c0 * net;
            out[3 * k + 1] = -b * c0 * net;
            out[3 * k + 2] = c0 * (ek - d * net);
        }
    });
}

// Rows of [value, gradient in x] of the CIR CDS, one per state.
std::vector<double> cir_cds_batch(const CirParams& p, double s, const std::vector<StateVector>& xs, double p0)
{
    const std::size_t n = p.factors();
    for (const auto& x : xs) {
        if (x.size() != n)
            throw DomainError("CIR state vector length does not match factor count");
        for (double v : x)
            if (v < 0)
                throw DomainError("CIR state must be nonnegative");
    }
    std::vector<CirFactor> fs;
    std::vector<double> share(n);
    for (std::size_t i = 0; i < n; ++i) {
        fs.push_back(cir_factor(p, i, 1.0));
        const double w = fs.back().weight;
        share[i] = w > 0 ? p.mu * p.w_l[i] / w : 0.0;
    }
    std::vector<double> bs(n), bps(n);
    const std::size_t row = n + 1;
    return simpson_rows(s, row * xs.size(), [&](double tau, std::vector<double>& out) {
        double log_a = -p.r_const * tau;
        double base = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            bs[i] = fs[i].b(tau);
            bps[i] = fs[i].b_prime(tau);
            log_a += fs[i].log_a(tau);
            base += share[i] * fs[i].kappa * fs[i].theta * bs[i];
        }
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const auto& x = xs[k];
            double log_c = log_a;
            double inten = base;
            for (std::size_t i = 0; i < n; ++i) {
                log_c -= bs[i] * x[i];
                inten += share[i] * bps[i] * x[i];
            }
            const double c0 = std::exp(log_c);
            const double net = inten - p0;
            out[row * k] = c0 * net;
            for (std::size_t i = 0; i < n; ++i)
                out[row * k + i + 1] = c0 * (share[i] * bps[i] - bs[i] * net);
        }
    });
}

std::vector<double> cds_batch(const ModelParams& m, double s, const std::vector<StateVector>& xs, double p0)
{
    if (auto* ou = std::get_if<OuParams>(&m))
        return ou_cds_batch(*ou, s, xs, p0);
    if (auto* cir = std::get_if<CirParams>(&m))
        return cir_cds_batch(*cir, s, xs, p0);
    throw ModelError("CDS pricing requires an OU or CIR model");
}

std::vector<double> cds_with_gradient(const ModelParams& m, double s, const StateVector& x, double p0)
{
    return cds_batch(m, s, {x}, p0);
}

const OuParams* as_ou(const ModelParams& m) { return std::get_if<OuParams>(&m); }
const CirParams* as_cir(const ModelParams& m) { return std::get_if<CirParams>(&m); }

void require_single_name(const ModelParams& m, const char* what)
{
    if (kind_of(m) == ModelKind::TopDown)
        throw ModelError(std::string(what) + " requires an OU or CIR model");
}

void check_rt(double c)
{
    if (c < 0 || c > 1)
        throw DomainError("RT recovery c must lie in [0,1]");
}

void check_rmv(double c)
{
    if (c < 0 || c >= 1)
        throw DomainError("RMV recovery c must lie in [0,1)");
}

} // namespace

double ou_bond_price(const OuParams& p, double t, double T, double r, double lambda)
{
    return ou_weighted(p, horizon(t, T), r, lambda, 1.0);
}

double ou_default_free_bond(const OuParams& p, double t, double T, double r)
{
    return ou_weighted(p, horizon(t, T), r, 0.0, 0.0);
}

double ou_rmv_bond_price(const OuParams& p, double t, double T, double r, double lambda, double c)
{
    check_rmv(c);
    return ou_weighted(p, horizon(t, T), r, lambda, 1.0 - c);
}

double cir_bond_price(const CirParams& p, double t, double T, const StateVector& x)
{
    return cir_product(p, horizon(t, T), x, [&](std::size_t i) { return cir_factor(p, i, 1.0); });
}

double cir_default_free_bond(const CirParams& p, double t, double T, const StateVector& x)
{
    return cir_product(p, horizon(t, T), x, [&](std::size_t i) { return cir_rate_factor(p, i); });
}

double cir_rmv_bond_price(const CirParams& p, double t, double T, const StateVector& x, double c)
{
    check_rmv(c);
    return cir_product(p, horizon(t, T), x, [&](std::size_t i) { return cir_factor(p, i, 1.0 - c); });
}

double default_free_bond(const ModelParams& m, double t, double T, const StateVector& x)
{
    if (auto* ou = as_ou(m))
        return ou_default_free_bond(*ou, t, T, x.at(0));
    if (auto* cir = as_cir(m))
        return cir_default_free_bond(*cir, t, T, x);
    const auto& td = std::get<TopDownParams>(m);
    return std::exp(-td.r * horizon(t, T));
}

double zero_recovery_bond_price(const ModelParams& m, double t, double T, const StateVector& x)
{
    require_single_name(m, "bond pricing");
    if (auto* ou = as_ou(m))
        return ou_bond_price(*ou, t, T, x.at(0), x.at(1));
    return cir_bond_price(std::get<CirParams>(m), t, T, x);
}

double rt_bond_price(const ModelParams& m, double t, double T, const StateVector& x, double c)
{
    check_rt(c);
    return (1.0 - c) * zero_recovery_bond_price(m, t, T, x) + c * default_free_bond(m, t, T, x);
}

double rmv_bond_price(const ModelParams& m, double t, double T, const StateVector& x, double c)
{
    require_single_name(m, "bond pricing");
    if (auto* ou = as_ou(m))
        return ou_rmv_bond_price(*ou, t, T, x.at(0), x.at(1), c);
    return cir_rmv_bond_price(std::get<CirParams>(m), t, T, x, c);
}

double cds_price_ou(const OuParams& p, double t, double T, double r, double lambda, double p0)
{
    return ou_cds_batch(p, horizon(t, T), {{r, lambda}}, p0)[0];
}

double cds_price_cir(const CirParams& p, double t, double T, const StateVector& x, double p0)
{
    return cir_cds_batch(p, horizon(t, T), {x}, p0)[0];
}

double cds_price(const ModelParams& m, double t, double T, const StateVector& x, double p0)
{
    return cds_with_gradient(m, horizon(t, T), x, p0)[0];
}

std::vector<StateVector> cds_value_gradient(const ModelParams& m, double t, double T,
                                            const std::vector<StateVector>& xs, double p0)
{
    const auto flat = cds_batch(m, horizon(t, T), xs, p0);
    std::vector<StateVector> out(xs.size());
    const std::size_t row = xs.empty() ? 0 : flat.size() / xs.size();
    for (std::size_t k = 0; k < xs.size(); ++k)
        out[k].assign(flat.begin() + k * row, flat.begin() + (k + 1) * row);
    return out;
}

double forward_cds_price(const ModelParams& m, double t, double Ta, double T, const StateVector& x,
                         double pa)
{
    if (!(t <= Ta && Ta <= T))
        throw DomainError("forward CDS requires t <= Ta <= T");
    return cds_price(m, t, T, x, pa) - cds_price(m, t, Ta, x, pa);
}

CdxCoefficients cdx_coefficients(const TopDownParams& p, double p0, double t, double T)
{
    const double s = horizon(t, T);
    const double r = p.r;
    const double rho = p.rho_eff();
    const double c = p.mean_loss();
    if (rho == 0.0)
        throw DomainError("CDX closed form undefined for rho_eff = kappa - mu*eta*c = 0");
    if (r == 0.0)
        throw DomainError("CDX closed form undefined for r = 0");
    const double er = std::exp(-r * s);
    const double erho = std::exp(-rho * s);
    CdxCoefficients k;
    k.k2 = (c * r + p0) * (er * erho / (rho * (rho + r)) - er / (rho * r) + 1.0 / (r * (rho + r))) +
           c * er / rho * (1.0 - erho);
    k.k1 = p0 * (1.0 - er) / r;
    k.k0 = p.kappa * p.mu * p.theta / rho *
               ((r * c + p0) * (er * (-erho / (rho * (rho + r)) - s / r - 1.0 / (r * r) + 1.0 / (r * rho)) +
                                rho / (r * r * (r + rho))) +
                c * er * ((erho - 1.0) / rho + s)) -
           p0 * p.names / r * (1.0 - er);
    if (s == 0.0)
        k = {};
    return k;
}

CdxMoments cdx_moments(const TopDownParams& p, double t, double u, double lambda, double n,
                       double upsilon)
{
    if (u < t)
        throw DomainError("moment horizon u must satisfy u >= t");
    const double rho = p.rho_eff();
    if (rho == 0.0)
        throw DomainError("CDX moments undefined for rho_eff = 0");
    const double s = u - t;
    const double a = p.kappa * p.mu * p.theta / rho * ((std::exp(-rho * s) - 1.0) / rho + s);
    const double b = decay(rho, s);
    const double c = p.mean_loss();
    return {a + b * lambda + n, c * a + c * b * lambda + upsilon};
}

double cdx_price(const TopDownParams& p, double p0, double t, double T, double lambda, double n)
{
    const auto k = cdx_coefficients(p, p0, t, T);
    return k.k2 * lambda + k.k1 * n + k.k0;
}

double claim_price(const ModelParams& m, const ClaimSpec& c, double t, const StateVector& x)
{
    struct Visitor {
        const ModelParams& m;
        double t;
        const StateVector& x;
        double operator()(const ZeroRecoveryBond& b) const { return zero_recovery_bond_price(m, t, b.maturity, x); }
        double operator()(const RtBond& b) const { return rt_bond_price(m, t, b.maturity, x, b.recovery); }
        double operator()(const RmvBond& b) const { return rmv_bond_price(m, t, b.maturity, x, b.recovery); }
        double operator()(const Cds& s) const { return cds_price(m, t, s.maturity, x, s.spread); }
        double operator()(const ForwardCds& f) const
        {
            if (t >= f.start)
                return cds_price(m, t, f.maturity, x, f.spread);
            return forward_cds_price(m, t, f.start, f.maturity, x, f.spread);
        }
        double operator()(const Cdx& d) const
        {
            const auto* td = std::get_if<TopDownParams>(&m);
            if (!td)
                throw ModelError("CDX pricing requires the top-down model");
            return cdx_price(*td, d.spread, t, d.maturity, x.at(0), x.size() > 1 ? x[1] : 0.0);
        }
    };
    return std::visit(Visitor{m, t, x}, c);
}

StateVector claim_gradient(const ModelParams& m, const ClaimSpec& c, double t, const StateVector& x)
{
    const double T = maturity_of(c);
    const double s = horizon(t, T);

    auto bond_gradient = [&](double w) -> StateVector {
        if (auto* ou = as_ou(m)) {
            const double v = ou_weighted(*ou, s, x.at(0), x.at(1), w);
            return {-decay(ou->kappa_r, s) * v, -w * decay(ou->kappa_l, s) * v};
        }
        const auto& cir = std::get<CirParams>(m);
        return cir_product_gradient(cir, s, x, [&](std::size_t i) { return cir_factor(cir, i, w); });
    };
    auto free_gradient = [&]() -> StateVector {
        if (auto* ou = as_ou(m)) {
            const double v = ou_weighted(*ou, s, x.at(0), 0.0, 0.0);
            return {-decay(ou->kappa_r, s) * v, 0.0};
        }
        const auto& cir = std::get<CirParams>(m);
        return cir_product_gradient(cir, s, x, [&](std::size_t i) { return cir_rate_factor(cir, i); });
    };
    auto cds_gradient = [&](double len, double p0) {
        auto v = cds_with_gradient(m, len, x, p0);
        return StateVector(v.begin() + 1, v.end());
    };

    if (std::holds_alternative<Cdx>(c)) {
        const auto* td = std::get_if<TopDownParams>(&m);
        if (!td)
            throw ModelError("CDX pricing requires the top-down model");
        const auto k = cdx_coefficients(*td, std::get<Cdx>(c).spread, t, T);
        return {k.k2, k.k1, 0.0};
    }
    require_single_name(m, "claim gradient");
    if (std::holds_alternative<ZeroRecoveryBond>(c))
        return bond_gradient(1.0);
    if (auto* b = std::get_if<RtBond>(&c)) {
        check_rt(b->recovery);
        auto g0 = bond_gradient(1.0);
        auto gb = free_gradient();
        for (std::size_t i = 0; i < g0.size(); ++i)
            g0[i] = (1.0 - b->recovery) * g0[i] + b->recovery * gb[i];
        return g0;
    }
    if (auto* b = std::get_if<RmvBond>(&c)) {
        check_rmv(b->recovery);
        return bond_gradient(1.0 - b->recovery);
    }
    if (auto* d = std::get_if<Cds>(&c))
        return cds_gradient(s, d->spread);
    const auto& f = std::get<ForwardCds>(c);
    auto g = cds_gradient(s, f.spread);
    if (t < f.start) {
        auto ga = cds_gradient(f.start - t, f.spread);
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] -= ga[i];
    }
    return g;
}

double claim_recovery(const ModelParams& m, const ClaimSpec& c, double t, const StateVector& x)
{
    if (auto* b = std::get_if<RtBond>(&c))
        return b->recovery * default_free_bond(m, t, b->maturity, x);
    if (auto* b = std::get_if<RmvBond>(&c))
        return b->recovery * rmv_bond_price(m, t, b->maturity, x, b->recovery);
    if (std::holds_alternative<Cds>(c))
        return 1.0;
    if (auto* f = std::get_if<ForwardCds>(&c))
        return t > f->start ? 1.0 : 0.0;
    return 0.0;
}

double claim_dividend_rate(const ClaimSpec& c, double t)
{
    if (auto* s = std::get_if<Cds>(&c))
        return -s->spread;
    if (auto* f = std::get_if<ForwardCds>(&c))
        return t >= f->start ? -f->spread : 0.0;
    return 0.0;
}

double terminal_payoff(const ClaimSpec& c)
{
    if (std::holds_alternative<ZeroRecoveryBond>(c) || std::holds_alternative<RtBond>(c) ||
        std::holds_alternative<RmvBond>(c))
        return 1.0;
    return 0.0;
}

double pricing_intensity(const ModelParams& m, const StateVector& x)
{
    if (as_ou(m))
        return x.at(1);
    if (auto* cir = as_cir(m)) {
        double l = 0.0;
        for (std::size_t i = 0; i < cir->factors(); ++i)
            l += cir->w_l[i] * x.at(i);
        return cir->mu * l;
    }
    return x.at(0);
}

double short_rate(const ModelParams& m, const StateVector& x)
{
    if (as_ou(m))
        return x.at(0);
    if (auto* cir = as_cir(m)) {
        double r = cir->r_const;
        for (std::size_t i = 0; i < cir->factors(); ++i)
            r += cir->w_r[i] * x.at(i);
        return r;
    }
    return std::get<TopDownParams>(m).r;
}

StateVector investor_state(const MeasurePair& pair, const StateVector& x)
{
    StateVector y = x;
    const double ratio = pair.intensity_ratio();
    switch (pair.kind()) {
    case ModelKind::Ou: y.at(1) *= ratio; break;
    case ModelKind::Cir: break;
    case ModelKind::TopDown: y.at(0) *= ratio; break;
    }
    return y;
}

} // namespace liqtimer
