#include "liqtimer/models.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace liqtimer {

double LossDistribution::mean() const
{
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        m += values[i] * probs[i];
    return m;
}

ModelKind kind_of(const ModelParams& p)
{
    return static_cast<ModelKind>(p.index());
}

const char* to_string(ModelKind k)
{
    switch (k) {
    case ModelKind::Ou: return "ou";
    case ModelKind::Cir: return "cir";
    case ModelKind::TopDown: return "topdown";
    }
    return "?";
}

namespace {

void require_same(double a, double b, const char* field)
{
    if (a != b)
        throw ModelError(std::string("measure pair differs in ") + field +
                         "; equivalent measures share volatility, correlation and weights");
}

void require_same(const std::vector<double>& a, const std::vector<double>& b, const char* field)
{
    if (a != b)
        throw ModelError(std::string("measure pair differs in ") + field +
                         "; equivalent measures share volatility, correlation and weights");
}

void add(ValidationReport& rep, const std::string& prefix, const std::string& field, std::string msg)
{
    rep.issues.push_back({prefix + field, std::move(msg)});
}

} // namespace

MeasurePair::MeasurePair(ModelParams market, ModelParams investor)
    : market_(std::move(market)), investor_(std::move(investor))
{
    if (market_.index() != investor_.index())
        throw ModelError("market and investor parameters must be of the same model kind");

    if (auto* m = std::get_if<OuParams>(&market_)) {
        const auto& i = std::get<OuParams>(investor_);
        require_same(m->sigma_r, i.sigma_r, "sigma_r");
        require_same(m->sigma_l, i.sigma_l, "sigma_l");
        require_same(m->rho, i.rho, "rho");
    } else if (auto* m = std::get_if<CirParams>(&market_)) {
        const auto& i = std::get<CirParams>(investor_);
        if (m->factors() != i.factors())
            throw ModelError("measure pair differs in factor count");
        require_same(m->sigma, i.sigma, "sigma");
        require_same(m->w_r, i.w_r, "w_r");
        require_same(m->w_l, i.w_l, "w_l");
        require_same(m->r_const, i.r_const, "r_const");
    } else {
        const auto& md = std::get<TopDownParams>(market_);
        const auto& i = std::get<TopDownParams>(investor_);
        require_same(md.sigma, i.sigma, "sigma");
        require_same(md.eta, i.eta, "eta");
        require_same(md.r, i.r, "r");
        if (md.names != i.names)
            throw ModelError("measure pair differs in names");
    }
}

double MeasurePair::mu() const
{
    return std::visit([](const auto& p) { return p.mu; }, market_);
}

double MeasurePair::mu_investor() const
{
    return std::visit([](const auto& p) { return p.mu; }, investor_);
}

std::string ValidationReport::summary() const
{
    if (ok())
        return "PASS";
    std::ostringstream os;
    os << "FAIL";
    for (const auto& i : issues)
        os << "\n  " << i.field << ": " << i.message;
    return os.str();
}

ValidationReport validate(const ModelParams& params, const std::string& prefix)
{
    ValidationReport rep;
    if (auto* p = std::get_if<OuParams>(&params)) {
        if (p->sigma_r < 0) add(rep, prefix, "sigma_r", "must be >= 0");
        if (p->sigma_l < 0) add(rep, prefix, "sigma_l", "must be >= 0");
        if (p->kappa_r < 0) add(rep, prefix, "kappa_r", "must be >= 0");
        if (p->kappa_l < 0) add(rep, prefix, "kappa_l", "must be >= 0");
        if (std::abs(p->rho) > 1) add(rep, prefix, "rho", "correlation must satisfy |rho| <= 1");
        if (!(p->mu > 0)) add(rep, prefix, "mu", "event risk premium must be > 0");
    } else if (auto* p = std::get_if<CirParams>(&params)) {
        const std::size_t n = p->factors();
        if (n == 0) add(rep, prefix, "kappa", "at least one factor required");
        if (p->theta.size() != n || p->sigma.size() != n || p->w_r.size() != n || p->w_l.size() != n)
            add(rep, prefix, "factors", "kappa, theta, sigma, w_r, w_l must have equal length");
        else {
            bool any_weight = false;
            for (std::size_t i = 0; i < n; ++i) {
                const std::string idx = "[" + std::to_string(i) + "]";
                if (p->kappa[i] < 0) add(rep, prefix, "kappa" + idx, "must be >= 0");
                if (p->sigma[i] < 0) add(rep, prefix, "sigma" + idx, "must be >= 0");
                if (p->w_r[i] < 0) add(rep, prefix, "w_r" + idx, "weights must be >= 0");
                if (p->w_l[i] < 0) add(rep, prefix, "w_l" + idx, "weights must be >= 0");
                any_weight = any_weight || p->w_r[i] > 0 || p->w_l[i] > 0;
                const double lhs = 2.0 * p->kappa[i] * p->theta[i];
                const double rhs = p->sigma[i] * p->sigma[i];
                if (!(lhs > rhs)) {
                    std::ostringstream os;
                    os << "Feller condition violated: 2*kappa*theta = " << lhs << " <= sigma^2 = " << rhs;
                    add(rep, prefix, "feller" + idx, os.str());
                }
            }
            if (!any_weight) add(rep, prefix, "w", "at least one weight vector must be nonzero");
        }
        if (!(p->mu > 0)) add(rep, prefix, "mu", "event risk premium must be > 0");
    } else {
        const auto& td = std::get<TopDownParams>(params);
        if (td.sigma < 0) add(rep, prefix, "sigma", "must be >= 0");
        if (td.kappa < 0) add(rep, prefix, "kappa", "must be >= 0");
        if (td.theta < 0) add(rep, prefix, "theta", "must be >= 0");
        if (td.eta < 0) add(rep, prefix, "eta", "self-excitation must be >= 0");
        if (!(td.mu > 0)) add(rep, prefix, "mu", "event risk premium must be > 0");
        if (td.names < 1) add(rep, prefix, "names", "must be >= 1");
        if (td.loss.values.empty() || td.loss.values.size() != td.loss.probs.size())
            add(rep, prefix, "loss", "values and probs must be nonempty and of equal length");
        else {
            const double total = std::accumulate(td.loss.probs.begin(), td.loss.probs.end(), 0.0);
            if (std::abs(total - 1.0) > 1e-12) add(rep, prefix, "loss.probs", "must sum to 1");
            for (double pr : td.loss.probs)
                if (pr < 0) add(rep, prefix, "loss.probs", "must be >= 0");
            for (double v : td.loss.values)
                if (!(v > 0)) add(rep, prefix, "loss.values", "losses must be > 0");
            if (!(td.mean_loss() > 0)) add(rep, prefix, "loss", "mean loss c must be > 0");
            else if (td.rho_eff() == 0.0)
                add(rep, prefix, "rho_eff", "kappa - mu*eta*c must be nonzero");
        }
    }
    return rep;
}

ValidationReport validate(const MeasurePair& pair)
{
    ValidationReport rep = validate(pair.market(), "market.");
    ValidationReport inv = validate(pair.investor(), "investor.");
    rep.issues.insert(rep.issues.end(), inv.issues.begin(), inv.issues.end());
    return rep;
}

std::vector<double> drift_gap(const MeasurePair& pair, double, const StateVector& x)
{
    switch (pair.kind()) {
    case ModelKind::Ou: {
        const auto& m = pair.market_as<OuParams>();
        const auto& i = pair.investor_as<OuParams>();
        const double r = x.at(0);
        const double l = x.at(1);
        return {m.kappa_r * (m.theta_r - r) - i.kappa_r * (i.theta_r - r),
                m.kappa_l * (m.mu * m.theta_l - l) - i.kappa_l * (m.mu * i.theta_l - l)};
    }
    case ModelKind::Cir: {
        const auto& m = pair.market_as<CirParams>();
        const auto& i = pair.investor_as<CirParams>();
        std::vector<double> out(m.factors());
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] = m.kappa[k] * (m.theta[k] - x.at(k)) - i.kappa[k] * (i.theta[k] - x.at(k));
        return out;
    }
    case ModelKind::TopDown: {
        const auto& m = pair.market_as<TopDownParams>();
        const auto& i = pair.investor_as<TopDownParams>();
        const double l = x.at(0);
        return {m.kappa * (m.mu * m.theta - l) - i.kappa * (m.mu * i.theta - l)};
    }
    }
    return {};
}

std::vector<double> relative_mtm_premium(const MeasurePair& pair, double t, const StateVector& x)
{
    const auto gap = drift_gap(pair, t, x);
    auto degenerate = [] { return ModelError("degenerate diffusion coefficient"); };

    switch (pair.kind()) {
    case ModelKind::Ou: {
        const auto& m = pair.market_as<OuParams>();
        if (m.sigma_r == 0.0 || m.sigma_l == 0.0 || std::abs(m.rho) == 1.0)
            throw degenerate();
        const double s = std::sqrt(1.0 - m.rho * m.rho);
        const double phi_r = gap[0] / m.sigma_r;
        return {phi_r, gap[1] / (m.lambda_vol() * s) - m.rho / s * phi_r};
    }
    case ModelKind::Cir: {
        const auto& m = pair.market_as<CirParams>();
        std::vector<double> phi(gap.size());
        for (std::size_t k = 0; k < phi.size(); ++k) {
            const double vol = m.sigma[k] * std::sqrt(x.at(k));
            if (vol == 0.0)
                throw degenerate();
            phi[k] = gap[k] / vol;
        }
        return phi;
    }
    case ModelKind::TopDown: {
        const auto& m = pair.market_as<TopDownParams>();
        const double vol = m.sigma * std::sqrt(m.mu * x.at(0));
        if (vol == 0.0)
            throw degenerate();
        return {gap[0] / vol};
    }
    }
    return {};
}

double maturity_of(const ClaimSpec& c)
{
    return std::visit([](const auto& v) { return v.maturity; }, c);
}

std::string claim_name(const ClaimSpec& c)
{
    struct Visitor {
        std::string operator()(const ZeroRecoveryBond&) const { return "zero_recovery_bond"; }
        std::string operator()(const RtBond&) const { return "rt_bond"; }
        std::string operator()(const RmvBond&) const { return "rmv_bond"; }
        std::string operator()(const Cds&) const { return "cds"; }
        std::string operator()(const ForwardCds&) const { return "forward_cds"; }
        std::string operator()(const Cdx&) const { return "cdx"; }
    };
    return std::visit(Visitor{}, c);
}

void validate_claim(const ClaimSpec& c)
{
    if (!(maturity_of(c) > 0))
        throw DomainError("claim maturity must be > 0");
    if (auto* b = std::get_if<RtBond>(&c); b && (b->recovery < 0 || b->recovery > 1))
        throw DomainError("RT recovery must lie in [0,1]");
    if (auto* b = std::get_if<RmvBond>(&c); b && (b->recovery < 0 || b->recovery >= 1))
        throw DomainError("RMV recovery must lie in [0,1)");
    if (auto* s = std::get_if<Cds>(&c); s && s->spread < 0)
        throw DomainError("CDS spread must be >= 0");
    if (auto* f = std::get_if<ForwardCds>(&c)) {
        if (f->spread < 0) throw DomainError("forward CDS spread must be >= 0");
        if (!(f->start < f->maturity)) throw DomainError("forward CDS requires start < maturity");
    }
    if (auto* x = std::get_if<Cdx>(&c); x && x->spread < 0)
        throw DomainError("CDX spread must be >= 0");
}

} // namespace liqtimer
