#include "liqtimer/vi_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace liqtimer {

Grid Grid::uniform(double T, int M, double lambda_min, double lambda_max, int K)
{
    if (M < 1 || K < 2)
        throw DomainError("grid needs M >= 1 time steps and K >= 2 intensity steps");
    if (!(T > 0) || !(lambda_max > lambda_min))
        throw DomainError("grid needs T > 0 and lambda_max > lambda_min");
    Grid g;
    g.t_nodes.resize(M + 1);
    g.lambda_nodes.resize(K + 1);
    for (int m = 0; m <= M; ++m)
        g.t_nodes[m] = T * m / M;
    for (int k = 0; k <= K; ++k)
        g.lambda_nodes[k] = lambda_min + (lambda_max - lambda_min) * k / K;
    return g;
}

bool Grid::same_as(const Grid& o) const
{
    return t_nodes == o.t_nodes && lambda_nodes == o.lambda_nodes;
}

Grid make_grid(const OneFactorProblem& p, int M, int K, std::optional<double> lambda_min,
               std::optional<double> lambda_max)
{
    const double lo = lambda_min.value_or(p.default_lambda_min());
    const double hi = lambda_max.value_or(p.default_lambda_max());
    if (p.nonnegative && lo < 0)
        throw DomainError("lambda_min must be >= 0 for square-root intensity models");
    return Grid::uniform(p.maturity, M, lo, hi, K);
}

const char* to_string(PremiumKind k)
{
    switch (k) {
    case PremiumKind::Liquidation: return "liquidation";
    case PremiumKind::Purchase: return "purchase";
    case PremiumKind::Cdx: return "cdx";
    case PremiumKind::Sequential: return "sequential";
    }
    return "?";
}

double PremiumSurface::max_residual() const
{
    double r = 0.0;
    for (double v : residuals)
        r = std::max(r, v);
    return r;
}

double PremiumSurface::interpolate(double t, double lambda) const
{
    const auto& tn = grid.t_nodes;
    const auto& ln = grid.lambda_nodes;
    t = std::clamp(t, tn.front(), tn.back());
    lambda = std::clamp(lambda, ln.front(), ln.back());
    const double ft = (t - tn.front()) / grid.dt();
    const double fl = (lambda - ln.front()) / grid.h();
    const int m = std::min(static_cast<int>(ft), grid.M() - 1);
    const int k = std::min(static_cast<int>(fl), grid.K() - 1);
    const double a = ft - m;
    const double b = fl - k;
    return (1 - a) * ((1 - b) * values[m][k] + b * values[m][k + 1]) +
           a * ((1 - b) * values[m + 1][k] + b * values[m + 1][k + 1]);
}

std::vector<std::vector<double>> drift_grid(const OneFactorProblem& p, const Grid& g)
{
    std::vector<std::vector<double>> out(g.t_nodes.size());
    for (std::size_t m = 0; m < g.t_nodes.size(); ++m)
        out[m] = p.drift_row(g.t_nodes[m], g.lambda_nodes);
    return out;
}

namespace {

// Monotone (Fritsch-Carlson) cubic interpolation on a uniform grid with
// constant extrapolation outside [x0, x0 + K h].
class MonotoneCubic {
public:
    MonotoneCubic(double x0, double h, const std::vector<double>& y) : x0_(x0), h_(h), y_(y), d_(y.size())
    {
        const std::size_t n = y.size();
        std::vector<double> delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i)
            delta[i] = (y[i + 1] - y[i]) / h;
        d_[0] = delta[0];
        d_[n - 1] = delta[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i)
            d_[i] = (delta[i - 1] * delta[i] <= 0) ? 0.0 : 0.5 * (delta[i - 1] + delta[i]);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (delta[i] == 0.0) {
                d_[i] = d_[i + 1] = 0.0;
                continue;
            }
            const double a = d_[i] / delta[i];
            const double b = d_[i + 1] / delta[i];
            const double s = a * a + b * b;
            if (s > 9.0) {
                const double tau = 3.0 / std::sqrt(s);
                d_[i] = tau * a * delta[i];
                d_[i + 1] = tau * b * delta[i];
            }
        }
    }

    double operator()(double x) const
    {
        const double f = (x - x0_) / h_;
        const std::size_t n = y_.size();
        if (f <= 0)
            return y_.front();
        if (f >= static_cast<double>(n - 1))
            return y_.back();
        const std::size_t i = static_cast<std::size_t>(f);
        const double s = f - i;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        return h00 * y_[i] + h10 * h_ * d_[i] + h01 * y_[i + 1] + h11 * h_ * d_[i + 1];
    }

private:
    double x0_, h_;
    const std::vector<double>& y_;
    std::vector<double> d_;
};

struct Tridiagonal {
    std::vector<double> lo, di, up;
};

struct Operator {
    Tridiagonal a;
    std::vector<double> jump_rate; // exact jump mode: rate per node
    bool dirichlet_lower = false;
    int upwinded = 0;
};

Operator assemble(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg, bool with_jumps)
{
    const int K = g.K();
    const double h = g.h();
    const double dt = g.dt();
    const auto& jumps = p.investor_jumps;
    const bool use_jumps = with_jumps && !jumps.empty();
    const bool exact = use_jumps && cfg.jump_mode == JumpMode::ExactInterp;

    Operator op;
    op.a.lo.assign(K + 1, 0.0);
    op.a.di.assign(K + 1, 1.0);
    op.a.up.assign(K + 1, 0.0);
    op.jump_rate.assign(K + 1, 0.0);
    op.dirichlet_lower = !p.nonnegative || g.lambda_min() > 0;

    for (int i = 0; i <= K; ++i) {
        const double l = g.lambda_nodes[i];
        double b = p.investor.drift(l);
        double v = p.investor.variance(l);
        double disc = p.investor_discount(l);
        if (use_jumps) {
            const double rate = jumps.rate_scale * std::max(l, 0.0);
            if (exact) {
                disc += rate;
                op.jump_rate[i] = rate;
            } else {
                b += rate * jumps.mean();
                v += rate * jumps.second_moment();
            }
        }
        if (i == K || (i == 0 && op.dirichlet_lower))
            continue;
        if (i == 0) {
            // lambda = 0 with degenerate diffusion: one-sided inflow drift.
            const double cp = std::max(b, 0.0) / h + 0.5 * v / (h * h);
            op.a.up[0] = -dt * cp;
            op.a.di[0] = 1.0 + dt * (cp + disc);
            continue;
        }
        const double a = 0.5 * v;
        double cm = a / (h * h);
        double cp = a / (h * h);
        if (std::abs(b) * h > 2.0 * a) {
            ++op.upwinded;
            if (b > 0)
                cp += b / h;
            else
                cm -= b / h;
        } else {
            cp += b / (2.0 * h);
            cm -= b / (2.0 * h);
        }
        op.a.lo[i] = -dt * cm;
        op.a.up[i] = -dt * cp;
        op.a.di[i] = 1.0 + dt * (cm + cp + disc);
    }
    // Neumann at lambda_max: x_K = x_{K-1}.
    op.a.lo[K] = -1.0;
    op.a.di[K] = 1.0;
    op.a.up[K] = 0.0;
    return op;
}

void add_jump_rhs(const OneFactorProblem& p, const Grid& g, const Operator& op, double dt,
                  const std::vector<double>& x, const std::vector<double>& base, std::vector<double>& rhs)
{
    const MonotoneCubic f(g.lambda_min(), g.h(), x);
    const auto& J = p.investor_jumps;
    for (int i = 0; i < g.K(); ++i) {
        double e = 0.0;
        if (op.jump_rate[i] > 0)
            for (std::size_t j = 0; j < J.sizes.size(); ++j)
                e += J.probs[j] * f(g.lambda_nodes[i] + J.sizes[j]);
        rhs[i] = base[i] + dt * op.jump_rate[i] * e;
    }
}

double complementarity(const Operator& op, const std::vector<double>& x, const std::vector<double>& rhs,
                       const std::vector<double>& ob, int first)
{
    const int K = static_cast<int>(x.size()) - 1;
    double worst = 0.0;
    for (int i = first; i <= K; ++i) {
        double ax = op.a.di[i] * x[i];
        if (i > 0)
            ax += op.a.lo[i] * x[i - 1];
        if (i < K)
            ax += op.a.up[i] * x[i + 1];
        const double res = std::min(ax - rhs[i], x[i] - ob[i]);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

double lower_edge(const OneFactorProblem& p, PremiumKind kind, double t, double l0)
{
    if (kind == PremiumKind::Purchase)
        return std::max(0.0, p.price(t, l0) - p.investor_price(t, l0));
    return std::max(0.0, p.investor_price(t, l0) - p.price(t, l0));
}

// Thomas algorithm; overwrites rhs with the solution.
void thomas(const Tridiagonal& a, std::vector<double>& rhs)
{
    const std::size_t n = rhs.size();
    std::vector<double> c(n);
    double beta = a.di[0];
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        c[i] = a.up[i - 1] / beta;
        beta = a.di[i] - a.lo[i] * c[i];
        rhs[i] = (rhs[i] - a.lo[i] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] -= c[i + 1] * rhs[i + 1];
}

PremiumSurface solve_obstacle(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg,
                              PremiumKind kind, const PremiumSurface* lhat)
{
    if (!(cfg.omega > 0 && cfg.omega < 2))
        throw DomainError("PSOR relaxation omega must lie in (0,2)");
    if (!(cfg.tol > 0))
        throw DomainError("solver tolerance must be > 0");
    if (cfg.max_iter < 1)
        throw DomainError("max_iter must be >= 1");
    if (std::abs(g.t_nodes.back() - p.maturity) > 1e-12 || g.t_nodes.front() != 0.0)
        throw DomainError("grid must span [0, T]");

    const int M = g.M();
    const int K = g.K();
    const double dt = g.dt();
    const bool jumps = p.kind == ModelKind::TopDown;
    const bool exact = jumps && !p.investor_jumps.empty() && cfg.jump_mode == JumpMode::ExactInterp;
    const Operator op = assemble(p, g, cfg, jumps);
    const int first = op.dirichlet_lower ? 1 : 0;

    PremiumSurface s;
    s.kind = kind;
    s.grid = g;
    s.values.assign(M + 1, std::vector<double>(K + 1, 0.0));
    s.drift = drift_grid(p, g);
    s.iterations.assign(M + 1, 0);
    s.residuals.assign(M + 1, 0.0);
    s.upwinded_nodes = op.upwinded;
    if (op.upwinded > 0) {
        std::ostringstream os;
        os << op.upwinded << " interior nodes use upwinded convection (cell Peclet > 2)";
        s.warnings.push_back(os.str());
    }

    const double source_sign = kind == PremiumKind::Purchase ? -1.0 : (kind == PremiumKind::Sequential ? 0.0 : 1.0);
    double omega = cfg.omega;
    std::vector<double> ob(K + 1, 0.0), base(K + 1), rhs(K + 1), x(K + 1), start(K + 1);

    for (int m = M - 1; m >= 0; --m) {
        const double t = g.t_nodes[m];
        const auto& prev = s.values[m + 1];
        if (kind == PremiumKind::Sequential)
            ob = lhat->values[m];
        for (int i = 0; i < K; ++i)
            base[i] = prev[i] + dt * source_sign * s.drift[m][i];
        base[K] = 0.0;
        rhs = base;
        for (int i = 0; i <= K; ++i)
            start[i] = std::max(prev[i], ob[i]);
        if (op.dirichlet_lower) {
            const double l0 = g.lambda_nodes[0];
            const double edge = kind == PremiumKind::Sequential ? 0.0 : lower_edge(p, kind, t, l0);
            start[0] = std::max(ob[0], edge);
        }

        bool done = false;
        int total_iter = 0;
        while (!done) {
            x = start;
            double err_mark = std::numeric_limits<double>::infinity();
            int it = 0;
            bool restart = false;
            for (; it < cfg.max_iter; ++it) {
                if (exact)
                    add_jump_rhs(p, g, op, dt, x, base, rhs);
                double err = 0.0;
                for (int i = first; i < K; ++i) {
                    double sum = rhs[i] - op.a.up[i] * x[i + 1];
                    if (i > 0)
                        sum -= op.a.lo[i] * x[i - 1];
                    const double y = std::max(x[i] + omega * (sum / op.a.di[i] - x[i]), ob[i]);
                    err = std::max(err, std::abs(y - x[i]));
                    x[i] = y;
                }
                const double yk = std::max(x[K - 1], ob[K]);
                err = std::max(err, std::abs(yk - x[K]));
                x[K] = yk;

                if (!std::isfinite(err)) {
                    restart = true;
                    break;
                }
                if (err < cfg.tol) {
                    if (exact)
                        add_jump_rhs(p, g, op, dt, x, base, rhs);
                    const double res = complementarity(op, x, rhs, ob, first);
                    if (res <= cfg.tol) {
                        s.residuals[m] = res;
                        done = true;
                        ++it;
                        break;
                    }
                }
                if (it > 0 && it % 50 == 0) {
                    if (it >= 100 && err > err_mark) {
                        restart = true;
                        break;
                    }
                    err_mark = err;
                }
            }
            total_iter += it;
            if (done)
                break;
            if (restart && omega > 0.05) {
                omega *= 0.5;
                std::ostringstream os;
                os << "PSOR divergence at step " << m << "; omega halved to " << omega;
                s.warnings.push_back(os.str());
                continue;
            }
            if (exact)
                add_jump_rhs(p, g, op, dt, x, base, rhs);
            const double res = complementarity(op, x, rhs, ob, first);
            std::ostringstream os;
            os << "PSOR did not converge at step " << m << " (t = " << t << ") after " << total_iter
               << " iterations; worst residual " << res;
            throw SolverError(os.str(), res, m);
        }
        if (!exact) {
            // Active-set polish: solve the step exactly with the contact set
            // PSOR found; keep it only if it is still complementary.
            Tridiagonal a = op.a;
            std::vector<double> y = rhs;
            if (op.dirichlet_lower) {
                a.lo[0] = a.up[0] = 0.0;
                a.di[0] = 1.0;
                y[0] = x[0];
            }
            for (int i = first; i <= K; ++i) {
                if (x[i] != ob[i])
                    continue;
                a.lo[i] = a.up[i] = 0.0;
                a.di[i] = 1.0;
                y[i] = ob[i];
            }
            thomas(a, y);
            const double res = complementarity(op, y, rhs, ob, first);
            if (res <= s.residuals[m]) {
                x = y;
                s.residuals[m] = res;
            }
        }
        for (double& v : x)
            if (v < 0 && v > -cfg.tol)
                v = 0.0;
        s.values[m] = x;
        s.iterations[m] = total_iter;
    }
    s.omega_used = omega;
    return s;
}

} // namespace

PremiumSurface solve_liquidation_vi(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg)
{
    if (p.kind == ModelKind::TopDown)
        return solve_cdx_vi(p, g, cfg);
    return solve_obstacle(p, g, cfg, PremiumKind::Liquidation, nullptr);
}

PremiumSurface solve_purchase_vi(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg)
{
    return solve_obstacle(p, g, cfg, PremiumKind::Purchase, nullptr);
}

PremiumSurface solve_cdx_vi(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg)
{
    if (p.kind != ModelKind::TopDown)
        throw ModelError("the CDX premium requires the top-down model");
    return solve_obstacle(p, g, cfg, PremiumKind::Cdx, nullptr);
}

PremiumSurface solve_sequential_vi(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg,
                                   const PremiumSurface& lhat)
{
    if (!lhat.grid.same_as(g))
        throw DomainError("grid mismatch between the sequential problem and the liquidation premium");
    return solve_obstacle(p, g, cfg, PremiumKind::Sequential, &lhat);
}

std::vector<std::vector<double>> evaluate_policy(const OneFactorProblem& p, const Grid& g, const SolverConfig& cfg,
                                                 PremiumKind kind, const std::vector<std::vector<char>>& stop)
{
    if (kind != PremiumKind::Liquidation && kind != PremiumKind::Purchase && kind != PremiumKind::Cdx)
        throw DomainError("policy evaluation covers the liquidation, purchase and CDX premia");
    const bool jumps = p.kind == ModelKind::TopDown;
    if (jumps && cfg.jump_mode == JumpMode::ExactInterp)
        throw DomainError("policy evaluation supports the Taylor jump treatment only");
    const int M = g.M();
    const int K = g.K();
    const double dt = g.dt();
    const Operator op = assemble(p, g, cfg, jumps);
    const auto G = drift_grid(p, g);
    const double sign = kind == PremiumKind::Purchase ? -1.0 : 1.0;
    std::vector<std::vector<double>> w(M + 1, std::vector<double>(K + 1, 0.0));
    for (int m = M - 1; m >= 0; --m) {
        Tridiagonal a = op.a;
        std::vector<double> rhs(K + 1);
        for (int i = 0; i < K; ++i)
            rhs[i] = w[m + 1][i] + dt * sign * G[m][i];
        rhs[K] = 0.0;
        if (op.dirichlet_lower) {
            a.lo[0] = a.up[0] = 0.0;
            a.di[0] = 1.0;
            rhs[0] = lower_edge(p, kind, g.t_nodes[m], g.lambda_nodes[0]);
        }
        for (int i = 0; i < K; ++i) {
            if (!stop[m][i])
                continue;
            a.lo[i] = a.up[i] = 0.0;
            a.di[i] = 1.0;
            rhs[i] = 0.0;
        }
        thomas(a, rhs);
        w[m] = rhs;
    }
    return w;
}

std::vector<std::vector<double>> unconstrained_round_trip(const OneFactorProblem& p, const Grid& g,
                                                          const SolverConfig& cfg, const PremiumSurface& lhat,
                                                          const PremiumSurface& lbhat)
{
    if (!lhat.grid.same_as(g) || !lbhat.grid.same_as(g))
        throw DomainError("grid mismatch in the round-trip evaluation");
    auto zeros = [](const PremiumSurface& s) {
        std::vector<std::vector<char>> z(s.values.size());
        for (std::size_t m = 0; m < s.values.size(); ++m)
            for (double v : s.values[m])
                z[m].push_back(v == 0.0);
        return z;
    };
    auto sell = evaluate_policy(p, g, cfg, lhat.kind, zeros(lhat));
    const auto buy = evaluate_policy(p, g, cfg, PremiumKind::Purchase, zeros(lbhat));
    for (std::size_t m = 0; m < sell.size(); ++m)
        for (std::size_t k = 0; k < sell[m].size(); ++k)
            sell[m][k] += buy[m][k];
    return sell;
}

DeterministicPremium deterministic_premium(const DeterministicInputs& in, double t, double T)
{
    if (T < t)
        throw DomainError("deterministic premium needs t <= T");
    DeterministicPremium out;
    out.t_star = t;
    out.candidates.push_back(t);
    if (T == t)
        return out;
    DeterministicInputs claim = in;
    claim.maturity = T;

    const int n = 4000;
    const double h = (T - t) / n;
    // Price at cell ends (even indices) and midpoints (odd indices).
    const auto c = deterministic_price_path(claim, t, 2 * n);
    auto gval = [&](int j2) {
        const double u = t + 0.5 * h * j2;
        return (in.recovery(u) - c[j2]) * (in.mu_investor(u) - in.mu(u)) * in.lambda_hat(u);
    };
    auto kill = [&](double u) { return in.r(u) + in.mu_investor(u) * in.lambda_hat(u); };

    std::vector<double> G(2 * n + 1), disc(2 * n + 1), F(n + 1, 0.0);
    for (int j = 0; j <= 2 * n; ++j)
        G[j] = gval(j);
    disc[0] = 1.0;
    double cum = 0.0;
    for (int j = 0; j < 2 * n; ++j) {
        const double a = t + 0.5 * h * j;
        const double hh = 0.5 * h;
        cum += hh / 6.0 * (kill(a) + 4.0 * kill(a + 0.5 * hh) + kill(a + hh));
        disc[j + 1] = std::exp(-cum);
    }
    for (int j = 0; j < n; ++j)
        F[j + 1] = F[j] + h / 6.0 * (disc[2 * j] * G[2 * j] + 4.0 * disc[2 * j + 1] * G[2 * j + 1] +
                                     disc[2 * j + 2] * G[2 * j + 2]);

    auto consider = [&](double time, double value) {
        out.candidates.push_back(time);
        if (value > out.value) {
            out.value = value;
            out.t_star = time;
        }
    };
    for (int j2 = 0; j2 < 2 * n; ++j2) {
        if (G[j2] == 0.0 && j2 > 0) {
            const int cell = j2 / 2;
            const double extra = (j2 % 2) ? 0.25 * h * (disc[2 * cell] * G[2 * cell] + disc[j2] * G[j2]) : 0.0;
            consider(t + 0.5 * h * j2, F[cell] + extra);
            continue;
        }
        if ((G[j2] > 0) != (G[j2 + 1] > 0) && G[j2 + 1] != 0.0) {
            // Root inside a half cell: linear location, trapezoid for the tail.
            const double w = G[j2] / (G[j2] - G[j2 + 1]);
            const double u = t + 0.5 * h * (j2 + w);
            const int cell = j2 / 2;
            double v = F[cell];
            if (j2 % 2)
                v += 0.25 * h * (disc[2 * cell] * G[2 * cell] + disc[j2] * G[j2]);
            v += 0.5 * (u - (t + 0.5 * h * j2)) * disc[j2] * G[j2];
            consider(u, v);
        }
    }
    consider(T, F[n]);
    return out;
}

} // namespace liqtimer
