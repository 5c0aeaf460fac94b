#include "liqtimer/pde_pricer.hpp"

#include <cmath>
#include <sstream>

namespace liqtimer {

namespace {

// Thomas algorithm; a = sub, b = diag, c = super.
std::vector<double> solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                                      std::vector<double> d)
{
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
    return x;
}

} // namespace

PriceSurface pde_price(const OneFactorProblem& p, const Grid& g)
{
    const int M = g.M();
    const int K = g.K();
    const double dt = g.dt();
    const double h = g.h();

    // Recovery of market value folds into the discount rate.
    double kill_scale = 1.0;
    bool rmv = false;
    if (auto* b = std::get_if<RmvBond>(&p.claim)) {
        kill_scale = 1.0 - b->recovery;
        rmv = true;
    }
    const bool killing = p.killing;

    PriceSurface s;
    s.grid = g;
    s.values.assign(M + 1, std::vector<double>(K + 1, p.payoff));

    std::vector<double> lo(K + 1, 0.0), di(K + 1, 1.0), up(K + 1, 0.0);
    for (int i = 1; i < K; ++i) {
        const double l = g.lambda_nodes[i];
        const double b = p.market.drift(l);
        const double a = 0.5 * p.market.variance(l);
        double cm = a / (h * h);
        double cp = a / (h * h);
        if (std::abs(b) * h > 2.0 * a) {
            ++s.upwinded_nodes;
            if (b > 0)
                cp += b / h;
            else
                cm -= b / h;
        } else {
            cp += b / (2.0 * h);
            cm -= b / (2.0 * h);
        }
        const double disc = p.rate(l) + (killing ? kill_scale * l : 0.0);
        lo[i] = -dt * cm;
        up[i] = -dt * cp;
        di[i] = 1.0 + dt * (cm + cp + disc);
    }
    const bool natural_lower = p.nonnegative && g.lambda_min() == 0.0;
    if (natural_lower) {
        const double b = std::max(p.market.drift(0.0), 0.0);
        const double cp = b / h + 0.5 * p.market.variance(0.0) / (h * h);
        up[0] = -dt * cp;
        di[0] = 1.0 + dt * (cp + p.rate(0.0));
    } else {
        di[0] = -1.0;
        up[0] = 1.0;
    }
    lo[K] = -1.0;
    di[K] = 1.0;
    if (s.upwinded_nodes > 0) {
        std::ostringstream os;
        os << "grid too coarse for centered convection at " << s.upwinded_nodes
           << " nodes (cell Peclet > 2); first-order upwinding used";
        s.warnings.push_back(os.str());
    }

    std::vector<double> rhs(K + 1);
    for (int m = M - 1; m >= 0; --m) {
        const double t = g.t_nodes[m];
        const double q = p.dividend(t);
        for (int i = 0; i < K; ++i) {
            const double l = g.lambda_nodes[i];
            const double rec = rmv ? 0.0 : p.recovery(t, l);
            rhs[i] = s.values[m + 1][i] + dt * ((killing ? l * rec : 0.0) + q);
        }
        if (!natural_lower)
            rhs[0] = h * p.price_slope(t, g.lambda_nodes[0]);
        rhs[K] = h * p.price_slope(t, g.lambda_nodes[K]);
        s.values[m] = solve_tridiagonal(lo, di, up, rhs);
    }
    return s;
}

} // namespace liqtimer
