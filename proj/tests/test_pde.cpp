#include "fixtures.hpp"

#include "liqtimer/pde_pricer.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace liqtimer;

namespace {

// Worst error on the inner part of the domain, away from the truncated edge.
double worst_error(const OneFactorProblem& p, const PriceSurface& s, double scale)
{
    double worst = 0;
    const auto& g = s.grid;
    const int K = g.K();
    for (int m = 0; m <= g.M(); ++m)
        for (int k = 0; k <= K * 3 / 4; ++k) {
            const double e = std::abs(s.values[m][k] - p.price(g.t_nodes[m], g.lambda_nodes[k]));
            worst = std::max(worst, e / (scale > 0 ? scale : std::abs(p.price(g.t_nodes[m], g.lambda_nodes[k]))));
        }
    return worst;
}

} // namespace

TEST(Pde, OuBondMatchesClosedForm)
{
    const auto p = make_problem(MeasurePair::agreeing(fx::ou(0.2)), ZeroRecoveryBond{1.0}, {0.03, 0.03});
    const auto g = make_grid(p, 100, 200);
    const auto s = pde_price(p, g);
    EXPECT_LT(worst_error(p, s, 0.0), 2e-3);
}

TEST(Pde, CirBondMatchesClosedForm)
{
    const auto p = make_problem(MeasurePair::agreeing(fx::cir(0.2)), ZeroRecoveryBond{1.0}, {});
    const auto g = make_grid(p, 100, 200);
    EXPECT_LT(worst_error(p, pde_price(p, g), 0.0), 2e-3);
}

TEST(Pde, ErrorShrinksWithRefinement)
{
    const auto p = make_problem(MeasurePair::agreeing(fx::cir(0.2)), Cds{1.0, 0.02}, {});
    auto norm = [&](int M, int K) {
        const auto g = make_grid(p, M, K);
        double scale = 0;
        for (double l : g.lambda_nodes)
            scale = std::max(scale, std::abs(p.price(0.0, l)));
        return worst_error(p, pde_price(p, g), scale);
    };
    const double coarse = norm(50, 100);
    const double fine = norm(200, 400);
    EXPECT_LT(fine, coarse);
    EXPECT_LT(fine, 1e-3);
}

TEST(Pde, TerminalRowIsPayoff)
{
    const auto p = make_problem(MeasurePair::agreeing(fx::cir(0.2)), Cds{1.0, 0.02}, {});
    const auto s = pde_price(p, make_grid(p, 20, 40));
    for (double v : s.values.back())
        EXPECT_EQ(v, 0.0);
}
