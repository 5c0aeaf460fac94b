#include "fixtures.hpp"

#include "liqtimer/drift.hpp"
#include "liqtimer/vi_solver.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace liqtimer;

namespace {

PriceFunction market_price(const MeasurePair& pair, ClaimSpec c)
{
    return [&pair, c](double t, const StateVector& x) { return claim_price(pair.market(), c, t, x); };
}

RecoveryFunction market_recovery(const MeasurePair& pair, ClaimSpec c)
{
    return [&pair, c](double t, const StateVector& x) { return claim_recovery(pair.market(), c, t, x); };
}

} // namespace

TEST(Drift, ClosedFormsMatchNumericalGradient)
{
    struct Case {
        MeasurePair pair;
        ClaimSpec c;
        StateVector x;
    };
    auto ou_i = fx::ou(0.3, 0.02, 2.5);
    auto cir_i = fx::cir(0.3, 1.5);
    const std::vector<Case> cases{
        {MeasurePair(fx::ou(0.2), ou_i), ZeroRecoveryBond{1.0}, {0.03, 0.04}},
        {MeasurePair(fx::cir(0.2), cir_i), ZeroRecoveryBond{1.0}, {0.02}},
        {MeasurePair(fx::cir(0.2), cir_i), RtBond{1.0, 0.4}, {0.02}},
        {MeasurePair(fx::cir(0.2), cir_i), Cds{1.0, 0.02}, {0.02}},
        {MeasurePair(fx::ou(0.2), ou_i), Cds{1.0, 0.02}, {0.03, 0.04}},
    };
    for (const auto& k : cases) {
        const double want = g_general(k.pair, market_price(k.pair, k.c), market_recovery(k.pair, k.c), 0.3, k.x);
        const double got = g_claim(k.pair, k.c, 0.3, k.x);
        EXPECT_NEAR(got, want, 1e-8 + 1e-6 * std::abs(want)) << claim_name(k.c);
    }
    const MeasurePair ou(fx::ou(0.2), ou_i);
    EXPECT_DOUBLE_EQ(g_bond_ou(ou, 0.3, 1.0, 0.03, 0.04), g_claim(ou, ZeroRecoveryBond{1.0}, 0.3, {0.03, 0.04}));
}

TEST(Drift, CdxMatchesTwoTermFormula)
{
    const MeasurePair pair(fx::topdown(0.5), fx::topdown(1.0));
    const auto& m = pair.market_as<TopDownParams>();
    const double l = 1.4;
    const auto k = cdx_coefficients(m, 0.02, 0.5, 5.0);
    // Equal event premium and loss law: only the drift term survives.
    const double gap = drift_gap(pair, 0.5, {l})[0];
    EXPECT_NEAR(g_cdx(pair, 0.02, 0.5, 5.0, l), -k.k2 * gap, 1e-12);
}

TEST(Drift, VanishesUnderAgreement)
{
    const auto pair = MeasurePair::agreeing(fx::cir(0.2));
    for (double x : {0.001, 0.02, 0.1})
        EXPECT_NEAR(g_claim(pair, Cds{1.0, 0.02}, 0.0, {x}), 0.0, 1e-15);
    const auto td = MeasurePair::agreeing(fx::topdown(0.5));
    EXPECT_EQ(g_cdx(td, 0.02, 0.0, 5.0, 1.1), 0.0);
}

TEST(Drift, RowMatchesPointwise)
{
    const MeasurePair pair(fx::cir(0.2), fx::cir(0.3));
    std::vector<StateVector> xs{{0.0}, {0.01}, {0.05}};
    const auto row = g_claim_row(pair, Cds{1.0, 0.02}, 0.2, xs);
    for (std::size_t i = 0; i < xs.size(); ++i)
        EXPECT_NEAR(row[i], g_claim(pair, Cds{1.0, 0.02}, 0.2, xs[i]), 1e-14);
}

TEST(Drift, SurfaceMatchesClosedForm)
{
    const MeasurePair pair(fx::cir(0.2), fx::cir(0.3));
    std::vector<double> ts{0.0, 0.5}, ls;
    for (int k = 0; k <= 200; ++k)
        ls.push_back(0.0005 * k);
    std::vector<std::vector<double>> v(2, std::vector<double>(ls.size()));
    for (int m = 0; m < 2; ++m)
        for (std::size_t k = 0; k < ls.size(); ++k)
            v[m][k] = cir_bond_price(fx::cir(0.2), ts[m], 1.0, {ls[k] / 2.0});
    auto gap = [&](double l) { return drift_gap(pair, 0.0, {l / 2.0})[0] * 2.0; };
    const auto G = g_from_surface(ts, ls, v, gap, [](double, double) { return 0.0; }, 1.0);
    for (int m = 0; m < 2; ++m)
        for (std::size_t k = 1; k + 1 < ls.size(); ++k)
            EXPECT_NEAR(G[m][k], g_bond_cir(pair, ts[m], 1.0, {ls[k] / 2.0}), 1e-8);
    EXPECT_THROW(g_from_surface(ts, {0.0, 1.0}, {{1, 1}, {1, 1}}, gap, [](double, double) { return 0.0; }, 1.0),
                 DomainError);
}

TEST(Drift, BondSignFollowsEventPremium)
{
    // Same intensity dynamics, lower investor event premium: waiting pays.
    const MeasurePair lo(fx::cir(0.2, 2.0), fx::cir(0.2, 1.5));
    const MeasurePair hi(fx::cir(0.2, 2.0), fx::cir(0.2, 2.5));
    for (double x : {0.001, 0.01, 0.05}) {
        EXPECT_GT(g_bond_cir(lo, 0.0, 1.0, {x}), 0.0);
        EXPECT_LT(g_bond_cir(hi, 0.0, 1.0, {x}), 0.0);
    }
}

namespace {

DeterministicInputs det_inputs(double mu_i)
{
    DeterministicInputs in;
    in.r = Schedule::constant(0.03);
    in.lambda_hat = Schedule{{0.0, 0.5, 1.0}, {0.01, 0.03, 0.02}};
    in.mu = Schedule::constant(2.0);
    in.mu_investor = Schedule{{0.0, 1.0}, {mu_i, 4.0 - mu_i}};
    in.recovery = Schedule::constant(0.0);
    in.maturity = 1.0;
    return in;
}

} // namespace

TEST(Drift, DeterministicPriceAndDrift)
{
    const auto in = det_inputs(1.5);
    // C(t) = exp(-int_t^T (r + mu lambda_hat)); trapezoid is exact on the linear pieces.
    const double integral = 0.03 + 2.0 * (0.5 * 0.5 * (0.01 + 0.03) + 0.5 * 0.5 * (0.03 + 0.02));
    EXPECT_NEAR(deterministic_price(in, 0.0), std::exp(-integral), 1e-10);
    const double t = 0.25;
    const double want = (0.0 - deterministic_price(in, t)) * (in.mu_investor(t) - 2.0) * in.lambda_hat(t);
    EXPECT_NEAR(g_deterministic(in, t), want, 1e-14);
}

TEST(Drift, DeterministicPremiumMatchesBruteForce)
{
    // mu~ crosses mu at t = 0.5, so G changes sign inside the horizon.
    const auto in = det_inputs(1.0);
    const auto prem = deterministic_premium(in, 0.0, 1.0);
    const int n = 4000;
    double best = 0, acc = 0, disc = 0;
    for (int i = 0; i < n; ++i) {
        const double a = i / double(n), b = (i + 1) / double(n), c = 0.5 * (a + b);
        const double rate = in.r(c) + in.mu_investor(c) * in.lambda_hat(c);
        const double d_mid = std::exp(-(disc + 0.5 * (b - a) * rate));
        acc += d_mid * g_deterministic(in, c) * (b - a);
        disc += (b - a) * rate;
        best = std::max(best, acc);
    }
    EXPECT_NEAR(prem.value, best, 1e-6);
    EXPECT_NEAR(prem.t_star, 0.5, 1e-6);
}
