#include "fixtures.hpp"

#include "liqtimer/boundary.hpp"
#include "liqtimer/mc_oracle.hpp"
#include "liqtimer/pricers.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

using namespace liqtimer;

namespace {

struct Stats {
    double mean = 0, se = 0;
};

template <class F>
Stats sample(int n, F&& f)
{
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = f(i);
        s += x;
        s2 += x * x;
    }
    Stats st;
    st.mean = s / n;
    st.se = std::sqrt(std::max(0.0, s2 / n - st.mean * st.mean) / (n - 1));
    return st;
}

// Boundary with a constant critical level on [0, T].
Boundary flat(double T, double level, Side side)
{
    Boundary b;
    b.side = side;
    b.lambda_min = -1;
    b.lambda_max = 10;
    b.cell = 0.001;
    for (int m = 0; m <= 10; ++m) {
        BoundaryRow r;
        r.t = T * m / 10;
        r.lambda_star = level;
        b.rows.push_back(r);
    }
    return b;
}

} // namespace

TEST(Rng, DeterministicStreams)
{
    Rng a(7, 3), b(7, 3), c(7, 4), d(7, 3, 1);
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
    EXPECT_NE(x, d.uniform());
}

TEST(Rng, Moments)
{
    Rng r(11, 0);
    const int n = 200000;
    const auto nm = sample(n, [&](int) { return r.normal(); });
    EXPECT_NEAR(nm.mean, 0.0, 4 * nm.se);
    const auto ex = sample(n, [&](int) { return r.exponential(); });
    EXPECT_NEAR(ex.mean, 1.0, 4 * ex.se);
    const auto po = sample(n, [&](int) { return double(r.poisson(3.5)); });
    EXPECT_NEAR(po.mean, 3.5, 4 * po.se);
    const auto ga = sample(n, [&](int) { return r.gamma(0.7, 2.0); });
    EXPECT_NEAR(ga.mean, 1.4, 4 * ga.se);
}

TEST(Mc, OuTransitionMoments)
{
    const auto pair = MeasurePair::agreeing(fx::ou(0.2));
    const auto b = simulate_paths(pair, Measure::Market, {0.03, 0.05}, 1.0, 20000, 4, 5);
    const double e = std::exp(-0.2);
    const double mean = 0.03 + (0.05 - 0.03) * e;
    const double var = 0.04 * 0.04 * (1 - e * e) / 0.4;
    const auto m = sample(b.n_paths, [&](int p) { return b.state(p, 4, 1); });
    EXPECT_NEAR(m.mean, mean, 4 * m.se);
    const auto v = sample(b.n_paths, [&](int p) { return std::pow(b.state(p, 4, 1) - mean, 2); });
    EXPECT_NEAR(v.mean, var, 4 * v.se);
    EXPECT_EQ(b.state(0, 2, 0), 0.03);
}

TEST(Mc, CirTransitionMean)
{
    const auto pair = MeasurePair::agreeing(fx::cir(0.2));
    const auto b = simulate_paths(pair, Measure::Investor, {0.03}, 2.0, 20000, 2, 9);
    const double mean = 0.015 + (0.03 - 0.015) * std::exp(-0.4);
    const auto m = sample(b.n_paths, [&](int p) { return b.state(p, 2, 0); });
    EXPECT_NEAR(m.mean, mean, 4 * m.se);
    for (int p = 0; p < 100; ++p)
        EXPECT_GE(b.state(p, 2, 0), 0.0);
}

TEST(Mc, SurvivalMatchesBondPrice)
{
    const ModelParams m = fx::cir(0.2);
    const auto pair = MeasurePair::agreeing(m);
    const auto b = simulate_paths(pair, Measure::Market, {0.03}, 1.0, 20000, 200, 21);
    const auto tau = simulate_default(b, 21);
    const auto s = sample(b.n_paths, [&](int p) { return tau[p] > 1.0 ? 1.0 : 0.0; });
    const double want = zero_recovery_bond_price(m, 0.0, 1.0, {0.03}) / std::exp(-0.03);
    EXPECT_NEAR(s.mean, want, 4 * s.se);
}

TEST(Mc, PriceEstimatorsAgreeWithClosedForm)
{
    const ModelParams ou = fx::ou_full();
    const auto e = estimate_price(RtBond{2.0, 0.4}, ou, 0.0, {0.04, 0.02}, 20000, 3, {100});
    EXPECT_LT(std::abs(e.z(claim_price(ou, RtBond{2.0, 0.4}, 0.0, {0.04, 0.02}))), 4.0);
    const ModelParams cir = fx::cir(0.2);
    const auto c = estimate_price(Cds{1.0, 0.02}, cir, 0.0, {0.03}, 20000, 4, {200});
    EXPECT_LT(std::abs(c.z(claim_price(cir, Cds{1.0, 0.02}, 0.0, {0.03}))), 4.0);
    const ModelParams td = fx::topdown(0.5);
    const auto x = estimate_price(Cdx{2.0, 0.02}, td, 0.0, {1.1, 0.0, 0.0}, 20000, 5, {100});
    EXPECT_LT(std::abs(x.z(claim_price(td, Cdx{2.0, 0.02}, 0.0, {1.1, 0.0, 0.0}))), 4.0);
}

TEST(Mc, AnyRuleIsFairUnderAgreement)
{
    // With Q~ = Q the discounted cumulative price is a martingale.
    const ModelParams m = fx::cir(0.2);
    const auto pair = MeasurePair::agreeing(m);
    const double C = claim_price(m, ZeroRecoveryBond{1.0}, 0.0, {0.015});
    for (auto mode : {DefaultHandling::Sampled, DefaultHandling::SurvivalWeighted}) {
        const auto v = evaluate_strategy(ZeroRecoveryBond{1.0}, pair, flat(1.0, 0.04, Side::Above), 0.0, {0.015},
                                         20000, 8, {200, mode});
        EXPECT_LT(std::abs(v.z(C)), 4.0);
    }
}

TEST(Mc, Reproducible)
{
    const ModelParams m = fx::cir(0.2);
    const auto a = estimate_price(ZeroRecoveryBond{1.0}, m, 0.0, {0.03}, 5000, 42, {50});
    const auto b = estimate_price(ZeroRecoveryBond{1.0}, m, 0.0, {0.03}, 5000, 42, {50});
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_error, b.std_error);
}

TEST(Mc, BoundaryMustSpanHorizon)
{
    const auto pair = MeasurePair::agreeing(fx::cir(0.2));
    EXPECT_THROW(evaluate_strategy(ZeroRecoveryBond{1.0}, pair, flat(0.5, 0.04, Side::Above), 0.0, {0.015}, 100, 1),
                 DomainError);
}

TEST(Mc, TopDownOverflowNamesRhoSign)
{
    auto p = fx::topdown(0.5);
    p.eta = 2.0; // rho_eff = 0.5 - 1.1 * 2 * 0.5 < 0
    const auto pair = MeasurePair::agreeing(p);
    try {
        simulate_topdown(pair, Measure::Market, {1.1, 0, 0}, 50.0, 200, 3, 20);
    } catch (const std::exception& e) {
        EXPECT_NE(std::string(e.what()).find("rho_eff"), std::string::npos);
    }
}

TEST(Mc, ThreadCountFromEnvironment)
{
    ::setenv("LIQTIMER_THREADS", "3", 1);
    EXPECT_EQ(mc_threads(), 3);
    ::unsetenv("LIQTIMER_THREADS");
    EXPECT_GE(mc_threads(), 1);
}

namespace {

// Constant intensity lambda0: OU with no reversion and no volatility.
MeasurePair constant_intensity(double mu_investor)
{
    return {fx::ou(0.0, 0.0, 1.0), fx::ou(0.0, 0.0, mu_investor)};
}

} // namespace

TEST(Mc, ConstantIntensitySurvivalKs)
{
    const double l0 = 0.7;
    const int n = 100000;
    const auto b = simulate_paths(constant_intensity(1.0), Measure::Market, {0.03, l0}, 2.0, n, 20, 77);
    auto tau = simulate_default(b, 77);
    std::sort(tau.begin(), tau.end());
    double d = 0;
    for (int i = 0; i < n; ++i) {
        if (tau[i] > 2.0)
            break;
        const double F = 1 - std::exp(-l0 * tau[i]);
        d = std::max({d, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
    }
    // 1% critical value of the Kolmogorov statistic.
    EXPECT_LT(d * std::sqrt(double(n)), 1.63);
}

TEST(Mc, InvestorHazardScalesWithEventPremium)
{
    const double l0 = 0.3;
    const auto pair = constant_intensity(2.0);
    const auto b = simulate_paths(pair, Measure::Investor, {0.03, l0}, 1.0, 100000, 10, 5);
    const auto tau = simulate_default(b, 5);
    const auto s = sample(b.n_paths, [&](int p) { return tau[p] > 1.0 ? 1.0 : 0.0; });
    EXPECT_NEAR(s.mean, std::exp(-2 * l0), 3 * s.se);
    const auto zero = simulate_paths(constant_intensity(1.0), Measure::Market, {0.03, 0.0}, 1.0, 100, 10, 5);
    for (double t : simulate_default(zero, 5))
        EXPECT_TRUE(std::isinf(t));
}

TEST(Mc, DegenerateStoppingRules)
{
    const MeasurePair pair(fx::cir(0.2), fx::cir(0.3));
    const StateVector x0{0.015};
    const ClaimSpec bond = ZeroRecoveryBond{1.0};

    auto now = flat(1.0, 0.0, Side::Below);
    for (auto& r : now.rows)
        r.whole_domain = true;
    const auto v = evaluate_strategy(bond, pair, now, 0.0, x0, 1000, 3);
    EXPECT_DOUBLE_EQ(v.mean, claim_price(pair.market(), bond, 0.0, x0));
    EXPECT_EQ(v.std_error, 0.0);

    auto never = flat(1.0, 0.0, Side::Below);
    for (auto& r : never.rows) {
        r.empty = true;
        r.lambda_star = std::nan("");
    }
    const double investor = claim_price(pair.investor(), bond, 0.0, investor_state(pair, x0));
    for (auto mode : {DefaultHandling::Sampled, DefaultHandling::SurvivalWeighted}) {
        const auto w = evaluate_strategy(bond, pair, never, 0.0, x0, 40000, 4, {200, mode});
        EXPECT_LT(std::abs(w.z(investor)), 3.0);
    }
}

TEST(Mc, StandardErrorScaling)
{
    const ModelParams m = fx::cir(0.2);
    const auto a = estimate_price(Cds{1.0, 0.02}, m, 0.0, {0.03}, 10000, 6, {50});
    const auto b = estimate_price(Cds{1.0, 0.02}, m, 0.0, {0.03}, 40000, 6, {50});
    EXPECT_NEAR(a.std_error / b.std_error, 2.0, 0.2);
}

TEST(Mc, TopDownWithoutSelfExcitation)
{
    auto p = fx::topdown(0.5);
    p.eta = 0.0;
    const auto pair = MeasurePair::agreeing(p);
    const auto b = simulate_topdown(pair, Measure::Market, {1.1, 0, 0}, 1.0, 40000, 12);
    const auto n = sample(b.n_paths, [&](int q) { return b.state(q, b.n_steps, 1); });
    EXPECT_NEAR(n.mean, cdx_moments(p, 0, 1, 1.1, 0, 0).defaults, 3 * n.se);

    auto z = fx::topdown(0.5, 0.0);
    const auto zb = simulate_topdown(MeasurePair::agreeing(z), Measure::Market, {0.0, 0, 0}, 2.0, 1000, 13);
    for (int q = 0; q < zb.n_paths; ++q)
        EXPECT_EQ(zb.state(q, zb.n_steps, 1), 0.0);
}
