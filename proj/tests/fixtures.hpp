#pragma once

#include "liqtimer/models.hpp"

// Benchmark parameter sets used across the test binaries.

namespace fx {

using namespace liqtimer;

inline OuParams ou(double kappa_l, double sigma_l = 0.02, double mu = 2.0, double theta_l = 0.015)
{
    OuParams p;
    p.kappa_r = 0.0;
    p.theta_r = 0.03;
    p.sigma_r = 0.0;
    p.kappa_l = kappa_l;
    p.theta_l = theta_l;
    p.sigma_l = sigma_l;
    p.rho = 0.0;
    p.mu = mu;
    return p;
}

/// Stochastic-rate OU for the closed-form tests.
inline OuParams ou_full()
{
    OuParams p;
    p.kappa_r = 0.4;
    p.theta_r = 0.04;
    p.sigma_r = 0.01;
    p.kappa_l = 0.25;
    p.theta_l = 0.02;
    p.sigma_l = 0.015;
    p.rho = -0.3;
    p.mu = 1.5;
    return p;
}

inline CirParams cir(double kappa, double mu = 2.0, double sigma = 0.07, double theta = 0.015)
{
    CirParams p;
    p.kappa = {kappa};
    p.theta = {theta};
    p.sigma = {sigma};
    p.w_r = {0.0};
    p.w_l = {1.0};
    p.mu = mu;
    p.r_const = 0.03;
    return p;
}

/// Two-factor CIR with stochastic rate.
inline CirParams cir2()
{
    CirParams p;
    p.kappa = {0.3, 0.5};
    p.theta = {0.03, 0.02};
    p.sigma = {0.08, 0.1};
    p.w_r = {1.0, 0.2};
    p.w_l = {0.3, 1.0};
    p.mu = 1.4;
    p.r_const = 0.005;
    return p;
}

inline TopDownParams topdown(double kappa, double theta = 1.0)
{
    TopDownParams p;
    p.kappa = kappa;
    p.theta = theta;
    p.sigma = 0.5;
    p.eta = 0.25;
    p.mu = 1.1;
    p.loss = LossDistribution::constant(0.5);
    p.names = 10;
    p.r = 0.03;
    return p;
}

} // namespace fx
