#pragma once

#include "liqtimer/problem.hpp"
#include "liqtimer/vi_solver.hpp"

#include <string>
#include <vector>

namespace liqtimer {

struct PriceSurface {
    Grid grid;
    std::vector<std::vector<double>> values;
    int upwinded_nodes = 0;
    std::vector<std::string> warnings;
};

/**
 * Implicit finite-difference solution of the one-factor pricing PDE under the
 * market measure:  C_t + b C_l + v/2 C_ll - (r + lambda) C + lambda R + q = 0,
 * C(T) = Y.  Neumann data at lambda_max (and at a negative lambda_min) come
 * from the closed-form slope.
 */
PriceSurface pde_price(const OneFactorProblem& p, const Grid& g);

} // namespace liqtimer
