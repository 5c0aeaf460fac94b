#include "liqtimer/pipeline.hpp"

#include "liqtimer/pricers.hpp"

#include <chrono>
#include <cmath>

namespace liqtimer {

StateVector problem_base(const RunConfig& c)
{
    return c.pair.kind() == ModelKind::Cir ? StateVector{} : c.state0;
}

double initial_lambda(const RunConfig& c)
{
    return pricing_intensity(c.pair.market(), c.state0);
}

const Boundary& SolveResult::boundary(const std::string& name) const
{
    for (const auto& b : boundaries)
        if (b.name == name)
            return b.boundary;
    throw std::out_of_range("no boundary named " + name);
}

SolveResult run_solve(const RunConfig& c)
{
    const auto start = std::chrono::steady_clock::now();
    SolveResult r{make_problem(c.pair, c.claim, problem_base(c)), {}, {}, {}, {}, {}, 0.0};
    r.grid = make_grid(r.problem, c.grid.M, c.grid.K, c.grid.lambda_min, c.grid.lambda_max);
    const double eps = c.boundary_eps();
    const auto& problem = r.problem;
    const PriceMap map = [&problem](double t, double l) { return problem.price(t, l); };
    auto extract = [&](const PremiumSurface& s) {
        return extract_boundary(s, eps, c.boundary.side, map, c.boundary.interpolation);
    };

    if (c.problem != ProblemKind::Purchase) {
        r.liquidation = solve_liquidation_vi(r.problem, r.grid, c.solver);
        r.boundaries.push_back({"liquidation", extract(*r.liquidation)});
    }
    if (c.problem != ProblemKind::Liquidation) {
        r.purchase = solve_purchase_vi(r.problem, r.grid, c.solver);
        r.boundaries.push_back({"purchase", extract(*r.purchase)});
    }
    if (c.problem == ProblemKind::Sequential) {
        r.sequential = solve_sequential_vi(r.problem, r.grid, c.solver, *r.liquidation);
        std::vector<std::vector<double>> gap = r.sequential->values;
        for (std::size_t m = 0; m < gap.size(); ++m)
            for (std::size_t k = 0; k < gap[m].size(); ++k)
                gap[m][k] -= r.liquidation->values[m][k];
        const Side side = c.boundary.side.value_or(detect_side(*r.purchase));
        r.boundaries.push_back(
            {"purchase_constrained", extract_region(r.grid, gap, eps, side, map, c.boundary.interpolation)});
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<LocusPoint> drift_zero_locus(const Grid& g, const std::vector<std::vector<double>>& drift)
{
    std::vector<LocusPoint> out;
    const auto& lam = g.lambda_nodes;
    for (std::size_t m = 0; m < drift.size(); ++m) {
        const auto& row = drift[m];
        for (std::size_t k = 0; k + 1 < row.size(); ++k) {
            const double a = row[k], b = row[k + 1];
            if (a == 0.0)
                out.push_back({g.t_nodes[m], lam[k]});
            else if (a * b < 0)
                out.push_back({g.t_nodes[m], lam[k] + (lam[k + 1] - lam[k]) * a / (a - b)});
        }
    }
    return out;
}

namespace {

Check z_check(const std::string& name, const McEstimate& e, double target, double limit)
{
    Check ch;
    ch.name = name;
    ch.estimate = e.mean;
    ch.target = target;
    ch.std_error = e.std_error;
    ch.z = e.z(target);
    ch.pass = std::abs(ch.z) <= limit;
    return ch;
}

} // namespace

std::vector<Check> run_verify(const RunConfig& c, const SolveResult& s)
{
    std::vector<Check> checks;
    const double t0 = c.t0;
    const double l0 = initial_lambda(c);
    const double price = claim_price(c.pair.market(), c.claim, t0, c.state0);
    const McOptions mopt{c.mc.steps_per_year};
    const StrategyOptions sopt{c.mc.steps_per_year, c.mc.defaults};

    const auto pe = estimate_price(c.claim, c.pair.market(), t0, c.state0, c.mc.paths, c.mc.seed, mopt);
    checks.push_back(z_check("price_vs_closed_form", pe, price, 3.0));

    auto strategy = [&](const std::string& label, const PremiumSurface& surf, const Boundary& b, double sign) {
        const double premium = surf.interpolate(t0, l0);
        const double target = price + sign * premium;
        const Boundary used = c.verify.boundary_shift_cells ? b.shifted(c.verify.boundary_shift_cells * b.cell) : b;
        const auto v = evaluate_strategy(c.claim, c.pair, used, t0, c.state0, c.mc.paths, c.mc.seed, sopt);
        auto ch = z_check(label + "_value_vs_price_plus_premium", v, target, 3.0);
        if (c.verify.boundary_shift_cells)
            ch.note = "boundary shifted by " + std::to_string(c.verify.boundary_shift_cells) + " cells";
        checks.push_back(ch);
        const int k = c.verify.perturbation_cells;
        if (k == 0)
            return;
        for (int dir : {-1, 1}) {
            const auto w = evaluate_strategy(c.claim, c.pair, used.shifted(dir * k * b.cell), t0, c.state0,
                                             c.mc.paths, c.mc.seed, sopt);
            Check p;
            p.name = label + (dir < 0 ? "_perturbed_minus" : "_perturbed_plus");
            p.estimate = w.mean;
            p.target = v.mean;
            p.std_error = v.std_error;
            // Improvement measured in the seller's (sign +1) or buyer's (sign -1) favour.
            const double gain = sign * (w.mean - v.mean);
            p.z = v.std_error > 0 ? gain / v.std_error : (gain > 0 ? INFINITY : 0.0);
            p.pass = gain <= v.std_error;
            p.note = std::to_string(dir * k) + " cells";
            checks.push_back(p);
        }
    };
    if (s.liquidation)
        strategy("liquidation", *s.liquidation, s.boundary("liquidation"), 1.0);
    if (s.purchase)
        strategy("purchase", *s.purchase, s.boundary("purchase"), -1.0);
    return checks;
}

} // namespace liqtimer
