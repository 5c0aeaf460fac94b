#include "liqtimer/config.hpp"
#include "liqtimer/csv.hpp"
#include "liqtimer/drift.hpp"
#include "liqtimer/mc_oracle.hpp"
#include "liqtimer/pipeline.hpp"
#include "liqtimer/pricers.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>

using namespace liqtimer;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kVerify = 4 };

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<long> paths;
};

RunConfig load(const Options& o)
{
    RunConfig c = load_config(o.config);
    if (o.seed)
        c.mc.seed = *o.seed;
    if (o.paths) {
        if (*o.paths < 2)
            throw ConfigError("--paths: must be >= 2");
        c.mc.paths = *o.paths;
    }
    if (const char* env = std::getenv("LIQTIMER_OUT"))
        c.out_dir = env;
    if (!o.out.empty())
        c.out_dir = o.out;
    fs::create_directories(c.out_dir);
    return c;
}

CsvMeta meta(const RunConfig& c, const char* command)
{
    return {c.hash, c.mc.seed, command};
}

std::string out_path(const RunConfig& c, const std::string& file)
{
    return (fs::path(c.out_dir) / file).string();
}

void write_surface(const RunConfig& c, const char* cmd, const std::string& file, const PremiumSurface& s)
{
    CsvWriter w(out_path(c, file), meta(c, cmd), {"t", "lambda", "value", "G"});
    for (std::size_t m = 0; m < s.values.size(); ++m)
        for (std::size_t k = 0; k < s.values[m].size(); ++k)
            w.row({s.grid.t_nodes[m], s.grid.lambda_nodes[k], s.values[m][k], s.drift[m][k]});
}

void write_boundary(const RunConfig& c, const char* cmd, const std::string& file, const Boundary& b)
{
    CsvWriter w(out_path(c, file), meta(c, cmd),
                {"t", "lambda_star", "price_star", "side", "empty", "whole_domain", "ambiguous", "intervals"});
    for (const auto& r : b.rows) {
        std::string iv;
        for (const auto& i : r.region)
            iv += (iv.empty() ? "" : ";") + format_double(i.lo) + ":" + format_double(i.hi);
        w.row(std::vector<std::string>{format_double(r.t), format_double(r.lambda_star), format_double(r.price_star),
                                       to_string(b.side), r.empty ? "1" : "0", r.whole_domain ? "1" : "0",
                                       r.ambiguous ? "1" : "0", iv});
    }
}

void write_locus(const RunConfig& c, const char* cmd, const SolveResult& s, const std::vector<std::vector<double>>& g)
{
    CsvWriter w(out_path(c, "g_locus.csv"), meta(c, cmd), {"t", "lambda", "price"});
    for (const auto& p : drift_zero_locus(s.grid, g))
        w.row({p.t, p.lambda, s.problem.price(p.t, p.lambda)});
}

void report_boundary(const NamedBoundary& nb)
{
    const auto& b = nb.boundary;
    std::cout << nb.name << " boundary (action " << to_string(b.side) << " lambda*): ";
    const auto& first = b.rows.front();
    if (first.empty)
        std::cout << "no action region at t=0\n";
    else
        std::cout << "t=0 lambda*=" << format_double(first.lambda_star) << " price*=" << format_double(first.price_star)
                  << (first.whole_domain ? " (whole domain)" : "") << '\n';
    for (const auto& wmsg : b.warnings)
        std::cout << "  warning: " << wmsg << '\n';
}

int cmd_price(const Options& o)
{
    const RunConfig c = load(o);
    const auto& x = c.state0;
    const double cm = claim_price(c.pair.market(), c.claim, c.t0, x);
    const double ci = claim_price(c.pair.investor(), c.claim, c.t0, investor_state(c.pair, x));
    CsvWriter w(out_path(c, "price.csv"), meta(c, "price"), {"quantity", "value"});
    w.row(std::vector<std::string>{"market_price", format_double(cm)});
    w.row(std::vector<std::string>{"investor_price", format_double(ci)});
    std::cout << claim_name(c.claim) << " at t0=" << c.t0 << "\n  market price   " << format_double(cm)
              << "\n  investor price " << format_double(ci) << '\n';
    const bool bond = std::holds_alternative<ZeroRecoveryBond>(c.claim) || std::holds_alternative<RtBond>(c.claim) ||
                      std::holds_alternative<RmvBond>(c.claim);
    if (bond) {
        const double T = maturity_of(c.claim);
        const double bm = default_free_bond(c.pair.market(), c.t0, T, x);
        const double bi = default_free_bond(c.pair.investor(), c.t0, T, investor_state(c.pair, x));
        w.row(std::vector<std::string>{"beta_market", format_double(bm)});
        w.row(std::vector<std::string>{"beta_investor", format_double(bi)});
        std::cout << "  beta (market)  " << format_double(bm) << "\n  beta (investor) " << format_double(bi) << '\n';
    }
    return kOk;
}

int cmd_drift(const Options& o)
{
    const RunConfig c = load(o);
    const auto problem = make_problem(c.pair, c.claim, problem_base(c));
    const Grid g = make_grid(problem, c.grid.M, c.grid.K, c.grid.lambda_min, c.grid.lambda_max);
    const auto G = drift_grid(problem, g);
    CsvWriter w(out_path(c, "drift.csv"), meta(c, "drift"), {"t", "lambda", "G"});
    for (std::size_t m = 0; m < G.size(); ++m)
        for (std::size_t k = 0; k < G[m].size(); ++k)
            w.row({g.t_nodes[m], g.lambda_nodes[k], G[m][k]});
    CsvWriter z(out_path(c, "g_locus.csv"), meta(c, "drift"), {"t", "lambda", "price"});
    for (const auto& p : drift_zero_locus(g, G))
        z.row({p.t, p.lambda, problem.price(p.t, p.lambda)});
    const double g0 = g_claim(c.pair, c.claim, c.t0, c.state0);
    std::cout << "G(t0, x0) = " << format_double(g0) << "\nwrote " << w.path() << " and " << z.path() << '\n';
    return kOk;
}

int cmd_solve(const Options& o, bool surfaces)
{
    const RunConfig c = load(o);
    const char* cmd = surfaces ? "solve" : "boundary";
    const SolveResult s = run_solve(c);
    for (const auto& nb : s.boundaries) {
        write_boundary(c, cmd, "boundary_" + nb.name + ".csv", nb.boundary);
        report_boundary(nb);
    }
    if (surfaces) {
        const PremiumSurface* any = nullptr;
        if (s.liquidation) {
            write_surface(c, cmd, "surface_liquidation.csv", *s.liquidation);
            any = &*s.liquidation;
        }
        if (s.purchase) {
            write_surface(c, cmd, "surface_purchase.csv", *s.purchase);
            any = any ? any : &*s.purchase;
        }
        if (s.sequential)
            write_surface(c, cmd, "surface_sequential.csv", *s.sequential);
        write_locus(c, cmd, s, any->drift);
        CsvWriter r(out_path(c, "solver_report.csv"), meta(c, cmd), {"surface", "t", "iterations", "residual"});
        auto rep = [&](const char* name, const std::optional<PremiumSurface>& p) {
            if (!p)
                return;
            for (std::size_t m = 0; m < p->iterations.size(); ++m)
                r.row(std::vector<std::string>{name, format_double(p->grid.t_nodes[m]),
                                               std::to_string(p->iterations[m]), format_double(p->residuals[m])});
            for (const auto& wmsg : p->warnings)
                std::cout << name << " warning: " << wmsg << '\n';
        };
        rep("liquidation", s.liquidation);
        rep("purchase", s.purchase);
        rep("sequential", s.sequential);
    }
    std::cout << "solved in " << std::fixed << std::setprecision(2) << s.seconds << " s; output in " << c.out_dir
              << '\n';
    return kOk;
}

int cmd_simulate(const Options& o)
{
    const RunConfig c = load(o);
    const double T = maturity_of(c.claim) - c.t0;
    const int steps = std::max(1, static_cast<int>(std::ceil(T * 50)));
    const bool td = c.pair.kind() == ModelKind::TopDown;
    std::vector<std::string> cols{"t", "mean_lambda_market", "mean_lambda_investor", "survival_market",
                                  "survival_investor"};
    if (td)
        cols.insert(cols.end(), {"mean_N_market", "mean_loss_market", "mean_N_closed_form", "mean_loss_closed_form"});
    CsvWriter w(out_path(c, "simulate.csv"), meta(c, "simulate"), cols);
    const int n = static_cast<int>(c.mc.paths);
    const auto bm = td ? simulate_topdown(c.pair, Measure::Market, c.state0, T, n, c.mc.seed, 50)
                       : simulate_paths(c.pair, Measure::Market, c.state0, T, n, steps, c.mc.seed);
    const auto bi = td ? simulate_topdown(c.pair, Measure::Investor, c.state0, T, n, c.mc.seed + 1, 50)
                       : simulate_paths(c.pair, Measure::Investor, c.state0, T, n, steps, c.mc.seed + 1);
    const int li = c.pair.kind() == ModelKind::Ou ? 1 : 0;
    for (int j = 0; j <= bm.n_steps; ++j) {
        double lm = 0, lv = 0, sm = 0, sv = 0, nm = 0, um = 0;
        for (int p = 0; p < n; ++p) {
            StateVector xm(bm.dim), xi(bi.dim);
            for (int d = 0; d < bm.dim; ++d) {
                xm[d] = bm.state(p, j, d);
                xi[d] = bi.state(p, j, d);
            }
            lm += td || li ? xm[li] : pricing_intensity(c.pair.market(), xm);
            lv += td || li ? xi[li] : pricing_intensity(c.pair.market(), xi);
            sm += std::exp(-bm.intensity_integral(p, j));
            sv += std::exp(-bi.intensity_integral(p, j));
            if (td) {
                nm += xm[1];
                um += xm[2];
            }
        }
        std::vector<double> row{c.t0 + bm.times[j], lm / n, lv / n, sm / n, sv / n};
        if (td) {
            const auto mom = cdx_moments(c.pair.market_as<TopDownParams>(), 0.0, bm.times[j], c.state0[0],
                                         c.state0[1], c.state0[2]);
            row.insert(row.end(), {nm / n, um / n, mom.defaults, mom.loss});
        }
        w.row(row);
    }
    std::cout << "simulated " << n << " paths under both measures (" << bm.scheme << "); wrote " << w.path() << '\n';
    return kOk;
}

int cmd_verify(const Options& o)
{
    const RunConfig c = load(o);
    if (c.problem == ProblemKind::Sequential)
        std::cout << "note: strategy checks cover the liquidation and purchase boundaries\n";
    const SolveResult s = run_solve(c);
    const auto checks = run_verify(c, s);
    CsvWriter w(out_path(c, "verify.csv"), meta(c, "verify"),
                {"check", "estimate", "target", "std_error", "z", "pass", "note"});
    bool ok = true;
    for (const auto& ch : checks) {
        w.row(std::vector<std::string>{ch.name, format_double(ch.estimate), format_double(ch.target),
                                       format_double(ch.std_error), format_double(ch.z), ch.pass ? "1" : "0",
                                       ch.note});
        std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << "  estimate=" << format_double(ch.estimate)
                  << " target=" << format_double(ch.target) << " se=" << format_double(ch.std_error)
                  << " z=" << std::setprecision(3) << ch.z << std::setprecision(6)
                  << (ch.note.empty() ? "" : "  (" + ch.note + ")") << '\n';
        ok = ok && ch.pass;
    }
    return ok ? kOk : kVerify;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Optimal liquidation and purchase timing under heterogeneous credit beliefs"};
    app.require_subcommand(1);
    Options opt;
    auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory (overrides config and LIQTIMER_OUT)");
        sub->add_option("--seed", opt.seed, "Monte Carlo seed");
        sub->add_option("--paths", opt.paths, "Monte Carlo paths");
        return sub;
    };
    auto* price = add("price", "pre-default claim price under both measures");
    auto* drift = add("drift", "drift function G on the solver lattice and its zero locus");
    auto* solve = add("solve", "premium surfaces, boundaries and solver report");
    auto* boundary = add("boundary", "boundaries only");
    auto* simulate = add("simulate", "path statistics under both measures");
    auto* verify = add("verify", "Monte Carlo oracle checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfig;
    }
    try {
        if (*price)
            return cmd_price(opt);
        if (*drift)
            return cmd_drift(opt);
        if (*solve)
            return cmd_solve(opt, true);
        if (*boundary)
            return cmd_solve(opt, false);
        if (*simulate)
            return cmd_simulate(opt);
        if (*verify)
            return cmd_verify(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << " (worst residual " << e.worst_residual << " at step " << e.step
                  << ")\n";
        return kSolver;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return kConfig;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kOk;
}
