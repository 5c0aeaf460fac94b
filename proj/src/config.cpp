#include "liqtimer/config.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace liqtimer {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg)
{
    throw ConfigError(path.empty() ? msg : path + ": " + msg);
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys)
{
    if (!j.is_object())
        fail(path, "expected an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key()))
            fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
}

double number(const json& j, const std::string& path)
{
    if (!j.is_number())
        fail(path, "expected a number");
    return j.get<double>();
}

double get(const json& j, const std::string& path, const char* key, double def)
{
    return j.contains(key) ? number(j.at(key), path + "." + key) : def;
}

double require(const json& j, const std::string& path, const char* key)
{
    if (!j.contains(key))
        fail(path + "." + key, "missing required key");
    return number(j.at(key), path + "." + key);
}

std::vector<double> vec(const json& j, const std::string& path)
{
    if (j.is_number())
        return {j.get<double>()};
    if (!j.is_array())
        fail(path, "expected a number or an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i)
        v.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return v;
}

std::string text(const json& j, const std::string& path)
{
    if (!j.is_string())
        fail(path, "expected a string");
    return j.get<std::string>();
}

OuParams parse_ou(const json& j, const std::string& path, const OuParams& base)
{
    allow_keys(j, path, {"kappa_r", "theta_r", "sigma_r", "kappa_l", "theta_l", "sigma_l", "rho", "mu"});
    OuParams p = base;
    p.kappa_r = get(j, path, "kappa_r", p.kappa_r);
    p.theta_r = get(j, path, "theta_r", p.theta_r);
    p.sigma_r = get(j, path, "sigma_r", p.sigma_r);
    p.kappa_l = get(j, path, "kappa_l", p.kappa_l);
    p.theta_l = get(j, path, "theta_l", p.theta_l);
    p.sigma_l = get(j, path, "sigma_l", p.sigma_l);
    p.rho = get(j, path, "rho", p.rho);
    p.mu = get(j, path, "mu", p.mu);
    return p;
}

CirParams parse_cir(const json& j, const std::string& path, const CirParams& base)
{
    allow_keys(j, path, {"kappa", "theta", "sigma", "w_r", "w_l", "mu", "r_const"});
    CirParams p = base;
    auto field = [&](const char* key, std::vector<double>& dst) {
        if (j.contains(key))
            dst = vec(j.at(key), path + "." + key);
    };
    field("kappa", p.kappa);
    field("theta", p.theta);
    field("sigma", p.sigma);
    field("w_r", p.w_r);
    field("w_l", p.w_l);
    p.mu = get(j, path, "mu", p.mu);
    p.r_const = get(j, path, "r_const", p.r_const);
    const std::size_t n = p.kappa.size();
    if (p.w_r.empty())
        p.w_r.assign(n, 0.0);
    if (p.w_l.empty())
        p.w_l.assign(n, 1.0);
    return p;
}

LossDistribution parse_loss(const json& j, const std::string& path)
{
    if (j.is_number())
        return LossDistribution::constant(j.get<double>());
    allow_keys(j, path, {"values", "probs"});
    if (!j.contains("values") || !j.contains("probs"))
        fail(path, "loss law needs values and probs");
    return LossDistribution::discrete(vec(j.at("values"), path + ".values"), vec(j.at("probs"), path + ".probs"));
}

TopDownParams parse_topdown(const json& j, const std::string& path, const TopDownParams& base)
{
    allow_keys(j, path, {"kappa", "theta", "sigma", "eta", "mu", "loss", "names", "r"});
    TopDownParams p = base;
    p.kappa = get(j, path, "kappa", p.kappa);
    p.theta = get(j, path, "theta", p.theta);
    p.sigma = get(j, path, "sigma", p.sigma);
    p.eta = get(j, path, "eta", p.eta);
    p.mu = get(j, path, "mu", p.mu);
    p.r = get(j, path, "r", p.r);
    if (j.contains("names")) {
        const double n = number(j.at("names"), path + ".names");
        if (n != std::floor(n))
            fail(path + ".names", "must be an integer");
        p.names = static_cast<int>(n);
    }
    if (j.contains("loss"))
        p.loss = parse_loss(j.at("loss"), path + ".loss");
    return p;
}

MeasurePair parse_model(const json& j)
{
    allow_keys(j, "model", {"kind", "market", "investor"});
    if (!j.contains("kind") || !j.contains("market"))
        fail("model", "needs kind and market");
    const std::string kind = text(j.at("kind"), "model.kind");
    const json inv = j.contains("investor") ? j.at("investor") : json::object();
    try {
        if (kind == "ou") {
            const auto m = parse_ou(j.at("market"), "model.market", {});
            return MeasurePair(m, parse_ou(inv, "model.investor", m));
        }
        if (kind == "cir") {
            const auto m = parse_cir(j.at("market"), "model.market", {});
            return MeasurePair(m, parse_cir(inv, "model.investor", m));
        }
        if (kind == "topdown") {
            const auto m = parse_topdown(j.at("market"), "model.market", {});
            return MeasurePair(m, parse_topdown(inv, "model.investor", m));
        }
    } catch (const ModelError& e) {
        fail("model", e.what());
    }
    fail("model.kind", "must be one of ou, cir, topdown (got '" + kind + "')");
}

ClaimSpec parse_claim(const json& j)
{
    allow_keys(j, "claim", {"type", "maturity", "recovery", "spread", "start"});
    if (!j.contains("type"))
        fail("claim.type", "missing required key");
    const std::string type = text(j.at("type"), "claim.type");
    const double T = require(j, "claim", "maturity");
    auto only = [&](std::initializer_list<const char*> keys) {
        std::set<std::string> ok(keys.begin(), keys.end());
        ok.insert("type");
        ok.insert("maturity");
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!ok.count(it.key()))
                fail("claim." + it.key(), "not used by claim type " + type);
    };
    ClaimSpec c;
    if (type == "zero_recovery_bond") {
        only({});
        c = ZeroRecoveryBond{T};
    } else if (type == "rt_bond") {
        only({"recovery"});
        c = RtBond{T, require(j, "claim", "recovery")};
    } else if (type == "rmv_bond") {
        only({"recovery"});
        c = RmvBond{T, require(j, "claim", "recovery")};
    } else if (type == "cds") {
        only({"spread"});
        c = Cds{T, require(j, "claim", "spread")};
    } else if (type == "forward_cds") {
        only({"spread", "start"});
        c = ForwardCds{require(j, "claim", "start"), T, require(j, "claim", "spread")};
    } else if (type == "cdx") {
        only({"spread"});
        c = Cdx{T, require(j, "claim", "spread")};
    } else {
        fail("claim.type", "unknown claim type '" + type + "'");
    }
    try {
        validate_claim(c);
    } catch (const std::exception& e) {
        fail("claim", e.what());
    }
    return c;
}

StateVector parse_state(const json& j, const MeasurePair& pair)
{
    allow_keys(j, "state", {"t0", "r", "lambda", "x", "n", "upsilon"});
    switch (pair.kind()) {
    case ModelKind::Ou: {
        const auto& m = pair.market_as<OuParams>();
        if (j.contains("x") || j.contains("n") || j.contains("upsilon"))
            fail("state", "OU state takes r and lambda");
        return {get(j, "state", "r", m.theta_r), get(j, "state", "lambda", m.lambda_level())};
    }
    case ModelKind::Cir: {
        const auto& m = pair.market_as<CirParams>();
        if (j.contains("r") || j.contains("n") || j.contains("upsilon"))
            fail("state", "CIR state takes x or lambda");
        if (j.contains("x")) {
            if (j.contains("lambda"))
                fail("state", "give either x or lambda");
            auto x = vec(j.at("x"), "state.x");
            if (x.size() != m.factors())
                fail("state.x", "length must equal the number of factors");
            return x;
        }
        if (m.factors() != 1 || !(m.w_l[0] > 0)) {
            if (j.contains("lambda"))
                fail("state.lambda", "lambda identifies the state only for one factor with w_l > 0");
            return m.theta;
        }
        const double s = m.mu * m.w_l[0];
        return {get(j, "state", "lambda", s * m.theta[0]) / s};
    }
    case ModelKind::TopDown: {
        const auto& m = pair.market_as<TopDownParams>();
        if (j.contains("x") || j.contains("r"))
            fail("state", "top-down state takes lambda, n and upsilon");
        return {get(j, "state", "lambda", m.mu * m.theta), get(j, "state", "n", 0.0),
                get(j, "state", "upsilon", 0.0)};
    }
    }
    return {};
}

int integer(const json& j, const std::string& path, const char* key, int def, int min)
{
    if (!j.contains(key))
        return def;
    const double v = number(j.at(key), path + "." + key);
    if (v != std::floor(v) || v < min)
        fail(path + "." + key, "must be an integer >= " + std::to_string(min));
    return static_cast<int>(v);
}

std::size_t line_of(const std::string& s, std::size_t byte)
{
    return 1 + std::count(s.begin(), s.begin() + std::min(byte, s.size()), '\n');
}

} // namespace

const char* to_string(ProblemKind k)
{
    switch (k) {
    case ProblemKind::Liquidation: return "liquidation";
    case ProblemKind::Purchase: return "purchase";
    case ProblemKind::Sequential: return "sequential";
    }
    return "?";
}

std::string fnv1a_hex(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(const std::string& src, const std::string& name)
{
    json j;
    try {
        j = json::parse(src);
    } catch (const json::parse_error& e) {
        throw ConfigError(name + ":" + std::to_string(line_of(src, e.byte)) + ": JSON syntax error: " + e.what());
    }
    allow_keys(j, "", {"name", "model", "claim", "state", "problem", "grid", "solver", "boundary", "mc", "verify",
                       "output"});
    if (!j.contains("model"))
        fail("model", "missing required block");
    if (!j.contains("claim"))
        fail("claim", "missing required block");

    MeasurePair pair = parse_model(j.at("model"));
    const auto report = validate(pair);
    if (!report.ok())
        throw ConfigError("model validation " + report.summary());
    ClaimSpec claim = parse_claim(j.at("claim"));
    if ((pair.kind() == ModelKind::TopDown) != std::holds_alternative<Cdx>(claim))
        fail("claim.type", "CDX claims go with the top-down model and only with it");

    RunConfig c{pair, claim};
    c.name = j.contains("name") ? text(j.at("name"), "name") : name;
    const json st = j.contains("state") ? j.at("state") : json::object();
    c.state0 = parse_state(st, pair);
    c.t0 = get(st, "state", "t0", 0.0);
    if (c.t0 < 0 || c.t0 > maturity_of(claim))
        fail("state.t0", "must lie in [0, maturity]");

    if (j.contains("problem")) {
        const std::string p = text(j.at("problem"), "problem");
        if (p == "liquidation")
            c.problem = ProblemKind::Liquidation;
        else if (p == "purchase")
            c.problem = ProblemKind::Purchase;
        else if (p == "sequential")
            c.problem = ProblemKind::Sequential;
        else
            fail("problem", "must be liquidation, purchase or sequential");
    }
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        allow_keys(g, "grid", {"M", "K", "lambda_min", "lambda_max"});
        c.grid.M = integer(g, "grid", "M", c.grid.M, 1);
        c.grid.K = integer(g, "grid", "K", c.grid.K, 4);
        if (g.contains("lambda_min"))
            c.grid.lambda_min = number(g.at("lambda_min"), "grid.lambda_min");
        if (g.contains("lambda_max"))
            c.grid.lambda_max = number(g.at("lambda_max"), "grid.lambda_max");
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        allow_keys(s, "solver", {"omega", "tol", "max_iter", "jump_mode"});
        c.solver.omega = get(s, "solver", "omega", c.solver.omega);
        c.solver.tol = get(s, "solver", "tol", c.solver.tol);
        c.solver.max_iter = integer(s, "solver", "max_iter", c.solver.max_iter, 1);
        if (!(c.solver.omega > 0 && c.solver.omega < 2))
            fail("solver.omega", "must lie in (0, 2)");
        if (!(c.solver.tol > 0))
            fail("solver.tol", "must be > 0");
        if (s.contains("jump_mode")) {
            const std::string m = text(s.at("jump_mode"), "solver.jump_mode");
            if (m == "taylor2")
                c.solver.jump_mode = JumpMode::Taylor2;
            else if (m == "exact_interp")
                c.solver.jump_mode = JumpMode::ExactInterp;
            else
                fail("solver.jump_mode", "must be taylor2 or exact_interp");
        }
    }
    if (j.contains("boundary")) {
        const json& b = j.at("boundary");
        allow_keys(b, "boundary", {"eps", "interpolation", "side"});
        c.boundary.eps = get(b, "boundary", "eps", c.boundary.eps);
        if (b.contains("interpolation")) {
            const std::string m = text(b.at("interpolation"), "boundary.interpolation");
            if (m == "smooth_fit")
                c.boundary.interpolation = BoundaryInterpolation::SmoothFit;
            else if (m == "linear")
                c.boundary.interpolation = BoundaryInterpolation::Linear;
            else
                fail("boundary.interpolation", "must be smooth_fit or linear");
        }
        if (b.contains("side")) {
            const std::string m = text(b.at("side"), "boundary.side");
            if (m == "above")
                c.boundary.side = Side::Above;
            else if (m == "below")
                c.boundary.side = Side::Below;
            else if (m != "auto")
                fail("boundary.side", "must be above, below or auto");
        }
    }
    if (j.contains("mc")) {
        const json& m = j.at("mc");
        allow_keys(m, "mc", {"paths", "seed", "steps_per_year", "defaults"});
        if (m.contains("paths")) {
            const double p = number(m.at("paths"), "mc.paths");
            if (p != std::floor(p) || p < 2)
                fail("mc.paths", "must be an integer >= 2");
            c.mc.paths = static_cast<long>(p);
        }
        if (m.contains("seed")) {
            if (!m.at("seed").is_number_unsigned())
                fail("mc.seed", "must be a nonnegative integer");
            c.mc.seed = m.at("seed").get<std::uint64_t>();
        }
        c.mc.steps_per_year = integer(m, "mc", "steps_per_year", c.mc.steps_per_year, 1);
        if (m.contains("defaults")) {
            const std::string d = text(m.at("defaults"), "mc.defaults");
            if (d == "sampled")
                c.mc.defaults = DefaultHandling::Sampled;
            else if (d == "survival_weighted")
                c.mc.defaults = DefaultHandling::SurvivalWeighted;
            else
                fail("mc.defaults", "must be sampled or survival_weighted");
        }
    }
    if (j.contains("verify")) {
        const json& v = j.at("verify");
        allow_keys(v, "verify", {"boundary_shift_cells", "perturbation_cells"});
        c.verify.boundary_shift_cells = integer(v, "verify", "boundary_shift_cells", 0, -1000000);
        c.verify.perturbation_cells = integer(v, "verify", "perturbation_cells", 2, 0);
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        allow_keys(o, "output", {"dir"});
        if (o.contains("dir"))
            c.out_dir = text(o.at("dir"), "output.dir");
    }
    c.hash = fnv1a_hex(j.dump());
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

} // namespace liqtimer
