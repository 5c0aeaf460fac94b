#include "liqtimer/config.hpp"
#include "liqtimer/csv.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace liqtimer;
namespace fs = std::filesystem;

namespace {

const char* kCir = R"({
  "model": {"kind": "cir",
            "market": {"kappa": [0.2], "theta": [0.015], "sigma": [0.07], "w_r": [0], "w_l": [1],
                       "mu": 2, "r_const": 0.03},
            "investor": {"kappa": [0.3]}},
  "claim": {"type": "zero_recovery_bond", "maturity": 1},
  "state": {"lambda": 0.03}
})";

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args)
{
    const std::string cmd = std::string(LIQTIMER_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name)
{
    const auto d = fs::temp_directory_path() / ("liqtimer_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

} // namespace

TEST(Config, ParsesInvestorOverride)
{
    const auto c = parse_config(kCir);
    EXPECT_EQ(c.pair.kind(), ModelKind::Cir);
    EXPECT_DOUBLE_EQ(c.pair.investor_as<CirParams>().kappa[0], 0.3);
    EXPECT_DOUBLE_EQ(c.pair.investor_as<CirParams>().theta[0], 0.015);
    // lambda 0.03 with mu 2 is the factor value 0.015.
    EXPECT_NEAR(c.state0.at(0), 0.015, 1e-15);
    EXPECT_EQ(c.grid.M, 200);
    EXPECT_DOUBLE_EQ(c.boundary_eps(), 10 * c.solver.tol);
    EXPECT_EQ(c.hash.size(), 16u);
}

TEST(Config, HashIgnoresKeyOrderAndWhitespace)
{
    const std::string a = R"({"claim": {"maturity": 1, "type": "zero_recovery_bond"},)";
    const std::string b = R"({"claim":{"type":"zero_recovery_bond","maturity":1},)";
    const std::string rest = R"( "model": {"kind": "cir", "market": {"kappa": [0.2], "theta": [0.015],
        "sigma": [0.07], "w_r": [0], "w_l": [1], "mu": 2, "r_const": 0.03}}, "state": {"lambda": 0.03}})";
    EXPECT_EQ(parse_config(a + rest).hash, parse_config(b + rest).hash);
}

TEST(Config, Errors)
{
    std::string bad = kCir;
    bad.replace(bad.find("\"mu\": 2"), 7, "\"mu\": 2, \"bogus\": 1");
    try {
        parse_config(bad);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    }
    try {
        parse_config("{\n\"model\": \n  {,}");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("config:3:"), std::string::npos);
    }
    std::string feller = kCir;
    feller.replace(feller.find("[0.07]"), 6, "[0.5]");
    EXPECT_THROW(parse_config(feller), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/file.json"), ConfigError);
}

TEST(Csv, HeaderAndRoundTrip)
{
    const auto dir = scratch("csv");
    {
        CsvWriter w((dir / "a.csv").string(), {"abc", 7, "price"}, {"x", "y"});
        w.row(std::vector<double>{0.1, 1.0 / 3.0});
    }
    const auto text = slurp(dir / "a.csv");
    EXPECT_EQ(text.rfind("# config_hash=abc seed=7 command=price\nx,y\n", 0), 0u);
    const double back = std::stod(text.substr(text.find(',', text.find("\n0.1")) + 1));
    EXPECT_EQ(back, 1.0 / 3.0);
    EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
}

TEST(Cli, ExitCodesAndOutputs)
{
    const auto dir = scratch("cli");
    const std::string cfg = (fs::path(CONFIG_DIR) / "fig2_left.json").string();
    EXPECT_EQ(run("price --config " + cfg + " --out " + dir.string()), 0);
    const auto price = slurp(dir / "price.csv");
    EXPECT_EQ(price.rfind("# config_hash=", 0), 0u);
    EXPECT_NE(price.find("command=price"), std::string::npos);

    std::ofstream(dir / "bad.json") << "{\"model\": {\"kind\": \"cir\"}, \"nope\": 1}";
    EXPECT_EQ(run("solve --config " + (dir / "bad.json").string() + " --out " + dir.string()), 2);

    std::ofstream(dir / "stiff.json") << R"({
      "model": {"kind": "cir",
                "market": {"kappa": [0.2], "theta": [0.015], "sigma": [0.07], "w_r": [0], "w_l": [1],
                           "mu": 2, "r_const": 0.03},
                "investor": {"kappa": [0.3]}},
      "claim": {"type": "zero_recovery_bond", "maturity": 1},
      "state": {"lambda": 0.03},
      "grid": {"M": 20, "K": 100},
      "solver": {"max_iter": 1, "tol": 1e-15}})";
    EXPECT_EQ(run("solve --config " + (dir / "stiff.json").string() + " --out " + dir.string()), 3);
    EXPECT_NE(run("frobnicate"), 0);
}

TEST(Cli, SolveWritesBoundaryAndSurface)
{
    const auto dir = scratch("solve");
    const std::string cfg = (fs::path(CONFIG_DIR) / "fig1_left.json").string();
    ASSERT_EQ(run("solve --config " + cfg + " --out " + dir.string()), 0);
    for (const char* f : {"boundary_liquidation.csv", "surface_liquidation.csv", "g_locus.csv", "solver_report.csv"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto b = slurp(dir / "boundary_liquidation.csv");
    EXPECT_NE(b.find("\nt,lambda_star,price_star"), std::string::npos);
}
