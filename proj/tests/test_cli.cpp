#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "galstab/cli.hpp"
#include "galstab/steadystate.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using galstab::cli::run;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result call(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const auto d = fs::temp_directory_path() / ("galstab_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

json load(const fs::path& p)
{
    std::ifstream is(p);
    return json::parse(is);
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

TEST(Cli, ConstructPolytropeHitsTargetMass)
{
    const auto d = scratch("construct");
    const auto r = call({"--out", d.string(), "construct", "--model", "poly", "--k", "1", "--mass", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = load(d / "profile.json");
    EXPECT_NEAR(j["profile"]["casimir_mass"].get<double>(), 1.0, 1e-6);
    // the same state built through the library
    const auto p = galstab::match_target_mass(galstab::CasimirModel::polytropic_plus_linear(1.0), 1.0);
    EXPECT_NEAR(j["profile"]["lambda0"].get<double>(), p.lambda0, 1e-12 * std::abs(p.lambda0));
    for (const auto& c : j["assumptions"])
        EXPECT_TRUE(c["passed"].get<bool>()) << c["name"];
    fs::remove_all(d);
}

TEST(Cli, ConstructPlummerCentralPotential)
{
    const auto d = scratch("plummer");
    const auto r = call({"--out", d.string(), "construct", "--model", "plummer", "--c0", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("U(0) -1 "), std::string::npos) << r.out;
    const auto j = load(d / "profile.json");
    const double r0 = j["profile"]["r"][0].get<double>();
    EXPECT_NEAR(j["profile"]["U"][0].get<double>(), -1.0 / std::sqrt(1.0 + r0 * r0), 1e-12);

    const auto q = call({"--out", d.string(), "plummer", "--c0", "1"});
    ASSERT_EQ(q.code, 0) << q.err;
    EXPECT_LT(load(d / "plummer.json")["ode_max_rel_error_U"].get<double>(), 1e-6);
    fs::remove_all(d);
}

TEST(Cli, UsageErrorsExitTwo)
{
    const auto d = scratch("usage");
    auto r = call({"--out", d.string(), "construct", "--model", "poly", "--k", "4"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("k must lie in"), std::string::npos) << r.err;
    EXPECT_EQ(call({}).code, 2);
    EXPECT_EQ(call({"construct", "--no-such-flag"}).code, 2);
    EXPECT_EQ(call({"construct", "--model", "spline"}).code, 2);
    // stochastic commands need a seed
    EXPECT_EQ(call({"--out", d.string(), "stability", "--N", "100"}).code, 2);
    EXPECT_EQ(call({"evaluate", "--profile", (d / "missing.json").string()}).code, 2);
    EXPECT_EQ(call({"--config", (d / "missing.cfg").string(), "construct"}).code, 2);
    fs::remove_all(d);
}

TEST(Cli, HelpListsColumnsAndExitCodes)
{
    const auto r = call({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("m_unshifted"), std::string::npos);
    EXPECT_NE(r.out.find("Exit codes: 0 success, 2 usage error, 3 numerical failure."), std::string::npos);
}

TEST(Cli, ConstraintViolatingPerturbationRefused)
{
    const auto d = scratch("constraint");
    const auto r = call({"--out", d.string(), "stability", "--model", "poly", "--k", "1", "--mass", "1", "--perturb",
                         "dilation", "--b", "1.02", "--a", "1", "--N", "1000", "--seed", "3", "--duration", "0.1"});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("constraint"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(d / "stability.csv"));

    // the same refusal from a hand-edited perturbation file
    {
        std::ofstream os(d / "perturbation.json");
        os << R"({"kind": "dilation", "a": 1.0, "b": 1.02})";
    }
    const auto f = call({"--out", d.string(), "stability", "--perturb-file", (d / "perturbation.json").string(), "--N", "1000",
                         "--seed", "3", "--duration", "0.1"});
    EXPECT_EQ(f.code, 3) << f.err;
    fs::remove_all(d);
}

TEST(Cli, StabilityRunIsDeterministic)
{
    const auto d = scratch("determinism");
    // reference cadence and duration at a small particle number
    const std::vector<std::string> tail{"--model", "poly", "--k",        "1",   "--mass",     "1",  "--perturb",
                                        "dilation", "--b", "1.02",     "--N", "2000",       "--seed", "17",
                                        "--duration", "20", "--dt",   "0.005", "--cadence", "20"};
    auto args = std::vector<std::string>{"--out", d.string(), "stability", "-o", "a.csv"};
    args.insert(args.end(), tail.begin(), tail.end());
    ASSERT_EQ(call(args).code, 0);
    args[4] = "b.csv";
    ASSERT_EQ(call(args).code, 0);
    const auto a = slurp(d / "a.csv");
    EXPECT_EQ(a, slurp(d / "b.csv"));
    std::size_t rows = 0;
    for (char c : a)
        rows += c == '\n';
    EXPECT_GE(rows - 1, 200u);

    const auto m = load(d / "a.csv.json");
    EXPECT_EQ(m["seed"].get<unsigned>(), 17u);
    EXPECT_EQ(m["perturbation"]["kind"], "dilation");
    EXPECT_TRUE(m["summary"].contains("max_m_over_m0"));
    fs::remove_all(d);
}

TEST(Cli, SampleThenSimulateMatchesStabilityRun)
{
    const auto d = scratch("pipeline");
    const auto out = d.string();
    ASSERT_EQ(call({"--out", out, "construct", "--model", "poly", "--k", "1", "--mass", "1"}).code, 0);
    const auto prof = (d / "profile.json").string();
    ASSERT_EQ(call({"--out", out, "sample", "--profile", prof, "--N", "1500", "--seed", "5"}).code, 0);
    const auto ev = call({"--out", out, "evaluate", "--profile", prof, "--ensemble", (d / "ensemble.bin").string()});
    ASSERT_EQ(ev.code, 0) << ev.err;
    const auto j = load(d / "evaluate.json");
    // an unperturbed sample sits at d = 0 up to rounding
    EXPECT_GE(j["distance"]["d"].get<double>(), -1e-10 * std::abs(j["ensemble"]["e_pot_double"].get<double>()));
    EXPECT_TRUE(j["distance"]["constraint_ok"].get<bool>());

    const std::vector<std::string> run_tail{"--duration", "0.5", "--dt", "0.01", "--cadence", "5"};
    auto sim = std::vector<std::string>{"--out", out, "simulate", "--profile", prof, "--ensemble",
                                        (d / "ensemble.bin").string()};
    sim.insert(sim.end(), run_tail.begin(), run_tail.end());
    ASSERT_EQ(call(sim).code, 0);
    // an unperturbed stability run from the same profile and seed is the same computation
    auto stab = std::vector<std::string>{"--out", out,   "stability", "--profile", prof,
                                         "--N",   "1500", "--seed",   "5"};
    stab.insert(stab.end(), run_tail.begin(), run_tail.end());
    ASSERT_EQ(call(stab).code, 0);
    EXPECT_EQ(slurp(d / "simulate.csv"), slurp(d / "stability.csv"));
    fs::remove_all(d);
}

TEST(Cli, ScalingChecks)
{
    const auto d = scratch("scaling");
    ASSERT_EQ(call({"--out", d.string(), "scaling-check", "--model", "poly", "--k", "1", "--mass", "1"}).code, 0);
    auto j = load(d / "scaling.json");
    EXPECT_NEAR(j["ratio"].get<double>(), std::pow(2.0, 7.0 / 3.0), 1e-3 * std::pow(2.0, 7.0 / 3.0));

    ASSERT_EQ(
        call({"--out", d.string(), "scaling-check", "--model", "poly", "--k", "1", "--mass-ratio", "1"}).code, 0);
    EXPECT_EQ(load(d / "scaling.json")["ratio"].get<double>(), 1.0);

    ASSERT_EQ(call({"--out", d.string(), "scaling-check", "--model", "plummer", "--lambdas", "0.5,1,2"}).code, 0);
    j = load(d / "scaling.json");
    EXPECT_LT(j["max_rel_dH"].get<double>(), 1e-8);
    EXPECT_EQ(j["grid"].size(), 3u);
    fs::remove_all(d);
}

TEST(Cli, ConfigFileLosesToFlags)
{
    const auto d = scratch("config");
    {
        std::ofstream os(d / "run.cfg");
        os << "# flat key=value\nmodel = poly\nk = 2\nmass = 1.5\n";
    }
    const auto r = call({"--out", d.string(), "--config", (d / "run.cfg").string(), "construct", "--mass", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = load(d / "profile.json");
    EXPECT_NEAR(j["profile"]["casimir_mass"].get<double>(), 1.0, 1e-6);
    EXPECT_EQ(j["profile"]["model"]["k"].get<double>(), 2.0);
    {
        std::ofstream os(d / "bad.cfg");
        os << "[section]\nk = 1\n";
    }
    EXPECT_EQ(call({"--config", (d / "bad.cfg").string(), "construct"}).code, 2);
    fs::remove_all(d);
}

TEST(Cli, OutputDirectoryFromEnvironment)
{
    const auto env = scratch("env");
    const auto flag = scratch("flag");
    ::setenv("GALSTAB_OUT", env.string().c_str(), 1);
    EXPECT_EQ(call({"plummer"}).code, 0);
    EXPECT_TRUE(fs::exists(env / "plummer.json"));
    // --out wins over the environment
    EXPECT_EQ(call({"--out", flag.string(), "plummer", "-o", "p2.json"}).code, 0);
    EXPECT_TRUE(fs::exists(flag / "p2.json"));
    EXPECT_FALSE(fs::exists(env / "p2.json"));
    ::unsetenv("GALSTAB_OUT");
    fs::remove_all(env);
    fs::remove_all(flag);
}
