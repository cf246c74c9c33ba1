#include "galstab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "galstab/casimir.hpp"
#include "galstab/dynamics.hpp"
#include "galstab/ensemble.hpp"
#include "galstab/errors.hpp"
#include "galstab/functionals.hpp"
#include "galstab/parallel.hpp"
#include "galstab/quadrature.hpp"
#include "galstab/stability.hpp"
#include "galstab/steadystate.hpp"

namespace galstab::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* kCsvHelp = R"(Time-series CSV columns (simulate, stability):
  t            time
  H            E_kin + E_pot of the particle system
  C            Casimir functional sum omega Q(f)
  mass         sum omega f
  d            energy-Casimir distance to the best comparison state
  field_diff   (1/8 pi) ||grad U_f - grad U_ref||^2 for that state
  shift_x/y/z  best translation of f0 (zero for the radial backend)
  m            d + field_diff, minimised over shift (and scale for Plummer)
  m_unshifted  the same against the unshifted, unscaled f0
  scale        best Plummer scaling parameter (1 otherwise)
  E_kin,E_pot  kinetic and potential energy
Exit codes: 0 success, 2 usage error, 3 numerical failure.
Output directory: --out, else $GALSTAB_OUT, else the working directory.)";

struct ModelOptions {
    std::string model = "poly";
    double k = 1.0;
    double growth = std::nan("");
    std::string table;
    double mass = 1.0;
    double c0 = 1.0;
};

void add_model_options(CLI::App* app, ModelOptions& m)
{
    app->add_option("--model", m.model, "poly | jump | plummer | table")
        ->check(CLI::IsMember({"poly", "jump", "plummer", "table"}))
        ->capture_default_str();
    app->add_option("--k", m.k, "polytropic exponent, 0 < k < 7/2")->capture_default_str();
    app->add_option("--growth", m.growth, "growth constant C of Q(f) >= C (f + f^(1+1/k))");
    app->add_option("--table", m.table, "CSV file of (f, Q) samples for --model table");
    app->add_option("--mass", m.mass, "target Casimir value C(f0) = M")->capture_default_str();
    app->add_option("--c0", m.c0, "Plummer depth U0(0) = -c0")->capture_default_str();
}

CasimirModel make_model(const ModelOptions& m)
{
    const bool has_growth = !std::isnan(m.growth);
    if (m.model == "poly")
        return CasimirModel::polytropic_plus_linear(m.k, has_growth ? m.growth : 1.0);
    if (m.model == "jump")
        return has_growth ? CasimirModel::pure_jump(m.growth) : CasimirModel::pure_jump();
    if (m.model == "plummer")
        return CasimirModel::plummer_power();
    if (m.table.empty())
        throw UsageError("--model table needs --table FILE");
    std::ifstream is(m.table);
    if (!is)
        throw UsageError("cannot read table '" + m.table + "'");
    std::vector<double> f, q;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        for (auto& c : line)
            if (c == ',')
                c = ' ';
        std::istringstream ls(line);
        double a = 0.0, b = 0.0;
        if (!(ls >> a >> b))
            continue; // header
        f.push_back(a);
        q.push_back(b);
    }
    return CasimirModel::tabulated(f, q, m.k, has_growth ? m.growth : 1.0);
}

SteadyStateProfile build_profile(const ModelOptions& m)
{
    if (m.model == "plummer")
        return plummer_closed_form(m.c0);
    return match_target_mass(make_model(m), m.mass);
}

struct Context {
    std::string out_dir;
    std::ostream* out = nullptr;

    fs::path path(const std::string& name) const
    {
        const fs::path p(name);
        if (p.is_absolute())
            return p;
        const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
        fs::create_directories(dir);
        return dir / p;
    }
};

void write_json(const fs::path& path, const json& j)
{
    std::ofstream os(path);
    if (!os)
        throw UsageError("cannot open '" + path.string() + "' for writing");
    os << j.dump(2) << '\n';
}

json read_json(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw UsageError("cannot read '" + path + "'");
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw UsageError("'" + path + "': " + e.what());
    }
}

SteadyStateProfile load_profile(const std::string& path)
{
    try {
        return profile_from_json(read_json(path).at("profile"));
    } catch (const json::exception& e) {
        throw UsageError("'" + path + "' is not a profile file: " + e.what());
    }
}

// ---------------------------------------------------------------------------

struct PerturbOptions {
    std::string kind = "none";
    double b = 1.0;
    double a = std::nan("");
    std::vector<double> V{0.0, 0.0, 0.0};
    double strength = 0.0;
    std::uint64_t seed = 0;
    double lambda = 1.0;
    std::string file;
};

void add_perturb_options(CLI::App* app, PerturbOptions& o)
{
    app->add_option("--perturb", o.kind, "none | dilation | boost | resample | plummer-scale")
        ->check(CLI::IsMember({"none", "dilation", "boost", "resample", "plummer-scale"}))
        ->capture_default_str();
    app->add_option("--b", o.b, "dilation velocity factor")->capture_default_str();
    app->add_option("--a", o.a, "dilation position factor (default 1/b)");
    app->add_option("--V", o.V, "boost velocity (3 components)")->expected(3)->delimiter(',');
    app->add_option("--strength", o.strength, "resample amplitude in [0, 1)");
    app->add_option("--perturb-seed", o.seed, "resample seed");
    app->add_option("--lambda", o.lambda, "Plummer scaling parameter");
    app->add_option("--perturb-file", o.file, "perturbation spec as JSON (overrides --perturb)");
}

PerturbationSpec make_perturbation(const PerturbOptions& o)
{
    if (!o.file.empty())
        return PerturbationSpec::from_json(read_json(o.file));
    if (o.kind == "dilation")
        return PerturbationSpec::dilation(o.b, std::isnan(o.a) ? std::nullopt : std::optional<double>(o.a));
    if (o.kind == "boost")
        return PerturbationSpec::boost({o.V[0], o.V[1], o.V[2]});
    if (o.kind == "resample")
        return PerturbationSpec::resample(o.strength, o.seed);
    if (o.kind == "plummer-scale")
        return PerturbationSpec::plummer_scale(o.lambda);
    return PerturbationSpec::none();
}

struct RunOptions {
    std::size_t N = 100000;
    std::string backend = "radial";
    std::uint64_t seed = 0;
    double dt_per_tdyn = 1.0 / 200.0;
    double duration = 20.0;
    std::size_t cadence = 20;
    double softening = std::nan("");
};

void add_run_options(CLI::App* app, RunOptions& o, bool seed_required)
{
    app->add_option("--N", o.N, "number of particles")->capture_default_str();
    app->add_option("--backend", o.backend, "radial | 3d")
        ->check(CLI::IsMember({"radial", "3d"}))
        ->capture_default_str();
    auto* s = app->add_option("--seed", o.seed, "random seed");
    if (seed_required)
        s->required();
    app->add_option("--dt", o.dt_per_tdyn, "time step in dynamical times")->capture_default_str();
    app->add_option("--duration", o.duration, "run length in dynamical times")->capture_default_str();
    app->add_option("--cadence", o.cadence, "steps between monitor rows")->capture_default_str();
    app->add_option("--softening", o.softening, "3D pair softening (default 0.01 R_h)");
}

StabilityRunConfig make_run_config(const RunOptions& o)
{
    StabilityRunConfig c;
    c.N = o.N;
    c.backend = backend_from_string(o.backend);
    c.seed = o.seed;
    c.dt_per_tdyn = o.dt_per_tdyn;
    c.duration_tdyn = o.duration;
    c.cadence = o.cadence;
    c.softening = o.softening;
    return c;
}

json series_summary(const StabilityTimeSeries& ts)
{
    const auto tr = ts.trend();
    const double C0 = ts.rows.front().C;
    double h_drift = 0.0, c_drift = 0.0;
    for (const auto& r : ts.rows) {
        h_drift = std::max(h_drift, std::abs(r.H / ts.rows.front().H - 1.0));
        c_drift = std::max(c_drift, std::abs(r.C / C0 - 1.0));
    }
    return {{"rows", ts.rows.size()},
            {"t_dyn", ts.t_dyn},
            {"dt", ts.dt},
            {"softening", ts.softening},
            {"m0", ts.m0()},
            {"max_m", ts.max_m()},
            {"max_m_over_m0", ts.headline()},
            {"initial_d", ts.initial.d},
            {"initial_field_diff", ts.initial.field_diff},
            {"trend_slope", tr.slope},
            {"trend_stderr_ols", tr.stderr_ols},
            {"trend_stderr_hac", tr.stderr_hac},
            {"max_rel_H_drift", h_drift},
            {"max_rel_C_drift", c_drift}};
}

// ---------------------------------------------------------------------------
// commands

int cmd_construct(const Context& ctx, const ModelOptions& m, const std::string& output)
{
    const auto p = build_profile(m);
    const auto rep = evaluate_profile(p);
    json j{{"profile", profile_to_json(p)}, {"functionals", rep.to_json()}, {"hash", profile_hash(p)}};
    if (m.model != "plummer") {
        const auto grid = geometric_grid(1e-6, 1e6, 241);
        const auto v = validate_model(p.model, grid);
        json checks = json::array();
        for (const auto& c : v.checks)
            checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        j["assumptions"] = checks;
    }
    const auto path = ctx.path(output);
    write_json(path, j);
    auto& out = *ctx.out;
    out << "model " << p.model.name() << "  lambda0 " << p.lambda0 << "  E0 " << p.E0 << '\n'
        << "R_support " << (p.finite_support() ? std::to_string(p.support_radius) : std::string("inf"))
        << "  total_mass " << p.total_mass << "  casimir_mass " << p.casimir_mass << '\n'
        << "U(0) " << p.U_at(0.0) << "  rho(0) " << p.rho_at(0.0) << "  H " << rep.hamiltonian << '\n'
        << "wrote " << path.string() << '\n';
    return kExitOk;
}

int cmd_evaluate(const Context& ctx, const std::string& profile_path, const std::string& ensemble_path,
                 double softening, const std::string& output)
{
    const auto p = load_profile(profile_path);
    json j{{"profile", evaluate_profile(p).to_json()}, {"lambda0_recomputed", recompute_lambda0(p)},
           {"lambda0", p.lambda0}};
    if (!ensemble_path.empty()) {
        const auto e = read_ensemble(ensemble_path);
        FieldSource src;
        src.softening = softening;
        j["ensemble"] = evaluate_ensemble(e, p.model, src).to_json();
        DistanceOptions opt;
        opt.softening = softening;
        opt.assert_nonnegative = false;
        const auto d = stability_distance(e, p, opt);
        j["distance"] = {{"d", d.d}, {"d_paired", d.d_paired}, {"d_profile", d.d_profile}, {"field_diff", d.field_diff},
                         {"casimir_rel", d.casimir_rel}, {"constraint_ok", d.constraint_ok}};
    }
    const auto path = ctx.path(output);
    write_json(path, j);
    *ctx.out << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_sample(const Context& ctx, const std::string& profile_path, const RunOptions& ro, const std::string& output)
{
    const auto p = load_profile(profile_path);
    const auto e = sample_steady_state(p, ro.N, backend_from_string(ro.backend), ro.seed);
    const auto path = ctx.path(output);
    write_ensemble(e, path.string());
    write_json(fs::path(path.string() + ".json"), {{"profile", profile_path},
                                                   {"profile_hash", profile_hash(p)},
                                                   {"N", ro.N},
                                                   {"backend", ro.backend},
                                                   {"seed", ro.seed}});
    *ctx.out << "sampled " << e.size() << " particles, mass " << ensemble_mass(e) << ", C "
             << ensemble_casimir(e, p.model) << "\nwrote " << path.string() << '\n';
    return kExitOk;
}

void write_series(const Context& ctx, const StabilityTimeSeries& ts, const std::string& output, json manifest)
{
    const auto csv = ctx.path(output);
    ts.write_csv(csv.string());
    manifest["csv"] = csv.filename().string();
    manifest["summary"] = series_summary(ts);
    write_json(fs::path(csv.string() + ".json"), manifest);
    *ctx.out << "rows " << ts.rows.size() << "  m(0) " << ts.m0() << "  max m " << ts.max_m()
             << "  max m(t)/m(0) " << ts.headline() << "\nwrote " << csv.string() << '\n';
}

int cmd_simulate(const Context& ctx, const std::string& profile_path, const std::string& ensemble_path,
                 const RunOptions& ro, const std::string& output, const std::string& final_state)
{
    const auto p = load_profile(profile_path);
    auto cfg = make_run_config(ro);
    ParticleEnsemble e;
    if (!ensemble_path.empty()) {
        e = read_ensemble(ensemble_path);
    } else {
        if (ro.seed == 0)
            throw UsageError("simulate: --seed is required when sampling");
        e = sample_steady_state(p, ro.N, cfg.backend, ro.seed);
    }
    const auto ts = monitor_run(p, e, cfg);
    write_series(ctx, ts, output,
                 {{"command", "simulate"},
                  {"profile", profile_path},
                  {"profile_hash", profile_hash(p)},
                  {"ensemble", ensemble_path},
                  {"config", cfg.to_json()}});
    if (!final_state.empty())
        write_ensemble(e, ctx.path(final_state).string());
    return kExitOk;
}

int cmd_stability(const Context& ctx, const ModelOptions& m, const std::string& profile_path,
                  const PerturbOptions& po, const RunOptions& ro, const std::string& output)
{
    const auto p = profile_path.empty() ? build_profile(m) : load_profile(profile_path);
    const auto spec = make_perturbation(po);
    const auto cfg = make_run_config(ro);
    const auto ts = stability_run(p, spec, cfg);
    write_series(ctx, ts, output,
                 {{"command", "stability"},
                  {"profile", profile_path.empty() ? json(model_to_json(p.model)) : json(profile_path)},
                  {"target_mass", m.mass},
                  {"profile_hash", profile_hash(p)},
                  {"perturbation", spec.to_json()},
                  {"config", cfg.to_json()},
                  {"seed", ro.seed}});
    return kExitOk;
}

int cmd_scaling_check(const Context& ctx, const ModelOptions& m, const std::vector<double>& lambdas,
                      double mass_ratio, const std::string& output)
{
    json j;
    auto& out = *ctx.out;
    if (m.model == "plummer") {
        const auto p = plummer_closed_form(m.c0);
        const auto base = evaluate_profile(p);
        double dh = 0.0, dc = 0.0;
        json rows = json::array();
        for (double l : lambdas) {
            const auto q = apply_scaling(p, ScalingTransform::plummer(l));
            const auto r = evaluate_profile(q);
            const double eh = std::abs(r.hamiltonian - base.hamiltonian) / std::abs(base.hamiltonian);
            const double ec = std::abs(r.casimir - base.casimir) / base.casimir;
            dh = std::max(dh, eh);
            dc = std::max(dc, ec);
            rows.push_back({{"lambda", l}, {"H", r.hamiltonian}, {"C", r.casimir}, {"mass", r.mass}});
        }
        j = {{"model", "plummer"}, {"c0", m.c0}, {"grid", rows}, {"max_rel_dH", dh}, {"max_rel_dC", dc}};
        out << "Plummer S_lambda grid: max |dH|/|H| " << dh << "  max |dC|/C " << dc << '\n';
    } else {
        const auto model = make_model(m);
        const auto p1 = match_target_mass(model, m.mass);
        const auto p2 = match_target_mass(model, mass_ratio * m.mass);
        const double h1 = evaluate_profile(p1).hamiltonian;
        const double h2 = evaluate_profile(p2).hamiltonian;
        const double expected = std::pow(mass_ratio, 7.0 / 3.0);
        j = {{"model", model_to_json(model)},
             {"mass", m.mass},
             {"mass_ratio", mass_ratio},
             {"H1", h1},
             {"H2", h2},
             {"ratio", h2 / h1},
             {"expected", expected},
             {"rel_error", std::abs(h2 / h1 / expected - 1.0)}};
        out << "H(" << mass_ratio * m.mass << ")/H(" << m.mass << ") = " << h2 / h1 << "  expected " << expected
            << "  rel error " << std::abs(h2 / h1 / expected - 1.0) << '\n';
    }
    write_json(ctx.path(output), j);
    return kExitOk;
}

int cmd_plummer(const Context& ctx, double c0, const std::string& output)
{
    const auto p = plummer_closed_form(c0);
    // the same state by radial integration of the pure-power density law
    const auto cut = p.cutoff();
    const auto radii = geometric_grid(1e-3, 10.0, 200);
    std::vector<double> rs{0.0};
    rs.insert(rs.end(), radii.begin(), radii.end());
    const auto sol = integrate_radial_poisson(
        [&](double psi) { return density_of_potential(p.model, cut, cut.E0 - psi); }, 0.0, -c0, rs);
    double worst = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const double exact = -c0 / std::sqrt(1.0 + rs[i] * rs[i]);
        worst = std::max(worst, std::abs(sol.U[i] / exact - 1.0));
    }
    const auto rep = evaluate_profile(p);
    json j{{"profile", profile_to_json(p)},
           {"functionals", rep.to_json()},
           {"hash", profile_hash(p)},
           {"ode_max_rel_error_U", worst}};
    const auto path = ctx.path(output);
    write_json(path, j);
    *ctx.out << "c0 " << c0 << "  lambda0 " << p.lambda0 << "  U(0) " << p.U_at(0.0) << "  rho(0) " << p.rho_at(0.0)
             << "  C " << p.casimir_mass << "\nODE vs closed form on [0, 10]: max rel error " << worst << "\nwrote "
             << path.string() << '\n';
    return kExitOk;
}

/// Inserts the key=value pairs of --config FILE as options right after the
/// subcommand name, skipping keys that are also given on the command line.
std::vector<std::string> with_config(const std::vector<std::string>& args, const CLI::App& app)
{
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            path = args[i].substr(9);
    }
    if (path.empty())
        return args;
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_file(path);
    } catch (const CLI::Error& e) {
        throw UsageError("config file '" + path + "': " + e.what());
    }
    auto given = [&](const std::string& key) {
        const std::string flag = "--" + key;
        return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
    };
    std::vector<std::string> injected;
    for (const auto& it : items) {
        if (!it.parents.empty() && !(it.parents.size() == 1 && it.parents[0] == "default"))
            throw UsageError("config file '" + path + "': sections are not supported (" + it.fullname() + ")");
        if (it.name == "config" || given(it.name))
            continue;
        std::string value;
        for (std::size_t k = 0; k < it.inputs.size(); ++k)
            value += (k ? "," : "") + it.inputs[k];
        injected.push_back("--" + it.name + "=" + value);
    }
    std::vector<std::string> out;
    bool done = false;
    for (const auto& a : args) {
        out.push_back(a);
        if (!done && app.get_subcommand_no_throw(a) != nullptr) {
            out.insert(out.end(), injected.begin(), injected.end());
            done = true;
        }
    }
    if (!done)
        out.insert(out.end(), injected.begin(), injected.end());
    return out;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Energy-Casimir steady states and stability runs for self-gravitating collisionless systems"};
    app.footer(kCsvHelp);
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "flat key=value config file; command-line flags win");
    unsigned threads = 1;
    std::string out_dir;
    app.add_option("--threads", threads, "worker threads")->capture_default_str();
    app.add_option("--out", out_dir, "output directory");

    ModelOptions model;
    std::string profile_path, ensemble_path, final_state;
    std::string out_construct, out_evaluate, out_sample, out_simulate, out_stability, out_scaling, out_plummer;
    double softening = std::nan("");
    RunOptions run_opts;
    PerturbOptions perturb_opts;
    std::vector<double> lambdas{0.5, 0.75, 1.0, 1.5, 2.0};
    double mass_ratio = 2.0;

    auto* construct = app.add_subcommand("construct", "build a matched steady state, write profile JSON");
    add_model_options(construct, model);
    construct->add_option("-o,--output", out_construct, "profile file")->default_val("profile.json");

    auto* evaluate = app.add_subcommand("evaluate", "functionals of a profile (and optionally an ensemble)");
    evaluate->add_option("--profile", profile_path, "profile JSON")->required();
    evaluate->add_option("--ensemble", ensemble_path, "ensemble snapshot");
    evaluate->add_option("--softening", softening, "3D pair softening");
    evaluate->add_option("-o,--output", out_evaluate, "report file")->default_val("evaluate.json");

    auto* sample = app.add_subcommand("sample", "sample particles from a profile");
    sample->add_option("--profile", profile_path, "profile JSON")->required();
    sample->add_option("--N", run_opts.N, "number of particles")->capture_default_str();
    sample->add_option("--backend", run_opts.backend, "radial | 3d")
        ->check(CLI::IsMember({"radial", "3d"}))
        ->capture_default_str();
    sample->add_option("--seed", run_opts.seed, "random seed")->required();
    sample->add_option("-o,--output", out_sample, "ensemble file")->default_val("ensemble.bin");

    auto* simulate = app.add_subcommand("simulate", "evolve an ensemble and monitor the stability metric");
    simulate->add_option("--profile", profile_path, "profile JSON (reference f0)")->required();
    simulate->add_option("--ensemble", ensemble_path, "initial snapshot (default: sample --N with --seed)");
    add_run_options(simulate, run_opts, false);
    simulate->add_option("-o,--output", out_simulate, "time-series CSV")->default_val("simulate.csv");
    simulate->add_option("--final", final_state, "write the final snapshot here");

    auto* stability = app.add_subcommand("stability", "construct, sample, perturb, evolve and monitor");
    add_model_options(stability, model);
    stability->add_option("--profile", profile_path, "profile JSON instead of the model options");
    add_perturb_options(stability, perturb_opts);
    add_run_options(stability, run_opts, true);
    stability->add_option("-o,--output", out_stability, "time-series CSV")->default_val("stability.csv");

    auto* scaling = app.add_subcommand("scaling-check", "H(2M)/H(M) against 2^(7/3), or S_lambda invariance");
    add_model_options(scaling, model);
    scaling->add_option("--lambdas", lambdas, "Plummer lambda grid")->delimiter(',');
    scaling->add_option("--mass-ratio", mass_ratio, "second mass over first")->capture_default_str();
    scaling->add_option("-o,--output", out_scaling, "report file")->default_val("scaling.json");

    auto* plummer = app.add_subcommand("plummer", "closed-form Plummer state and its ODE cross-check");
    plummer->add_option("--c0", model.c0, "depth U0(0) = -c0")->capture_default_str();
    plummer->add_option("-o,--output", out_plummer, "profile file")->default_val("plummer.json");

    app.fallthrough();
    std::vector<std::string> argv_in;
    try {
        argv_in = with_config(args, app);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    std::vector<std::string> reversed(argv_in.rbegin(), argv_in.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    set_thread_count(threads);
    Context ctx;
    ctx.out = &out;
    if (!out_dir.empty())
        ctx.out_dir = out_dir;
    else if (const char* env = std::getenv("GALSTAB_OUT"))
        ctx.out_dir = env;

    try {
        if (*construct)
            return cmd_construct(ctx, model, out_construct);
        if (*evaluate)
            return cmd_evaluate(ctx, profile_path, ensemble_path, softening, out_evaluate);
        if (*sample)
            return cmd_sample(ctx, profile_path, run_opts, out_sample);
        if (*simulate)
            return cmd_simulate(ctx, profile_path, ensemble_path, run_opts, out_simulate, final_state);
        if (*stability)
            return cmd_stability(ctx, model, profile_path, perturb_opts, run_opts, out_stability);
        if (*scaling)
            return cmd_scaling_check(ctx, model, lambdas, mass_ratio, out_scaling);
        if (*plummer)
            return cmd_plummer(ctx, model.c0, out_plummer);
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ConstraintError& e) {
        err << "constraint error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace galstab::cli
