#pragma once

// Constraint-preserving perturbations of sampled steady states and the
// shift- (and, for the Plummer model, scale-) minimised stability metric
// m(t) = d(f(t), T^a S_lambda f0) + (1/8 pi) ||grad U_f(t) - grad U_(T^a S_lambda f0)||^2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "json.hpp"

#include "galstab/dynamics.hpp"
#include "galstab/ensemble.hpp"
#include "galstab/errors.hpp"
#include "galstab/functionals.hpp"
#include "galstab/steadystate.hpp"

namespace galstab {

struct PerturbationSpec {
    enum class Kind { None, DilationAB, VelocityBoost, AmplitudeResample, PlummerScale };
    Kind kind = Kind::None;
    double b = 1.0;
    std::optional<double> a;  ///< defaults to 1 / b
    Vec3 V{0.0, 0.0, 0.0};
    double strength = 0.0;
    double lambda = 1.0;
    std::uint64_t seed = 0;

    static PerturbationSpec none() { return {}; }
    static PerturbationSpec dilation(double b, std::optional<double> a = std::nullopt)
    {
        PerturbationSpec s;
        s.kind = Kind::DilationAB;
        s.b = b;
        s.a = a;
        return s;
    }
    static PerturbationSpec boost(const Vec3& V)
    {
        PerturbationSpec s;
        s.kind = Kind::VelocityBoost;
        s.V = V;
        return s;
    }
    static PerturbationSpec resample(double strength, std::uint64_t seed)
    {
        PerturbationSpec s;
        s.kind = Kind::AmplitudeResample;
        s.strength = strength;
        s.seed = seed;
        return s;
    }
    static PerturbationSpec plummer_scale(double lambda)
    {
        PerturbationSpec s;
        s.kind = Kind::PlummerScale;
        s.lambda = lambda;
        return s;
    }

    std::string kind_name() const
    {
        switch (kind) {
        case Kind::None: return "none";
        case Kind::DilationAB: return "dilation";
        case Kind::VelocityBoost: return "boost";
        case Kind::AmplitudeResample: return "resample";
        case Kind::PlummerScale: return "plummer-scale";
        }
        return "none";
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j{{"kind", kind_name()}};
        switch (kind) {
        case Kind::DilationAB:
            j["b"] = b;
            j["a"] = a.value_or(1.0 / b);
            break;
        case Kind::VelocityBoost: j["V"] = {V[0], V[1], V[2]}; break;
        case Kind::AmplitudeResample:
            j["strength"] = strength;
            j["seed"] = seed;
            break;
        case Kind::PlummerScale: j["lambda"] = lambda; break;
        case Kind::None: break;
        }
        return j;
    }

    static PerturbationSpec from_json(const nlohmann::json& j)
    {
        const auto k = j.at("kind").get<std::string>();
        if (k == "none")
            return none();
        if (k == "dilation")
            return dilation(j.at("b").get<double>(),
                            j.contains("a") ? std::optional<double>(j.at("a").get<double>()) : std::nullopt);
        if (k == "boost") {
            const auto v = j.at("V").get<std::vector<double>>();
            if (v.size() != 3)
                throw UsageError("boost V must have 3 components");
            return boost({v[0], v[1], v[2]});
        }
        if (k == "resample")
            return resample(j.at("strength").get<double>(), j.value("seed", std::uint64_t{0}));
        if (k == "plummer-scale")
            return plummer_scale(j.at("lambda").get<double>());
        throw UsageError("unknown perturbation kind '" + k + "'");
    }
};

struct PerturbResult {
    ParticleEnsemble ensemble;
    StabilityDistance initial;
    double casimir_rel_change = 0.0;
    double reprojection_b = 1.0; ///< velocity dilation used to restore C after resampling
};

/// Applies the perturbation, checks that C is unchanged to 1e-10 relative and
/// reports the initial (d, field_diff) against the unshifted f0.
inline PerturbResult perturb(const ParticleEnsemble& base, const PerturbationSpec& spec, const SteadyStateProfile& p,
                             const DistanceOptions& opt = {})
{
    PerturbResult out;
    const double C0 = ensemble_casimir(base, p.model);
    switch (spec.kind) {
    case PerturbationSpec::Kind::None: out.ensemble = base; break;
    case PerturbationSpec::Kind::DilationAB: {
        const double b = spec.b;
        const double a = spec.a.value_or(1.0 / b);
        out.ensemble = apply_scaling(base, ScalingTransform::ab(a, b));
        break;
    }
    case PerturbationSpec::Kind::VelocityBoost:
        if (base.backend != Backend::Cartesian3D)
            throw UsageError("velocity boost needs the 3D backend");
        out.ensemble = base;
        for (auto& v : out.ensemble.v)
            for (int k = 0; k < 3; ++k)
                v[k] += spec.V[k];
        break;
    case PerturbationSpec::Kind::AmplitudeResample: {
        if (!(spec.strength >= 0.0 && spec.strength < 1.0))
            throw UsageError("resample strength must lie in [0, 1)");
        out.ensemble = base;
        std::mt19937_64 g(spec.seed);
        for (auto& f : out.ensemble.f)
            f *= 1.0 + spec.strength * (2.0 * detail::u01(g) - 1.0);
        const double C1 = ensemble_casimir(out.ensemble, p.model);
        // velocity dilation (1, b) scales C by b^-3
        out.reprojection_b = std::cbrt(C1 / C0);
        out.ensemble = apply_scaling(out.ensemble, ScalingTransform::ab(1.0, out.reprojection_b));
        break;
    }
    case PerturbationSpec::Kind::PlummerScale:
        if (p.model.kind() != CasimirKind::PlummerPower)
            throw UsageError("plummer-scale perturbation needs the Plummer model");
        out.ensemble = apply_scaling(base, ScalingTransform::plummer(spec.lambda));
        break;
    }
    const double C1 = ensemble_casimir(out.ensemble, p.model);
    out.casimir_rel_change = std::abs(C1 - C0) / C0;
    if (out.casimir_rel_change > 1e-10)
        throw ConstraintError("perturbation changed the Casimir value by " + std::to_string(out.casimir_rel_change) +
                              " (relative); it must stay on the constraint set");
    out.initial = stability_distance(out.ensemble, p, opt);
    return out;
}

// ---------------------------------------------------------------------------
// shift and scale search

struct ShiftSearchOptions {
    double initial_step = 0.1;  ///< times the half-mass radius
    double tolerance = 1e-3;    ///< times the half-mass radius
    int max_evaluations = 600;
};

/// Coordinate descent from `start` with step halving; returns the best point
/// among the descent result and the origin.
template <class Objective>
Vec3 minimise_shift(Objective&& obj, const Vec3& start, double scale, const ShiftSearchOptions& opt = {})
{
    Vec3 best = start;
    double fbest = obj(best);
    double h = opt.initial_step * scale;
    int evals = 1;
    while (h > opt.tolerance * scale && evals < opt.max_evaluations) {
        bool improved = false;
        for (int k = 0; k < 3; ++k)
            for (double sgn : {1.0, -1.0}) {
                Vec3 trial = best;
                trial[k] += sgn * h;
                const double ft = obj(trial);
                ++evals;
                if (ft < fbest) {
                    fbest = ft;
                    best = trial;
                    improved = true;
                }
            }
        if (!improved)
            h *= 0.5;
    }
    const Vec3 zero{0.0, 0.0, 0.0};
    if (obj(zero) <= fbest)
        return zero;
    return best;
}

/// Translation of f0 minimising the field difference; zero for the radial backend.
inline Vec3 best_shift(const ParticleEnsemble& e, const SteadyStateProfile& p, const ShiftSearchOptions& opt = {})
{
    if (e.backend == Backend::Radial)
        return {0.0, 0.0, 0.0};
    const double rh = p.half_mass_radius();
    const Vec3 c = mass_centroid(e);
    const auto fs = sample_particle_field(e, c, rh, 0.01 * rh);
    return minimise_shift([&](const Vec3& s) { return field_diff_3d(fs, ComparisonState{&p, s, 1.0}); }, c, rh, opt);
}

struct ScaleSearchOptions {
    double lo = 0.5;
    double hi = 2.0;
    int bits = 30;
    std::uintmax_t max_iter = 100;
};

/// lambda in [lo, hi] minimising obj, by Brent's method; lambda = 1 is kept if
/// it is no worse.
template <class Objective>
double minimise_scale(Objective&& obj, const ScaleSearchOptions& opt = {})
{
    std::uintmax_t it = opt.max_iter;
    const auto [x, fx] = boost::math::tools::brent_find_minima(obj, opt.lo, opt.hi, opt.bits, it);
    return obj(1.0) <= fx ? 1.0 : x;
}

// ---------------------------------------------------------------------------
// time series

struct StabilityRow {
    double t = 0.0, H = 0.0, C = 0.0, mass = 0.0, d = 0.0, field_diff = 0.0;
    Vec3 shift{0.0, 0.0, 0.0};
    double m = 0.0, m_unshifted = 0.0, scale = 1.0, e_kin = 0.0, e_pot = 0.0;
    double d_unshifted = 0.0, field_diff_unshifted = 0.0;
    double d_paired = 0.0; ///< paired estimator against the best comparison state
};

struct TrendFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_ols = 0.0; ///< classical OLS standard error
    double stderr_hac = 0.0; ///< Newey-West (Bartlett) standard error
    std::size_t lag = 0;
};

/// Least-squares line through (x, y) with OLS and autocorrelation-robust
/// standard errors of the slope.
inline TrendFit linear_trend(const std::vector<double>& x, const std::vector<double>& y)
{
    TrendFit fit;
    const std::size_t n = x.size();
    if (y.size() != n)
        throw UsageError("linear_trend: x and y lengths differ");
    if (n < 3)
        return fit;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    std::vector<double> u(n);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double res = y[i] - fit.intercept - fit.slope * x[i];
        sse += res * res;
        u[i] = (x[i] - mx) * res;
    }
    fit.stderr_ols = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    fit.lag = static_cast<std::size_t>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
    fit.lag = std::max<std::size_t>(fit.lag, static_cast<std::size_t>(std::cbrt(static_cast<double>(n))) * 2);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += u[i] * u[i];
    for (std::size_t l = 1; l <= fit.lag && l < n; ++l) {
        double c = 0.0;
        for (std::size_t i = l; i < n; ++i)
            c += u[i] * u[i - l];
        s += 2.0 * (1.0 - static_cast<double>(l) / static_cast<double>(fit.lag + 1)) * c;
    }
    fit.stderr_hac = std::sqrt(std::max(s, 0.0)) / sxx;
    return fit;
}

struct StabilityRunConfig {
    std::size_t N = 100000;
    Backend backend = Backend::Radial;
    std::uint64_t seed = 1;
    double dt_per_tdyn = 1.0 / 200.0;
    double duration_tdyn = 20.0;
    std::size_t cadence = 20;
    double softening = std::numeric_limits<double>::quiet_NaN();
    bool minimise_shift = true;
    std::optional<bool> minimise_scale; ///< defaults to true for the Plummer model
    ScaleSearchOptions scale_search;
    ShiftSearchOptions shift_search;

    nlohmann::json to_json() const
    {
        return {{"N", N},
                {"backend", to_string(backend)},
                {"seed", seed},
                {"dt_per_tdyn", dt_per_tdyn},
                {"duration_tdyn", duration_tdyn},
                {"cadence", cadence},
                {"softening", std::isnan(softening) ? nlohmann::json(nullptr) : nlohmann::json(softening)},
                {"minimise_shift", minimise_shift},
                {"minimise_scale", minimise_scale ? nlohmann::json(*minimise_scale) : nlohmann::json(nullptr)}};
    }
};

struct StabilityTimeSeries {
    std::vector<StabilityRow> rows;
    double t_dyn = 0.0;
    double dt = 0.0;
    double softening = 0.0;
    StabilityDistance initial;

    double m0() const { return rows.empty() ? 0.0 : rows.front().m; }
    double max_m() const
    {
        double m = 0.0;
        for (const auto& r : rows)
            m = std::max(m, r.m);
        return m;
    }
    /// max_t m(t) / m(0).
    double headline() const { return m0() > 0.0 ? max_m() / m0() : std::numeric_limits<double>::infinity(); }

    std::vector<double> column(double StabilityRow::*field) const
    {
        std::vector<double> c;
        c.reserve(rows.size());
        for (const auto& r : rows)
            c.push_back(r.*field);
        return c;
    }
    TrendFit trend(double StabilityRow::*field = &StabilityRow::m) const
    {
        return linear_trend(column(&StabilityRow::t), column(field));
    }

    static constexpr const char* kCsvHeader =
        "t,H,C,mass,d,field_diff,shift_x,shift_y,shift_z,m,m_unshifted,scale,E_kin,E_pot";

    void write_csv(const std::string& path) const
    {
        std::ofstream os(path);
        if (!os)
            throw UsageError("cannot open '" + path + "' for writing");
        os << kCsvHeader << '\n';
        char buf[64];
        for (const auto& r : rows) {
            const double vals[] = {r.t, r.H, r.C, r.mass, r.d, r.field_diff, r.shift[0], r.shift[1], r.shift[2],
                                   r.m, r.m_unshifted, r.scale, r.e_kin, r.e_pot};
            bool first = true;
            for (double v : vals) {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                os << (first ? "" : ",") << buf;
                first = false;
            }
            os << '\n';
        }
        if (!os)
            throw Error("failed writing '" + path + "'");
    }
};

/// Metric row for one snapshot: unshifted values plus the minimised metric.
inline StabilityRow measure_snapshot(const ParticleEnsemble& e, const MetricReference& ref,
                                     const StabilityRunConfig& cfg, bool scale_search, const DistanceOptions& opt)
{
    const auto& p = *ref.profile;
    StabilityRow row;
    row.t = e.t;
    const auto ctx = make_distance_context(e, ref, opt);
    const auto base = stability_distance(ctx, ComparisonState{&p});
    row.d_unshifted = base.d;
    row.field_diff_unshifted = base.field_diff;
    row.m_unshifted = base.metric();

    ComparisonState best{&p};
    auto metric = [&](const ComparisonState& c) { return stability_distance(ctx, c).metric(); };
    if (cfg.minimise_shift && e.backend == Backend::Cartesian3D) {
        const double rh = p.half_mass_radius();
        best.shift = minimise_shift([&](const Vec3& s) { return metric(ComparisonState{&p, s, 1.0}); },
                                    mass_centroid(e), rh, cfg.shift_search);
    }
    if (scale_search) {
        best.lambda = minimise_scale([&](double l) { return metric(ComparisonState{&p, best.shift, l}); },
                                     cfg.scale_search);
    }
    const auto fin = stability_distance(ctx, best);
    row.d = fin.d;
    row.d_paired = fin.d_paired;
    row.field_diff = fin.field_diff;
    row.shift = best.shift;
    row.scale = best.lambda;
    row.m = std::min(fin.metric(), row.m_unshifted);
    if (row.m == row.m_unshifted && fin.metric() > row.m_unshifted) {
        row.d = base.d;
        row.d_paired = base.d_paired;
        row.field_diff = base.field_diff;
        row.shift = {0.0, 0.0, 0.0};
        row.scale = 1.0;
    }
    return row;
}

/// Evolves `e` in place and records the minimised metric every cadence steps.
inline StabilityTimeSeries monitor_run(const SteadyStateProfile& p, ParticleEnsemble& e, const StabilityRunConfig& cfg,
                                       const MetricReference* reference = nullptr)
{
    StabilityTimeSeries ts;
    ts.t_dyn = dynamical_time(p);
    ts.dt = cfg.dt_per_tdyn * ts.t_dyn;
    const bool scale_search = cfg.minimise_scale.value_or(p.model.kind() == CasimirKind::PlummerPower);
    if (scale_search && p.model.kind() != CasimirKind::PlummerPower)
        throw UsageError("scale minimisation applies to the Plummer model only");
    const auto ref = reference ? *reference : make_metric_reference(p);
    DistanceOptions opt;
    opt.softening = cfg.softening;
    // along the evolution d is monitored, not asserted
    opt.assert_nonnegative = false;
    IntegratorConfig ic;
    ic.dt = ts.dt;
    ic.t_end = cfg.duration_tdyn * ts.t_dyn;
    ic.cadence = cfg.cadence;
    ic.softening = cfg.softening;
    run(e, ic, [&](const ParticleEnsemble& cur, const Integrator& integ) {
        auto row = measure_snapshot(cur, ref, cfg, scale_search, opt);
        row.e_kin = integ.kinetic_energy();
        row.e_pot = integ.potential_energy();
        row.H = row.e_kin + row.e_pot;
        row.C = ensemble_casimir(cur, p.model);
        row.mass = ensemble_mass(cur);
        ts.softening = integ.softening();
        ts.rows.push_back(row);
    });
    if (!ts.rows.empty()) {
        const auto& r0 = ts.rows.front();
        ts.initial.d = r0.d_unshifted;
        ts.initial.field_diff = r0.field_diff_unshifted;
    }
    return ts;
}

/// Sample, perturb, evolve and record the minimised metric every cadence steps.
inline StabilityTimeSeries stability_run(const SteadyStateProfile& p, const PerturbationSpec& spec,
                                         const StabilityRunConfig& cfg)
{
    const auto ref = make_metric_reference(p);
    DistanceOptions opt;
    opt.softening = cfg.softening;
    const auto base = sample_steady_state(p, cfg.N, cfg.backend, cfg.seed);
    auto pr = perturb(base, spec, p, opt);
    auto ts = monitor_run(p, pr.ensemble, cfg, &ref);
    ts.initial = pr.initial;
    return ts;
}

} // namespace galstab
