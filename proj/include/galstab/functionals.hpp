#pragma once

// Kinetic and potential energy, the Casimir functional, the stability
// distance d(f, f0) and the field-difference norm, on radial profiles and on
// particle ensembles.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <vector>

#include "json.hpp"

#include "galstab/ensemble.hpp"
#include "galstab/errors.hpp"
#include "galstab/parallel.hpp"
#include "galstab/quadrature.hpp"
#include "galstab/steadystate.hpp"

namespace galstab {

struct FunctionalReport {
    double e_kin = 0.0;
    double e_pot_field = 0.0;  ///< -(1/8 pi) int |grad U|^2
    double e_pot_double = 0.0; ///< -(1/2) double integral of rho rho / |x - y|
    double hamiltonian = 0.0;  ///< e_kin + e_pot_field
    double casimir = 0.0;
    double mass = 0.0;
    double softening = 0.0;             ///< 3D pair softening (0 elsewhere)
    double truncation_estimate = 0.0;   ///< power-law estimate of mass beyond the grid
    double rho_norm_constant = 0.0;     ///< int rho^(1+1/n) / E_kin^(3/(2n)), n = k + 3/2
    double quadrature_rel_tol = 0.0;

    nlohmann::json to_json() const
    {
        return {{"e_kin", e_kin},
                {"e_pot_field", e_pot_field},
                {"e_pot_double", e_pot_double},
                {"hamiltonian", hamiltonian},
                {"casimir", casimir},
                {"mass", mass},
                {"softening", softening},
                {"truncation_estimate", truncation_estimate},
                {"rho_norm_constant", rho_norm_constant},
                {"quadrature_rel_tol", quadrature_rel_tol}};
    }
};

// ---------------------------------------------------------------------------
// profiles

namespace detail {

inline std::size_t support_end(const SteadyStateProfile& p)
{
    if (!p.finite_support())
        return p.r.size();
    auto it = std::upper_bound(p.r.begin(), p.r.end(), p.support_radius * (1.0 + 1e-14));
    return std::max<std::size_t>(2, static_cast<std::size_t>(it - p.r.begin()));
}

/// U(r) = -M(r_max)/r_max - int_r^r_max M / r'^2 dr', accumulated inward with
/// endpoint-corrected trapezoids (fourth order, since (M/r^2)' = 4 pi rho - 2M/r^3).
inline std::vector<double> shell_potential(const SteadyStateProfile& p)
{
    const std::size_t n = p.r.size();
    std::vector<double> U(n);
    auto g = [&](std::size_t i) { return p.M_enc[i] / (p.r[i] * p.r[i]); };
    auto dg = [&](std::size_t i) {
        return 4.0 * std::numbers::pi * p.rho[i] - 2.0 * p.M_enc[i] / (p.r[i] * p.r[i] * p.r[i]);
    };
    U[n - 1] = -p.total_mass / p.r[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        const double h = p.r[i + 1] - p.r[i];
        U[i] = U[i + 1] - (0.5 * h * (g(i) + g(i + 1)) - h * h / 12.0 * (dg(i + 1) - dg(i)));
    }
    return U;
}

} // namespace detail

inline FunctionalReport evaluate_profile(const SteadyStateProfile& p)
{
    FunctionalReport rep;
    rep.quadrature_rel_tol = QuadratureOptions{}.rel_tol;
    if (p.empty() || !(p.total_mass > 0.0))
        return rep;
    const double fourpi = 4.0 * std::numbers::pi;
    const std::size_t n = p.r.size();
    const std::size_t ns = detail::support_end(p);
    const std::span<const double> rs(p.r.data(), ns);

    std::vector<double> g(n);
    for (std::size_t i = 0; i < ns; ++i)
        g[i] = fourpi * p.r[i] * p.r[i] * p.kin[i];
    const auto ek = integrate_radial(rs, std::span<const double>(g.data(), ns));
    rep.e_kin = ek.value;

    for (std::size_t i = 0; i < ns; ++i)
        g[i] = fourpi * p.r[i] * p.r[i] * p.cas[i];
    const auto cas = integrate_radial(rs, std::span<const double>(g.data(), ns));
    rep.casimir = cas.value;

    for (std::size_t i = 0; i < n; ++i)
        g[i] = p.M_enc[i] * p.M_enc[i] / (p.r[i] * p.r[i]);
    const auto field = integrate_radial(p.r, g);
    rep.e_pot_field = -0.5 * field.value;

    const auto Ushell = detail::shell_potential(p);
    for (std::size_t i = 0; i < ns; ++i)
        g[i] = fourpi * p.r[i] * p.r[i] * p.rho[i] * Ushell[i];
    const auto dbl = integrate_radial(rs, std::span<const double>(g.data(), ns));
    rep.e_pot_double = 0.5 * dbl.value;

    rep.hamiltonian = rep.e_kin + rep.e_pot_field;
    rep.mass = p.total_mass;
    rep.truncation_estimate = p.finite_support() ? 0.0 : p.total_mass - p.M_enc.back();

    const double nn = p.model.k() + 1.5;
    for (std::size_t i = 0; i < ns; ++i)
        g[i] = fourpi * p.r[i] * p.r[i] * std::pow(p.rho[i], 1.0 + 1.0 / nn);
    const double rho_norm = integrate_radial(rs, std::span<const double>(g.data(), ns)).value;
    rep.rho_norm_constant = rho_norm / std::pow(rep.e_kin, 3.0 / (2.0 * nn));
    return rep;
}

/// lambda0 recovered from the profile as int E f0 / int Q'(f0) f0.
inline double recompute_lambda0(const SteadyStateProfile& p)
{
    if (!p.table)
        throw UsageError("recompute_lambda0: profile has no moment table");
    const double fourpi = 4.0 * std::numbers::pi;
    const std::size_t ns = detail::support_end(p);
    std::vector<double> num(ns), den(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        const double w = fourpi * p.r[i] * p.r[i];
        num[i] = w * (p.kin[i] + p.U[i] * p.rho[i]);
        den[i] = w * p.table->qprime_f(p.E0 - p.U[i]);
    }
    const std::span<const double> rs(p.r.data(), ns);
    return integrate_radial(rs, num).value / integrate_radial(rs, den).value;
}

// ---------------------------------------------------------------------------
// ensembles

/// Where the potential energy of an ensemble comes from.
struct FieldSource {
    /// Non-null: test particles in the frozen potential of this profile; the
    /// potential energy is then sum m U0(x).
    const SteadyStateProfile* frozen = nullptr;
    /// 3D pair softening; NaN selects 0.01 times the half-mass radius.
    double softening = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// Indices ordered by radius (ties by index).
inline std::vector<std::size_t> radial_order(const ParticleEnsemble& e)
{
    std::vector<std::size_t> idx(e.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<double> rad(e.size());
    for (std::size_t i = 0; i < e.size(); ++i)
        rad[i] = e.radius_of(i);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return rad[a] < rad[b] || (rad[a] == rad[b] && a < b);
    });
    return idx;
}

/// Shell energy -sum m_p (S_(p-1) + m_p / 2) / r_p over radius-sorted particles;
/// equals -(1/2) int M^2 / r^2 dr for the piecewise-constant M(r).
inline double shell_field_energy(const ParticleEnsemble& e, const std::vector<std::size_t>& order)
{
    double S = 0.0;
    double W = 0.0;
    for (std::size_t j : order) {
        const double m = e.mass_of(j);
        W -= m * (S + 0.5 * m) / e.radius_of(j);
        S += m;
    }
    return W;
}

/// (1/2) sum m_p U(r_p) with U(r_p) = -S_p / r_p - sum_(q > p) m_q / r_q, the
/// continuous potential of the shells at each shell.
inline double shell_double_energy(const ParticleEnsemble& e, const std::vector<std::size_t>& order)
{
    const std::size_t n = order.size();
    std::vector<double> outer(n + 1, 0.0);
    for (std::size_t k = n; k-- > 0;)
        outer[k] = outer[k + 1] + e.mass_of(order[k]) / e.radius_of(order[k]);
    double S = 0.0;
    double W = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        const double m = e.mass_of(j);
        S += m;
        W += 0.5 * m * (-S / e.radius_of(j) - outer[k + 1]);
    }
    return W;
}

inline double pair_energy(const ParticleEnsemble& e, double eps)
{
    const std::size_t n = e.size();
    const double eps2 = eps * eps;
    return -parallel_sum(n, [&](std::size_t i) {
        double s = 0.0;
        const double mi = e.mass_of(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = e.x[i][0] - e.x[j][0];
            const double dy = e.x[i][1] - e.x[j][1];
            const double dz = e.x[i][2] - e.x[j][2];
            s += e.mass_of(j) / std::sqrt(dx * dx + dy * dy + dz * dz + eps2);
        }
        return mi * s;
    });
}

/// Radius enclosing half the ensemble mass.
inline double ensemble_half_mass_radius(const ParticleEnsemble& e, const std::vector<std::size_t>& order)
{
    const double half = 0.5 * ensemble_mass(e);
    double S = 0.0;
    for (std::size_t j : order) {
        S += e.mass_of(j);
        if (S >= half)
            return e.radius_of(j);
    }
    return order.empty() ? 0.0 : e.radius_of(order.back());
}

} // namespace detail

inline double default_softening(const ParticleEnsemble& e)
{
    return 0.01 * detail::ensemble_half_mass_radius(e, detail::radial_order(e));
}

inline FunctionalReport evaluate_ensemble(const ParticleEnsemble& e, const CasimirModel& model,
                                          const FieldSource& src = {})
{
    e.check_consistent();
    FunctionalReport rep;
    if (e.size() == 0)
        return rep;
    for (std::size_t i = 0; i < e.size(); ++i)
        if (!(e.omega[i] > 0.0) || !(e.f[i] >= 0.0))
            throw UsageError("evaluate_ensemble: weights must be positive and f nonnegative");
    rep.e_kin = parallel_sum(e.size(), [&](std::size_t i) { return e.mass_of(i) * e.kinetic_of(i); });
    rep.casimir = ensemble_casimir(e, model);
    rep.mass = ensemble_mass(e);
    if (src.frozen) {
        const double W = parallel_sum(e.size(), [&](std::size_t i) { return e.mass_of(i) * src.frozen->U_at(e.radius_of(i)); });
        rep.e_pot_field = rep.e_pot_double = W;
    } else {
        const auto order = detail::radial_order(e);
        rep.e_pot_field = detail::shell_field_energy(e, order);
        if (e.backend == Backend::Radial) {
            rep.e_pot_double = detail::shell_double_energy(e, order);
        } else {
            rep.softening = std::isnan(src.softening) ? 0.01 * detail::ensemble_half_mass_radius(e, order) : src.softening;
            rep.e_pot_double = detail::pair_energy(e, rep.softening);
        }
    }
    rep.hamiltonian = rep.e_kin + rep.e_pot_field;
    return rep;
}

// ---------------------------------------------------------------------------
// stability distance

/// The comparison state T^a S_lambda f0: f0 translated by `shift` and, for
/// the Plummer model, mapped by S_lambda.
struct ComparisonState {
    const SteadyStateProfile* profile = nullptr;
    Vec3 shift{0.0, 0.0, 0.0};
    double lambda = 1.0;

    double U(double r) const
    {
        if (lambda == 1.0)
            return profile->U_at(r);
        const double l2 = lambda * lambda;
        return profile->U_at(r / (l2 * l2)) / l2;
    }
    double M(double r) const
    {
        if (lambda == 1.0)
            return profile->M_at(r);
        const double l2 = lambda * lambda;
        return l2 * profile->M_at(r / (l2 * l2));
    }
    /// f0 as a function of the particle energy; S_lambda keeps lambda0 and E0.
    double f0(double E) const { return profile->f0(E); }
    /// Enclosed-mass law of the comparison state about its own centre.
    double total_mass() const { return lambda * lambda * profile->total_mass; }
};

/// Constants of f0 that the distance needs.
struct MetricReference {
    const SteadyStateProfile* profile = nullptr;
    double energy_level = 0.0; ///< E_kin(f0) + 2 E_pot(f0) = int E f0
    double e_pot = 0.0;
    double casimir = 0.0;      ///< C(f0)
};

inline MetricReference make_metric_reference(const SteadyStateProfile& p)
{
    const auto rep = evaluate_profile(p);
    return {&p, rep.e_kin + 2.0 * rep.e_pot_field, rep.e_pot_field, p.casimir_mass};
}

/// Particle field sampled on a fixed spherical quadrature around a centre;
/// reused for every trial shift.
struct FieldSample3D {
    std::vector<Vec3> points;
    std::vector<double> weights;
    std::vector<Vec3> g;
    double outer_radius = 0.0;
    double total_mass = 0.0;
};

struct FieldSampleOptions {
    std::size_t shells = 32;
    std::size_t directions = 64;
    double inner_fraction = 0.02; ///< innermost shell / half-mass radius
    double outer_factor = 12.0;   ///< outermost shell / half-mass radius
};

inline FieldSample3D sample_particle_field(const ParticleEnsemble& e, const Vec3& centre, double half_mass_radius,
                                           double eps, const FieldSampleOptions& opt = {})
{
    if (e.backend != Backend::Cartesian3D)
        throw UsageError("sample_particle_field: 3D backend only");
    FieldSample3D s;
    const double r0 = opt.inner_fraction * half_mass_radius;
    const double r1 = opt.outer_factor * half_mass_radius;
    const auto radii = geometric_grid(r0, r1, opt.shells);
    const double h = std::log(r1 / r0) / static_cast<double>(opt.shells - 1);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t a = 0; a < radii.size(); ++a) {
        // trapezoid in ln r of 4 pi r^3 (.) d ln r
        const double wr = (a == 0 || a + 1 == radii.size() ? 0.5 : 1.0) * h * 4.0 * std::numbers::pi *
                          radii[a] * radii[a] * radii[a] / static_cast<double>(opt.directions);
        for (std::size_t k = 0; k < opt.directions; ++k) {
            const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(opt.directions);
            const double rho = std::sqrt(1.0 - z * z);
            const double ph = golden * static_cast<double>(k);
            s.points.push_back({centre[0] + radii[a] * rho * std::cos(ph), centre[1] + radii[a] * rho * std::sin(ph),
                                centre[2] + radii[a] * z});
            s.weights.push_back(wr);
        }
    }
    s.g.resize(s.points.size());
    const double eps2 = eps * eps;
    parallel_for(s.points.size(), [&](std::size_t b, std::size_t end) {
        for (std::size_t q = b; q < end; ++q) {
            Vec3 acc{};
            for (std::size_t j = 0; j < e.size(); ++j) {
                const double dx = s.points[q][0] - e.x[j][0];
                const double dy = s.points[q][1] - e.x[j][1];
                const double dz = s.points[q][2] - e.x[j][2];
                const double d2 = dx * dx + dy * dy + dz * dz + eps2;
                const double c = e.mass_of(j) / (d2 * std::sqrt(d2));
                acc[0] -= c * dx;
                acc[1] -= c * dy;
                acc[2] -= c * dz;
            }
            s.g[q] = acc;
        }
    });
    s.outer_radius = r1;
    s.total_mass = ensemble_mass(e);
    return s;
}

/// (1/8 pi) int |g_f - g_0|^2 over the quadrature ball.
inline double field_diff_3d(const FieldSample3D& s, const ComparisonState& c)
{
    double sum = 0.0;
    for (std::size_t q = 0; q < s.points.size(); ++q) {
        const Vec3 d{s.points[q][0] - c.shift[0], s.points[q][1] - c.shift[1], s.points[q][2] - c.shift[2]};
        const double r = norm(d);
        const double gm = r > 0.0 ? c.M(r) / (r * r * r) : 0.0;
        const double ex = s.g[q][0] + gm * d[0];
        const double ey = s.g[q][1] + gm * d[1];
        const double ez = s.g[q][2] + gm * d[2];
        sum += s.weights[q] * (ex * ex + ey * ey + ez * ez);
    }
    // beyond the ball both fields are -M/r^2 about nearby centres
    const double dm = s.total_mass - c.total_mass();
    sum += dm * dm * 4.0 * std::numbers::pi / s.outer_radius;
    return sum / (8.0 * std::numbers::pi);
}

/// (1/2) int (M_f - M_0)^2 / r^2 dr with M_f the exact step function of the
/// particle radii; Simpson's rule on each interval of the merged grid.
inline double field_diff_radial(const ParticleEnsemble& e, const std::vector<std::size_t>& order,
                                const ComparisonState& c)
{
    const auto& p = *c.profile;
    const double scale_r = c.lambda == 1.0 ? 1.0 : std::pow(c.lambda, 4);
    std::vector<double> grid;
    grid.reserve(p.r.size());
    for (double x : p.r)
        grid.push_back(x * scale_r);
    double sum = 0.0;
    double Mf = 0.0;
    double prev = 0.0;
    std::size_t gi = 0;
    auto piece = [&](double a, double b) {
        if (!(b > a))
            return;
        const double m = 0.5 * (a + b);
        auto h = [&](double r) {
            if (!(r > 0.0))
                return 0.0;
            const double d = Mf - c.M(r);
            return d * d / (r * r);
        };
        sum += (b - a) / 6.0 * (h(a) + 4.0 * h(m) + h(b));
    };
    for (std::size_t k = 0; k <= order.size(); ++k) {
        const double next = k < order.size() ? e.radius_of(order[k]) : std::numeric_limits<double>::infinity();
        while (gi < grid.size() && grid[gi] < next) {
            piece(prev, grid[gi]);
            prev = grid[gi];
            ++gi;
        }
        if (k == order.size())
            break;
        piece(prev, next);
        prev = next;
        Mf += e.mass_of(order[k]);
    }
    // exterior: extend geometrically while M_0 still changes, then close with
    // the constant difference
    double rr = prev;
    const double stop = 1e4 * prev;
    while (rr < stop && !(p.finite_support() && rr >= p.support_radius * scale_r)) {
        const double nx = rr * 1.05;
        piece(rr, nx);
        rr = nx;
    }
    const double d = Mf - c.M(rr);
    sum += d * d / rr;
    return 0.5 * sum;
}

struct StabilityDistance {
    /// sum omega [E (f - g) - lambda0 (Q(f) - Q(g))] with g = f0(E) of the
    /// comparison state at each particle; every term is >= 0 by convexity
    double d = 0.0;
    double d_paired = 0.0;   ///< sum omega [E f - lambda0 Q(f)] - reference_level
    double d_profile = 0.0;  ///< sum omega f E - (E_kin(f0) + 2 E_pot(f0))
    double field_diff = 0.0; ///< (1/8 pi) ||grad U_f - grad U_f0||^2
    double casimir_rel = 0.0;
    bool constraint_ok = true;

    double metric() const { return d + field_diff; }
};

struct DistanceOptions {
    double constraint_tol = 1e-10;
    bool assert_nonnegative = true;
    double nonneg_tol = 1e-10;  ///< relative to |E_pot(f0)|
    double softening = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct EnergySums {
    double level = 0.0;   ///< sum omega [E f - lambda0 Q(f)]
    double mE = 0.0;      ///< sum m E
    double bregman = 0.0; ///< sum omega [E (f - g) - lambda0 (Q(f) - Q(g))]
};

/// Particle sums with E in the comparison potential.
inline EnergySums energy_sums(const ParticleEnsemble& e, const ComparisonState& c, double lambda0,
                              const CasimirModel& model)
{
    const std::size_t chunks = (e.size() + kChunk - 1) / kChunk;
    std::vector<EnergySums> part(chunks);
    parallel_for(e.size(), [&](std::size_t lo, std::size_t hi) {
        EnergySums s;
        for (std::size_t i = lo; i < hi; ++i) {
            double r;
            if (e.backend == Backend::Radial) {
                r = e.r[i];
            } else {
                const Vec3 d{e.x[i][0] - c.shift[0], e.x[i][1] - c.shift[1], e.x[i][2] - c.shift[2]};
                r = norm(d);
            }
            const double E = e.kinetic_of(i) + c.U(r);
            const double f = e.f[i];
            const double g = c.f0(E);
            const double qf = model.q(f);
            s.level += e.omega[i] * (E * f - lambda0 * qf);
            s.mE += e.mass_of(i) * E;
            s.bregman += e.omega[i] * (E * (f - g) - lambda0 * (qf - model.q(g)));
        }
        part[lo / kChunk] = s;
    });
    EnergySums out;
    for (const auto& s : part) {
        out.level += s.level;
        out.mE += s.mE;
        out.bregman += s.bregman;
    }
    return out;
}

} // namespace detail

/// Precomputed per-snapshot data shared by all trial comparison states.
struct DistanceContext {
    const ParticleEnsemble* ensemble = nullptr;
    MetricReference ref;
    std::vector<std::size_t> order;       ///< radial backend
    std::optional<FieldSample3D> field3d; ///< 3D backend
    double casimir = 0.0;
    DistanceOptions opt;
};

inline DistanceContext make_distance_context(const ParticleEnsemble& e, const MetricReference& ref,
                                             const DistanceOptions& opt = {},
                                             std::optional<Vec3> field_centre = std::nullopt)
{
    DistanceContext ctx;
    ctx.ensemble = &e;
    ctx.ref = ref;
    ctx.opt = opt;
    ctx.casimir = ensemble_casimir(e, ref.profile->model);
    if (e.backend == Backend::Radial) {
        ctx.order = detail::radial_order(e);
    } else {
        const double rh = ref.profile->half_mass_radius();
        const double eps = std::isnan(opt.softening) ? 0.01 * rh : opt.softening;
        ctx.field3d = sample_particle_field(e, field_centre.value_or(mass_centroid(e)), rh, eps);
    }
    return ctx;
}

inline StabilityDistance stability_distance(const DistanceContext& ctx, const ComparisonState& c)
{
    const auto& e = *ctx.ensemble;
    const auto& p = *ctx.ref.profile;
    StabilityDistance out;
    // the constraint set of a sample is fixed by its own C at sampling time;
    // C(f0) itself is only matched to Monte Carlo accuracy
    const double C0 = e.reference_casimir > 0.0 ? e.reference_casimir : ctx.ref.casimir;
    out.casimir_rel = std::abs(ctx.casimir - C0) / C0;
    out.constraint_ok = out.casimir_rel <= ctx.opt.constraint_tol;
    const auto sums = detail::energy_sums(e, c, p.lambda0, p.model);
    out.d = sums.bregman;
    out.d_paired = sums.level - e.reference_level;
    out.d_profile = sums.mE - ctx.ref.energy_level;
    out.field_diff = e.backend == Backend::Radial ? field_diff_radial(e, ctx.order, c) : field_diff_3d(*ctx.field3d, c);
    if (ctx.opt.assert_nonnegative && out.constraint_ok &&
        out.d < -ctx.opt.nonneg_tol * std::abs(ctx.ref.e_pot))
        throw NumericalError("stability distance is negative on the constraint set: d = " + std::to_string(out.d),
                             out.d);
    return out;
}

/// d(f, f0) and the field difference against the unshifted f0.
inline StabilityDistance stability_distance(const ParticleEnsemble& e, const SteadyStateProfile& p,
                                            const DistanceOptions& opt = {})
{
    const auto ctx = make_distance_context(e, make_metric_reference(p), opt);
    return stability_distance(ctx, ComparisonState{&p});
}

/// (1/2) |lambda0| c_Q sum omega (f - f0(E))^2 with c_Q = inf Q'' on
/// (0, max f]; the weighted L^2 lower bound for d, when c_Q > 0.
inline std::optional<double> weighted_l2_bound(const ParticleEnsemble& e, const SteadyStateProfile& p)
{
    if (e.size() == 0)
        return std::nullopt;
    const double fmax = *std::max_element(e.f.begin(), e.f.end());
    double cq = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= 200; ++j)
        cq = std::min(cq, p.model.qsecond(fmax * j / 200.0));
    if (p.model.kind() == CasimirKind::PolytropicPlusLinear && p.model.k() < 1.0)
        cq = 0.0; // Q'' -> 0 as f -> 0
    if (!(cq > 0.0))
        return std::nullopt;
    const double s = parallel_sum(e.size(), [&](std::size_t i) {
        const double E = e.kinetic_of(i) + p.U_at(e.radius_of(i));
        const double d = e.f[i] - p.f0(E);
        return e.omega[i] * d * d;
    });
    return 0.5 * std::abs(p.lambda0) * cq * s;
}

} // namespace galstab
