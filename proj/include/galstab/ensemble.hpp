#pragma once

// Weighted characteristic particles: each carries a phase-space volume omega
// and a transported value f of the distribution function, so that mass
// sum(omega f) and the Casimir sum(omega Q(f)) are fixed by construction.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "galstab/errors.hpp"
#include "galstab/parallel.hpp"
#include "galstab/steadystate.hpp"

namespace galstab {

enum class Backend { Radial, Cartesian3D };

inline std::string to_string(Backend b) { return b == Backend::Radial ? "radial" : "3d"; }

inline Backend backend_from_string(const std::string& s)
{
    if (s == "radial")
        return Backend::Radial;
    if (s == "3d" || s == "cartesian")
        return Backend::Cartesian3D;
    throw UsageError("unknown backend '" + s + "' (expected radial or 3d)");
}

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

struct ParticleEnsemble {
    Backend backend = Backend::Radial;
    double t = 0.0;
    // radial backend: radius, radial velocity, squared angular momentum
    std::vector<double> r, w, L;
    // 3D backend
    std::vector<Vec3> x, v;
    std::vector<double> omega, f;
    /// sum omega [E f - lambda0 Q(f)] and sum omega Q(f) of the sample drawn
    /// from f0, with E taken in the profile potential at sampling time.
    double reference_level = 0.0;
    double reference_casimir = 0.0;

    std::size_t size() const { return omega.size(); }
    double mass_of(std::size_t i) const { return omega[i] * f[i]; }

    /// |v|^2 / 2 of particle i.
    double kinetic_of(std::size_t i) const
    {
        if (backend == Backend::Radial)
            return 0.5 * (w[i] * w[i] + L[i] / (r[i] * r[i]));
        return 0.5 * dot(v[i], v[i]);
    }

    double radius_of(std::size_t i) const { return backend == Backend::Radial ? r[i] : norm(x[i]); }

    void check_consistent() const
    {
        const std::size_t n = size();
        if (f.size() != n)
            throw UsageError("ensemble: omega and f lengths differ");
        if (backend == Backend::Radial && (r.size() != n || w.size() != n || L.size() != n))
            throw UsageError("ensemble: radial columns have inconsistent lengths");
        if (backend == Backend::Cartesian3D && (x.size() != n || v.size() != n))
            throw UsageError("ensemble: 3D columns have inconsistent lengths");
    }
};

inline double ensemble_mass(const ParticleEnsemble& e)
{
    return parallel_sum(e.size(), [&](std::size_t i) { return e.omega[i] * e.f[i]; });
}

inline double ensemble_casimir(const ParticleEnsemble& e, const CasimirModel& model)
{
    return parallel_sum(e.size(), [&](std::size_t i) { return e.omega[i] * model.q(e.f[i]); });
}

inline Vec3 mass_centroid(const ParticleEnsemble& e)
{
    if (e.backend == Backend::Radial)
        return {0.0, 0.0, 0.0};
    Vec3 c{};
    const double M = ensemble_mass(e);
    for (int k = 0; k < 3; ++k)
        c[k] = parallel_sum(e.size(), [&](std::size_t i) { return e.mass_of(i) * e.x[i][k]; }) / M;
    return c;
}

// ---------------------------------------------------------------------------
// sampling

struct SamplerOptions {
    std::size_t envelope_points = 48;
    double envelope_margin = 1.2;
    double min_efficiency = 1e-3;
    bool antithetic = true; ///< 3D: pair (x, v) with (-x, -v)
};

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double u01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline Vec3 unit_vector(std::mt19937_64& g)
{
    const double mu = 2.0 * u01(g) - 1.0;
    const double ph = 2.0 * std::numbers::pi * u01(g);
    const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
    return {s * std::cos(ph), s * std::sin(ph), mu};
}

/// Speed at potential U from the density f0(v^2/2 + U) v^2 on [0, v_max].
inline double sample_speed(const SteadyStateProfile& p, double U, std::mt19937_64& g, const SamplerOptions& opt)
{
    const double vmax = std::sqrt(2.0 * std::max(0.0, p.E0 - U));
    if (!(vmax > 0.0))
        throw NumericalError("sampler: radius drawn outside the support");
    auto dens = [&](double s) { return p.f0(0.5 * s * s + U) * s * s; };
    double env = 0.0;
    for (std::size_t j = 1; j <= opt.envelope_points; ++j)
        env = std::max(env, dens(vmax * static_cast<double>(j) / static_cast<double>(opt.envelope_points + 1)));
    env *= opt.envelope_margin;
    if (!(env > 0.0))
        throw NumericalError("sampler: zero velocity density inside the support");
    const auto max_tries = static_cast<std::size_t>(std::ceil(1.0 / opt.min_efficiency)) * 20;
    std::size_t tries = 0;
    while (true) {
        const double s = vmax * u01(g);
        const double d = dens(s);
        if (d > env) {
            // envelope too low; enlarge and start over
            env = 2.0 * d;
            tries = 0;
            continue;
        }
        if (u01(g) * env < d && d > 0.0)
            return s;
        if (++tries > max_tries)
            throw NumericalError("sampler: rejection efficiency below floor");
    }
}

} // namespace detail

/// Equal-mass sample of f0: radii by inverse CDF of M_enc, speeds by
/// rejection from f0(v^2/2 + U0(r)) v^2, isotropic directions.
inline ParticleEnsemble sample_steady_state(const SteadyStateProfile& p, std::size_t N, Backend backend,
                                            std::uint64_t seed, const SamplerOptions& opt = {})
{
    if (N < 1)
        throw UsageError("sample_steady_state: need N >= 1");
    if (!p.equilibrium)
        throw UsageError("sample_steady_state: profile is not a function of energy");
    if (p.empty() || !(p.total_mass > 0.0))
        throw UsageError("sample_steady_state: empty profile");
    std::mt19937_64 g(seed);
    ParticleEnsemble e;
    e.backend = backend;
    const double m = p.total_mass / static_cast<double>(N);
    e.omega.resize(N);
    e.f.resize(N);
    if (backend == Backend::Radial) {
        e.r.resize(N);
        e.w.resize(N);
        e.L.resize(N);
    } else {
        e.x.resize(N);
        e.v.resize(N);
    }
    const auto lam0 = p.lambda0;
    double level = 0.0;
    double cas = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const bool mirror = backend == Backend::Cartesian3D && opt.antithetic && (i % 2 == 1);
        double rad, U, s;
        if (mirror) {
            e.x[i] = {-e.x[i - 1][0], -e.x[i - 1][1], -e.x[i - 1][2]};
            e.v[i] = {-e.v[i - 1][0], -e.v[i - 1][1], -e.v[i - 1][2]};
            e.f[i] = e.f[i - 1];
            rad = norm(e.x[i]);
            U = p.U_at(rad);
            s = norm(e.v[i]);
        } else {
            double u;
            do {
                u = detail::u01(g);
            } while (!(u > 0.0));
            rad = p.radius_of_mass(u * p.total_mass);
            U = p.U_at(rad);
            s = detail::sample_speed(p, U, g, opt);
            if (backend == Backend::Radial) {
                const double mu = 2.0 * detail::u01(g) - 1.0;
                e.r[i] = rad;
                e.w[i] = s * mu;
                e.L[i] = rad * rad * s * s * (1.0 - mu * mu);
            } else {
                const Vec3 nx = detail::unit_vector(g);
                const Vec3 nv = detail::unit_vector(g);
                e.x[i] = {rad * nx[0], rad * nx[1], rad * nx[2]};
                e.v[i] = {s * nv[0], s * nv[1], s * nv[2]};
            }
            e.f[i] = p.f0(0.5 * s * s + U);
        }
        if (!(e.f[i] > 0.0))
            throw NumericalError("sampler: drew a particle with f0 = 0");
        e.omega[i] = m / e.f[i];
        const double E = 0.5 * s * s + U;
        level += e.omega[i] * (E * e.f[i] - lam0 * p.model.q(e.f[i]));
        cas += e.omega[i] * p.model.q(e.f[i]);
    }
    e.reference_level = level;
    e.reference_casimir = cas;
    return e;
}

// ---------------------------------------------------------------------------
// scaling

/// Image of the ensemble under f(x, v) -> f(a x, b v) or S_lambda: particles
/// move to (x/a, v/b) (resp. (lambda^4 x, v / lambda)), values of f change by
/// the amplitude factor and volumes by the Jacobian.
inline ParticleEnsemble apply_scaling(const ParticleEnsemble& e, const ScalingTransform& t)
{
    ParticleEnsemble o = e;
    const double xf = t.x_factor();
    const double vf = t.v_factor();
    const double ff = t.f_factor();
    const double vol = std::pow(xf * vf, 3);
    for (std::size_t i = 0; i < o.size(); ++i) {
        o.omega[i] *= vol;
        o.f[i] *= ff;
    }
    if (o.backend == Backend::Radial) {
        for (std::size_t i = 0; i < o.size(); ++i) {
            o.r[i] *= xf;
            o.w[i] *= vf;
            o.L[i] *= xf * xf * vf * vf;
        }
    } else {
        for (std::size_t i = 0; i < o.size(); ++i)
            for (int k = 0; k < 3; ++k) {
                o.x[i][k] *= xf;
                o.v[i][k] *= vf;
            }
    }
    return o;
}

// ---------------------------------------------------------------------------
// binary snapshots: magic, backend, N, t, reference values, then columns of
// little-endian IEEE doubles.

inline constexpr char kEnsembleMagic[8] = {'V', 'P', 'E', 'N', 'S', 'M', 'B', '1'};

namespace detail {
inline void put_u64(std::ostream& os, std::uint64_t v)
{
    unsigned char b[8];
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint64_t get_u64(std::istream& is)
{
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8))
        throw UsageError("ensemble file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
inline void put_f64(std::ostream& os, double d)
{
    std::uint64_t u;
    std::memcpy(&u, &d, 8);
    put_u64(os, u);
}
inline double get_f64(std::istream& is)
{
    const std::uint64_t u = get_u64(is);
    double d;
    std::memcpy(&d, &u, 8);
    return d;
}
inline void put_column(std::ostream& os, const std::vector<double>& c)
{
    for (double d : c)
        put_f64(os, d);
}
inline std::vector<double> get_column(std::istream& is, std::size_t n)
{
    std::vector<double> c(n);
    for (auto& d : c)
        d = get_f64(is);
    return c;
}
} // namespace detail

inline void write_ensemble(const ParticleEnsemble& e, const std::string& path)
{
    e.check_consistent();
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw UsageError("cannot open '" + path + "' for writing");
    os.write(kEnsembleMagic, 8);
    detail::put_u64(os, e.backend == Backend::Radial ? 0 : 1);
    detail::put_u64(os, e.size());
    detail::put_f64(os, e.t);
    detail::put_f64(os, e.reference_level);
    detail::put_f64(os, e.reference_casimir);
    if (e.backend == Backend::Radial) {
        detail::put_column(os, e.r);
        detail::put_column(os, e.w);
        detail::put_column(os, e.L);
    } else {
        for (int k = 0; k < 3; ++k)
            for (const auto& p : e.x)
                detail::put_f64(os, p[k]);
        for (int k = 0; k < 3; ++k)
            for (const auto& p : e.v)
                detail::put_f64(os, p[k]);
    }
    detail::put_column(os, e.omega);
    detail::put_column(os, e.f);
    if (!os)
        throw Error("failed writing '" + path + "'");
}

inline ParticleEnsemble read_ensemble(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw UsageError("cannot open '" + path + "'");
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kEnsembleMagic, 8) != 0)
        throw UsageError("'" + path + "' is not an ensemble snapshot");
    ParticleEnsemble e;
    const auto b = detail::get_u64(is);
    if (b > 1)
        throw UsageError("ensemble file: unknown backend tag");
    e.backend = b == 0 ? Backend::Radial : Backend::Cartesian3D;
    const auto n = static_cast<std::size_t>(detail::get_u64(is));
    e.t = detail::get_f64(is);
    e.reference_level = detail::get_f64(is);
    e.reference_casimir = detail::get_f64(is);
    if (e.backend == Backend::Radial) {
        e.r = detail::get_column(is, n);
        e.w = detail::get_column(is, n);
        e.L = detail::get_column(is, n);
    } else {
        e.x.resize(n);
        e.v.resize(n);
        for (int k = 0; k < 3; ++k)
            for (auto& p : e.x)
                p[k] = detail::get_f64(is);
        for (int k = 0; k < 3; ++k)
            for (auto& p : e.v)
                p[k] = detail::get_f64(is);
    }
    e.omega = detail::get_column(is, n);
    e.f = detail::get_column(is, n);
    return e;
}

} // namespace galstab
