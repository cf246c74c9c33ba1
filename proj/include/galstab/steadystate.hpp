#pragma once

// Radial steady states: the self-consistent Poisson problem
// (1/r^2)(r^2 U')' = 4 pi h_phi(U), the closed-form Plummer sphere, target
// mass matching and the (a, b) / S_lambda scaling maps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>

#include "json.hpp"

#include "galstab/casimir.hpp"
#include "galstab/errors.hpp"
#include "galstab/quadrature.hpp"

namespace galstab {

struct GridControl {
    std::size_t n = 4096;
    double r_min_fraction = 1e-4;  ///< innermost node as a fraction of R_support
    double r_max_factor = 1.5;     ///< outermost node as a multiple of R_support
    double ode_rel_tol = 1e-12;
    double max_radius = 1e8;       ///< give up if the support has not ended here
    std::size_t table_nodes = 1000;
};

/// Radial tabulation of a spherically symmetric steady state.
///
/// U = E0 - psi inside the support where psi is the depth below the cutoff.
/// For profiles solved at an arbitrary central depth the cutoff generally
/// differs from lambda0 Q'(0); then f0(E) = phi(E - energy_offset) and the
/// `euler_lagrange_consistent()` check fails.
struct SteadyStateProfile {
    CasimirModel model = CasimirModel::plummer_power();
    double lambda0 = -1.0;
    double E0 = 0.0;
    double energy_offset = 0.0;
    double central_depth = 0.0;
    double support_radius = std::numeric_limits<double>::infinity();
    double total_mass = 0.0;
    double casimir_mass = 0.0;
    std::optional<double> plummer_c0;
    double plummer_scale = 1.0;
    bool equilibrium = true;  ///< f0 is a function of the particle energy
    std::vector<double> r, U, rho, M_enc, kin, cas;
    std::shared_ptr<const DensityTable> table;

    bool finite_support() const { return std::isfinite(support_radius); }
    bool empty() const { return r.empty(); }

    /// lambda0 and the cutoff lambda0 Q'(0) of the generating phi.
    EnergyCutoff cutoff() const { return {lambda0, lambda0 * model.qprime(0.0)}; }

    /// True when the cutoff energy equals lambda0 Q'(0) to `rel`.
    bool euler_lagrange_consistent(double rel = 1e-9) const
    {
        const auto c = cutoff();
        return std::abs(E0 - c.E0) <= rel * std::max(std::abs(c.E0), std::abs(lambda0));
    }

    /// Steady-state distribution as a function of particle energy.
    double f0(double E) const
    {
        if (E >= E0)
            return 0.0;
        return phi(model, cutoff(), E - energy_offset);
    }

    double U_at(double x) const
    {
        if (r.empty())
            return 0.0;
        if (x >= r.back())
            return x > r.back() ? -total_mass / x : U.back();
        if (x <= r.front()) {
            // harmonic core: U'(r) ~ (U'(r0)/r0) r
            const double c = M_enc.front() / (r.front() * r.front() * r.front());
            return U.front() + 0.5 * c * (x * x - r.front() * r.front());
        }
        const std::size_t i = segment(x);
        return hermite(x, i, U, [&](std::size_t j) { return M_enc[j] / (r[j] * r[j]); });
    }

    double M_at(double x) const
    {
        if (r.empty() || !(x > 0.0))
            return 0.0;
        if (x <= r.front())
            return M_enc.front() * std::pow(x / r.front(), 3);
        if (x >= r.back()) {
            if (finite_support())
                return total_mass;
            const double q = r.back() / x;
            return total_mass - (total_mass - M_enc.back()) * q * q;
        }
        const std::size_t i = segment(x);
        return hermite(x, i, M_enc, [&](std::size_t j) { return 4.0 * std::numbers::pi * r[j] * r[j] * rho[j]; });
    }

    double rho_at(double x) const
    {
        if (r.empty())
            return 0.0;
        if (finite_support() && x >= support_radius)
            return 0.0;
        if (plummer_c0) {
            // depth c, length a: rho = 3 c / (4 pi a^2) (1 + r^2/a^2)^(-5/2)
            const double a = plummer_scale, y = x / a;
            return 3.0 * *plummer_c0 / (4.0 * std::numbers::pi * a * a) * std::pow(1.0 + y * y, -2.5);
        }
        if (equilibrium && table)
            return table->density(E0 - U_at(x));
        if (x <= r.front())
            return rho.front();
        if (x >= r.back())
            return 0.0;
        const std::size_t i = segment(x);
        const double t = (x - r[i]) / (r[i + 1] - r[i]);
        return (1.0 - t) * rho[i] + t * rho[i + 1];
    }

    /// Radius enclosing mass m, 0 <= m < total_mass.
    double radius_of_mass(double m) const
    {
        if (r.empty() || !(m > 0.0))
            return 0.0;
        if (!(m < total_mass))
            throw UsageError("radius_of_mass: m must be below the total mass");
        if (m <= M_enc.front())
            return r.front() * std::cbrt(m / M_enc.front());
        if (m >= M_enc.back()) {
            if (finite_support())
                return support_radius;
            return r.back() * std::sqrt((total_mass - M_enc.back()) / (total_mass - m));
        }
        auto it = std::upper_bound(M_enc.begin(), M_enc.end(), m);
        std::size_t i = static_cast<std::size_t>(it - M_enc.begin());
        i = std::clamp<std::size_t>(i, 1, r.size() - 1) - 1;
        double lo = r[i];
        double hi = r[i + 1];
        for (int it2 = 0; it2 < 80 && hi - lo > 1e-15 * hi; ++it2) {
            const double mid = 0.5 * (lo + hi);
            if (M_at(mid) < m)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }

    double half_mass_radius() const { return radius_of_mass(0.5 * total_mass); }

private:
    std::size_t segment(double x) const
    {
        auto it = std::upper_bound(r.begin(), r.end(), x);
        std::size_t i = static_cast<std::size_t>(it - r.begin());
        return std::clamp<std::size_t>(i, 1, r.size() - 1) - 1;
    }

    template <class D>
    double hermite(double x, std::size_t i, const std::vector<double>& y, D&& deriv) const
    {
        const double h = r[i + 1] - r[i];
        const double t = (x - r[i]) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        return h00 * y[i] + h10 * h * deriv(i) + h01 * y[i + 1] + h11 * h * deriv(i + 1);
    }
};

/// Builds the depth-indexed moment table matching the profile's phi.
inline void attach_table(SteadyStateProfile& p, std::size_t nodes = 1000)
{
    const auto c = p.cutoff();
    const double hi = 100.0 * std::max({std::abs(c.E0), std::abs(p.lambda0), p.central_depth, 1e-300});
    p.table = std::make_shared<const DensityTable>(p.model, c, hi, nodes);
}

// ---------------------------------------------------------------------------
// radial ODE

namespace detail {

using OdeState = std::array<double, 4>; // psi, m, casimir, kinetic

/// Sources (H, CAS, KIN) as functions of depth psi; all zero for psi <= 0.
using DepthSources = std::function<std::array<double, 3>(double)>;

struct RadialSystem {
    const DepthSources* src;
    void operator()(const OdeState& y, OdeState& dy, double r) const
    {
        const double fourpi_r2 = 4.0 * std::numbers::pi * r * r;
        dy[0] = -y[1] / (r * r);
        if (y[0] > 0.0) {
            const auto s = (*src)(y[0]);
            dy[1] = fourpi_r2 * s[0];
            dy[2] = fourpi_r2 * s[1];
            dy[3] = fourpi_r2 * s[2];
        } else {
            dy[1] = dy[2] = dy[3] = 0.0;
        }
    }
};

/// Series start at small r: psi = D - (2 pi / 3) H(D) r^2, m = (4 pi / 3) H(D) r^3.
inline OdeState series_start(const DepthSources& src, double depth, double r)
{
    const auto s = src(depth);
    const double v = 4.0 * std::numbers::pi / 3.0 * r * r * r;
    return {depth - 2.0 * std::numbers::pi / 3.0 * s[0] * r * r, v * s[0], v * s[1], v * s[2]};
}

inline double core_length(const DepthSources& src, double depth)
{
    const double h = src(depth)[0];
    if (!(h > 0.0))
        throw NumericalError("central density vanishes at the requested depth");
    return std::sqrt(depth / (4.0 * std::numbers::pi * h));
}

struct ShootResult {
    double support_radius = 0.0;
    OdeState at_support{};
    double r_start = 0.0;
};

/// Integrates outward from the centre until psi reaches zero.
inline ShootResult shoot_to_support(const DepthSources& src, double depth, const GridControl& gc)
{
    namespace ode = boost::numeric::odeint;
    const double ell = core_length(src, depth);
    ShootResult out;
    out.r_start = 1e-6 * ell;
    OdeState y = series_start(src, depth, out.r_start);
    RadialSystem sys{&src};
    auto stepper = ode::make_dense_output(1e-14 * depth, gc.ode_rel_tol, ode::runge_kutta_dopri5<OdeState>());
    stepper.initialize(y, out.r_start, 1e-3 * ell);
    while (true) {
        stepper.do_step(sys);
        const double t1 = stepper.current_time();
        if (stepper.current_state()[0] <= 0.0) {
            const double t0 = stepper.previous_time();
            OdeState tmp;
            auto g = [&](double t) {
                stepper.calc_state(t, tmp);
                return tmp[0];
            };
            const double g0 = g(t0);
            const double g1 = stepper.current_state()[0];
            double R = t1;
            if (g1 < 0.0 && g0 > 0.0) {
                std::uintmax_t iters = 200;
                auto tol = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::abs(b); };
                auto [a, b] = boost::math::tools::toms748_solve(g, t0, t1, g0, g1, tol, iters);
                R = 0.5 * (a + b);
            }
            stepper.calc_state(R, out.at_support);
            out.support_radius = R;
            return out;
        }
        if (t1 > gc.max_radius || !std::isfinite(stepper.current_state()[0]))
            throw ConvergenceError("density did not vanish before r = " + std::to_string(gc.max_radius),
                                   stepper.current_state()[0]);
    }
}

/// States at the requested increasing radii (all > r_start).
inline std::vector<OdeState> integrate_to(const DepthSources& src, double depth, double r_start,
                                          std::span<const double> radii, double rel_tol)
{
    namespace ode = boost::numeric::odeint;
    std::vector<double> times;
    times.reserve(radii.size() + 1);
    times.push_back(r_start);
    times.insert(times.end(), radii.begin(), radii.end());
    std::vector<OdeState> states;
    states.reserve(times.size());
    OdeState y = series_start(src, depth, r_start);
    RadialSystem sys{&src};
    const double ell = core_length(src, depth);
    ode::integrate_times(ode::make_controlled(1e-14 * depth, rel_tol, ode::runge_kutta_dopri5<OdeState>()), sys, y,
                         times.begin(), times.end(), 1e-3 * ell,
                         [&](const OdeState& s, double) { states.push_back(s); });
    states.erase(states.begin());
    return states;
}

inline DepthSources table_sources(std::shared_ptr<const DensityTable> table)
{
    return [table](double psi) -> std::array<double, 3> {
        if (!(psi > 0.0))
            return {0.0, 0.0, 0.0};
        return {table->density(psi), table->casimir(psi), table->kinetic(psi)};
    };
}

inline void require_finite_mass_model(const CasimirModel& model, const char* op)
{
    if (model.kind() == CasimirKind::PlummerPower)
        throw UsageError(std::string(op) + ": k = 7/2 pure power has infinite support; use plummer_closed_form");
}

} // namespace detail

/// Radial Poisson integration for an arbitrary density law rho = H(E0 - u)
/// started from u(0) = u0. Returns U and M_enc at `radii` (sorted, >= 0) with
/// no support detection.
struct RadialPoissonSolution {
    std::vector<double> r, U, M_enc;
};

inline RadialPoissonSolution integrate_radial_poisson(const std::function<double(double)>& density_of_depth,
                                                      double E0, double u0, std::span<const double> radii,
                                                      double rel_tol = 1e-12)
{
    const double depth = E0 - u0;
    if (!(depth > 0.0))
        throw DomainError("integrate_radial_poisson: need u0 < E0");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1]))
            throw UsageError("integrate_radial_poisson: radii must be increasing");
    detail::DepthSources src = [&](double psi) -> std::array<double, 3> {
        return {psi > 0.0 ? density_of_depth(psi) : 0.0, 0.0, 0.0};
    };
    const double r_start = 1e-6 * detail::core_length(src, depth);
    RadialPoissonSolution out;
    out.r = {radii.begin(), radii.end()};
    std::vector<double> positive;
    for (double x : radii)
        if (x > r_start)
            positive.push_back(x);
    const auto states = detail::integrate_to(src, depth, r_start, positive, rel_tol);
    const std::size_t skip = radii.size() - positive.size();
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const auto s = i < skip ? detail::series_start(src, depth, std::max(radii[i], 1e-300)) : states[i - skip];
        out.U.push_back(E0 - (radii[i] > 0.0 ? s[0] : depth));
        out.M_enc.push_back(radii[i] > 0.0 ? s[1] : 0.0);
    }
    return out;
}

/// Solves Delta U = 4 pi h_phi(U) with central depth E0 - U(0) = central_depth,
/// fixes the gauge by Kepler matching U(R) = -M/R at the support radius, and
/// tabulates the profile on a geometric grid through R.
inline SteadyStateProfile solve_emden_fowler(const CasimirModel& model, double lambda0, double central_depth,
                                             const GridControl& gc = {})
{
    detail::require_finite_mass_model(model, "solve_emden_fowler");
    if (!(central_depth > 0.0))
        throw DomainError("solve_emden_fowler: central depth must be positive");
    SteadyStateProfile p;
    p.model = model;
    p.lambda0 = make_cutoff(model, lambda0).lambda0;
    p.central_depth = central_depth;
    attach_table(p, gc.table_nodes);
    const auto src = detail::table_sources(p.table);

    const auto shot = detail::shoot_to_support(src, central_depth, gc);
    const double R = shot.support_radius;
    p.r = geometric_grid_through(gc.r_min_fraction * R, R, gc.r_max_factor * R, gc.n);
    std::vector<double> inner;
    for (double x : p.r)
        if (x <= R)
            inner.push_back(x);
    if (inner.front() <= shot.r_start)
        throw UsageError("solve_emden_fowler: innermost grid radius too small");
    auto states = detail::integrate_to(src, central_depth, shot.r_start, inner, gc.ode_rel_tol);
    states.back() = shot.at_support;

    const double M = shot.at_support[1];
    p.support_radius = R;
    p.total_mass = M;
    p.casimir_mass = shot.at_support[2];
    p.E0 = -M / R;
    p.energy_offset = p.E0 - p.cutoff().E0;
    p.equilibrium = true;

    const std::size_t n = p.r.size();
    p.U.resize(n);
    p.rho.resize(n);
    p.M_enc.resize(n);
    p.kin.resize(n);
    p.cas.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < states.size()) {
            const double psi = std::max(states[i][0], 0.0);
            p.U[i] = p.E0 - psi;
            p.M_enc[i] = states[i][1];
            p.rho[i] = p.table->density(psi);
            p.kin[i] = p.table->kinetic(psi);
            p.cas[i] = p.table->casimir(psi);
        } else {
            p.U[i] = -M / p.r[i];
            p.M_enc[i] = M;
            p.rho[i] = p.kin[i] = p.cas[i] = 0.0;
        }
    }
    const std::size_t iR = states.size() - 1;
    p.U[iR] = p.E0;
    p.rho[iR] = p.kin[iR] = p.cas[iR] = 0.0;
    return p;
}

/// Support radius, mass and Casimir value at a given depth without tabulating.
struct ShootSummary {
    double support_radius, total_mass, casimir_mass;
};

inline ShootSummary shoot(const CasimirModel& model, double lambda0, double central_depth, const GridControl& gc = {})
{
    detail::require_finite_mass_model(model, "shoot");
    SteadyStateProfile p;
    p.model = model;
    p.lambda0 = lambda0;
    p.central_depth = central_depth;
    attach_table(p, gc.table_nodes);
    const auto s = detail::shoot_to_support(detail::table_sources(p.table), central_depth, gc);
    return {s.support_radius, s.at_support[1], s.at_support[2]};
}

/// Central depth at which the Kepler-matched cutoff -M/R equals lambda0 Q'(0),
/// so the profile satisfies the Euler-Lagrange relation without a shift.
inline double consistent_depth(const CasimirModel& model, double lambda0, const GridControl& gc = {},
                               std::optional<double> guess = std::nullopt)
{
    detail::require_finite_mass_model(model, "consistent_depth");
    const auto cut = make_cutoff(model, lambda0);
    if (!(cut.E0 < 0.0))
        throw DomainError("consistent_depth: need Q'(0) > 0");
    SteadyStateProfile p;
    p.model = model;
    p.lambda0 = lambda0;
    p.central_depth = guess.value_or(std::abs(cut.E0));
    attach_table(p, gc.table_nodes);
    const auto src = detail::table_sources(p.table);
    auto F = [&](double D) {
        const auto s = detail::shoot_to_support(src, D, gc);
        return s.at_support[1] / s.support_radius + cut.E0;
    };
    // F increases with depth
    double a = p.central_depth;
    double fa = F(a);
    double b = a;
    double fb = fa;
    for (int i = 0; i < 60 && fb < 0.0; ++i) {
        a = b;
        fa = fb;
        b *= 2.0;
        fb = F(b);
    }
    for (int i = 0; i < 60 && fa > 0.0; ++i) {
        b = a;
        fb = fa;
        a *= 0.5;
        fa = F(a);
    }
    if ((fa > 0.0) == (fb > 0.0))
        throw ConvergenceError("consistent_depth: could not bracket the Kepler matching condition", fa);
    std::uintmax_t iters = 100;
    auto tol = [](double x, double y) { return std::abs(y - x) <= 1e-14 * std::abs(y); };
    auto [lo, hi] = boost::math::tools::toms748_solve(F, a, b, fa, fb, tol, iters);
    return 0.5 * (lo + hi);
}

/// Euler-Lagrange consistent steady state for the given lambda0.
inline SteadyStateProfile solve_consistent(const CasimirModel& model, double lambda0, const GridControl& gc = {},
                                           std::optional<double> depth_guess = std::nullopt)
{
    auto p = solve_emden_fowler(model, lambda0, consistent_depth(model, lambda0, gc, depth_guess), gc);
    // the root-find leaves E0 within ~1e-14 of lambda0 Q'(0); snap the gauge
    p.energy_offset = 0.0;
    return p;
}

struct MatchOptions {
    double rel_tol = 1e-9;
    int max_iter = 20;
    double lambda_ref = -1.0;
};

/// Consistent steady state whose Casimir value C(f0) equals target_mass.
///
/// C scales as |lambda0|^(3/4) along the (a, a^-2) family, which fixes the
/// first guess for lambda0; each refinement is an independent consistent
/// solve.
inline SteadyStateProfile match_target_mass(const CasimirModel& model, double target_mass, const GridControl& gc = {},
                                            const MatchOptions& opt = {})
{
    detail::require_finite_mass_model(model, "match_target_mass");
    if (!(target_mass > 0.0) || !std::isfinite(target_mass))
        throw DomainError("match_target_mass: target mass must be positive and finite");
    if (!(model.qprime(0.0) > 0.0))
        throw UsageError("match_target_mass: model needs Q'(0) > 0 for a finite cutoff");
    double lambda = opt.lambda_ref;
    double depth = consistent_depth(model, lambda, gc);
    double C = shoot(model, lambda, depth, gc).casimir_mass;
    for (int it = 0; it < opt.max_iter; ++it) {
        if (std::abs(C - target_mass) <= opt.rel_tol * target_mass)
            break;
        const double ratio = std::pow(target_mass / C, 4.0 / 3.0);
        if (!std::isfinite(ratio) || !(ratio > 0.0))
            throw ConvergenceError("match_target_mass: attainable masses are (0, inf) but the iteration diverged at C = " +
                                       std::to_string(C),
                                   C - target_mass);
        lambda *= ratio;
        depth = consistent_depth(model, lambda, gc, depth * ratio);
        C = shoot(model, lambda, depth, gc).casimir_mass;
    }
    auto p = solve_emden_fowler(model, lambda, depth, gc);
    p.energy_offset = 0.0;
    if (std::abs(p.casimir_mass - target_mass) > 1e-6 * target_mass)
        throw ConvergenceError("match_target_mass: reached C = " + std::to_string(p.casimir_mass),
                               p.casimir_mass - target_mass);
    return p;
}

// ---------------------------------------------------------------------------
// Plummer sphere

/// h_phi(-1) for Q = f^(9/7) at lambda0 = -1, by quadrature.
inline double plummer_unit_density()
{
    const auto m = CasimirModel::plummer_power();
    return density_of_potential(m, make_cutoff(m, -1.0), -1.0);
}

/// lambda0 implied by c0: h_phi(u) = |lambda0|^(-7/2) h_(-1)(-1) (-u)^5 must
/// equal the closed-form rho0 = 3 (-U0)^5 / (4 pi c0^4).
inline double plummer_lambda0(double c0)
{
    if (!(c0 > 0.0))
        throw DomainError("plummer: c0 must be positive");
    return -std::pow(plummer_unit_density() * 4.0 * std::numbers::pi * std::pow(c0, 4) / 3.0, 2.0 / 7.0);
}

struct PlummerGrid {
    double r_min = 1e-4;
    double r_max = 1e3;
    std::size_t n = 4096;
    std::size_t table_nodes = 1000;
};

inline SteadyStateProfile plummer_closed_form(double c0, const PlummerGrid& g = {})
{
    if (!(c0 > 0.0))
        throw DomainError("plummer_closed_form: c0 must be positive");
    SteadyStateProfile p;
    p.model = CasimirModel::plummer_power();
    p.lambda0 = plummer_lambda0(c0);
    p.E0 = 0.0;
    p.central_depth = c0;
    p.support_radius = std::numeric_limits<double>::infinity();
    p.total_mass = c0;
    p.plummer_c0 = c0;
    attach_table(p, g.table_nodes);
    p.r = geometric_grid(g.r_min, g.r_max, g.n);
    const std::size_t n = p.r.size();
    p.U.resize(n);
    p.rho.resize(n);
    p.M_enc.resize(n);
    p.kin.resize(n);
    p.cas.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = p.r[i];
        const double s = 1.0 + x * x;
        p.U[i] = -c0 / std::sqrt(s);
        p.rho[i] = 3.0 * c0 / (4.0 * std::numbers::pi) * std::pow(s, -2.5);
        p.M_enc[i] = c0 * x * x * x * std::pow(s, -1.5);
        p.kin[i] = p.table->kinetic(-p.U[i]);
        p.cas[i] = p.table->casimir(-p.U[i]);
    }
    std::vector<double> g4(n);
    for (std::size_t i = 0; i < n; ++i)
        g4[i] = 4.0 * std::numbers::pi * p.r[i] * p.r[i] * p.cas[i];
    p.casimir_mass = integrate_radial(p.r, g4).value;
    return p;
}

// ---------------------------------------------------------------------------
// scaling

/// f(x, v) -> f(a x, b v), or the Plummer map f -> lambda^-7 f(lambda^-4 x, lambda v).
struct ScalingTransform {
    enum class Kind { AB, PlummerLambda };
    Kind kind = Kind::AB;
    double a = 1.0;
    double b = 1.0;
    double lambda = 1.0;

    static ScalingTransform ab(double a, double b)
    {
        if (!(a > 0.0) || !(b > 0.0))
            throw DomainError("scaling factors must be positive");
        return {Kind::AB, a, b, 1.0};
    }
    static ScalingTransform plummer(double lambda)
    {
        if (!(lambda > 0.0))
            throw DomainError("scaling parameter must be positive");
        return {Kind::PlummerLambda, 1.0, 1.0, lambda};
    }

    /// Factor applied to positions.
    double x_factor() const { return kind == Kind::AB ? 1.0 / a : std::pow(lambda, 4); }
    /// Factor applied to velocities.
    double v_factor() const { return kind == Kind::AB ? 1.0 / b : 1.0 / lambda; }
    /// Factor applied to values of f.
    double f_factor() const { return kind == Kind::AB ? 1.0 : std::pow(lambda, -7); }

    /// Exact factor laws for the functionals.
    double casimir_factor() const { return kind == Kind::AB ? std::pow(a * b, -3) : 1.0; }
    double kinetic_factor() const { return kind == Kind::AB ? std::pow(a, -3) * std::pow(b, -5) : 1.0; }
    double potential_factor() const { return kind == Kind::AB ? std::pow(a, -5) * std::pow(b, -6) : 1.0; }
    double mass_factor() const { return kind == Kind::AB ? std::pow(a * b, -3) : lambda * lambda; }
};

inline SteadyStateProfile apply_scaling(const SteadyStateProfile& p, const ScalingTransform& t)
{
    SteadyStateProfile q = p;
    const double xf = t.x_factor();
    const double vf = t.v_factor();
    const double ff = t.f_factor();
    // rho ~ f v^3, U ~ M / r, kin ~ f v^5, cas ~ Q(f) v^3
    const double rho_f = ff * vf * vf * vf;
    const double mass_f = rho_f * xf * xf * xf;
    const double u_f = mass_f / xf;
    const double kin_f = rho_f * vf * vf;
    double cas_f = vf * vf * vf;
    if (t.kind == ScalingTransform::Kind::PlummerLambda) {
        if (p.model.kind() != CasimirKind::PlummerPower)
            throw UsageError("S_lambda applies to the Q = f^(9/7) model only");
        cas_f *= std::pow(ff, 9.0 / 7.0);
    }
    for (auto& x : q.r)
        x *= xf;
    for (auto& x : q.U)
        x *= u_f;
    for (auto& x : q.rho)
        x *= rho_f;
    for (auto& x : q.M_enc)
        x *= mass_f;
    for (auto& x : q.kin)
        x *= kin_f;
    for (auto& x : q.cas)
        x *= cas_f;
    q.support_radius *= xf;
    q.total_mass *= mass_f;
    q.casimir_mass *= cas_f * xf * xf * xf;
    q.central_depth *= u_f;
    q.E0 *= u_f;

    if (t.kind == ScalingTransform::Kind::PlummerLambda) {
        // phi is unchanged: lambda^-7 (7 E / 9 lambda0)^(7/2) at E = lambda^2 E'
        q.plummer_scale *= xf;
        if (q.plummer_c0)
            *q.plummer_c0 *= u_f;
        return q;
    }
    // f(a x, b v) stays a function of energy only when b = a^-2; then lambda0 -> a^4 lambda0
    const bool energy_form = std::abs(t.b * t.a * t.a - 1.0) <= 1e-14;
    q.plummer_c0.reset();
    if (p.equilibrium && energy_form) {
        q.lambda0 *= u_f;
        q.energy_offset *= u_f;
        attach_table(q);
    } else {
        q.equilibrium = false;
        q.table.reset();
    }
    return q;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json model_to_json(const CasimirModel& m)
{
    nlohmann::json j;
    j["kind"] = m.name();
    j["k"] = m.k();
    j["growth_constant"] = m.growth_constant();
    if (m.kind() == CasimirKind::Tabulated) {
        j["f"] = std::vector<double>(m.table_f().begin(), m.table_f().end());
        j["q"] = std::vector<double>(m.table_q().begin(), m.table_q().end());
    }
    return j;
}

inline CasimirModel model_from_json(const nlohmann::json& j)
{
    const auto kind = j.at("kind").get<std::string>();
    const double C = j.value("growth_constant", 1.0);
    if (kind == "poly")
        return CasimirModel::polytropic_plus_linear(j.at("k").get<double>(), C);
    if (kind == "jump")
        return CasimirModel::pure_jump(C);
    if (kind == "plummer")
        return CasimirModel::plummer_power();
    if (kind == "tabulated")
        return CasimirModel::tabulated(j.at("f").get<std::vector<double>>(), j.at("q").get<std::vector<double>>(),
                                       j.at("k").get<double>(), C);
    throw UsageError("unknown model kind '" + kind + "'");
}

inline nlohmann::json profile_to_json(const SteadyStateProfile& p)
{
    nlohmann::json j;
    j["model"] = model_to_json(p.model);
    j["lambda0"] = p.lambda0;
    j["E0"] = p.E0;
    j["energy_offset"] = p.energy_offset;
    j["central_depth"] = p.central_depth;
    j["R_support"] = p.finite_support() ? nlohmann::json(p.support_radius) : nlohmann::json(nullptr);
    j["total_mass"] = p.total_mass;
    j["casimir_mass"] = p.casimir_mass;
    j["equilibrium"] = p.equilibrium;
    if (p.plummer_c0) {
        j["plummer_c0"] = *p.plummer_c0;
        j["plummer_scale"] = p.plummer_scale;
    }
    j["r"] = p.r;
    j["U"] = p.U;
    j["rho"] = p.rho;
    j["M_enc"] = p.M_enc;
    j["kin"] = p.kin;
    j["cas"] = p.cas;
    return j;
}

inline SteadyStateProfile profile_from_json(const nlohmann::json& j)
{
    SteadyStateProfile p;
    p.model = model_from_json(j.at("model"));
    p.lambda0 = j.at("lambda0").get<double>();
    p.E0 = j.at("E0").get<double>();
    p.energy_offset = j.value("energy_offset", 0.0);
    p.central_depth = j.value("central_depth", 0.0);
    p.support_radius = j.at("R_support").is_null() ? std::numeric_limits<double>::infinity()
                                                   : j.at("R_support").get<double>();
    p.total_mass = j.at("total_mass").get<double>();
    p.casimir_mass = j.at("casimir_mass").get<double>();
    p.equilibrium = j.value("equilibrium", true);
    if (j.contains("plummer_c0")) {
        p.plummer_c0 = j.at("plummer_c0").get<double>();
        p.plummer_scale = j.value("plummer_scale", 1.0);
    }
    p.r = j.at("r").get<std::vector<double>>();
    p.U = j.at("U").get<std::vector<double>>();
    p.rho = j.at("rho").get<std::vector<double>>();
    p.M_enc = j.at("M_enc").get<std::vector<double>>();
    const std::size_t n = p.r.size();
    p.kin = j.contains("kin") ? j.at("kin").get<std::vector<double>>() : std::vector<double>(n, 0.0);
    p.cas = j.contains("cas") ? j.at("cas").get<std::vector<double>>() : std::vector<double>(n, 0.0);
    if (p.U.size() != n || p.rho.size() != n || p.M_enc.size() != n || p.kin.size() != n || p.cas.size() != n)
        throw UsageError("profile JSON: array lengths differ");
    if (p.equilibrium)
        attach_table(p);
    return p;
}

/// Stable identifier of a profile's content.
inline std::string profile_hash(const SteadyStateProfile& p)
{
    const auto h = std::hash<std::string>{}(profile_to_json(p).dump());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016zx", h);
    return buf;
}

} // namespace galstab
