#pragma once

// Casimir integrands Q, the inversion of the Euler-Lagrange relation
// lambda0 Q'(f) = E, and the velocity-space reductions of f0 = phi(E) to
// radial densities.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include "galstab/errors.hpp"
#include "galstab/quadrature.hpp"

namespace galstab {

enum class CasimirKind { PolytropicPlusLinear, PureJump, PlummerPower, Tabulated };

inline std::string to_string(CasimirKind k)
{
    switch (k) {
    case CasimirKind::PolytropicPlusLinear: return "poly";
    case CasimirKind::PureJump: return "jump";
    case CasimirKind::PlummerPower: return "plummer";
    case CasimirKind::Tabulated: return "tabulated";
    }
    return "unknown";
}

/// Convex Casimir integrand Q with its first two derivatives.
///
/// Immutable after construction; copies share the tabulated interpolant.
class CasimirModel {
public:
    /// Q(f) = f + f^(1 + 1/k), 0 < k < 7/2.
    static CasimirModel polytropic_plus_linear(double k, double growth_constant = 1.0)
    {
        if (!(k > 0.0 && k < 3.5))
            throw DomainError("polytropic exponent k must lie in (0, 7/2)");
        CasimirModel m;
        m.kind_ = CasimirKind::PolytropicPlusLinear;
        m.k_ = k;
        m.growth_ = growth_constant;
        return m;
    }

    /// Q(f) = f on [0,1], (f^2 + 1)/2 beyond; gives f0 = E/E0 with a jump at E0.
    static CasimirModel pure_jump(double growth_constant = 0.4)
    {
        CasimirModel m;
        m.kind_ = CasimirKind::PureJump;
        m.k_ = 1.0;
        m.growth_ = growth_constant;
        return m;
    }

    /// Q(f) = f^(9/7), the limiting k = 7/2 case (Plummer sphere).
    static CasimirModel plummer_power()
    {
        CasimirModel m;
        m.kind_ = CasimirKind::PlummerPower;
        m.k_ = 3.5;
        m.growth_ = 0.0;
        return m;
    }

    /// Q sampled at increasing f > 0 (a point (0, 0) is prepended if missing),
    /// interpolated by a monotone cubic; Q' is the interpolant's derivative.
    /// Beyond the last sample Q continues linearly, so Q' is bounded there.
    static CasimirModel tabulated(std::vector<double> f, std::vector<double> q, double k, double growth_constant)
    {
        if (f.size() != q.size() || f.size() < 3)
            throw UsageError("tabulated Casimir needs at least 3 (f, Q) samples");
        if (!(k > 0.0 && k <= 3.5))
            throw DomainError("tabulated Casimir exponent k must lie in (0, 7/2]");
        for (std::size_t i = 0; i + 1 < f.size(); ++i)
            if (!(f[i + 1] > f[i]))
                throw UsageError("tabulated Casimir f samples must be strictly increasing");
        if (f.front() < 0.0)
            throw UsageError("tabulated Casimir f samples must be nonnegative");
        if (f.front() > 0.0) {
            f.insert(f.begin(), 0.0);
            q.insert(q.begin(), 0.0);
        }
        CasimirModel m;
        m.kind_ = CasimirKind::Tabulated;
        m.k_ = k;
        m.growth_ = growth_constant;
        auto table = std::make_shared<Table>();
        table->f = f;
        table->q = q;
        table->f_max = f.back();
        table->spline = std::make_shared<Pchip>(std::move(f), std::move(q));
        table->q_max = (*table->spline)(table->f_max);
        table->slope_max = table->spline->prime(table->f_max);
        // Q' of a cubic Hermite interpolant is quadratic on each interval:
        // d(t) = d0 + B t + A t^2 for t in [0, 1]
        const auto& F = table->f;
        table->dq.resize(F.size());
        table->piece.resize(F.size() - 1);
        for (std::size_t i = 0; i < F.size(); ++i)
            table->dq[i] = table->spline->prime(F[i]);
        // pchip keeps Q monotone, not Q'; a piece may overshoot its end values
        table->running_max.resize(F.size() - 1);
        double run = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < F.size(); ++i) {
            const double d0 = table->dq[i], d1 = table->dq[i + 1];
            const double dm = table->spline->prime(0.5 * (F[i] + F[i + 1]));
            const double A = 2.0 * (d0 - 2.0 * dm + d1);
            const double B = d1 - d0 - A;
            table->piece[i] = {A, B};
            double top = std::max(d0, d1);
            if (A != 0.0) {
                const double tv = -B / (2.0 * A);
                if (tv > 0.0 && tv < 1.0)
                    top = std::max(top, d0 + B * tv + A * tv * tv);
            }
            run = std::max(run, top);
            table->running_max[i] = run;
        }
        m.table_ = std::move(table);
        return m;
    }

    CasimirKind kind() const noexcept { return kind_; }
    double k() const noexcept { return k_; }
    double growth_constant() const noexcept { return growth_; }
    std::string name() const { return to_string(kind_); }

    std::span<const double> table_f() const { return table_ ? std::span<const double>(table_->f) : std::span<const double>{}; }
    std::span<const double> table_q() const { return table_ ? std::span<const double>(table_->q) : std::span<const double>{}; }

    double q(double f) const
    {
        switch (kind_) {
        case CasimirKind::PolytropicPlusLinear: return f + std::pow(f, 1.0 + 1.0 / k_);
        case CasimirKind::PureJump: return f <= 1.0 ? f : 0.5 * (f * f + 1.0);
        case CasimirKind::PlummerPower: return std::pow(f, 9.0 / 7.0);
        case CasimirKind::Tabulated:
            if (f > table_->f_max)
                return table_->q_max + table_->slope_max * (f - table_->f_max);
            return (*table_->spline)(f);
        }
        return 0.0;
    }

    double qprime(double f) const
    {
        switch (kind_) {
        case CasimirKind::PolytropicPlusLinear: return 1.0 + (1.0 + 1.0 / k_) * std::pow(f, 1.0 / k_);
        case CasimirKind::PureJump: return f <= 1.0 ? 1.0 : f;
        case CasimirKind::PlummerPower: return 9.0 / 7.0 * std::pow(f, 2.0 / 7.0);
        case CasimirKind::Tabulated:
            if (f >= table_->f_max)
                return table_->slope_max;
            return table_->spline->prime(f);
        }
        return 0.0;
    }

    /// Q''(f) for f > 0 (one-sided where Q' has a kink).
    double qsecond(double f) const
    {
        switch (kind_) {
        case CasimirKind::PolytropicPlusLinear:
            return (1.0 + 1.0 / k_) / k_ * std::pow(f, 1.0 / k_ - 1.0);
        case CasimirKind::PureJump: return f < 1.0 ? 0.0 : 1.0;
        case CasimirKind::PlummerPower: return 18.0 / 49.0 * std::pow(f, -5.0 / 7.0);
        case CasimirKind::Tabulated: {
            if (f >= table_->f_max)
                return 0.0;
            const double h = 1e-6 * std::max(f, 1e-6);
            const double lo = std::max(0.0, f - h);
            return (qprime(f + h) - qprime(lo)) / (f + h - lo);
        }
        }
        return 0.0;
    }

    /// Smallest f >= 0 with Q'(f) = Q'(0) + delta, delta >= 0, in closed form
    /// where the model has one. Taking the excess over Q'(0) avoids cancellation
    /// close to the cutoff.
    std::optional<double> qprime_inverse_excess(double delta) const
    {
        if (!(delta > 0.0))
            return kind_ == CasimirKind::Tabulated ? std::nullopt : std::optional<double>(0.0);
        switch (kind_) {
        case CasimirKind::PolytropicPlusLinear: return std::pow(delta / (1.0 + 1.0 / k_), k_);
        case CasimirKind::PureJump: return 1.0 + delta;
        case CasimirKind::PlummerPower: return std::pow(7.0 * delta / 9.0, 3.5);
        case CasimirKind::Tabulated: return table_inverse_excess(delta);
        }
        return std::nullopt;
    }

    /// Upper bound of Q' on [0, inf) (infinite unless tabulated).
    double qprime_sup() const
    {
        return kind_ == CasimirKind::Tabulated ? table_->slope_max : std::numeric_limits<double>::infinity();
    }

private:
    using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
    struct Table {
        std::vector<double> f, q;
        std::shared_ptr<const Pchip> spline;
        double f_max = 0.0, q_max = 0.0, slope_max = 0.0;
        std::vector<double> dq;                  ///< Q' at the nodes
        std::vector<std::array<double, 2>> piece; ///< (A, B) of Q' on each interval
        std::vector<double> running_max;         ///< max of Q' up to the end of each interval
    };

    /// Smallest f with Q'(f) = Q'(0) + delta, from the quadratic pieces; empty
    /// beyond the range of Q'.
    std::optional<double> table_inverse_excess(double delta) const
    {
        const auto& t = *table_;
        const double y = t.dq.front() + delta;
        const auto it = std::lower_bound(t.running_max.begin(), t.running_max.end(), y);
        if (it == t.running_max.end())
            return std::nullopt;
        const auto i = static_cast<std::size_t>(it - t.running_max.begin());
        const auto [A, B] = t.piece[i];
        // A s^2 + B s - c = 0, first root in [0, 1]
        const double c = i == 0 ? delta : y - t.dq[i];
        double s = 1.0;
        if (c <= 0.0) {
            s = 0.0;
        } else if (std::abs(A) <= 1e-14 * std::abs(B)) {
            s = c / B;
        } else {
            const double disc = std::max(0.0, B * B + 4.0 * A * c);
            const double qq = -0.5 * (B + std::copysign(std::sqrt(disc), B));
            for (double r : {qq / A, qq != 0.0 ? -c / qq : 2.0})
                if (r >= -1e-12 && r <= 1.0 + 1e-12)
                    s = std::min(s, r);
        }
        s = std::clamp(s, 0.0, 1.0);
        return t.f[i] + s * (t.f[i + 1] - t.f[i]);
    }

    CasimirKind kind_ = CasimirKind::PolytropicPlusLinear;
    double k_ = 1.0;
    double growth_ = 1.0;
    std::shared_ptr<const Table> table_;
};

/// Lagrange multiplier and cutoff energy, E0 = lambda0 Q'(0).
struct EnergyCutoff {
    double lambda0 = -1.0;
    double E0 = -1.0;
};

inline EnergyCutoff make_cutoff(const CasimirModel& model, double lambda0)
{
    if (!(lambda0 < 0.0))
        throw DomainError("lambda0 must be negative");
    return {lambda0, lambda0 * model.qprime(0.0)};
}

// ---------------------------------------------------------------------------
// validation

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    std::optional<double> first_violation; ///< f at which the check first failed
    std::string detail;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    /// min over grid f > 0 of Q(f) / (f + f^(1+1/k)); the largest C for which
    /// the growth bound holds on this grid.
    double largest_growth_constant = 0.0;

    bool all_passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
    const AssumptionCheck& check(const std::string& name) const
    {
        for (const auto& c : checks)
            if (c.name == name)
                return c;
        throw UsageError("no validation check named " + name);
    }
};

inline ValidationReport validate_model(const CasimirModel& model, std::span<const double> f_grid)
{
    if (f_grid.empty())
        throw UsageError("validate_model: empty f grid");
    for (std::size_t i = 0; i < f_grid.size(); ++i) {
        if (f_grid[i] < 0.0)
            throw UsageError("validate_model: f grid must be nonnegative");
        if (i > 0 && !(f_grid[i] > f_grid[i - 1]))
            throw UsageError("validate_model: f grid must be strictly increasing");
    }

    ValidationReport rep;
    std::vector<double> q(f_grid.size());
    for (std::size_t i = 0; i < f_grid.size(); ++i)
        q[i] = model.q(f_grid[i]);

    AssumptionCheck nonneg{"nonnegative"};
    for (std::size_t i = 0; i < q.size(); ++i)
        if (!(q[i] >= 0.0)) {
            nonneg.passed = false;
            nonneg.first_violation = f_grid[i];
            nonneg.detail = "Q(f) = " + std::to_string(q[i]);
            break;
        }
    rep.checks.push_back(nonneg);

    AssumptionCheck zero{"zero_at_origin"};
    const double q0 = model.q(0.0);
    if (q0 != 0.0) {
        zero.passed = false;
        zero.first_violation = 0.0;
        zero.detail = "Q(0) = " + std::to_string(q0);
    }
    rep.checks.push_back(zero);

    // Convexity: secant slopes between consecutive samples are nondecreasing.
    AssumptionCheck convex{"convexity"};
    for (std::size_t i = 0; i + 2 < f_grid.size(); ++i) {
        const double s1 = (q[i + 1] - q[i]) / (f_grid[i + 1] - f_grid[i]);
        const double s2 = (q[i + 2] - q[i + 1]) / (f_grid[i + 2] - f_grid[i + 1]);
        if (s2 < s1 - 1e-12 * std::max({1.0, std::abs(s1), std::abs(s2)})) {
            convex.passed = false;
            convex.first_violation = f_grid[i + 1];
            convex.detail = "secant slope drops from " + std::to_string(s1) + " to " + std::to_string(s2);
            break;
        }
    }
    rep.checks.push_back(convex);

    AssumptionCheck growth{"growth"};
    double cmax = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f_grid.size(); ++i) {
        const double f = f_grid[i];
        if (f <= 0.0)
            continue;
        cmax = std::min(cmax, q[i] / (f + std::pow(f, 1.0 + 1.0 / model.k())));
    }
    rep.largest_growth_constant = std::isfinite(cmax) ? cmax : 0.0;
    if (model.kind() == CasimirKind::PlummerPower) {
        growth.detail = "exempt (limiting case Q = f^(9/7))";
    } else {
        for (std::size_t i = 0; i < f_grid.size(); ++i) {
            const double f = f_grid[i];
            const double bound = model.growth_constant() * (f + std::pow(f, 1.0 + 1.0 / model.k()));
            if (q[i] < bound * (1.0 - 1e-14)) {
                growth.passed = false;
                growth.first_violation = f;
                growth.detail = "Q(f) below C (f + f^(1+1/k)); largest admissible C on grid is " +
                                std::to_string(rep.largest_growth_constant);
                break;
            }
        }
    }
    rep.checks.push_back(growth);
    return rep;
}

// ---------------------------------------------------------------------------
// inversion of lambda0 Q'(f) = E

struct BisectionOptions {
    double rel_tol = 1e-12;
    int max_iter = 200;
};

/// phi(E) = inf{f >= 0 : Q'(f) = E / lambda0} by bisection on the monotone Q'.
/// Returns 0 for E >= E0 and the left end of any flat segment of Q'.
inline double invert_qprime(const CasimirModel& model, const EnergyCutoff& cutoff, double E,
                            const BisectionOptions& opt = {})
{
    if (!(cutoff.lambda0 < 0.0))
        throw DomainError("invert_qprime: lambda0 must be negative");
    if (E >= cutoff.E0)
        return 0.0;
    const double eta = E / cutoff.lambda0;
    if (model.qprime(0.0) >= eta)
        return 0.0;
    if (!(eta < model.qprime_sup()))
        throw RangeError("invert_qprime: E / lambda0 = " + std::to_string(eta) +
                         " exceeds the range of Q'");
    double lo = 0.0;
    double hi = 1.0;
    int guard = 0;
    while (model.qprime(hi) < eta) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 2000)
            throw RangeError("invert_qprime: could not bracket E / lambda0");
    }
    // invariant: Q'(lo) < eta <= Q'(hi)
    for (int it = 0; it < opt.max_iter; ++it) {
        if (hi - lo <= opt.rel_tol * hi)
            break;
        const double mid = 0.5 * (lo + hi);
        if (model.qprime(mid) < eta)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

/// phi at depth x = E0 - E below the cutoff, using the closed-form inverse
/// when the model provides one.
inline double phi_of_depth(const CasimirModel& model, const EnergyCutoff& cutoff, double x)
{
    if (!(x > 0.0))
        return 0.0;
    if (auto closed = model.qprime_inverse_excess(x / -cutoff.lambda0))
        return *closed;
    return invert_qprime(model, cutoff, cutoff.E0 - x);
}

inline double phi(const CasimirModel& model, const EnergyCutoff& cutoff, double E)
{
    return phi_of_depth(model, cutoff, cutoff.E0 - E);
}

// ---------------------------------------------------------------------------
// velocity-space reductions

/// Moments of f0 = phi(E) over velocity space at potential value u.
enum class VelocityMoment {
    Density,  ///< int phi dv = h_phi(u)
    Kinetic,  ///< int |v|^2/2 phi dv
    Casimir,  ///< int Q(phi) dv
    QprimeF,  ///< int Q'(phi) phi dv
};

namespace detail {
inline double moment_weight(const CasimirModel& model, VelocityMoment m, double f)
{
    switch (m) {
    case VelocityMoment::Density: return f;
    case VelocityMoment::Kinetic: return f;
    case VelocityMoment::Casimir: return model.q(f);
    case VelocityMoment::QprimeF: return model.qprime(f) * f;
    }
    return 0.0;
}
} // namespace detail

/// 4 pi sqrt(2) int_u^E0 G(phi(E)) (E-u)^p dE with p = 3/2 for the kinetic
/// moment and 1/2 otherwise, as a function of the depth psi = E0 - u.
/// Exactly zero for psi <= 0.
///
/// The interval is split at its midpoint; E = u + s^2 removes the (E-u)^(1/2)
/// endpoint behaviour and E = E0 - t^4 smooths the (E0-E)^k behaviour of phi
/// at the cutoff, so both halves suit Gauss-Kronrod refinement.
inline QuadratureResult velocity_moment_at_depth(const CasimirModel& model, const EnergyCutoff& cutoff, double psi,
                                                 VelocityMoment moment, const QuadratureOptions& opt = {})
{
    if (!(cutoff.lambda0 < 0.0))
        throw DomainError("velocity_moment: lambda0 must be negative");
    if (!(psi > 0.0))
        return {};
    const double c = 4.0 * std::numbers::pi * std::numbers::sqrt2;
    const bool kinetic = moment == VelocityMoment::Kinetic;
    const double half = 0.5 * psi;

    auto lower = [&](double s) {
        const double g = detail::moment_weight(model, moment, phi_of_depth(model, cutoff, psi - s * s));
        return 2.0 * g * (kinetic ? s * s * s * s : s * s);
    };
    auto upper = [&](double t) {
        const double t3 = t * t * t;
        const double g = detail::moment_weight(model, moment, phi_of_depth(model, cutoff, t3 * t));
        const double x = psi - t3 * t;
        return 4.0 * t3 * g * (kinetic ? x * std::sqrt(x) : std::sqrt(x));
    };
    // a tabulated Q' is only piecewise smooth, so phi has kinks at the nodes
    QuadratureOptions o = opt;
    if (model.kind() == CasimirKind::Tabulated)
        o.rel_tol = std::max(o.rel_tol, 1e-6);
    const auto a = integrate_adaptive(lower, 0.0, std::sqrt(half), o);
    const auto b = integrate_adaptive(upper, 0.0, std::sqrt(std::sqrt(half)), o);
    return {c * (a.value + b.value), c * (a.error + b.error)};
}

inline QuadratureResult velocity_moment(const CasimirModel& model, const EnergyCutoff& cutoff, double u,
                                        VelocityMoment moment, const QuadratureOptions& opt = {})
{
    return velocity_moment_at_depth(model, cutoff, cutoff.E0 - u, moment, opt);
}

inline double density_of_potential(const CasimirModel& model, const EnergyCutoff& cutoff, double u,
                                   const QuadratureOptions& opt = {})
{
    return velocity_moment(model, cutoff, u, VelocityMoment::Density, opt).value;
}

inline double kinetic_density_of_potential(const CasimirModel& model, const EnergyCutoff& cutoff, double u,
                                           const QuadratureOptions& opt = {})
{
    return velocity_moment(model, cutoff, u, VelocityMoment::Kinetic, opt).value;
}

inline double casimir_density_of_potential(const CasimirModel& model, const EnergyCutoff& cutoff, double u,
                                           const QuadratureOptions& opt = {})
{
    return velocity_moment(model, cutoff, u, VelocityMoment::Casimir, opt).value;
}

/// max over the sampled u of h_phi(u) / (1 + (E0 - u)^(k + 3/2)): the smallest
/// constant making the polynomial growth bound hold on the samples.
inline double density_growth_constant(const CasimirModel& model, const EnergyCutoff& cutoff,
                                      std::span<const double> u_samples)
{
    double c = 0.0;
    const double n = model.k() + 1.5;
    for (double u : u_samples) {
        if (u >= cutoff.E0)
            continue;
        c = std::max(c, density_of_potential(model, cutoff, u) / (1.0 + std::pow(cutoff.E0 - u, n)));
    }
    return c;
}

/// The four velocity moments tabulated against depth psi = E0 - u on a
/// log-uniform grid and interpolated by cubic splines in (ln psi, ln value).
/// Below the first node the moments continue as power laws; above the last
/// node they fall back to direct quadrature.
class DensityTable {
public:
    DensityTable(CasimirModel model, EnergyCutoff cutoff, double depth_max, std::size_t nodes = 900,
                 double dynamic_range = 1e10)
        : model_(std::move(model)), cutoff_(cutoff), depth_max_(depth_max)
    {
        if (!(depth_max > 0.0) || nodes < 8)
            throw UsageError("DensityTable: need depth_max > 0 and at least 8 nodes");
        log_lo_ = std::log(depth_max / dynamic_range);
        step_ = (std::log(depth_max) - log_lo_) / static_cast<double>(nodes - 1);
        std::array<std::vector<double>, 4> logs;
        for (auto& v : logs)
            v.resize(nodes);
        for (std::size_t i = 0; i < nodes; ++i) {
            const double psi = std::exp(log_lo_ + step_ * static_cast<double>(i));
            for (int m = 0; m < 4; ++m) {
                const double val = velocity_moment_at_depth(model_, cutoff_, psi, static_cast<VelocityMoment>(m)).value;
                if (!(val > 0.0))
                    throw NumericalError("DensityTable: nonpositive moment at depth " + std::to_string(psi));
                logs[m][i] = std::log(val);
            }
        }
        for (int m = 0; m < 4; ++m) {
            splines_[m] = Spline(logs[m].data(), nodes, log_lo_, step_);
            lo_value_[m] = logs[m].front();
            lo_slope_[m] = (logs[m][1] - logs[m][0]) / step_;
        }
    }

    const CasimirModel& model() const noexcept { return model_; }
    const EnergyCutoff& cutoff() const noexcept { return cutoff_; }
    double depth_max() const noexcept { return depth_max_; }

    double operator()(VelocityMoment m, double depth) const
    {
        if (!(depth > 0.0))
            return 0.0;
        const double x = std::log(depth);
        const int idx = static_cast<int>(m);
        if (x < log_lo_)
            return std::exp(lo_value_[idx] + lo_slope_[idx] * (x - log_lo_));
        if (depth > depth_max_)
            return velocity_moment_at_depth(model_, cutoff_, depth, m).value;
        return std::exp(splines_[idx](x));
    }

    double density(double depth) const { return (*this)(VelocityMoment::Density, depth); }
    double kinetic(double depth) const { return (*this)(VelocityMoment::Kinetic, depth); }
    double casimir(double depth) const { return (*this)(VelocityMoment::Casimir, depth); }
    double qprime_f(double depth) const { return (*this)(VelocityMoment::QprimeF, depth); }

private:
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    CasimirModel model_;
    EnergyCutoff cutoff_;
    double depth_max_;
    double log_lo_ = 0.0;
    double step_ = 0.0;
    std::array<Spline, 4> splines_;
    std::array<double, 4> lo_value_{};
    std::array<double, 4> lo_slope_{};
};

} // namespace galstab
