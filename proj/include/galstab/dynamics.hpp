#pragma once

// Kick-drift-kick integration of the particle characteristics. The radial
// backend moves spherical shells under the exact enclosed-mass field; the 3D
// backend uses softened direct summation.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "galstab/ensemble.hpp"
#include "galstab/errors.hpp"
#include "galstab/functionals.hpp"
#include "galstab/parallel.hpp"
#include "galstab/steadystate.hpp"

namespace galstab {

/// Radial-backend drift. Polar: KDK on (r, w) with the centrifugal term L / r^3
/// in the kick. Planar: the drift moves each shell particle on its straight
/// line in the orbital plane, so the centrifugal motion is exact and the kick
/// carries gravity only.
enum class RadialScheme { Planar, Polar };

inline std::string to_string(RadialScheme s) { return s == RadialScheme::Planar ? "planar" : "polar"; }

inline RadialScheme radial_scheme_from_string(const std::string& s)
{
    if (s == "planar")
        return RadialScheme::Planar;
    if (s == "polar")
        return RadialScheme::Polar;
    throw UsageError("unknown radial scheme '" + s + "' (expected planar or polar)");
}

struct IntegratorConfig {
    double dt = 1e-2;
    double t_end = 1.0;
    /// 3D pair softening; NaN selects 0.01 times the half-mass radius at start.
    double softening = std::numeric_limits<double>::quiet_NaN();
    std::size_t cadence = 20;       ///< monitor every `cadence` steps
    std::size_t max_halvings = 6;   ///< dt-halving retries after a barrier failure
    double barrier_floor = 1e-9;    ///< radius below which an L = 0 orbit is rejected
    std::size_t max_particles_3d = 20000;
    RadialScheme radial_scheme = RadialScheme::Planar;
    /// Non-null: integrate test particles in this profile's fixed potential.
    const SteadyStateProfile* frozen = nullptr;
};

/// 2 pi sqrt(R_h^3 / M).
inline double dynamical_time(const SteadyStateProfile& p)
{
    const double rh = p.half_mass_radius();
    return 2.0 * std::numbers::pi * std::sqrt(rh * rh * rh / p.total_mass);
}

class Integrator {
public:
    Integrator(ParticleEnsemble& e, const IntegratorConfig& cfg) : e_(e), cfg_(cfg)
    {
        e_.check_consistent();
        if (!(cfg.dt > 0.0))
            throw UsageError("integrator: dt must be positive");
        if (e_.backend == Backend::Cartesian3D) {
            if (e_.size() > cfg.max_particles_3d)
                throw UsageError("integrator: 3D backend is limited to " + std::to_string(cfg.max_particles_3d) +
                                 " particles");
            eps_ = std::isnan(cfg.softening) ? default_softening(e_) : cfg.softening;
            if (eps_ < 0.0)
                throw UsageError("integrator: softening must be nonnegative");
        }
        compute_accelerations();
    }

    double softening() const { return eps_; }
    const ParticleEnsemble& ensemble() const { return e_; }

    /// One KDK step of size dt; on an L = 0 barrier failure the step is
    /// repeated as two half steps, up to max_halvings deep.
    void step(double dt) { advance(dt, 0); }
    void step() { step(cfg_.dt); }

    /// Potential energy matching the force law in use.
    double potential_energy() const
    {
        if (cfg_.frozen)
            return parallel_sum(e_.size(), [&](std::size_t i) { return e_.mass_of(i) * cfg_.frozen->U_at(e_.radius_of(i)); });
        if (e_.backend == Backend::Radial)
            return detail::shell_field_energy(e_, order_);
        return detail::pair_energy(e_, eps_);
    }

    double kinetic_energy() const
    {
        return parallel_sum(e_.size(), [&](std::size_t i) { return e_.mass_of(i) * e_.kinetic_of(i); });
    }

    double hamiltonian() const { return kinetic_energy() + potential_energy(); }

private:
    void advance(double dt, std::size_t depth)
    {
        const auto saved = snapshot();
        try {
            kick(0.5 * dt);
            drift(dt);
            compute_accelerations();
            kick(0.5 * dt);
            e_.t += dt;
        } catch (const NumericalError&) {
            restore(saved);
            if (depth >= cfg_.max_halvings)
                throw NumericalError("integrator: L = 0 orbit reached the centre after " +
                                     std::to_string(depth) + " dt halvings");
            advance(0.5 * dt, depth + 1);
            advance(0.5 * dt, depth + 1);
        }
    }

    struct Saved {
        std::vector<double> r, w;
        std::vector<Vec3> x, v;
        std::vector<double> ar;
        std::vector<Vec3> a3;
        std::vector<std::size_t> order;
        double t;
    };
    Saved snapshot() const { return {e_.r, e_.w, e_.x, e_.v, ar_, a3_, order_, e_.t}; }
    void restore(const Saved& s)
    {
        e_.r = s.r;
        e_.w = s.w;
        e_.x = s.x;
        e_.v = s.v;
        ar_ = s.ar;
        a3_ = s.a3;
        order_ = s.order;
        e_.t = s.t;
    }

    void kick(double h)
    {
        if (e_.backend == Backend::Radial) {
            const bool polar = cfg_.radial_scheme == RadialScheme::Polar;
            parallel_for(e_.size(), [&](std::size_t b, std::size_t end) {
                for (std::size_t i = b; i < end; ++i) {
                    const double r = e_.r[i];
                    e_.w[i] += h * (polar ? ar_[i] + e_.L[i] / (r * r * r) : ar_[i]);
                }
            });
        } else {
            parallel_for(e_.size(), [&](std::size_t b, std::size_t end) {
                for (std::size_t i = b; i < end; ++i)
                    for (int k = 0; k < 3; ++k)
                        e_.v[i][k] += h * a3_[i][k];
            });
        }
    }

    void drift(double h)
    {
        if (e_.backend == Backend::Radial && cfg_.radial_scheme == RadialScheme::Polar) {
            std::atomic<bool> barrier{false};
            parallel_for(e_.size(), [&](std::size_t b, std::size_t end) {
                for (std::size_t i = b; i < end; ++i) {
                    e_.r[i] += h * e_.w[i];
                    if (!(e_.r[i] > cfg_.barrier_floor))
                        barrier = true;
                }
            });
            if (barrier)
                throw NumericalError("radial orbit crossed the barrier floor");
        } else if (e_.backend == Backend::Radial) {
            // straight-line motion in the orbital plane from x = (r, 0),
            // v = (w, sqrt(L) / r); L is carried unchanged
            std::atomic<bool> barrier{false};
            parallel_for(e_.size(), [&](std::size_t b, std::size_t end) {
                for (std::size_t i = b; i < end; ++i) {
                    const double r = e_.r[i];
                    const double w = e_.w[i];
                    const double vt = std::sqrt(e_.L[i]) / r;
                    const double x = r + h * w;
                    const double y = h * vt;
                    const double rn = std::hypot(x, y);
                    if (e_.L[i] == 0.0 && rn < cfg_.barrier_floor)
                        barrier = true;
                    e_.r[i] = rn;
                    e_.w[i] = (x * w + y * vt) / rn;
                }
            });
            if (barrier)
                throw NumericalError("radial orbit with L = 0 reached the barrier floor");
        } else {
            parallel_for(e_.size(), [&](std::size_t b, std::size_t end) {
                for (std::size_t i = b; i < end; ++i)
                    for (int k = 0; k < 3; ++k)
                        e_.x[i][k] += h * e_.v[i][k];
            });
        }
    }

    void compute_accelerations()
    {
        const std::size_t n = e_.size();
        if (e_.backend == Backend::Radial) {
            ar_.assign(n, 0.0);
            if (cfg_.frozen) {
                parallel_for(n, [&](std::size_t b, std::size_t end) {
                    for (std::size_t i = b; i < end; ++i)
                        ar_[i] = -cfg_.frozen->M_at(e_.r[i]) / (e_.r[i] * e_.r[i]);
                });
                return;
            }
            const auto& r = e_.r;
            keyed_.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                keyed_[i] = {r[i], i};
            std::sort(keyed_.begin(), keyed_.end());
            order_.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                order_[i] = keyed_[i].second;
            double S = 0.0;
            for (std::size_t j : order_) {
                const double m = e_.mass_of(j);
                ar_[j] = -(S + 0.5 * m) / (r[j] * r[j]);
                S += m;
            }
            return;
        }
        a3_.assign(n, Vec3{0.0, 0.0, 0.0});
        if (cfg_.frozen) {
            parallel_for(n, [&](std::size_t b, std::size_t end) {
                for (std::size_t i = b; i < end; ++i) {
                    const double rr = norm(e_.x[i]);
                    const double c = rr > 0.0 ? -cfg_.frozen->M_at(rr) / (rr * rr * rr) : 0.0;
                    for (int k = 0; k < 3; ++k)
                        a3_[i][k] = c * e_.x[i][k];
                }
            });
            return;
        }
        const double eps2 = eps_ * eps_;
        parallel_for(n, [&](std::size_t b, std::size_t end) {
            for (std::size_t i = b; i < end; ++i) {
                double ax = 0.0, ay = 0.0, az = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i)
                        continue;
                    const double dx = e_.x[j][0] - e_.x[i][0];
                    const double dy = e_.x[j][1] - e_.x[i][1];
                    const double dz = e_.x[j][2] - e_.x[i][2];
                    const double d2 = dx * dx + dy * dy + dz * dz + eps2;
                    const double c = e_.mass_of(j) / (d2 * std::sqrt(d2));
                    ax += c * dx;
                    ay += c * dy;
                    az += c * dz;
                }
                a3_[i] = {ax, ay, az};
            }
        });
    }

    ParticleEnsemble& e_;
    IntegratorConfig cfg_;
    double eps_ = 0.0;
    std::vector<double> ar_;
    std::vector<Vec3> a3_;
    std::vector<std::size_t> order_;
    std::vector<std::pair<double, std::size_t>> keyed_;
};

/// Advances the ensemble to cfg.t_end, calling monitor(ensemble, integrator)
/// at t = 0 and every cadence steps (and at the final step).
template <class Monitor>
void run(ParticleEnsemble& e, const IntegratorConfig& cfg, Monitor&& monitor)
{
    Integrator integ(e, cfg);
    const auto steps = static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
    const std::size_t cadence = std::max<std::size_t>(1, cfg.cadence);
    monitor(static_cast<const ParticleEnsemble&>(e), static_cast<const Integrator&>(integ));
    for (std::size_t s = 1; s <= steps; ++s) {
        integ.step();
        if (s % cadence == 0 || s == steps)
            monitor(static_cast<const ParticleEnsemble&>(e), static_cast<const Integrator&>(integ));
    }
}

/// Reverses all velocities (for reversibility checks).
inline void reverse_velocities(ParticleEnsemble& e)
{
    for (auto& w : e.w)
        w = -w;
    for (auto& v : e.v)
        for (auto& c : v)
            c = -c;
}

} // namespace galstab
