#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "galstab/errors.hpp"

namespace galstab {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-12;
    unsigned max_depth = 20;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
};

/// Adaptive Gauss-Kronrod (G7/K15) on [a, b]. Throws NumericalError carrying the
/// achieved error estimate if neither tolerance is met.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, const QuadratureOptions& opt = {})
{
    if (!(b > a))
        return {};
    // Boost compares the local error on the reference interval with the
    // physical-length estimate, so short intervals over-refine; integrate on
    // [0, 1] instead.
    const double len = b - a;
    auto g = [&](double s) { return len * f(a + len * s); };
    double err = 0.0;
    double l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        g, 0.0, 1.0, opt.max_depth, opt.rel_tol, &err, &l1);
    if (!std::isfinite(v) || err > std::max(opt.abs_tol, 10.0 * opt.rel_tol * l1)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "error estimate %.3g, |f| integral %.3g", err, l1);
        throw NumericalError(std::string("adaptive quadrature did not converge (") + buf + ")", err);
    }
    return {v, err};
}

/// Geometric grid of n radii from r_min to r_max inclusive.
inline std::vector<double> geometric_grid(double r_min, double r_max, std::size_t n)
{
    if (!(r_min > 0.0) || !(r_max > r_min) || n < 2)
        throw UsageError("geometric_grid: need 0 < r_min < r_max and n >= 2");
    std::vector<double> r(n);
    const double h = std::log(r_max / r_min) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = r_min * std::exp(h * static_cast<double>(i));
    r.back() = r_max;
    return r;
}

/// Geometric grid with n points whose log spacing puts `node` exactly on a grid
/// point and extends to at least `r_max`.
inline std::vector<double> geometric_grid_through(double r_min, double node, double r_max, std::size_t n)
{
    if (!(r_min > 0.0) || !(node > r_min) || !(r_max >= node) || n < 3)
        throw UsageError("geometric_grid_through: need 0 < r_min < node <= r_max and n >= 3");
    const double h0 = std::log(r_max / r_min) / static_cast<double>(n - 1);
    auto inner = static_cast<std::size_t>(std::llround(std::log(node / r_min) / h0));
    inner = std::clamp<std::size_t>(inner, 1, n - 1);
    const double h = std::log(node / r_min) / static_cast<double>(inner);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = node * std::exp(h * (static_cast<double>(i) - static_cast<double>(inner)));
    r[inner] = node;
    return r;
}

inline bool is_log_uniform(std::span<const double> r, double rel = 1e-9)
{
    if (r.size() < 3)
        return true;
    const double h = std::log(r[1] / r[0]);
    for (std::size_t i = 1; i + 1 < r.size(); ++i)
        if (std::abs(std::log(r[i + 1] / r[i]) - h) > rel * std::abs(h) + 1e-14)
            return false;
    return true;
}

/// Result of integrating tabulated g(r) over (0, inf).
struct RadialIntegral {
    double value = 0.0; ///< grid part + inner + tail
    double inner = 0.0; ///< power-law estimate of the piece below r.front()
    double tail = 0.0;  ///< power-law estimate of the piece beyond r.back()
    bool tail_converged = true;
};

inline double trapezoid(std::span<const double> x, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        s += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    return s;
}

/// Integral of g(r) dr over the grid. Uses Simpson's rule in ln r on
/// log-uniform grids (3/8 rule on the last panel if the count is odd), the
/// trapezoid rule otherwise. Power-law end corrections estimate the pieces
/// outside the grid.
inline RadialIntegral integrate_radial(std::span<const double> r, std::span<const double> g)
{
    RadialIntegral out;
    const std::size_t n = r.size();
    if (n < 2)
        return out;
    if (is_log_uniform(r)) {
        const double h = std::log(r[1] / r[0]);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i)
            y[i] = g[i] * r[i];
        const std::size_t intervals = n - 1;
        double s = 0.0;
        std::size_t simpson_end = intervals;
        if (intervals == 1) {
            s = 0.5 * h * (y[0] + y[1]);
            simpson_end = 0;
        } else if (intervals % 2 == 1) {
            simpson_end = intervals - 3;
            s += 3.0 * h / 8.0 * (y[simpson_end] + 3.0 * y[simpson_end + 1] + 3.0 * y[simpson_end + 2] + y[simpson_end + 3]);
        }
        for (std::size_t i = 0; i + 2 <= simpson_end; i += 2)
            s += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
        out.value = s;
    } else {
        out.value = trapezoid(r, g);
    }

    // below r[0]: g ~ r^p
    if (g[0] != 0.0 && g[1] != 0.0 && (g[0] > 0) == (g[1] > 0)) {
        const double p = std::log(g[1] / g[0]) / std::log(r[1] / r[0]);
        if (p > -1.0)
            out.inner = g[0] * r[0] / (p + 1.0);
    }
    // beyond r[n-1]: g ~ r^-p
    const double gl = g[n - 1];
    const double gp = g[n - 2];
    if (gl != 0.0) {
        if (gp != 0.0 && (gl > 0) == (gp > 0)) {
            const double p = -std::log(gl / gp) / std::log(r[n - 1] / r[n - 2]);
            if (p > 1.0)
                out.tail = gl * r[n - 1] / (p - 1.0);
            else
                out.tail_converged = false;
        } else {
            out.tail_converged = false;
        }
    }
    out.value += out.inner + out.tail;
    return out;
}

} // namespace galstab
