#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "galstab/casimir.hpp"

using namespace galstab;

namespace {

double beta(double a, double b) { return std::tgamma(a) * std::tgamma(b) / std::tgamma(a + b); }

// plain Monte Carlo of int G(phi(|v|^2/2 + u)) d^3v over the cube enclosing the
// escape ball
template <class G>
double mc_velocity_integral(const CasimirModel& m, const EnergyCutoff& c, double u, G&& g, std::size_t n,
                            std::uint64_t seed)
{
    const double vmax = std::sqrt(2.0 * (c.E0 - u));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-vmax, vmax);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = U(rng), b = U(rng), d = U(rng);
        const double v2 = a * a + b * b + d * d;
        sum += g(phi(m, c, 0.5 * v2 + u), v2);
    }
    return sum / static_cast<double>(n) * std::pow(2.0 * vmax, 3);
}

} // namespace

TEST(Casimir, ValidateSpecGrids)
{
    const std::vector<double> g1{0.0, 0.5, 1.0, 10.0};
    EXPECT_TRUE(validate_model(CasimirModel::polytropic_plus_linear(1.0), g1).all_passed());
    const std::vector<double> g2{0.0, 0.5, 1.0, 2.0};
    EXPECT_TRUE(validate_model(CasimirModel::pure_jump(), g2).all_passed());
}

TEST(Casimir, ValidateFlagsInjectedNegativeValue)
{
    // a convex-looking table whose value at f = 1 is pushed below zero
    const auto m = CasimirModel::tabulated({0.5, 1.0, 2.0, 4.0}, {0.2, -0.1, 1.5, 6.0}, 1.0, 0.01);
    const std::vector<double> g{0.0, 0.5, 1.0, 2.0};
    const auto rep = validate_model(m, g);
    const auto& c = rep.check("nonnegative");
    EXPECT_FALSE(c.passed);
    ASSERT_TRUE(c.first_violation.has_value());
    EXPECT_DOUBLE_EQ(*c.first_violation, 1.0);
}

TEST(Casimir, ValidateEmptyGridIsUsageError)
{
    EXPECT_THROW(validate_model(CasimirModel::pure_jump(), std::vector<double>{}), UsageError);
}

TEST(Casimir, GrowthReportsLargestConstant)
{
    const auto m = CasimirModel::polytropic_plus_linear(1.5, 2.0);
    const std::vector<double> g{0.1, 1.0, 10.0};
    const auto rep = validate_model(m, g);
    EXPECT_FALSE(rep.check("growth").passed);
    EXPECT_NEAR(rep.largest_growth_constant, 1.0, 1e-14);
}

TEST(Casimir, RejectsExponentOutsideRange)
{
    EXPECT_THROW(CasimirModel::polytropic_plus_linear(4.0), DomainError);
    EXPECT_THROW(CasimirModel::polytropic_plus_linear(0.0), DomainError);
    EXPECT_THROW(CasimirModel::polytropic_plus_linear(3.5), DomainError);
}

TEST(Casimir, DerivativesMatchFiniteDifferences)
{
    const std::vector<CasimirModel> models{CasimirModel::polytropic_plus_linear(0.7),
                                           CasimirModel::polytropic_plus_linear(2.5), CasimirModel::plummer_power()};
    for (const auto& m : models)
        for (double f : {0.05, 0.3, 1.7, 6.0}) {
            const double h = 1e-5 * f;
            EXPECT_NEAR(m.qprime(f), (m.q(f + h) - m.q(f - h)) / (2 * h), 1e-7 * m.qprime(f));
            EXPECT_NEAR(m.qsecond(f), (m.qprime(f + h) - m.qprime(f - h)) / (2 * h), 1e-6 * m.qsecond(f));
        }
}

TEST(Casimir, InvertQprimeSpecExamples)
{
    const auto poly = CasimirModel::polytropic_plus_linear(1.0);
    const auto c = make_cutoff(poly, -1.0);
    EXPECT_DOUBLE_EQ(c.E0, -1.0);
    EXPECT_NEAR(invert_qprime(poly, c, -3.0), 1.0, 1e-12);
    EXPECT_EQ(invert_qprime(poly, c, -1.0), 0.0);

    const auto jump = CasimirModel::pure_jump();
    const auto cj = make_cutoff(jump, -0.8);
    EXPECT_DOUBLE_EQ(cj.E0, -0.8);
    for (double E : {-0.81, -1.0, -3.0, -20.0}) {
        EXPECT_NEAR(invert_qprime(jump, cj, E), E / cj.E0, 1e-12 * E / cj.E0);
        EXPECT_GT(invert_qprime(jump, cj, E), 1.0);
    }
    EXPECT_EQ(invert_qprime(jump, cj, -0.8), 0.0);
    EXPECT_EQ(invert_qprime(jump, cj, -0.1), 0.0);

    const auto pl = CasimirModel::plummer_power();
    const auto cp = make_cutoff(pl, -1.0);
    EXPECT_EQ(cp.E0, 0.0);
    EXPECT_NEAR(invert_qprime(pl, cp, -1.0), std::pow(7.0 / 9.0, 3.5), 1e-12);
}

TEST(Casimir, InvertQprimeDomainErrors)
{
    const auto poly = CasimirModel::polytropic_plus_linear(1.0);
    EXPECT_THROW(invert_qprime(poly, {1.0, 1.0}, -3.0), DomainError);
    const auto tab = CasimirModel::tabulated({0.5, 1.0, 2.0}, {0.5, 1.5, 4.0}, 1.0, 0.1);
    const auto c = make_cutoff(tab, -1.0);
    // Q' is bounded by the last secant slope, so deep energies are out of range
    EXPECT_THROW(invert_qprime(tab, c, -100.0), RangeError);
}

TEST(Casimir, ClosedFormInverseAgreesWithBisection)
{
    const std::vector<CasimirModel> models{CasimirModel::polytropic_plus_linear(0.5),
                                           CasimirModel::polytropic_plus_linear(3.0), CasimirModel::pure_jump(),
                                           CasimirModel::plummer_power()};
    for (const auto& m : models) {
        const auto c = make_cutoff(m, -1.3);
        for (double x : {1e-3, 0.2, 1.0, 7.5}) {
            const double E = c.E0 - x;
            EXPECT_NEAR(phi(m, c, E), invert_qprime(m, c, E), 1e-11 * invert_qprime(m, c, E)) << m.name();
        }
    }
}

TEST(Casimir, PhiInvertsEulerLagrange)
{
    const auto m = CasimirModel::polytropic_plus_linear(1.7);
    const auto c = make_cutoff(m, -0.6);
    for (double f : {1e-4, 0.1, 1.0, 30.0})
        EXPECT_NEAR(phi(m, c, c.lambda0 * m.qprime(f)), f, 1e-11 * f);
}

TEST(Casimir, PhiNonincreasing)
{
    const auto m = CasimirModel::pure_jump();
    const auto c = make_cutoff(m, -1.0);
    double prev = phi(m, c, -50.0);
    for (double E = -50.0; E < 0.5; E += 0.01) {
        const double v = phi(m, c, E);
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(Casimir, DensityVanishesAtCutoff)
{
    for (const auto& m : {CasimirModel::polytropic_plus_linear(1.0), CasimirModel::pure_jump()}) {
        const auto c = make_cutoff(m, -1.0);
        EXPECT_EQ(density_of_potential(m, c, c.E0), 0.0);
        EXPECT_EQ(kinetic_density_of_potential(m, c, c.E0), 0.0);
        EXPECT_EQ(casimir_density_of_potential(m, c, c.E0), 0.0);
        EXPECT_EQ(density_of_potential(m, c, c.E0 + 1.0), 0.0);
    }
}

TEST(Casimir, PurePolytropeBetaClosedForms)
{
    // |lambda0| = k/(k+1) makes phi(E) = (E0 - E)^k exactly
    for (double k : {0.5, 1.0, 2.0, 3.0}) {
        const auto m = CasimirModel::polytropic_plus_linear(k);
        const auto c = make_cutoff(m, -k / (k + 1.0));
        for (double psi : {1.0, 0.01, 25.0}) {
            const double u = c.E0 - psi;
            const double pre = 4.0 * std::numbers::pi * std::numbers::sqrt2;
            const double rho = pre * beta(k + 1.0, 1.5) * std::pow(psi, k + 1.5);
            const double kin = pre * beta(k + 1.0, 2.5) * std::pow(psi, k + 2.5);
            EXPECT_NEAR(density_of_potential(m, c, u), rho, 1e-8 * rho) << "k=" << k;
            EXPECT_NEAR(kinetic_density_of_potential(m, c, u), kin, 1e-8 * kin) << "k=" << k;
        }
    }
}

TEST(Casimir, MonteCarloVelocityOracle)
{
    // k = 1, phi = E0 - E; u = E0 - 1
    const auto m = CasimirModel::polytropic_plus_linear(1.0);
    const auto c = make_cutoff(m, -0.5);
    const double u = c.E0 - 1.0;
    const std::size_t n = 4000000;
    const double rho = mc_velocity_integral(m, c, u, [](double f, double) { return f; }, n, 11);
    const double kin = mc_velocity_integral(m, c, u, [](double f, double v2) { return 0.5 * v2 * f; }, n, 12);
    const double cas = mc_velocity_integral(m, c, u, [&](double f, double) { return m.q(f); }, n, 13);
    EXPECT_NEAR(density_of_potential(m, c, u) / rho, 1.0, 3e-3);
    EXPECT_NEAR(kinetic_density_of_potential(m, c, u) / kin, 1.0, 3e-3);
    EXPECT_NEAR(casimir_density_of_potential(m, c, u) / cas, 1.0, 3e-3);
}

TEST(Casimir, CasimirDensityAgainstMonteCarloTight)
{
    // lambda0 = -1: phi = (E0 - E) / 2 on the support
    const auto m = CasimirModel::polytropic_plus_linear(1.0);
    const auto c = make_cutoff(m, -1.0);
    const double u = c.E0 - 1.0;
    // sample the escape ball uniformly by radius^3 to reduce variance
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double vmax = std::sqrt(2.0);
    const std::size_t n = 4000000;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = vmax * std::cbrt(U(rng));
        s += m.q(phi(m, c, 0.5 * v * v + u));
    }
    const double mc = s / static_cast<double>(n) * (4.0 / 3.0) * std::numbers::pi * vmax * vmax * vmax;
    EXPECT_NEAR(casimir_density_of_potential(m, c, u) / mc, 1.0, 1e-3);
}

TEST(Casimir, JumpDensityAgainstDirectQuadrature)
{
    const auto m = CasimirModel::pure_jump();
    const double E0 = -0.7;
    const auto c = make_cutoff(m, E0);
    const double u = 2.0 * E0;
    // composite Simpson in s with E = u + s^2 on [u, E0]
    const std::size_t n = 20000;
    const double smax = std::sqrt(E0 - u);
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double s = smax * static_cast<double>(i) / n;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double E = u + s * s;
        acc += w * (E / E0) * s * 2.0 * s;
    }
    const double oracle = 4.0 * std::numbers::pi * std::numbers::sqrt2 * acc * smax / (3.0 * n);
    EXPECT_NEAR(density_of_potential(m, c, u), oracle, 1e-10 * oracle);
}

TEST(Casimir, DensityPositiveAndDecreasing)
{
    const auto m = CasimirModel::polytropic_plus_linear(2.0);
    const auto c = make_cutoff(m, -1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double u = c.E0 - 20.0; u < c.E0; u += 0.25) {
        const double h = density_of_potential(m, c, u);
        EXPECT_GT(h, 0.0);
        EXPECT_LT(h, prev);
        prev = h;
    }
}

TEST(Casimir, GrowthBoundOnSamples)
{
    const auto m = CasimirModel::polytropic_plus_linear(1.0);
    const auto c = make_cutoff(m, -1.0);
    std::vector<double> us;
    for (double x = 0.01; x < 100.0; x *= 1.5)
        us.push_back(c.E0 - x);
    const double C = density_growth_constant(m, c, us);
    EXPECT_GT(C, 0.0);
    EXPECT_TRUE(std::isfinite(C));
    for (double u : us)
        EXPECT_LE(density_of_potential(m, c, u), C * (1.0 + std::pow(c.E0 - u, 2.5)) * (1 + 1e-12));
}

TEST(Casimir, QuadratureRefinementWithinErrorEstimate)
{
    const auto m = CasimirModel::polytropic_plus_linear(0.5);
    const auto c = make_cutoff(m, -1.0);
    QuadratureOptions loose;
    loose.rel_tol = 1e-8;
    QuadratureOptions tight;
    tight.rel_tol = 1e-13;
    for (double psi : {0.1, 2.0, 40.0}) {
        const auto a = velocity_moment_at_depth(m, c, psi, VelocityMoment::Density, loose);
        const auto b = velocity_moment_at_depth(m, c, psi, VelocityMoment::Density, tight);
        EXPECT_LE(std::abs(a.value - b.value), std::max(a.error, 1e-15 * a.value));
    }
}

TEST(Casimir, TableMatchesDirectQuadrature)
{
    const auto m = CasimirModel::polytropic_plus_linear(1.0);
    const auto c = make_cutoff(m, -1.0);
    const DensityTable t(m, c, 100.0);
    for (double psi : {1e-3, 0.37, 1.0, 55.0, 150.0})
        for (auto mo : {VelocityMoment::Density, VelocityMoment::Kinetic, VelocityMoment::Casimir}) {
            const double d = velocity_moment_at_depth(m, c, psi, mo).value;
            EXPECT_NEAR(t(mo, psi), d, 1e-10 * d);
        }
}

TEST(Casimir, TabulatedModelReproducesAnalyticQ)
{
    std::vector<double> f, q;
    for (double x = 1e-3; x < 50.0; x *= 1.2) {
        f.push_back(x);
        q.push_back(x + x * x);
    }
    const auto tab = CasimirModel::tabulated(f, q, 1.0, 1.0);
    const auto ref = CasimirModel::polytropic_plus_linear(1.0);
    for (double x : {0.01, 0.5, 3.0, 20.0})
        EXPECT_NEAR(tab.q(x), ref.q(x), 5e-3 * ref.q(x));
    const auto c = make_cutoff(tab, -1.0);
    const auto cr = make_cutoff(ref, -1.0);
    EXPECT_NEAR(density_of_potential(tab, c, -3.0), density_of_potential(ref, cr, -3.0),
                1e-2 * density_of_potential(ref, cr, -3.0));
}
