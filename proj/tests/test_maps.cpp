#include <gtest/gtest.h>

#include <cascade/maps.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace cascade;

namespace
{

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b)
{
    Vec v(2);
    v << a, b;
    return v;
}

/// Central differences with a fixed small step, independent of the library's
/// own finite-difference code.
Mat oracle_jacobian(const MapDefinition& m, double lam, const Vec& x)
{
    const int n = m.dimension;
    Mat j(n, n);
    for (int i = 0; i < n; ++i)
    {
        const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
        Vec a = x, b = x;
        a[i] += h;
        b[i] -= h;
        j.col(i) = (m.eval(lam, a) - m.eval(lam, b)) / (2.0 * h);
    }
    return j;
}

double relative_error(const Mat& a, const Mat& b)
{
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

} // namespace

TEST(Maps, LogisticFixedPoint)
{
    const auto m = builtin_map("logistic");
    EXPECT_DOUBLE_EQ(eval_map(m, 2.0, v1(0.5))[0], 0.5);
}

TEST(Maps, QuadraticSaddleNodePoint)
{
    const auto m = builtin_map("quadratic");
    EXPECT_DOUBLE_EQ(eval_map(m, -0.25, v1(-0.5))[0], -0.5);
    EXPECT_DOUBLE_EQ(eval_jacobian(m, -0.25, v1(-0.5))(0, 0), 1.0);
}

TEST(Maps, TentValues)
{
    const auto m = builtin_map("tent");
    EXPECT_DOUBLE_EQ(eval_map(m, 0.0, v1(2.0 / 7.0))[0], 4.0 / 7.0);
    EXPECT_DOUBLE_EQ(eval_map(m, 0.0, v1(6.0 / 7.0))[0], 2.0 / 7.0);
}

TEST(Maps, LogisticJacobianAtPeriodDoubling)
{
    const auto m = builtin_map("logistic");
    EXPECT_NEAR(eval_jacobian(m, 3.0, v1(2.0 / 3.0))(0, 0), -1.0, 1e-15);
}

TEST(Maps, CoupledDecoupledJacobianIsDiagonal)
{
    const auto m = builtin_map("coupled_quadratic", {{"N", "2"}, {"c", "0"}});
    const Mat j = eval_jacobian(m, 1.0, v2(0.3, -0.7));
    EXPECT_DOUBLE_EQ(j(0, 0), -0.6);
    EXPECT_DOUBLE_EQ(j(1, 1), 1.4);
    EXPECT_DOUBLE_EQ(j(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(j(1, 0), 0.0);
}

TEST(Maps, CoupledFormula)
{
    const auto m = builtin_map("coupled_quadratic", {{"N", "2"}, {"c", "0.1"}});
    ASSERT_EQ(m.dimension, 2);
    const double a = 0.7, x = 0.2, y = -0.4;
    const Vec f = eval_map(m, a, v2(x, y));
    EXPECT_DOUBLE_EQ(f[0], a - x * x + 0.1 * y);
    EXPECT_DOUBLE_EQ(f[1], 1.1 * a - y * y + 0.1 * x);
}

TEST(Maps, IkedaOriginFixedAtZero)
{
    const auto m = builtin_map("ikeda");
    const Vec f = eval_map(m, 0.0, v2(0.0, 0.0));
    EXPECT_EQ(f[0], 0.0);
    EXPECT_EQ(f[1], 0.0);
}

TEST(Maps, ModifiedLogisticMaximum)
{
    const auto m = builtin_map("modified_logistic");
    for (double a : {2.9, 3.15, 3.6, 3.9})
    {
        const double h = a * (1.18 + 0.17 * std::cos(2.4 * a));
        EXPECT_NEAR(eval_map(m, a, v1(0.5))[0], h / 4.0, 1e-15);
        EXPECT_LT(eval_map(m, a, v1(0.49))[0], h / 4.0);
        EXPECT_LT(eval_map(m, a, v1(0.51))[0], h / 4.0);
    }
}

TEST(Maps, PulsedRotorFormula)
{
    const auto m = builtin_map("pulsed_rotor");
    const Vec f = eval_map(m, 2.0, v2(1.0, 0.5));
    EXPECT_DOUBLE_EQ(f[0], 1.5);
    EXPECT_DOUBLE_EQ(f[1], 0.25 + 2.0 * std::sin(1.5));
}

TEST(Maps, UnknownNameAndBadOverride)
{
    EXPECT_THROW(builtin_map("henon"), UnknownMap);
    EXPECT_THROW(builtin_map("quadratic", {{"c", "1"}}), BadParameter);
    EXPECT_THROW(builtin_map("coupled_quadratic", {{"N", "0"}}), BadParameter);
    EXPECT_THROW(builtin_map("coupled_quadratic", {{"N", "1.5"}}), BadParameter);
    EXPECT_THROW(builtin_map("coupled_quadratic", {{"c", "abc"}}), BadParameter);
    EXPECT_THROW(builtin_map("perturbed_quadratic", {{"perturbation", "wiggle"}}), BadParameter);
}

TEST(Maps, RegistryCoversAllNames)
{
    EXPECT_EQ(builtin_map_names().size(), 14u);
    for (const auto& n : builtin_map_names()) EXPECT_NO_THROW(builtin_map(n)) << n;
}

TEST(Maps, NonFiniteOutputRaisesOverflow)
{
    const auto m = builtin_map("quadratic");
    EXPECT_THROW(eval_map(m, 0.0, v1(1e200)), NumericalOverflow);
    EXPECT_THROW(eval_map(m, 0.0, v1(std::nan(""))), NumericalOverflow);
    EXPECT_THROW(eval_map(m, 0.0, v2(0.0, 0.0)), BadParameter);
}

TEST(Maps, FiniteDifferenceKind)
{
    MapDefinition m = builtin_map("ikeda");
    m.jacobian = nullptr;
    m.jacobian_kind = JacobianKind::finite_difference;
    const Vec x = v2(0.3, -0.2);
    const Mat fd = eval_jacobian(m, 1.0, x);
    const Mat exact = builtin_map("ikeda").jacobian(1.0, x);
    EXPECT_LT(relative_error(fd, exact), 1e-8);
}

TEST(Maps, Determinism)
{
    for (const auto& n : builtin_map_names())
    {
        const auto m = builtin_map(n);
        Vec x = m.state_hint ? m.state_hint->center() : Vec::Constant(m.dimension, 0.1);
        x.array() += 0.123;
        const double lam = m.param_hint ? 0.5 * (m.param_hint->lo + m.param_hint->hi) : 0.0;
        const Vec a = eval_map(m, lam, x);
        const Vec b = eval_map(m, lam, x);
        EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0) << n;
        const Mat ja = eval_jacobian(m, lam, x);
        const Mat jb = eval_jacobian(m, lam, x);
        EXPECT_EQ((ja - jb).cwiseAbs().maxCoeff(), 0.0) << n;
    }
}

// Jacobian agrees with central differences at 100 random points per map.
TEST(MapsProperty, JacobianMatchesFiniteDifferences)
{
    std::mt19937_64 rng(20261017);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const auto& n : builtin_map_names())
    {
        MapDefinition m = builtin_map(n, n == "duffing_strobe" || n == "pendulum_strobe" ? Params{{"steps", "128"}} : Params{});
        const Interval lam_range = m.param_hint.value_or(Interval{0.0, 1.0});
        Box box = m.state_hint.value_or(Box{Vec::Zero(m.dimension), Vec::Ones(m.dimension)});
        if (n == "duffing_strobe")
        {
            box = make_box({-1.5, -1.5}, {1.5, 1.5});
        }
        const int samples = m.jacobian_kind == JacobianKind::variational ? 20 : 100;
        double worst = 0.0;
        for (int s = 0; s < samples; ++s)
        {
            double lam = lam_range.lo + unit(rng) * lam_range.width();
            if (n == "duffing_strobe") lam = 2.0 * unit(rng);
            Vec x(m.dimension);
            for (int i = 0; i < m.dimension; ++i) x[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
            if (!m.smooth)
            {
                bool near_kink = false;
                for (int i = 0; i < m.dimension; ++i)
                    for (double kink : {0.5, 1.0 / 3.0, 2.0 / 3.0})
                        near_kink = near_kink || std::abs(x[i] - kink) < 1e-4;
                if (near_kink) continue;
            }
            Mat exact;
            try
            {
                exact = eval_jacobian(m, lam, x);
            }
            catch (const TrajectoryEscape&)
            {
                continue;
            }
            worst = std::max(worst, relative_error(exact, oracle_jacobian(m, lam, x)));
        }
        EXPECT_LE(worst, 1e-5) << n;
    }
}

TEST(MapsProperty, ParameterDerivativeMatchesFiniteDifferences)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const auto& n : builtin_map_names())
    {
        MapDefinition m = builtin_map(n, n == "duffing_strobe" || n == "pendulum_strobe" ? Params{{"steps", "128"}} : Params{});
        if (!m.smooth) continue;
        const Interval lam_range = m.param_hint.value_or(Interval{0.0, 1.0});
        for (int s = 0; s < 10; ++s)
        {
            double lam = lam_range.lo + unit(rng) * lam_range.width();
            if (n == "duffing_strobe") lam = 2.0 * unit(rng);
            Vec x = Vec::Constant(m.dimension, 0.3 * unit(rng));
            const double h = 1e-5 * std::max(1.0, std::abs(lam));
            Vec oracle, exact;
            try
            {
                oracle = (m.eval(lam + h, x) - m.eval(lam - h, x)) / (2.0 * h);
                exact = eval_parameter_derivative(m, lam, x);
            }
            catch (const TrajectoryEscape&)
            {
                continue;
            }
            EXPECT_LE((exact - oracle).cwiseAbs().maxCoeff() / std::max(1.0, oracle.cwiseAbs().maxCoeff()), 1e-5) << n;
        }
    }
}

TEST(Ode, PendulumDownEquilibriumAtZeroForcing)
{
    const auto r = stroboscopic_map(pendulum_ode(), 0.0, v2(0.0, 0.0));
    EXPECT_LE(r.state.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Ode, PendulumLiouvilleDeterminant)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lam(0.0, 10.0), th(-3.0, 3.0);
    const double expected = std::exp(-0.6 * std::numbers::pi);
    EXPECT_NEAR(expected, 0.151836, 1e-6);
    for (int i = 0; i < 5; ++i)
    {
        const auto r = stroboscopic_map(pendulum_ode(), lam(rng), v2(th(rng), th(rng)));
        EXPECT_NEAR(r.monodromy.determinant() / expected, 1.0, 1e-6);
    }
}

TEST(Ode, VectorFieldPeriodicInTime)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (const auto& ode : {pendulum_ode(), duffing_ode()})
        for (int i = 0; i < 50; ++i)
        {
            const double lam = 5.0 + u(rng), t = 3.0 * u(rng);
            const Vec x = v2(u(rng), u(rng));
            EXPECT_LE((ode.vector_field(lam, t, x) - ode.vector_field(lam, t + ode.forcing_period, x)).cwiseAbs().maxCoeff(),
                      1e-12);
        }
}

TEST(Ode, StepsBelowMinimumRejected)
{
    EXPECT_THROW(stroboscopic_map(pendulum_ode(), 0.0, v2(0.0, 0.0), IntegratorConfig{32, 1e6}), BadParameter);
    EXPECT_THROW(builtin_map("pendulum_strobe", {{"steps", "10"}}), BadParameter);
}

TEST(Ode, EscapeRaises)
{
    EXPECT_THROW(stroboscopic_map(duffing_ode(), 0.0, v2(50.0, 0.0), IntegratorConfig{512, 1e3}), TrajectoryEscape);
}

// Duffing with zero forcing: the flow equilibria solve u^3 - u + 0.01 = 0 and
// must be fixed points of the time-2pi map.
TEST(Ode, DuffingEquilibriaAreFixedPoints)
{
    // bisection oracle for the root near 1
    double lo = 0.5, hi = 1.5;
    for (int i = 0; i < 200; ++i)
    {
        const double mid = 0.5 * (lo + hi);
        (mid * mid * mid - mid + 0.01 > 0.0 ? hi : lo) = mid;
    }
    const auto m = builtin_map("duffing_strobe");
    const Vec f = eval_map(m, 0.0, v2(lo, 0.0));
    EXPECT_NEAR(f[0], lo, 1e-10);
    EXPECT_NEAR(f[1], 0.0, 1e-10);
}

TEST(Perturbation, BumpZeroesSquareAndRespectsBound)
{
    const auto spec = quadratic_bump(3.0, 2.0);
    const auto m = perturbed_quadratic_map(std::make_shared<const PerturbationSpec>(spec));
    for (double lam : {-3.0, -1.0, 0.0, 2.9})
        for (double x : {-3.0, 0.0, 1.7})
            EXPECT_NEAR(eval_map(m, lam, v1(x))[0], 0.0, 1e-15);
    // untouched outside the support
    EXPECT_DOUBLE_EQ(eval_map(m, 36.1, v1(2.0))[0], 36.1 - 4.0);
    EXPECT_DOUBLE_EQ(eval_map(m, 1.0, v1(5.5))[0], 1.0 - 30.25);
    EXPECT_NO_THROW(validate_perturbation(spec, Interval{-6.0, 40.0}, make_box({-13.0}, {13.0})));
    EXPECT_GT(spec.beta, 1.0);
}

TEST(Perturbation, ViolatedBoundIsRejected)
{
    auto spec = quadratic_sine(0.5);
    spec.beta = 0.1;
    EXPECT_THROW(validate_perturbation(spec, Interval{0.0, 10.0}, make_box({-3.0}, {3.0})), BadParameter);
}

TEST(Perturbation, CubicAsymmetricBound)
{
    const auto spec = cubic_asymmetric(0.2, 0.05);
    EXPECT_NO_THROW(validate_perturbation(spec, Interval{-2.0, 20.0}, make_box({-6.0}, {6.0})));
}

TEST(Perturbation, PlateauDerivative)
{
    const SmoothPlateau psi{3.0, 2.0};
    for (double t : {-4.7, -3.3, 3.1, 3.9, 4.5})
    {
        const double h = 1e-6;
        EXPECT_NEAR(psi.derivative(t), (psi(t + h) - psi(t - h)) / (2 * h), 1e-6);
    }
    EXPECT_EQ(psi(2.99), 1.0);
    EXPECT_EQ(psi(5.01), 0.0);
}
