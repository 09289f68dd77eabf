#include <gtest/gtest.h>

#include <cascade/orbits.hpp>

#include <cmath>
#include <random>
#include <set>

using namespace cascade;

namespace
{

Vec v1(double a) { return Vec::Constant(1, a); }

PeriodicOrbit point_orbit(double lam, std::vector<double> xs)
{
    PeriodicOrbit o;
    o.lambda = lam;
    for (double x : xs) o.points.push_back(v1(x));
    o.period = static_cast<int>(xs.size());
    return o;
}

/// Brute-force iteration oracle: run the logistic map long enough to land on
/// the attractor.
std::pair<double, double> logistic_attractor_pair(double a)
{
    double x = 0.5;
    for (int i = 0; i < 100000; ++i) x = a * x * (1 - x);
    return {x, a * x * (1 - x)};
}

} // namespace

TEST(Classify, Attractor)
{
    const auto c = classify({Complex(0.5, 0)});
    EXPECT_EQ(c.sigma_plus, 0);
    EXPECT_EQ(c.sigma_minus, 0);
    EXPECT_EQ(c.dim_u, 0);
    EXPECT_FALSE(c.is_flip);
    EXPECT_EQ(c.orbit_index, 1);
    EXPECT_TRUE(c.hyperbolic);
}

TEST(Classify, FlipRepeller)
{
    const auto c = classify({Complex(-2, 0)});
    EXPECT_EQ(c.sigma_minus, 1);
    EXPECT_TRUE(c.is_flip);
    EXPECT_EQ(c.orbit_index, 0);
}

TEST(Classify, TwoNegativeEigenvaluesAreNonflip)
{
    const auto c = classify({Complex(-4, 0), Complex(-4, 0)});
    EXPECT_EQ(c.sigma_minus, 2);
    EXPECT_EQ(c.sigma_plus, 0);
    EXPECT_FALSE(c.is_flip);
    EXPECT_EQ(c.orbit_index, 1);
}

TEST(Classify, NonHyperbolicCases)
{
    EXPECT_FALSE(classify({Complex(1.0 + 1e-12, 0)}).hyperbolic);
    const auto pd = classify({Complex(-1.0 - 1e-12, 0)});
    EXPECT_FALSE(pd.hyperbolic);
    EXPECT_FALSE(pd.is_flip); // -1 is an eigenvalue: neither flip nor a regular flip orbit
    const auto hopf = classify({std::polar(1.0, 0.7), std::polar(1.0, -0.7)});
    EXPECT_FALSE(hopf.hyperbolic);
}

TEST(Classify, NearlyRealComplexPairDoesNotCountAsReal)
{
    const auto c = classify({Complex(-3, 1e-6), Complex(-3, -1e-6)});
    EXPECT_EQ(c.sigma_minus, 0);
    EXPECT_EQ(c.dim_u, 2);
    EXPECT_EQ(c.orbit_index, 1);
    const auto r = classify({Complex(-3, 1e-10), Complex(-3, -1e-10)});
    EXPECT_EQ(r.sigma_minus, 2);
}

// phi = (-1)^dim_u on hyperbolic nonflip orbits, exhaustively over small
// real spectra built from a grid.
TEST(ClassifyProperty, IndexMatchesUnstableDimensionParity)
{
    const std::vector<double> values = {-3.0, -0.5, 0.2, 0.9, 1.5, 4.0};
    for (double a : values)
        for (double b : values)
            for (double c : values)
            {
                const auto r = classify({Complex(a, 0), Complex(b, 0), Complex(c, 0)});
                ASSERT_TRUE(r.hyperbolic);
                if (!r.is_flip)
                    EXPECT_EQ(r.orbit_index, r.dim_u % 2 == 0 ? 1 : -1);
                else
                    EXPECT_EQ(r.orbit_index, 0);
            }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 2000; ++i)
    {
        const Complex z(u(rng), u(rng));
        if (std::abs(std::abs(z) - 1.0) < 1e-6) continue;
        const double r = u(rng);
        if (std::abs(std::abs(r) - 1.0) < 1e-6) continue;
        const auto c = classify({z, std::conj(z), Complex(r, 0)});
        EXPECT_NE(c.orbit_index == 0, !c.is_flip);
        if (!c.is_flip)
        {
            EXPECT_EQ(c.orbit_index, c.dim_u % 2 == 0 ? 1 : -1);
        }
    }
}

TEST(Monodromy, QuadraticPeriodDoublingPoint)
{
    const auto m = builtin_map("quadratic");
    const Mat mono = orbit_monodromy(m, 0.75, {v1(0.5)});
    EXPECT_DOUBLE_EQ(mono(0, 0), -1.0);
}

TEST(Monodromy, PeriodOneEqualsJacobian)
{
    const auto m = builtin_map("ikeda");
    const auto o = find_orbit(m, 1.0, Vec::Zero(2), 1);
    const Mat a = orbit_monodromy(m, o.lambda, o.points);
    const Mat b = eval_jacobian(m, o.lambda, o.points[0]);
    EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Monodromy, QuadraticPeriodTwoClosedForm)
{
    // period-2 points solve x^2 - x + (1 - lambda) = 0
    const double lam = 1.25;
    const double d = std::sqrt(1.0 - 4.0 * (1.0 - lam));
    const double x1 = (1.0 + d) / 2.0, x2 = (1.0 - d) / 2.0;
    const auto m = builtin_map("quadratic");
    EXPECT_NEAR(orbit_monodromy(m, lam, {v1(x1), v1(x2)})(0, 0), 4.0 * (1.0 - lam), 1e-14);
    EXPECT_NEAR(orbit_monodromy(m, lam, {v1(x1), v1(x2)})(0, 0), -1.0, 1e-14);
}

TEST(Monodromy, ChainViolation)
{
    const auto m = builtin_map("quadratic");
    EXPECT_THROW(orbit_monodromy(m, 1.0, {v1(0.1), v1(0.2)}), NotAnOrbit);
}

// The positive root (-1 + sqrt(1 + 4 lambda))/2 at lambda = 1 has slope
// -(sqrt 5 - 1) = -1.236, so it is a flip saddle; the repelling nonflip
// fixed point is the negative root.
TEST(FindOrbit, QuadraticFixedPoints)
{
    const auto m = builtin_map("quadratic");
    const auto pos = find_orbit(m, 1.0, v1(0.7), 1);
    EXPECT_NEAR(pos.points[0][0], (-1.0 + std::sqrt(5.0)) / 2.0, 1e-12);
    EXPECT_NEAR(pos.eigenvalues[0].real(), 1.0 - std::sqrt(5.0), 1e-12);
    EXPECT_EQ(pos.sigma_minus, 1);
    EXPECT_TRUE(pos.is_flip);
    EXPECT_EQ(pos.orbit_index, 0);

    const auto neg = find_orbit(m, 1.0, v1(-1.6), 1);
    EXPECT_NEAR(neg.points[0][0], (-1.0 - std::sqrt(5.0)) / 2.0, 1e-12);
    EXPECT_EQ(neg.sigma_plus, 1);
    EXPECT_EQ(neg.dim_u, 1);
    EXPECT_EQ(neg.orbit_index, -1);
}

TEST(FindOrbit, LogisticPeriodTwoAttractor)
{
    const auto m = builtin_map("logistic");
    const auto o = find_orbit(m, 3.2, v1(0.5), 2);
    ASSERT_EQ(o.period, 2);
    EXPECT_EQ(o.dim_u, 0);
    EXPECT_EQ(o.orbit_index, 1);
    const auto [a, b] = logistic_attractor_pair(3.2);
    const double lo = std::min(o.points[0][0], o.points[1][0]);
    const double hi = std::max(o.points[0][0], o.points[1][0]);
    EXPECT_NEAR(lo, std::min(a, b), 1e-10);
    EXPECT_NEAR(hi, std::max(a, b), 1e-10);
}

TEST(FindOrbit, NoOrbitsBelowSaddleNode)
{
    const auto m = builtin_map("quadratic");
    for (double x0 : {-2.0, -0.5, 0.0, 0.3, 1.0})
        EXPECT_THROW(find_orbit(m, -0.5, v1(x0), 1), NoConvergence);
}

TEST(FindOrbit, SingularAtSaddleNode)
{
    const auto m = builtin_map("quadratic");
    EXPECT_THROW(find_orbit(m, -0.25, v1(-0.5), 1), SingularSystem);
}

TEST(FindOrbit, LeastPeriodReduction)
{
    const auto m = builtin_map("quadratic");
    const auto o = find_orbit(m, 1.0, v1(-1.6), 2);
    EXPECT_EQ(o.period, 1);
    // lambda = 1 lies between the first two doublings: the period-2 orbit is {0, 1}
    const auto q = find_orbit(m, 1.0, v1(0.05), 4);
    EXPECT_EQ(q.period, 2);
}

TEST(FindOrbit, ResidualAndSimilarityInvariance)
{
    const auto m = builtin_map("coupled_quadratic", {{"c", "0.1"}});
    Vec x0(2);
    x0 << 0.4, -0.6;
    const auto o = find_orbit(m, 1.8, x0, 3);
    EXPECT_LE(o.residual, 1e-9);
    for (std::size_t i = 0; i < o.points.size(); ++i)
    {
        const auto r = make_orbit(m, o.lambda, o.points[i], o.period);
        std::vector<double> a, b;
        for (auto e : o.eigenvalues) a.push_back(std::abs(e));
        for (auto e : r.eigenvalues) b.push_back(std::abs(e));
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-8 * std::max(1.0, a[j]));
        EXPECT_EQ(r.orbit_index, o.orbit_index);
    }
}

TEST(FindOrbit, LongPeriodScaledMonodromy)
{
    // 200 factors of about -12.5 overflow a plain double product
    const auto m = builtin_map("quadratic");
    const auto o = find_orbit(m, 36.1, v1(-6.5), 1);
    EXPECT_EQ(o.period, 1);
    const std::vector<Vec> repeated(200, o.points[0]);
    const auto eig = scaled_eigenvalues(orbit_monodromy_scaled(m, 36.1, repeated));
    EXPECT_NEAR(eig[0].log_abs(), 200.0 * std::log(std::abs(2.0 * o.points[0][0])), 1e-8 * 200);
}

TEST(Hausdorff, Axioms)
{
    const auto a = point_orbit(1.0, {0.1, 0.5});
    EXPECT_EQ(hausdorff_distance(a, a), 0.0);
    EXPECT_DOUBLE_EQ(hausdorff_distance(point_orbit(2.0, {0.25}), point_orbit(2.0, {1.0})), 0.75);
    EXPECT_DOUBLE_EQ(hausdorff_distance(point_orbit(2.0, {0.25}), point_orbit(2.5, {0.25})), 0.5);
}

TEST(HausdorffProperty, SymmetryAndTriangleInequality)
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<int> len(1, 6);
    auto random_orbit = [&] {
        PeriodicOrbit o;
        o.lambda = u(rng);
        const int n = len(rng);
        for (int i = 0; i < n; ++i)
        {
            Vec p(2);
            p << u(rng), u(rng);
            o.points.push_back(p);
        }
        o.period = n;
        return o;
    };
    for (int t = 0; t < 500; ++t)
    {
        const auto a = random_orbit(), b = random_orbit(), c = random_orbit();
        const double ab = hausdorff_distance(a, b), ba = hausdorff_distance(b, a);
        EXPECT_EQ(ab, ba);
        EXPECT_LE(hausdorff_distance(a, c), ab + hausdorff_distance(b, c) + 1e-12);
        EXPECT_GE(ab, 0.0);
    }
}

TEST(Hausdorff, AngularCoordinatesWrap)
{
    PeriodicOrbit a, b;
    Vec p(2), q(2);
    p << 0.05, 1.0;
    q << 2.0 * std::numbers::pi - 0.05, 1.0;
    a.points = {p};
    b.points = {q};
    const auto m = builtin_map("pendulum_strobe");
    EXPECT_NEAR(hausdorff_distance(m, a, b), 0.1, 1e-12);
}

TEST(SymbolicSeeding, QuadraticFixedPoints)
{
    const auto m = builtin_map("quadratic");
    const double s = std::sqrt(16.0);
    const std::vector<Box> cells = {make_box({-2 * s}, {-s / 2}), make_box({s / 2}, {2 * s})};
    const auto orbits = seed_orbits_symbolic(m, 16.0, 1, cells);
    ASSERT_EQ(orbits.size(), 2u);
    std::set<double> xs;
    for (const auto& o : orbits) xs.insert(std::round(o.points[0][0] * 1e9) / 1e9);
    EXPECT_NEAR(*xs.begin(), (-1.0 - std::sqrt(65.0)) / 2.0, 1e-8);
    EXPECT_NEAR(*xs.rbegin(), (-1.0 + std::sqrt(65.0)) / 2.0, 1e-8);
}

TEST(SymbolicSeeding, QuadraticPeriodThree)
{
    const auto m = builtin_map("quadratic");
    const double s = 4.0;
    const std::vector<Box> cells = {make_box({-2 * s}, {-s / 2}), make_box({s / 2}, {2 * s})};
    const auto orbits = seed_orbits_symbolic(m, 16.0, 3, cells);
    ASSERT_EQ(orbits.size(), 2u);
    for (const auto& o : orbits)
    {
        EXPECT_EQ(o.period, 3);
        EXPECT_EQ(o.points.size(), 3u);
    }
}

TEST(SymbolicSeeding, CubicFixedPoints)
{
    const auto m = builtin_map("cubic");
    const double lam = 16.0, s = 4.0;
    const std::vector<Box> cells = {make_box({-2 * s}, {-2.5 * s / 3}), make_box({-s / 3}, {s / 3}),
                                    make_box({2.5 * s / 3}, {2 * s})};
    const auto orbits = seed_orbits_symbolic(m, lam, 1, cells);
    ASSERT_EQ(orbits.size(), 3u);
    // brute-force root isolation of x^3 - (lambda + 1) x = 0
    std::vector<double> roots = {-std::sqrt(lam + 1), 0.0, std::sqrt(lam + 1)};
    std::vector<double> got;
    for (const auto& o : orbits) got.push_back(o.points[0][0]);
    std::sort(got.begin(), got.end());
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(got[static_cast<std::size_t>(i)], roots[static_cast<std::size_t>(i)], 1e-10);
}

TEST(SymbolicSeeding, FailedWordsAreReported)
{
    // lambda = 1 is far from a horseshoe: the cells do not cover themselves.
    const auto m = builtin_map("quadratic");
    const std::vector<Box> cells = {make_box({-2.0}, {-0.5}), make_box({0.5}, {2.0})};
    try
    {
        seed_orbits_symbolic(m, 1.0, 2, cells);
        FAIL() << "expected IncompleteEnumeration";
    }
    catch (const IncompleteEnumeration& e)
    {
        EXPECT_FALSE(e.failed_words.empty());
    }
}

TEST(SymbolicSeeding, OverlappingCellsRejected)
{
    const auto m = builtin_map("quadratic");
    EXPECT_THROW(seed_orbits_symbolic(m, 16.0, 1, {make_box({-1.0}, {1.0}), make_box({0.0}, {2.0})}), BadParameter);
}

TEST(CanonicalRotation, SmallestPointFirst)
{
    const auto m = builtin_map("quadratic");
    const auto o = find_orbit(m, 1.8, v1(0.9), 3);
    const auto c = canonical_rotation(m, o);
    for (const auto& p : c.points) EXPECT_LE(c.points[0][0], p[0]);
}
