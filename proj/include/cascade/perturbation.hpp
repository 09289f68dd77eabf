#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "errors.hpp"
#include "linalg.hpp"

namespace cascade
{

enum class BoundKind
{
    quadratic_style, ///< |g(l,0)| < beta and |dg/dx| < beta
    cubic_style,     ///< |g(l,0)| < beta and |dg/dx| < beta |x|
    coupled_style    ///< ||g(l,0)|| < beta and ||D_x g|| < beta
};

/// Additive perturbation g(lambda, x) of a base family, with its declared bound.
struct PerturbationSpec
{
    std::string name;
    std::function<Vec(double, const Vec&)> g;
    std::function<Mat(double, const Vec&)> dg_dx;
    std::function<Vec(double, const Vec&)> dg_dlambda;
    double beta = 0.0;
    BoundKind bound_kind = BoundKind::quadratic_style;
};

/// Sampled check of the declared bound at `samples` random points of the
/// working box. Throws BadParameter on the first violation.
inline void validate_perturbation(const PerturbationSpec& spec, Interval lambda_range, const Box& box,
                                  int samples = 10000, std::uint64_t seed = 1)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = box.dimension();
    for (int s = 0; s < samples; ++s)
    {
        const double lam = lambda_range.lo + unit(rng) * lambda_range.width();
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);

        const Vec g0 = spec.g(lam, Vec::Zero(n));
        const Mat d = spec.dg_dx(lam, x);
        double g0_size = 0.0;
        double d_size = 0.0;
        double d_bound = spec.beta;
        switch (spec.bound_kind)
        {
        case BoundKind::quadratic_style:
            g0_size = inf_norm(g0);
            d_size = d.cwiseAbs().maxCoeff();
            break;
        case BoundKind::cubic_style:
            g0_size = inf_norm(g0);
            d_size = d.cwiseAbs().maxCoeff();
            d_bound = spec.beta * x.norm();
            break;
        case BoundKind::coupled_style:
            g0_size = g0.norm();
            d_size = n == 1 ? std::abs(d(0, 0)) : Eigen::JacobiSVD<Mat>(d).singularValues()[0];
            break;
        }
        if (!(g0_size < spec.beta))
            throw BadParameter(spec.name + ": |g(lambda,0)| = " + std::to_string(g0_size) +
                               " violates beta = " + std::to_string(spec.beta) + " at lambda=" + std::to_string(lam));
        if (!(d_size < d_bound) && !(spec.bound_kind == BoundKind::cubic_style && d_size == 0.0))
            throw BadParameter(spec.name + ": derivative bound violated (" + std::to_string(d_size) +
                               " >= " + std::to_string(d_bound) + ") at lambda=" + std::to_string(lam));
    }
}

namespace detail
{

inline double smooth_kernel(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
inline double smooth_kernel_derivative(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

} // namespace detail

/// C-infinity plateau: 1 on |t| <= gamma, 0 on |t| >= gamma + width.
struct SmoothPlateau
{
    double gamma = 3.0;
    double width = 2.0;

    double operator()(double t) const
    {
        const double u = (std::abs(t) - gamma) / width;
        if (u <= 0.0) return 1.0;
        if (u >= 1.0) return 0.0;
        const double a = detail::smooth_kernel(1.0 - u);
        const double b = detail::smooth_kernel(u);
        return a / (a + b);
    }

    double derivative(double t) const
    {
        const double u = (std::abs(t) - gamma) / width;
        if (u <= 0.0 || u >= 1.0) return 0.0;
        const double a = detail::smooth_kernel(1.0 - u);
        const double b = detail::smooth_kernel(u);
        const double da = -detail::smooth_kernel_derivative(1.0 - u);
        const double db = detail::smooth_kernel_derivative(u);
        const double ds = (da * b - a * db) / ((a + b) * (a + b));
        return ds * (t < 0.0 ? -1.0 : 1.0) / width;
    }
};

/// g(l, x) = -(l - x^2) * psi(l) * psi(x): makes lambda - x^2 + g vanish on
/// the square [-gamma, gamma]^2 and leaves it untouched outside
/// [-gamma-width, gamma+width]^2. beta is the sampled supremum of the two
/// bound quantities, padded by 1%.
inline PerturbationSpec quadratic_bump(double gamma, double width)
{
    if (!(gamma > 0.0) || !(width > 0.0)) throw BadParameter("bump needs gamma > 0 and width > 0");
    const SmoothPlateau psi{gamma, width};
    PerturbationSpec spec;
    spec.name = "bump";
    spec.bound_kind = BoundKind::quadratic_style;
    spec.g = [psi](double lam, const Vec& x) {
        Vec out(1);
        out[0] = -(lam - x[0] * x[0]) * psi(lam) * psi(x[0]);
        return out;
    };
    spec.dg_dx = [psi](double lam, const Vec& x) {
        Mat out(1, 1);
        const double v = x[0];
        out(0, 0) = -psi(lam) * (-2.0 * v * psi(v) + (lam - v * v) * psi.derivative(v));
        return out;
    };
    spec.dg_dlambda = [psi](double lam, const Vec& x) {
        Vec out(1);
        const double v = x[0];
        out[0] = -(psi(lam) + (lam - v * v) * psi.derivative(lam)) * psi(v);
        return out;
    };

    const double reach = gamma + width;
    const int grid = 2001;
    double sup_g0 = 0.0;
    double sup_dg = 0.0;
    Vec x(1);
    for (int i = 0; i < grid; ++i)
    {
        const double lam = -reach + 2.0 * reach * i / (grid - 1);
        sup_g0 = std::max(sup_g0, std::abs(lam * psi(lam)));
        for (int j = 0; j < grid; ++j)
        {
            x[0] = -reach + 2.0 * reach * j / (grid - 1);
            sup_dg = std::max(sup_dg, std::abs(spec.dg_dx(lam, x)(0, 0)));
        }
    }
    spec.beta = 1.01 * std::max(sup_g0, sup_dg) + 1e-9;
    return spec;
}

/// g(l, x) = eps * sin(x + l); |g| and |dg/dx| are bounded by eps.
inline PerturbationSpec quadratic_sine(double eps)
{
    PerturbationSpec spec;
    spec.name = "sine";
    spec.bound_kind = BoundKind::quadratic_style;
    spec.g = [eps](double lam, const Vec& x) { return Vec::Constant(1, eps * std::sin(x[0] + lam)); };
    spec.dg_dx = [eps](double lam, const Vec& x) { return Mat::Constant(1, 1, eps * std::cos(x[0] + lam)); };
    spec.dg_dlambda = [eps](double lam, const Vec& x) { return Vec::Constant(1, eps * std::cos(x[0] + lam)); };
    spec.beta = 1.01 * std::abs(eps) + 1e-12;
    return spec;
}

/// g(l, x) = eps * x sin(x) + delta * cos(l); breaks the odd symmetry of
/// x^3 - l x. |dg/dx| <= 2 eps |x|.
inline PerturbationSpec cubic_asymmetric(double eps, double delta)
{
    PerturbationSpec spec;
    spec.name = "asymmetric";
    spec.bound_kind = BoundKind::cubic_style;
    spec.g = [eps, delta](double lam, const Vec& x) {
        return Vec::Constant(1, eps * x[0] * std::sin(x[0]) + delta * std::cos(lam));
    };
    spec.dg_dx = [eps](double, const Vec& x) {
        return Mat::Constant(1, 1, eps * (std::sin(x[0]) + x[0] * std::cos(x[0])));
    };
    spec.dg_dlambda = [delta](double lam, const Vec&) { return Vec::Constant(1, -delta * std::sin(lam)); };
    spec.beta = 1.01 * std::max(2.0 * std::abs(eps), std::abs(delta)) + 1e-12;
    return spec;
}

} // namespace cascade
