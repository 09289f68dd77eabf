#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "errors.hpp"

namespace cascade
{

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Complex = std::complex<double>;

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

/// Axis-aligned box in R^N.
struct Box
{
    Vec lo;
    Vec hi;

    int dimension() const { return static_cast<int>(lo.size()); }
    Vec center() const { return 0.5 * (lo + hi); }
    bool contains(const Vec& x) const
    {
        return ((x - lo).array() >= 0.0).all() && ((hi - x).array() >= 0.0).all();
    }
};

inline Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi)
{
    Box b{Vec(static_cast<Eigen::Index>(lo.size())), Vec(static_cast<Eigen::Index>(hi.size()))};
    Eigen::Index i = 0;
    for (double v : lo) b.lo[i++] = v;
    i = 0;
    for (double v : hi) b.hi[i++] = v;
    return b;
}

/// Closed real interval [lo, hi].
struct Interval
{
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    double width() const { return hi - lo; }
};

/// Reduce d into (-P/2, P/2].
inline double wrap_difference(double d, double period)
{
    if (period <= 0.0) return d;
    double r = std::remainder(d, period);
    if (r <= -0.5 * period) r += period;
    return r;
}

/// Difference a - b with periodic coordinates reduced. An empty or zero
/// entry in `periods` means the coordinate is not periodic.
inline Vec wrapped_difference(const Vec& a, const Vec& b, std::span<const double> periods)
{
    Vec d = a - b;
    for (std::size_t i = 0; i < periods.size() && i < static_cast<std::size_t>(d.size()); ++i)
        d[static_cast<Eigen::Index>(i)] = wrap_difference(d[static_cast<Eigen::Index>(i)], periods[i]);
    return d;
}

inline double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// A matrix stored as mantissa * 2^exponent so that long products of
/// Jacobians neither overflow nor underflow.
struct ScaledMatrix
{
    Mat mantissa;
    long exponent = 0;

    static ScaledMatrix identity(int n) { return {Mat::Identity(n, n), 0}; }

    void renormalize()
    {
        const double m = mantissa.cwiseAbs().maxCoeff();
        if (!(m > 0.0) || !std::isfinite(m)) return;
        int e = 0;
        std::frexp(m, &e);
        mantissa *= std::ldexp(1.0, -e);
        exponent += e;
    }

    /// this <- factor * this
    void left_multiply(const Mat& factor)
    {
        mantissa = factor * mantissa;
        renormalize();
    }

    /// Plain matrix value; entries overflow to +-inf when the exponent is huge.
    Mat value() const
    {
        if (exponent > std::numeric_limits<double>::max_exponent + 64)
            return mantissa * std::numeric_limits<double>::infinity();
        Mat out = mantissa;
        for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = std::ldexp(out.data()[i], static_cast<int>(exponent));
        return out;
    }
};

/// Eigenvalue of a scaled matrix, kept as mantissa and base-2 exponent.
struct ScaledEigenvalue
{
    Complex mantissa;
    long exponent = 0;

    double log_abs() const
    {
        const double a = std::abs(mantissa);
        if (a == 0.0) return -std::numeric_limits<double>::infinity();
        return std::log(a) + static_cast<double>(exponent) * std::numbers::ln2;
    }
    Complex value() const
    {
        return {std::ldexp(mantissa.real(), static_cast<int>(exponent)),
                std::ldexp(mantissa.imag(), static_cast<int>(exponent))};
    }
};

inline std::vector<ScaledEigenvalue> scaled_eigenvalues(const ScaledMatrix& m)
{
    std::vector<ScaledEigenvalue> out;
    const auto n = m.mantissa.rows();
    if (n == 1)
    {
        out.push_back({Complex(m.mantissa(0, 0), 0.0), m.exponent});
        return out;
    }
    Eigen::EigenSolver<Mat> solver(m.mantissa, false);
    if (solver.info() != Eigen::Success) throw NumericalOverflow("eigenvalue solver failed");
    const auto& ev = solver.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) out.push_back({ev[i], m.exponent});
    return out;
}

/// Real eigenvector of `m` whose eigenvalue is closest to `target`.
inline Vec eigenvector_near(const Mat& m, double target)
{
    const auto n = m.rows();
    if (n == 1) return Vec::Ones(1);
    Eigen::EigenSolver<Mat> solver(m, true);
    const auto& ev = solver.eigenvalues();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < ev.size(); ++i)
        if (std::abs(ev[i] - target) < std::abs(ev[best] - target)) best = i;
    Vec v = solver.eigenvectors().col(best).real();
    const double nv = v.norm();
    if (!(nv > 0.0)) throw NumericalOverflow("degenerate eigenvector");
    return v / nv;
}

} // namespace cascade
