#pragma once

#include <functional>
#include <numbers>
#include <string>

#include "errors.hpp"
#include "linalg.hpp"

namespace cascade
{

/// Periodically forced ODE u' = f(lambda, t, u).
struct OdeSystem
{
    std::string name;
    int dimension = 0;
    std::function<Vec(double, double, const Vec&)> vector_field;
    /// D_u f(lambda, t, u)
    std::function<Mat(double, double, const Vec&)> state_jacobian;
    /// d f / d lambda; optional
    std::function<Vec(double, double, const Vec&)> parameter_derivative;
    double forcing_period = 2.0 * std::numbers::pi;
};

struct IntegratorConfig
{
    int steps_per_period = 512;
    double escape_radius = 1e6;
};

struct StroboscopicResult
{
    Vec state;
    Mat monodromy;
    /// d state / d lambda, filled when requested and the system provides it
    Vec parameter_sensitivity;
};

namespace detail
{

enum class Variational
{
    none,
    state,
    state_and_parameter
};

inline StroboscopicResult integrate_period(const OdeSystem& ode, double lambda, const Vec& x0,
                                           const IntegratorConfig& integ, Variational var)
{
    if (integ.steps_per_period < 64)
        throw BadParameter("steps_per_period must be >= 64, got " + std::to_string(integ.steps_per_period));
    if (x0.size() != ode.dimension) throw BadParameter("state dimension mismatch for " + ode.name);

    const int n = ode.dimension;
    const double h = ode.forcing_period / integ.steps_per_period;
    const bool with_m = var != Variational::none;
    const bool with_p = var == Variational::state_and_parameter && static_cast<bool>(ode.parameter_derivative);

    Vec u = x0;
    Mat m = Mat::Identity(n, n);
    Vec s = Vec::Zero(n);

    for (int k = 0; k < integ.steps_per_period; ++k)
    {
        const double t = k * h;
        // Stage states for u are computed the same way in every mode so that
        // eval and jacobian agree bit-for-bit.
        const Vec k1 = ode.vector_field(lambda, t, u);
        const Vec u2 = u + 0.5 * h * k1;
        const Vec k2 = ode.vector_field(lambda, t + 0.5 * h, u2);
        const Vec u3 = u + 0.5 * h * k2;
        const Vec k3 = ode.vector_field(lambda, t + 0.5 * h, u3);
        const Vec u4 = u + h * k3;
        const Vec k4 = ode.vector_field(lambda, t + h, u4);

        if (with_m)
        {
            const Mat a1 = ode.state_jacobian(lambda, t, u);
            const Mat a2 = ode.state_jacobian(lambda, t + 0.5 * h, u2);
            const Mat a3 = ode.state_jacobian(lambda, t + 0.5 * h, u3);
            const Mat a4 = ode.state_jacobian(lambda, t + h, u4);
            const Mat l1 = a1 * m;
            const Mat l2 = a2 * (m + 0.5 * h * l1);
            const Mat l3 = a3 * (m + 0.5 * h * l2);
            const Mat l4 = a4 * (m + h * l3);
            if (with_p)
            {
                const Vec q1 = a1 * s + ode.parameter_derivative(lambda, t, u);
                const Vec q2 = a2 * (s + 0.5 * h * q1) + ode.parameter_derivative(lambda, t + 0.5 * h, u2);
                const Vec q3 = a3 * (s + 0.5 * h * q2) + ode.parameter_derivative(lambda, t + 0.5 * h, u3);
                const Vec q4 = a4 * (s + h * q3) + ode.parameter_derivative(lambda, t + h, u4);
                s += (h / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
            }
            m += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        }
        u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        if (!u.allFinite() || u.norm() > integ.escape_radius)
            throw TrajectoryEscape(ode.name + ": state left radius " + std::to_string(integ.escape_radius) +
                                   " at lambda=" + std::to_string(lambda));
    }
    StroboscopicResult out{u, with_m ? m : Mat(), Vec()};
    if (with_p) out.parameter_sensitivity = s;
    return out;
}

} // namespace detail

/// Time-P map of the forced ODE together with the monodromy of the
/// variational equation dM/dt = D_u f M, M(0) = I (fixed-step RK4).
inline StroboscopicResult stroboscopic_map(const OdeSystem& ode, double lambda, const Vec& x,
                                           const IntegratorConfig& integ = {})
{
    return detail::integrate_period(ode, lambda, x, integ, detail::Variational::state);
}

inline Vec stroboscopic_state(const OdeSystem& ode, double lambda, const Vec& x, const IntegratorConfig& integ = {})
{
    return detail::integrate_period(ode, lambda, x, integ, detail::Variational::none).state;
}

/// Damped forced pendulum theta'' + 0.3 theta' + sin(theta) = lambda cos t.
inline OdeSystem pendulum_ode(double damping = 0.3)
{
    OdeSystem ode;
    ode.name = "pendulum";
    ode.dimension = 2;
    ode.vector_field = [damping](double lam, double t, const Vec& u) {
        Vec f(2);
        f << u[1], -damping * u[1] - std::sin(u[0]) + lam * std::cos(t);
        return f;
    };
    ode.state_jacobian = [damping](double, double, const Vec& u) {
        Mat a(2, 2);
        a << 0.0, 1.0, -std::cos(u[0]), -damping;
        return a;
    };
    ode.parameter_derivative = [](double, double t, const Vec&) {
        Vec f(2);
        f << 0.0, std::cos(t);
        return f;
    };
    return ode;
}

/// Double-well Duffing u'' + 0.3 u' - u + u^3 + 0.01 = omega sin t.
inline OdeSystem duffing_ode(double damping = 0.3, double offset = 0.01)
{
    OdeSystem ode;
    ode.name = "duffing";
    ode.dimension = 2;
    ode.vector_field = [damping, offset](double omega, double t, const Vec& u) {
        Vec f(2);
        f << u[1], -damping * u[1] + u[0] - u[0] * u[0] * u[0] - offset + omega * std::sin(t);
        return f;
    };
    ode.state_jacobian = [damping](double, double, const Vec& u) {
        Mat a(2, 2);
        a << 0.0, 1.0, 1.0 - 3.0 * u[0] * u[0], -damping;
        return a;
    };
    ode.parameter_derivative = [](double, double t, const Vec&) {
        Vec f(2);
        f << 0.0, std::sin(t);
        return f;
    };
    return ode;
}

} // namespace cascade
