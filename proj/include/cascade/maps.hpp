#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "ode.hpp"
#include "perturbation.hpp"

namespace cascade
{

enum class JacobianKind
{
    analytic,
    finite_difference,
    variational
};

inline const char* to_string(JacobianKind k)
{
    switch (k)
    {
    case JacobianKind::analytic: return "analytic";
    case JacobianKind::finite_difference: return "finite_difference";
    case JacobianKind::variational: return "variational";
    }
    return "?";
}

/// F, D_x F and dF/dlambda at one point. Jacobian and parameter derivative
/// are left empty when not requested.
struct MapStep
{
    Vec value;
    Mat jacobian;
    Vec parameter_derivative;
};

/// A parametrized map F(lambda, x) on R^N.
struct MapDefinition
{
    std::string name;
    int dimension = 0;
    std::function<Vec(double, const Vec&)> eval;
    /// empty for finite_difference maps
    std::function<Mat(double, const Vec&)> jacobian;
    JacobianKind jacobian_kind = JacobianKind::analytic;
    std::optional<Interval> param_hint;
    std::optional<Box> state_hint;

    /// dF/dlambda; central differences in lambda when empty
    std::function<Vec(double, const Vec&)> parameter_derivative;
    /// Optional fused evaluation (ODE maps integrate everything in one pass).
    std::function<MapStep(double, const Vec&, bool want_jacobian, bool want_parameter)> fused;

    /// Per-coordinate period; 0 for coordinates in R. Angles stay unreduced
    /// in eval and are reduced only in residuals and distances.
    std::vector<double> coordinate_periods;
    /// false for the piecewise-linear tent family (not fit for Newton)
    bool smooth = true;
    /// Effective parameter values after overrides, for output headers.
    std::map<std::string, std::string> parameters;
    std::shared_ptr<const PerturbationSpec> perturbation;
};

using Params = std::map<std::string, std::string>;

inline void check_input(const MapDefinition& map, const Vec& x)
{
    if (x.size() != map.dimension)
        throw BadParameter(map.name + ": expected dimension " + std::to_string(map.dimension) + ", got " +
                           std::to_string(x.size()));
    if (!x.allFinite()) throw NumericalOverflow(map.name + ": non-finite input state");
}

inline Vec eval_map(const MapDefinition& map, double lambda, const Vec& x)
{
    check_input(map, x);
    Vec y = map.fused ? map.fused(lambda, x, false, false).value : map.eval(lambda, x);
    if (!y.allFinite()) throw NumericalOverflow(map.name + ": non-finite value at lambda=" + std::to_string(lambda));
    return y;
}

namespace detail
{

inline Mat central_difference_jacobian(const MapDefinition& map, double lambda, const Vec& x)
{
    const int n = map.dimension;
    Mat j(n, n);
    Vec xp = x;
    Vec xm = x;
    for (int i = 0; i < n; ++i)
    {
        const double h = std::max(1e-6, 1e-6 * std::abs(x[i]));
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        j.col(i) = (map.eval(lambda, xp) - map.eval(lambda, xm)) / (xp[i] - xm[i]);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return j;
}

} // namespace detail

inline Mat eval_jacobian(const MapDefinition& map, double lambda, const Vec& x)
{
    check_input(map, x);
    Mat j;
    if (map.fused)
        j = map.fused(lambda, x, true, false).jacobian;
    else if (map.jacobian)
        j = map.jacobian(lambda, x);
    else
        j = detail::central_difference_jacobian(map, lambda, x);
    if (!j.allFinite()) throw NumericalOverflow(map.name + ": non-finite Jacobian at lambda=" + std::to_string(lambda));
    return j;
}

inline Vec eval_parameter_derivative(const MapDefinition& map, double lambda, const Vec& x)
{
    check_input(map, x);
    Vec d;
    if (map.fused)
        d = map.fused(lambda, x, true, true).parameter_derivative;
    else if (map.parameter_derivative)
        d = map.parameter_derivative(lambda, x);
    else
    {
        const double h = std::max(1e-6, 1e-6 * std::abs(lambda));
        d = (map.eval(lambda + h, x) - map.eval(lambda - h, x)) / (2.0 * h);
    }
    if (!d.allFinite()) throw NumericalOverflow(map.name + ": non-finite dF/dlambda");
    return d;
}

/// Value, Jacobian and (optionally) dF/dlambda in one call.
inline MapStep eval_step(const MapDefinition& map, double lambda, const Vec& x, bool want_parameter)
{
    check_input(map, x);
    MapStep s;
    if (map.fused)
    {
        s = map.fused(lambda, x, true, want_parameter);
    }
    else
    {
        s.value = map.eval(lambda, x);
        s.jacobian = map.jacobian ? map.jacobian(lambda, x) : detail::central_difference_jacobian(map, lambda, x);
        if (want_parameter) s.parameter_derivative = eval_parameter_derivative(map, lambda, x);
    }
    if (!s.value.allFinite() || !s.jacobian.allFinite() || (want_parameter && !s.parameter_derivative.allFinite()))
        throw NumericalOverflow(map.name + ": non-finite step at lambda=" + std::to_string(lambda));
    return s;
}

/// Difference a - b respecting angular coordinates of the map.
inline Vec state_difference(const MapDefinition& map, const Vec& a, const Vec& b)
{
    return wrapped_difference(a, b, map.coordinate_periods);
}

// ---------------------------------------------------------------------------
// Parameter overrides

namespace detail
{

class ParamReader
{
public:
    ParamReader(std::string map_name, const Params& params) : map_name_(std::move(map_name)), params_(params) {}

    double number(const std::string& key, double fallback)
    {
        used_.push_back(key);
        auto it = params_.find(key);
        double v = fallback;
        if (it != params_.end())
        {
            std::istringstream in(it->second);
            in.imbue(std::locale::classic());
            if (!(in >> v) || !(in >> std::ws).eof() || !std::isfinite(v))
                throw BadParameter(map_name_ + ": parameter '" + key + "' is not a finite number: " + it->second);
        }
        effective_[key] = format(v);
        return v;
    }

    int integer(const std::string& key, int fallback, int lo, int hi)
    {
        const double v = number(key, fallback);
        if (v != std::floor(v) || v < lo || v > hi)
            throw BadParameter(map_name_ + ": parameter '" + key + "' must be an integer in [" + std::to_string(lo) +
                               ", " + std::to_string(hi) + "]");
        return static_cast<int>(v);
    }

    std::string word(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed)
    {
        used_.push_back(key);
        auto it = params_.find(key);
        const std::string v = it == params_.end() ? fallback : it->second;
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
            throw BadParameter(map_name_ + ": parameter '" + key + "' has invalid value '" + v + "'");
        effective_[key] = v;
        return v;
    }

    /// Rejects keys the map does not know.
    std::map<std::string, std::string> finish() const
    {
        for (const auto& [k, v] : params_)
            if (std::find(used_.begin(), used_.end(), k) == used_.end())
                throw BadParameter(map_name_ + ": unknown parameter '" + k + "'");
        return effective_;
    }

    static std::string format(double v)
    {
        std::ostringstream out;
        out.imbue(std::locale::classic());
        out.precision(17);
        out << v;
        return out.str();
    }

private:
    std::string map_name_;
    const Params& params_;
    std::vector<std::string> used_;
    std::map<std::string, std::string> effective_;
};

inline Vec vec1(double v) { return Vec::Constant(1, v); }
inline Mat mat1(double v) { return Mat::Constant(1, 1, v); }

/// Piecewise slope of the tent map with peak at 1/2.
inline double tent_value(double slope, double x) { return x <= 0.5 ? slope * x : slope * (1.0 - x); }
inline double tent_slope(double slope, double x) { return x <= 0.5 ? slope : -slope; }

inline MapDefinition from_ode(const std::string& name, OdeSystem ode, IntegratorConfig integ)
{
    MapDefinition m;
    m.name = name;
    m.dimension = ode.dimension;
    m.jacobian_kind = JacobianKind::variational;
    auto shared = std::make_shared<const OdeSystem>(std::move(ode));
    m.eval = [shared, integ](double lam, const Vec& x) { return stroboscopic_state(*shared, lam, x, integ); };
    m.jacobian = [shared, integ](double lam, const Vec& x) { return stroboscopic_map(*shared, lam, x, integ).monodromy; };
    m.fused = [shared, integ](double lam, const Vec& x, bool want_j, bool want_p) {
        const auto var = want_p ? Variational::state_and_parameter : want_j ? Variational::state : Variational::none;
        StroboscopicResult r = integrate_period(*shared, lam, x, integ, var);
        return MapStep{std::move(r.state), std::move(r.monodromy), std::move(r.parameter_sensitivity)};
    };
    return m;
}

} // namespace detail

inline const std::vector<std::string>& builtin_map_names()
{
    static const std::vector<std::string> names = {
        "logistic",   "modified_logistic", "quadratic",   "perturbed_quadratic", "cubic",
        "perturbed_cubic", "coupled_quadratic", "tent", "tent_product", "tent3",
        "ikeda",      "pulsed_rotor",      "duffing_strobe", "pendulum_strobe"};
    return names;
}

/// Quadratic family lambda - x^2 + g(lambda, x) for a supplied perturbation.
inline MapDefinition perturbed_quadratic_map(std::shared_ptr<const PerturbationSpec> g)
{
    MapDefinition m;
    m.name = "perturbed_quadratic";
    m.dimension = 1;
    m.perturbation = g;
    m.eval = [g](double lam, const Vec& x) { return Vec(detail::vec1(lam - x[0] * x[0]) + g->g(lam, x)); };
    m.jacobian = [g](double lam, const Vec& x) { return Mat(detail::mat1(-2.0 * x[0]) + g->dg_dx(lam, x)); };
    m.parameter_derivative = [g](double lam, const Vec& x) { return Vec(detail::vec1(1.0) + g->dg_dlambda(lam, x)); };
    m.param_hint = Interval{-3.0, 40.0};
    m.state_hint = make_box({-13.0}, {13.0});
    return m;
}

/// Cubic family x^3 - lambda x + g(lambda, x).
inline MapDefinition perturbed_cubic_map(std::shared_ptr<const PerturbationSpec> g)
{
    MapDefinition m;
    m.name = "perturbed_cubic";
    m.dimension = 1;
    m.perturbation = g;
    m.eval = [g](double lam, const Vec& x) {
        const double v = x[0];
        return Vec(detail::vec1(v * v * v - lam * v) + g->g(lam, x));
    };
    m.jacobian = [g](double lam, const Vec& x) {
        return Mat(detail::mat1(3.0 * x[0] * x[0] - lam) + g->dg_dx(lam, x));
    };
    m.parameter_derivative = [g](double lam, const Vec& x) { return Vec(detail::vec1(-x[0]) + g->dg_dlambda(lam, x)); };
    m.param_hint = Interval{-2.0, 20.0};
    m.state_hint = make_box({-9.0}, {9.0});
    return m;
}

/// Registry of the built-in example systems. Unknown names raise UnknownMap,
/// unknown or malformed overrides raise BadParameter.
inline MapDefinition builtin_map(const std::string& name, const Params& params = {})
{
    using detail::mat1;
    using detail::vec1;
    detail::ParamReader p(name, params);
    MapDefinition m;
    m.name = name;

    if (name == "logistic")
    {
        m.dimension = 1;
        m.eval = [](double a, const Vec& x) { return vec1(a * x[0] * (1.0 - x[0])); };
        m.jacobian = [](double a, const Vec& x) { return mat1(a * (1.0 - 2.0 * x[0])); };
        m.parameter_derivative = [](double, const Vec& x) { return vec1(x[0] * (1.0 - x[0])); };
        m.param_hint = Interval{2.5, 4.0};
        m.state_hint = make_box({0.0}, {1.0});
    }
    else if (name == "modified_logistic")
    {
        const double base = p.number("base", 1.18);
        const double amp = p.number("amp", 0.17);
        const double freq = p.number("freq", 2.4);
        m.dimension = 1;
        auto h = [=](double a) { return a * (base + amp * std::cos(freq * a)); };
        auto dh = [=](double a) { return base + amp * std::cos(freq * a) - a * amp * freq * std::sin(freq * a); };
        m.eval = [h](double a, const Vec& x) { return vec1(h(a) * x[0] * (1.0 - x[0])); };
        m.jacobian = [h](double a, const Vec& x) { return mat1(h(a) * (1.0 - 2.0 * x[0])); };
        m.parameter_derivative = [dh](double a, const Vec& x) { return vec1(dh(a) * x[0] * (1.0 - x[0])); };
        m.param_hint = Interval{2.8, 4.0};
        m.state_hint = make_box({0.0}, {1.0});
    }
    else if (name == "quadratic")
    {
        m.dimension = 1;
        m.eval = [](double lam, const Vec& x) { return vec1(lam - x[0] * x[0]); };
        m.jacobian = [](double, const Vec& x) { return mat1(-2.0 * x[0]); };
        m.parameter_derivative = [](double, const Vec&) { return vec1(1.0); };
        m.param_hint = Interval{-1.0, 3.0};
        m.state_hint = make_box({-3.0}, {3.0});
    }
    else if (name == "perturbed_quadratic")
    {
        const std::string kind = p.word("perturbation", "bump", {"bump", "sine"});
        std::shared_ptr<const PerturbationSpec> g;
        if (kind == "bump")
        {
            const double gamma = p.number("gamma", 3.0);
            const double width = p.number("width", 2.0);
            g = std::make_shared<const PerturbationSpec>(quadratic_bump(gamma, width));
        }
        else
        {
            g = std::make_shared<const PerturbationSpec>(quadratic_sine(p.number("eps", 0.5)));
        }
        m = perturbed_quadratic_map(g);
    }
    else if (name == "cubic")
    {
        m.dimension = 1;
        m.eval = [](double lam, const Vec& x) { return vec1(x[0] * x[0] * x[0] - lam * x[0]); };
        m.jacobian = [](double lam, const Vec& x) { return mat1(3.0 * x[0] * x[0] - lam); };
        m.parameter_derivative = [](double, const Vec& x) { return vec1(-x[0]); };
        m.param_hint = Interval{-2.0, 20.0};
        m.state_hint = make_box({-6.0}, {6.0});
    }
    else if (name == "perturbed_cubic")
    {
        const double eps = p.number("eps", 0.2);
        const double delta = p.number("delta", 0.05);
        m = perturbed_cubic_map(std::make_shared<const PerturbationSpec>(cubic_asymmetric(eps, delta)));
    }
    else if (name == "coupled_quadratic")
    {
        const int n = p.integer("N", 2, 1, 8);
        const double c = p.number("c", 0.1);
        const double kappa = p.number("kappa", 0.1);
        m.dimension = n;
        // F_i = (1 + kappa*i) a - x_i^2 + c x_{i+1 mod N}
        m.eval = [n, c, kappa](double a, const Vec& x) {
            Vec y(n);
            for (int i = 0; i < n; ++i) y[i] = (1.0 + kappa * i) * a - x[i] * x[i] + (n > 1 ? c * x[(i + 1) % n] : 0.0);
            return y;
        };
        m.jacobian = [n, c](double, const Vec& x) {
            Mat j = Mat::Zero(n, n);
            for (int i = 0; i < n; ++i)
            {
                j(i, i) = -2.0 * x[i];
                if (n > 1) j(i, (i + 1) % n) += c;
            }
            return j;
        };
        m.parameter_derivative = [n, kappa](double, const Vec&) {
            Vec d(n);
            for (int i = 0; i < n; ++i) d[i] = 1.0 + kappa * i;
            return d;
        };
        m.param_hint = Interval{-1.0, 3.0};
        m.state_hint = Box{Vec::Constant(n, -3.0), Vec::Constant(n, 3.0)};
    }
    else if (name == "tent")
    {
        const double slope = p.number("slope", 2.0);
        m.dimension = 1;
        m.smooth = false;
        m.eval = [slope](double, const Vec& x) { return vec1(detail::tent_value(slope, x[0])); };
        m.jacobian = [slope](double, const Vec& x) { return mat1(detail::tent_slope(slope, x[0])); };
        m.parameter_derivative = [](double, const Vec&) { return vec1(0.0); };
        m.state_hint = make_box({0.0}, {1.0});
    }
    else if (name == "tent_product")
    {
        const int n = p.integer("N", 2, 1, 8);
        m.dimension = n;
        m.smooth = false;
        m.eval = [n](double, const Vec& x) {
            Vec y(n);
            for (int i = 0; i < n; ++i) y[i] = detail::tent_value(2.0, x[i]);
            return y;
        };
        m.jacobian = [n](double, const Vec& x) {
            Mat j = Mat::Zero(n, n);
            for (int i = 0; i < n; ++i) j(i, i) = detail::tent_slope(2.0, x[i]);
            return j;
        };
        m.parameter_derivative = [n](double, const Vec&) { return Vec(Vec::Zero(n)); };
        m.state_hint = Box{Vec::Zero(n), Vec::Ones(n)};
    }
    else if (name == "tent3")
    {
        // slopes +3, -3, +3 on the thirds of [0, 1]
        m.dimension = 1;
        m.smooth = false;
        m.eval = [](double, const Vec& x) {
            const double v = x[0];
            return vec1(v <= 1.0 / 3.0 ? 3.0 * v : v <= 2.0 / 3.0 ? 2.0 - 3.0 * v : 3.0 * v - 2.0);
        };
        m.jacobian = [](double, const Vec& x) {
            const double v = x[0];
            return mat1(v <= 1.0 / 3.0 ? 3.0 : v <= 2.0 / 3.0 ? -3.0 : 3.0);
        };
        m.parameter_derivative = [](double, const Vec&) { return vec1(0.0); };
        m.state_hint = make_box({0.0}, {1.0});
    }
    else if (name == "ikeda")
    {
        const double gain = p.number("gain", 0.9);
        const double phase = p.number("phase", 0.4);
        const double kerr = p.number("kerr", 6.0);
        m.dimension = 2;
        // z -> lambda + gain z exp(i (phase - kerr / (1 + |z|^2))), z = x + i y
        m.eval = [=](double lam, const Vec& z) {
            const double r2 = z[0] * z[0] + z[1] * z[1];
            const double th = phase - kerr / (1.0 + r2);
            const double c = std::cos(th), s = std::sin(th);
            Vec out(2);
            out << lam + gain * (z[0] * c - z[1] * s), gain * (z[0] * s + z[1] * c);
            return out;
        };
        m.jacobian = [=](double, const Vec& z) {
            const double r2 = z[0] * z[0] + z[1] * z[1];
            const double th = phase - kerr / (1.0 + r2);
            const double c = std::cos(th), s = std::sin(th);
            const double q = 2.0 * kerr / ((1.0 + r2) * (1.0 + r2));
            const double thx = q * z[0], thy = q * z[1];
            const double u = z[0] * c - z[1] * s;
            const double v = z[0] * s + z[1] * c;
            Mat j(2, 2);
            j << c - v * thx, -s - v * thy, s + u * thx, c + u * thy;
            return Mat(gain * j);
        };
        m.parameter_derivative = [](double, const Vec&) {
            Vec d(2);
            d << 1.0, 0.0;
            return d;
        };
        m.param_hint = Interval{0.0, 10.0};
        m.state_hint = make_box({-10.0, -10.0}, {10.0, 10.0});
    }
    else if (name == "pulsed_rotor")
    {
        const double damping = p.number("damping", 0.5);
        m.dimension = 2;
        m.eval = [damping](double lam, const Vec& x) {
            Vec y(2);
            y << x[0] + x[1], damping * x[1] + lam * std::sin(x[0] + x[1]);
            return y;
        };
        m.jacobian = [damping](double lam, const Vec& x) {
            const double c = lam * std::cos(x[0] + x[1]);
            Mat j(2, 2);
            j << 1.0, 1.0, c, damping + c;
            return j;
        };
        m.parameter_derivative = [](double, const Vec& x) {
            Vec d(2);
            d << 0.0, std::sin(x[0] + x[1]);
            return d;
        };
        m.coordinate_periods = {2.0 * std::numbers::pi, 0.0};
        m.param_hint = Interval{0.0, 10.0};
        m.state_hint = make_box({0.0, -25.0}, {2.0 * std::numbers::pi, 25.0});
    }
    else if (name == "duffing_strobe")
    {
        const double damping = p.number("damping", 0.3);
        const double offset = p.number("offset", 0.01);
        const int steps = p.integer("steps", 512, 64, 1 << 20);
        m = detail::from_ode(name, duffing_ode(damping, offset), IntegratorConfig{steps, 1e6});
        m.param_hint = Interval{0.0, 400.0};
        m.state_hint = make_box({-3.0, -3.0}, {3.0, 3.0});
    }
    else if (name == "pendulum_strobe")
    {
        const double damping = p.number("damping", 0.3);
        const int steps = p.integer("steps", 512, 64, 1 << 20);
        m = detail::from_ode(name, pendulum_ode(damping), IntegratorConfig{steps, 1e6});
        m.coordinate_periods = {2.0 * std::numbers::pi, 0.0};
        m.param_hint = Interval{0.0, 10.0};
        m.state_hint = make_box({-std::numbers::pi, -4.0}, {std::numbers::pi, 4.0});
    }
    else
    {
        throw UnknownMap("no built-in map named '" + name + "'");
    }
    m.parameters = p.finish();
    return m;
}

} // namespace cascade
