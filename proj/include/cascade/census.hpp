#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "combinatorics.hpp"
#include "continuation.hpp"
#include "errors.hpp"
#include "maps.hpp"
#include "orbits.hpp"
#include "parallel.hpp"

namespace cascade
{

// ---------------------------------------------------------------------------
// Horseshoe certificates

enum class HorseshoeFamily
{
    quadratic,        ///< lambda - x^2 + g, |g(l,0)| < beta, |dg/dx| < beta
    cubic,            ///< x^3 - lambda x + g, |g(l,0)| < beta, |dg/dx| < beta |x|
    coupled_quadratic ///< K_i(lambda) - x_i^2 + g_i, ||g(l,0)||_inf < beta, ||D_x g||_inf < beta
};

inline const char* to_string(HorseshoeFamily f)
{
    switch (f)
    {
    case HorseshoeFamily::quadratic: return "quadratic";
    case HorseshoeFamily::cubic: return "cubic";
    case HorseshoeFamily::coupled_quadratic: return "coupled_quadratic";
    }
    return "?";
}

inline HorseshoeFamily parse_horseshoe_family(const std::string& s)
{
    if (s == "quadratic") return HorseshoeFamily::quadratic;
    if (s == "cubic") return HorseshoeFamily::cubic;
    if (s == "coupled_quadratic") return HorseshoeFamily::coupled_quadratic;
    throw BadParameter("unknown horseshoe family '" + s + "'");
}

/// K_i(lambda) = (1 + kappa i) lambda for i = 0..N-1, as in the built-in
/// coupled map. The coupling c only enters the sampled checks (through
/// the default sample map); the analytic checks see it through beta.
struct CoupledShape
{
    int n = 2;
    double kappa = 0.1;
    double c = 0.1;

    double k_value(int i, double lambda) const { return (1.0 + kappa * i) * lambda; }
};

enum class Verdict
{
    analytic_pass,
    sampled_pass,
    fail
};

inline const char* to_string(Verdict v)
{
    switch (v)
    {
    case Verdict::analytic_pass: return "analytic_pass";
    case Verdict::sampled_pass: return "sampled_pass";
    case Verdict::fail: return "fail";
    }
    return "?";
}

struct HorseshoeOptions
{
    /// Concrete map to certify. When set, sampled checks on it can carry a
    /// verdict. When empty the certificate covers the whole beta class, so
    /// only the closed-form inequalities decide; the unperturbed member is
    /// still sampled and reported as a screen.
    std::optional<MapDefinition> sample_map;
    int samples_per_cell = 1000;
    double margin = 1e-3;
    /// parameter values sampled in [lambda0, lambda1] for estimate (d)
    int lambda_samples = 16;
    std::uint64_t seed = 1;
    CoupledShape shape;
};

struct HorseshoeCertificate
{
    HorseshoeFamily family = HorseshoeFamily::quadratic;
    double beta = 0.0;
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    /// keys 'a'..'e'
    std::map<char, Verdict> checks;
    std::map<char, bool> analytic;
    std::map<char, bool> sampled;
    /// true when the sampled checks ran on a caller-supplied map
    bool map_specific = false;
    Box box_J;
    std::vector<Box> cells;
    std::vector<std::string> notes;

    bool granted() const
    {
        if (checks.size() != 5) return false;
        return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second != Verdict::fail; });
    }
};

namespace detail
{

inline double sqrt_pos(double v) { return std::sqrt(std::max(0.0, v)); }

/// Orbit radius bound: an orbit point x of maximal |x|_inf satisfies
/// -m <= M + beta (1 + m) - m^2, so m <= rho + sqrt(M + beta + rho^2).
inline double orbit_radius_bound(double m_top, double beta)
{
    const double rho = 0.5 * (beta + 1.0);
    return rho + sqrt_pos(m_top + beta + rho * rho);
}

struct Analytic
{
    std::map<char, bool> ok;
    std::vector<std::string> notes;
};

inline Analytic quadratic_analytic(double beta, double l0, double l1)
{
    Analytic r;
    const double s = sqrt_pos(l1);
    r.ok['a'] = l0 < -(1.0 + 6.0 * beta + beta * beta) / 4.0;
    r.ok['b'] = l1 > 4.0 * (beta + 2.0) * (beta + 2.0);
    const bool c_inner = s * (0.75 * s - 0.5 * beta - 2.0) - beta > 0.0;
    const bool c_outer = s * (-3.0 * s + 2.0 * (beta + 1.0)) + beta < 0.0;
    r.ok['c'] = l1 > 0.0 && c_inner && c_outer;
    r.ok['d'] = l1 > 0.0 && orbit_radius_bound(l1, beta) < 2.0 * s;
    r.ok['e'] = r.ok['b'] && r.ok['c'] && r.ok['d'];
    return r;
}

inline Analytic cubic_analytic(double beta, double l0, double l1)
{
    Analytic r;
    const double s = sqrt_pos(l1);
    r.ok['a'] = l0 < -beta * beta / 12.0 - 1.0;
    const bool middle = (2.0 * s * s - beta * s) / 3.0 > 1.0;
    const bool outer = 3.25 * l1 - 2.5 * beta * s - 3.0 > 0.0;
    r.ok['b'] = l1 > 0.0 && middle && outer;
    r.ok['c'] = l1 > 0.0 && 6.875 * s * s * s / 27.0 - beta * (1.0 + 6.25 * s * s / 9.0) - 2.0 * s > 0.0;
    r.ok['d'] = l1 > beta / 2.0 && 6.0 * l1 * s - 4.0 * beta * l1 - 2.0 * s - beta > 0.0;
    r.ok['e'] = r.ok['b'] && r.ok['c'] && r.ok['d'];
    return r;
}

inline Analytic coupled_analytic(double beta, double l0, double l1, const CoupledShape& shape)
{
    Analytic r;
    const int n = shape.n;
    for (int i = 0; i < n; ++i)
        if (!(1.0 + shape.kappa * i > 0.0)) throw BadParameter("coupled shape needs increasing K_i (1 + kappa i > 0)");

    double m0 = -std::numeric_limits<double>::infinity();
    double m1 = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
    {
        m0 = std::max(m0, shape.k_value(i, l0));
        m1 = std::max(m1, shape.k_value(i, l1));
    }

    const double rho = 0.5 * (beta + 1.0);
    const bool no_orbits_at_all = m0 + beta + rho * rho < 0.0;
    const double r0 = orbit_radius_bound(m0, beta);
    bool a = no_orbits_at_all;
    for (int i = 0; i < n && !a; ++i) a = shape.k_value(i, l0) + 0.25 + beta * (1.0 + r0) < 0.0;
    r.ok['a'] = a;

    std::vector<double> s(static_cast<std::size_t>(n));
    bool positive = true;
    for (int i = 0; i < n; ++i)
    {
        const double k = shape.k_value(i, l1);
        positive = positive && k > 0.0;
        s[static_cast<std::size_t>(i)] = sqrt_pos(k);
    }
    const double s_min = *std::min_element(s.begin(), s.end());
    const double s_max = *std::max_element(s.begin(), s.end());
    if (!positive)
    {
        r.ok['b'] = r.ok['c'] = r.ok['d'] = r.ok['e'] = false;
        r.notes.push_back("some K_i(lambda1) <= 0");
        return r;
    }
    const double ratio = s_max / s_min;

    r.ok['b'] = s_min - beta > 1.0;
    bool c = true;
    for (double si : s)
    {
        c = c && 0.75 * si * si - 2.0 * si - beta * (1.0 + 2.0 * s_max) > 0.0;
        c = c && 4.0 * si > beta * ratio;
        c = c && -3.0 * si * si + 2.0 * si + beta * (1.0 + 2.0 * ratio * si) < 0.0;
    }
    r.ok['c'] = c;
    r.ok['d'] = orbit_radius_bound(m1, beta) < 2.0 * s_min;
    bool z_inside = true;
    for (double si : s) z_inside = z_inside && beta * (1.0 + s_max) < 2.0 * si;
    r.ok['e'] = r.ok['b'] && r.ok['c'] && r.ok['d'] && z_inside;
    return r;
}

inline std::vector<double> coupled_half_widths(double l1, const CoupledShape& shape)
{
    std::vector<double> s;
    for (int i = 0; i < shape.n; ++i) s.push_back(sqrt_pos(shape.k_value(i, l1)));
    return s;
}

inline MapDefinition default_sample_map(HorseshoeFamily family, const CoupledShape& shape)
{
    switch (family)
    {
    case HorseshoeFamily::quadratic: return builtin_map("quadratic");
    case HorseshoeFamily::cubic: return builtin_map("cubic");
    case HorseshoeFamily::coupled_quadratic:
    {
        Params p;
        p["N"] = std::to_string(shape.n);
        std::ostringstream c, k;
        c.precision(17);
        k.precision(17);
        c << shape.c;
        k << shape.kappa;
        p["c"] = c.str();
        p["kappa"] = k.str();
        return builtin_map("coupled_quadratic", p);
    }
    }
    throw BadParameter("unknown family");
}

inline double lerp(double a, double b, double t) { return a + (b - a) * t; }

/// Evenly spaced samples over [a, b], endpoints included.
inline std::vector<double> samples(double a, double b, int count)
{
    std::vector<double> out;
    count = std::max(count, 2);
    for (int i = 0; i < count; ++i) out.push_back(lerp(a, b, static_cast<double>(i) / (count - 1)));
    return out;
}

inline double f1(const MapDefinition& m, double lam, double x) { return eval_map(m, lam, Vec::Constant(1, x))[0]; }
inline double df1(const MapDefinition& m, double lam, double x) { return eval_jacobian(m, lam, Vec::Constant(1, x))(0, 0); }

/// Sampled versions of (a)-(e) for the one-dimensional families. `cells`
/// are the expanding intervals, `gaps` the parts of J outside them.
inline std::map<char, bool> sampled_1d(const MapDefinition& m, HorseshoeFamily family, double l0, double l1,
                                       const std::vector<Box>& cells, const HorseshoeOptions& opt)
{
    std::map<char, bool> ok;
    const double s = sqrt_pos(l1);
    const double two_s = 2.0 * s;
    const double mg = opt.margin;
    const int n = opt.samples_per_cell;

    // (a): quadratic: F(l0, x) < x; cubic: F increasing. Checked on a box
    // comfortably larger than J.
    {
        const double reach = std::max(4.0 * s, 10.0);
        bool good = true;
        for (double x : samples(-reach, reach, 4 * n))
        {
            if (family == HorseshoeFamily::quadratic)
                good = good && f1(m, l0, x) - x < -mg;
            else
                good = good && df1(m, l0, x) > mg;
        }
        ok['a'] = good;
    }
    // (b): |F'| >= 1 + margin on every cell
    {
        bool good = l1 > 0.0;
        for (const Box& c : cells)
            for (double x : samples(c.lo[0], c.hi[0], n)) good = good && std::abs(df1(m, l1, x)) >= 1.0 + mg;
        ok['b'] = good;
    }
    // (c): points of J outside the cells map outside J
    {
        bool good = l1 > 0.0;
        std::vector<std::pair<double, double>> gaps;
        std::vector<Box> sorted = cells;
        std::sort(sorted.begin(), sorted.end(), [](const Box& a, const Box& b) { return a.lo[0] < b.lo[0]; });
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) gaps.emplace_back(sorted[i].hi[0], sorted[i + 1].lo[0]);
        for (const auto& [a, b] : gaps)
        {
            const auto xs = samples(a, b, n + 2);
            for (std::size_t i = 1; i + 1 < xs.size(); ++i) good = good && std::abs(f1(m, l1, xs[i])) > two_s + mg;
        }
        if (family == HorseshoeFamily::quadratic)
        {
            for (double x : samples(two_s, 2.0 * two_s, n))
            {
                good = good && f1(m, l1, x) < -two_s - mg;
                good = good && f1(m, l1, -x) < -two_s - mg;
            }
        }
        ok['c'] = good;
    }
    // (d): for l in [l0, l1], no point beyond 2s can be the largest point
    // of an orbit.
    {
        bool good = l1 > 0.0;
        for (double lam : samples(l0, l1, opt.lambda_samples))
            for (double x : samples(two_s, 2.0 * two_s, n))
            {
                if (family == HorseshoeFamily::quadratic)
                {
                    good = good && f1(m, lam, x) < -x - mg;
                    good = good && f1(m, lam, -x) < -x - mg;
                }
                else
                {
                    good = good && f1(m, lam, x) - x > mg;
                    good = good && f1(m, lam, -x) + x < -mg;
                }
            }
        ok['d'] = good;
    }
    // (e): each cell is mapped monotonically across J with both end images
    // outside J on opposite sides.
    {
        bool good = l1 > 0.0;
        for (const Box& c : cells)
        {
            int sign = 0;
            for (double x : samples(c.lo[0], c.hi[0], n))
            {
                const double d = df1(m, l1, x);
                const int sg = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
                if (sign == 0) sign = sg;
                good = good && sg != 0 && sg == sign;
            }
            const double ya = f1(m, l1, c.lo[0]);
            const double yb = f1(m, l1, c.hi[0]);
            good = good && std::min(ya, yb) < -two_s - mg && std::max(ya, yb) > two_s + mg;
        }
        ok['e'] = good;
    }
    return ok;
}

inline bool outside_box(const Vec& y, const Box& b, double margin)
{
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] < b.lo[i] - margin || y[i] > b.hi[i] + margin) return true;
    return false;
}

inline std::map<char, bool> sampled_coupled(const MapDefinition& m, double beta, double l0, double l1, const CoupledShape& shape,
                                            const Box& J, const std::vector<Box>& cells, const HorseshoeOptions& opt)
{
    std::map<char, bool> ok;
    const int n = shape.n;
    const double mg = opt.margin;
    const int count = opt.samples_per_cell;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto s = coupled_half_widths(l1, shape);
    double s_max = 0.0;
    for (double v : s) s_max = std::max(s_max, v);
    auto random_in = [&](const Box& b) {
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = lerp(b.lo[i], b.hi[i], unit(rng));
        return x;
    };

    // (a): some coordinate strictly decreases on the box that holds every
    // orbit at l0.
    {
        double m0 = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) m0 = std::max(m0, shape.k_value(i, l0));
        const double reach = orbit_radius_bound(m0, beta);
        const Box big{Vec::Constant(n, -reach), Vec::Constant(n, reach)};
        bool any = false;
        for (int i = 0; i < n && !any; ++i)
        {
            bool coord = true;
            std::mt19937_64 local(opt.seed + static_cast<std::uint64_t>(i));
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (int k = 0; k < 4 * count && coord; ++k)
            {
                Vec x(n);
                for (int j = 0; j < n; ++j) x[j] = lerp(big.lo[j], big.hi[j], u(local));
                coord = eval_map(m, l0, x)[i] - x[i] < -mg;
            }
            any = coord;
        }
        ok['a'] = any;
    }
    // (b): row diagonal dominance with margin above 1 on every cell
    {
        bool good = true;
        for (const Box& c : cells)
            for (int k = 0; k < count && good; ++k)
            {
                const Mat d = eval_jacobian(m, l1, random_in(c));
                double worst = std::numeric_limits<double>::infinity();
                for (int i = 0; i < n; ++i)
                {
                    double off = 0.0;
                    for (int j = 0; j < n; ++j)
                        if (j != i) off += std::abs(d(i, j));
                    worst = std::min(worst, std::abs(d(i, i)) - off);
                }
                good = worst >= 1.0 + mg;
            }
        ok['b'] = good;
    }
    // (c): points of J outside A, and points beyond J, map outside J
    {
        bool good = true;
        for (int k = 0; k < count * (1 << n) && good; ++k)
        {
            Vec x = random_in(J);
            const int i = static_cast<int>(unit(rng) * n) % n;
            const double si = s[static_cast<std::size_t>(i)];
            x[i] = lerp(-0.5 * si, 0.5 * si, unit(rng));
            good = outside_box(eval_map(m, l1, x), J, mg);
            if (!good) break;
            Vec y = random_in(J);
            const double t = lerp(2.0 * si, 4.0 * si, unit(rng));
            y[i] = unit(rng) < 0.5 ? -t : t;
            good = outside_box(eval_map(m, l1, y), J, mg);
        }
        ok['c'] = good;
    }
    // (d): a point whose largest coordinate m exceeds 2 s_min sends that
    // coordinate below -m.
    {
        bool good = true;
        const double s_min = *std::min_element(s.begin(), s.end());
        for (double lam : samples(l0, l1, opt.lambda_samples))
            for (int k = 0; k < count && good; ++k)
            {
                const double mm = lerp(2.0 * s_min, 4.0 * s_max, unit(rng));
                Vec x(n);
                for (int j = 0; j < n; ++j) x[j] = lerp(-mm, mm, unit(rng));
                const int i = static_cast<int>(unit(rng) * n) % n;
                x[i] = unit(rng) < 0.5 ? -mm : mm;
                good = eval_map(m, lam, x)[i] < -mm - mg;
            }
        ok['d'] = good;
    }
    // (e): cell boundaries map outside J, the point with |z_i| = s_i maps
    // inside J, and the Jacobian stays nonsingular.
    {
        bool good = true;
        for (const Box& c : cells)
        {
            Vec z(n);
            for (int i = 0; i < n; ++i) z[i] = (c.lo[i] + c.hi[i] > 0.0 ? 1.0 : -1.0) * s[static_cast<std::size_t>(i)];
            good = good && J.contains(eval_map(m, l1, z));
            for (int k = 0; k < count && good; ++k)
            {
                Vec x = random_in(c);
                const int i = static_cast<int>(unit(rng) * n) % n;
                x[i] = unit(rng) < 0.5 ? c.lo[i] : c.hi[i];
                good = outside_box(eval_map(m, l1, x), J, mg);
                good = good && std::abs(eval_jacobian(m, l1, random_in(c)).determinant()) > mg;
            }
        }
        ok['e'] = good;
    }
    return ok;
}

} // namespace detail

/// The horseshoe box J and its expanding cells at lambda1. Cell order
/// matches the symbol order of the combinatorial models: quadratic {L, R},
/// cubic {1_L, -1, 1_R}, coupled {L, R}^N with bit i set for x_i > 0.
inline std::pair<Box, std::vector<Box>> horseshoe_partition(HorseshoeFamily family, double lambda1,
                                                            const CoupledShape& shape = {})
{
    if (!(lambda1 > 0.0)) throw BadParameter("horseshoe partition needs lambda1 > 0");
    const double s = std::sqrt(lambda1);
    switch (family)
    {
    case HorseshoeFamily::quadratic:
        return {make_box({-2.0 * s}, {2.0 * s}),
                {make_box({-2.0 * s}, {-0.5 * s}), make_box({0.5 * s}, {2.0 * s})}};
    case HorseshoeFamily::cubic:
        return {make_box({-2.0 * s}, {2.0 * s}),
                {make_box({-2.0 * s}, {-2.5 * s / 3.0}), make_box({-s / 3.0}, {s / 3.0}),
                 make_box({2.5 * s / 3.0}, {2.0 * s})}};
    case HorseshoeFamily::coupled_quadratic:
    {
        const int n = shape.n;
        const auto si = detail::coupled_half_widths(lambda1, shape);
        Box J{Vec(n), Vec(n)};
        for (int i = 0; i < n; ++i)
        {
            if (!(si[static_cast<std::size_t>(i)] > 0.0)) throw BadParameter("K_i(lambda1) must be positive");
            J.lo[i] = -2.0 * si[static_cast<std::size_t>(i)];
            J.hi[i] = 2.0 * si[static_cast<std::size_t>(i)];
        }
        std::vector<Box> cells;
        for (int mask = 0; mask < (1 << n); ++mask)
        {
            Box c{Vec(n), Vec(n)};
            for (int i = 0; i < n; ++i)
            {
                const double v = si[static_cast<std::size_t>(i)];
                if ((mask >> i) & 1)
                {
                    c.lo[i] = 0.5 * v;
                    c.hi[i] = 2.0 * v;
                }
                else
                {
                    c.lo[i] = -2.0 * v;
                    c.hi[i] = -0.5 * v;
                }
            }
            cells.push_back(c);
        }
        return {J, cells};
    }
    }
    throw BadParameter("unknown family");
}

/// Evaluates the five estimates: the closed-form inequalities first, then
/// a sampled check (see HorseshoeOptions::sample_map for when it counts).
/// Failures are verdicts, never exceptions.
inline HorseshoeCertificate verify_horseshoe(HorseshoeFamily family, double beta, double lambda0, double lambda1,
                                             const HorseshoeOptions& opt = {})
{
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw BadParameter("beta must be finite and >= 0");
    if (!(lambda0 < lambda1)) throw BadParameter("verify_horseshoe needs lambda0 < lambda1");
    if (family == HorseshoeFamily::coupled_quadratic && (opt.shape.n < 1 || opt.shape.n > 8))
        throw BadParameter("coupled shape needs 1 <= N <= 8");

    HorseshoeCertificate cert;
    cert.family = family;
    cert.beta = beta;
    cert.lambda0 = lambda0;
    cert.lambda1 = lambda1;
    cert.map_specific = opt.sample_map.has_value();

    detail::Analytic an;
    switch (family)
    {
    case HorseshoeFamily::quadratic: an = detail::quadratic_analytic(beta, lambda0, lambda1); break;
    case HorseshoeFamily::cubic: an = detail::cubic_analytic(beta, lambda0, lambda1); break;
    case HorseshoeFamily::coupled_quadratic: an = detail::coupled_analytic(beta, lambda0, lambda1, opt.shape); break;
    }
    cert.analytic = an.ok;
    cert.notes = an.notes;

    bool have_partition = lambda1 > 0.0;
    if (family == HorseshoeFamily::coupled_quadratic)
        for (int i = 0; i < opt.shape.n; ++i) have_partition = have_partition && opt.shape.k_value(i, lambda1) > 0.0;
    if (have_partition)
    {
        auto [J, cells] = horseshoe_partition(family, lambda1, opt.shape);
        cert.box_J = J;
        cert.cells = cells;
        const MapDefinition m = opt.sample_map ? *opt.sample_map : detail::default_sample_map(family, opt.shape);
        if (m.dimension != J.dimension()) throw BadParameter("sample map dimension does not match the family");
        try
        {
            cert.sampled = family == HorseshoeFamily::coupled_quadratic
                               ? detail::sampled_coupled(m, beta, lambda0, lambda1, opt.shape, J, cells, opt)
                               : detail::sampled_1d(m, family, lambda0, lambda1, cells, opt);
        }
        catch (const Error& e)
        {
            cert.notes.push_back(std::string("sampling aborted: ") + e.what());
            for (char k : {'a', 'b', 'c', 'd', 'e'}) cert.sampled[k] = false;
        }
    }
    else
    {
        for (char k : {'a', 'b', 'c', 'd', 'e'}) cert.sampled[k] = false;
        cert.notes.push_back("no partition: lambda1 leaves some K_i non-positive");
    }
    for (char k : {'a', 'b', 'c', 'd', 'e'})
        cert.checks[k] = cert.analytic[k]                         ? Verdict::analytic_pass
                         : (cert.map_specific && cert.sampled[k]) ? Verdict::sampled_pass
                                                                  : Verdict::fail;
    return cert;
}

/// Horseshoe family, bound and shape a built-in map belongs to, if any.
struct HorseshoeSetup
{
    HorseshoeFamily family = HorseshoeFamily::quadratic;
    double beta = 0.0;
    CoupledShape shape;
};

inline std::optional<HorseshoeSetup> horseshoe_setup(const MapDefinition& map)
{
    HorseshoeSetup h;
    const double perturbation_beta = map.perturbation ? map.perturbation->beta : 0.0;
    if (map.name == "quadratic" || map.name == "perturbed_quadratic")
    {
        h.family = HorseshoeFamily::quadratic;
        h.beta = perturbation_beta;
        return h;
    }
    if (map.name == "cubic" || map.name == "perturbed_cubic")
    {
        h.family = HorseshoeFamily::cubic;
        h.beta = perturbation_beta;
        return h;
    }
    if (map.name == "coupled_quadratic")
    {
        h.family = HorseshoeFamily::coupled_quadratic;
        h.shape.n = map.dimension;
        auto number = [&](const char* key, double fallback) {
            auto it = map.parameters.find(key);
            return it == map.parameters.end() ? fallback : std::stod(it->second);
        };
        h.shape.c = number("c", 0.1);
        h.shape.kappa = number("kappa", 0.1);
        // g_i = c x_{i+1}: g(l, 0) = 0 and ||D_x g||_inf = |c| (0 when N = 1)
        h.beta = map.dimension > 1 ? std::abs(h.shape.c) : 0.0;
        return h;
    }
    return std::nullopt;
}

/// True when estimates (b)-(e) hold at lambda1 for the map's own family,
/// analytically or by sampling the map itself.
inline bool horseshoe_at(const MapDefinition& map, const HorseshoeSetup& h, double lambda1)
{
    if (!(lambda1 > 0.0)) return false;
    HorseshoeOptions opt;
    opt.shape = h.shape;
    opt.sample_map = map;
    opt.lambda_samples = 2;
    const HorseshoeCertificate c = verify_horseshoe(h.family, h.beta, lambda1 - 1.0, lambda1, opt);
    for (char k : {'b', 'c', 'd', 'e'})
        if (c.checks.at(k) == Verdict::fail) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Boundary census

enum class BoundaryRole
{
    entry,
    exit,
    flip
};

inline const char* to_string(BoundaryRole r)
{
    switch (r)
    {
    case BoundaryRole::entry: return "entry";
    case BoundaryRole::exit: return "exit";
    case BoundaryRole::flip: return "flip";
    }
    return "?";
}

/// Role of a hyperbolic boundary orbit. `at_lambda0` selects the side.
inline BoundaryRole boundary_role(const PeriodicOrbit& o, bool at_lambda0)
{
    if (o.orbit_index == 0) return BoundaryRole::flip;
    const bool entry = at_lambda0 ? o.orbit_index == 1 : o.orbit_index == -1;
    return entry ? BoundaryRole::entry : BoundaryRole::exit;
}

struct CensusOptions
{
    /// starts per dimension for multi-start Newton
    int grid_per_dim = 200;
    /// search box; default is the map's state hint
    std::optional<Box> box;
    /// use symbolic seeding when a horseshoe is verified at that side
    bool symbolic = true;
    double dedupe_tol = 1e-6;
    /// jitter of the start grid, fixed by the seed
    std::uint64_t seed = 1;
    int jobs = 0;
    bool throw_on_nonhyperbolic = true;
    double tol_eig = 1e-9;
};

struct SideEnumeration
{
    double lambda = 0.0;
    std::vector<PeriodicOrbit> orbits;
    /// "symbolic" (complete) or "multistart" (heuristic)
    std::string method;
};

struct BoundaryCensus
{
    std::string map_name;
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    int max_period = 0;
    std::vector<PeriodicOrbit> entry_orbits;
    std::vector<PeriodicOrbit> exit_orbits;
    std::vector<PeriodicOrbit> flip_orbits_on_boundary;
    std::vector<PeriodicOrbit> nonhyperbolic_on_boundary;
    std::string method0;
    std::string method1;
    /// every orbit found at lambda0 / lambda1, all roles
    int total_at_lambda0 = 0;
    int total_at_lambda1 = 0;

    bool valid() const { return nonhyperbolic_on_boundary.empty(); }
};

namespace detail
{

inline bool same_orbit(const MapDefinition& map, const PeriodicOrbit& a, const PeriodicOrbit& b, double tol)
{
    return a.period == b.period && hausdorff_distance(map, a, b) < tol;
}

inline void add_unique(const MapDefinition& map, std::vector<PeriodicOrbit>& found, PeriodicOrbit o, double tol)
{
    o = canonical_rotation(map, std::move(o));
    for (const auto& q : found)
        if (same_orbit(map, q, o, tol)) return;
    found.push_back(std::move(o));
}

inline void sort_orbits(std::vector<PeriodicOrbit>& v)
{
    std::stable_sort(v.begin(), v.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
        if (a.period != b.period) return a.period < b.period;
        const Vec& x = a.points.front();
        const Vec& y = b.points.front();
        return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
    });
}

} // namespace detail

/// All orbits of period <= max_period found by multi-start Newton from a
/// jittered uniform grid. Heuristic: completeness is not claimed.
inline std::vector<PeriodicOrbit> enumerate_orbits_multistart(const MapDefinition& map, double lambda, int max_period,
                                                              const CensusOptions& opt = {})
{
    if (max_period < 1) throw BadParameter("max_period must be >= 1");
    if (opt.grid_per_dim < 1) throw BadParameter("grid_per_dim must be >= 1");
    const Box box = opt.box ? *opt.box : (map.state_hint ? *map.state_hint : throw BadParameter(map.name + " has no state box; pass one"));
    const int n = map.dimension;
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(opt.grid_per_dim);

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec jitter(n);
    for (int i = 0; i < n; ++i) jitter[i] = unit(rng);

    auto start = [&](std::size_t idx) {
        Vec x(n);
        for (int i = 0; i < n; ++i)
        {
            const std::size_t k = idx % static_cast<std::size_t>(opt.grid_per_dim);
            idx /= static_cast<std::size_t>(opt.grid_per_dim);
            x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * (static_cast<double>(k) + jitter[i]) / opt.grid_per_dim;
        }
        return x;
    };

    std::vector<PeriodicOrbit> found;
    for (int p = 1; p <= max_period; ++p)
    {
        std::vector<std::optional<PeriodicOrbit>> hits(total);
        parallel_for(total, opt.jobs, [&](std::size_t i) {
            try
            {
                PeriodicOrbit o = find_orbit(map, lambda, start(i), p);
                if (o.period == p && box.contains(o.points.front())) hits[i] = std::move(o);
            }
            catch (const Error&)
            {
            }
        });
        for (auto& h : hits)
            if (h) detail::add_unique(map, found, std::move(*h), opt.dedupe_tol);
    }
    detail::sort_orbits(found);
    return found;
}

/// Orbits of period <= max_period at one parameter value: symbolic seeding
/// when the map's family is a verified horseshoe there, multi-start Newton
/// otherwise.
inline SideEnumeration enumerate_side(const MapDefinition& map, double lambda, int max_period,
                                      const CensusOptions& opt = {})
{
    SideEnumeration side;
    side.lambda = lambda;
    const auto setup = horseshoe_setup(map);
    if (opt.symbolic && setup && horseshoe_at(map, *setup, lambda))
    {
        side.method = "symbolic";
        const auto cells = horseshoe_partition(setup->family, lambda, setup->shape).second;
        for (int k = 1; k <= max_period; ++k)
            for (auto& o : seed_orbits_symbolic(map, lambda, k, cells)) side.orbits.push_back(std::move(o));
        detail::sort_orbits(side.orbits);
    }
    else
    {
        side.method = "multistart";
        side.orbits = enumerate_orbits_multistart(map, lambda, max_period, opt);
    }
    return side;
}

/// Enumerates and classifies the orbits on both boundary slices.
/// Throws InvalidBoundary if any is not hyperbolic (unless disabled in the
/// options); IncompleteEnumeration propagates from symbolic seeding.
inline BoundaryCensus boundary_census(const MapDefinition& map, double lambda0, double lambda1, int max_period,
                                      const CensusOptions& opt = {})
{
    if (!(lambda0 < lambda1)) throw BadParameter("boundary_census needs lambda0 < lambda1");
    if (max_period < 1) throw BadParameter("max_period must be >= 1");
    BoundaryCensus c;
    c.map_name = map.name;
    c.lambda0 = lambda0;
    c.lambda1 = lambda1;
    c.max_period = max_period;

    const SideEnumeration s0 = enumerate_side(map, lambda0, max_period, opt);
    const SideEnumeration s1 = enumerate_side(map, lambda1, max_period, opt);
    c.method0 = s0.method;
    c.method1 = s1.method;
    c.total_at_lambda0 = static_cast<int>(s0.orbits.size());
    c.total_at_lambda1 = static_cast<int>(s1.orbits.size());
    for (const auto* side : {&s0, &s1})
        for (const auto& o : side->orbits)
        {
            if (!o.hyperbolic)
            {
                c.nonhyperbolic_on_boundary.push_back(o);
                continue;
            }
            switch (boundary_role(o, side == &s0))
            {
            case BoundaryRole::entry: c.entry_orbits.push_back(o); break;
            case BoundaryRole::exit: c.exit_orbits.push_back(o); break;
            case BoundaryRole::flip: c.flip_orbits_on_boundary.push_back(o); break;
            }
        }
    if (opt.throw_on_nonhyperbolic && !c.valid())
    {
        const PeriodicOrbit& o = c.nonhyperbolic_on_boundary.front();
        throw InvalidBoundary("non-hyperbolic period-" + std::to_string(o.period) + " orbit at lambda=" +
                              std::to_string(o.lambda) + "; perturb the boundary value");
    }
    return c;
}

// ---------------------------------------------------------------------------
// Prediction

enum class PredictionCase
{
    one_to_one, ///< K = 0 or J = 0
    excess_out, ///< K < J: at least J - K cascades, attributed to exit orbits
    excess_in   ///< J < K: at least K - J cascades, attributed to entry orbits
};

inline const char* to_string(PredictionCase c)
{
    switch (c)
    {
    case PredictionCase::one_to_one: return "one_to_one";
    case PredictionCase::excess_out: return "excess_out";
    case PredictionCase::excess_in: return "excess_in";
    }
    return "?";
}

struct CascadePrediction
{
    PredictionCase kind = PredictionCase::one_to_one;
    int entries = 0; ///< K
    int exits = 0;   ///< J
    int min_cascades = 0;
    /// the boundary orbits the predicted cascades are attributed to
    std::vector<PeriodicOrbit> attributed;
    /// number of attributed orbits per period
    std::map<int, int> per_period;
    int max_period = 0;
    std::string truncation_note;
};

inline CascadePrediction predict_cascades(const BoundaryCensus& census)
{
    if (!census.valid()) throw InvalidBoundary("census has non-hyperbolic boundary orbits");
    CascadePrediction p;
    p.entries = static_cast<int>(census.entry_orbits.size());
    p.exits = static_cast<int>(census.exit_orbits.size());
    p.max_period = census.max_period;
    if (p.entries == p.exits)
        throw NoPrediction("K = J = " + std::to_string(p.entries) + "; the boundary counts force nothing");
    if (p.entries == 0 || p.exits == 0)
    {
        p.kind = PredictionCase::one_to_one;
        p.attributed = p.entries == 0 ? census.exit_orbits : census.entry_orbits;
        p.min_cascades = static_cast<int>(p.attributed.size());
    }
    else if (p.entries < p.exits)
    {
        p.kind = PredictionCase::excess_out;
        p.attributed = census.exit_orbits;
        p.min_cascades = p.exits - p.entries;
    }
    else
    {
        p.kind = PredictionCase::excess_in;
        p.attributed = census.entry_orbits;
        p.min_cascades = p.entries - p.exits;
    }
    for (const auto& o : p.attributed) ++p.per_period[o.period];
    p.truncation_note = "counts cover boundary orbits of period <= " + std::to_string(census.max_period) +
                        "; the prediction holds per stem period up to that bound";
    return p;
}

// ---------------------------------------------------------------------------
// Cross-checks

struct CrosscheckResult
{
    int period = 0;
    std::int64_t nonflip_numeric = 0;
    std::int64_t nonflip_symbolic = 0;
    std::int64_t flip_numeric = 0;
    bool match = false;
};

/// Seeds every least-period-k orbit of the horseshoe symbolically,
/// classifies each from its monodromy and compares the nonflip count with
/// the combinatorial count of the matching symbolic model. Throws
/// CensusMismatch on disagreement unless `throw_on_mismatch` is false.
inline CrosscheckResult numeric_census_crosscheck(const MapDefinition& map, const HorseshoeSetup& setup,
                                                  double lambda_h, int k, bool throw_on_mismatch = true)
{
    if (k < 1) throw BadParameter("period must be >= 1");
    const auto cells = horseshoe_partition(setup.family, lambda_h, setup.shape).second;
    const auto orbits = seed_orbits_symbolic(map, lambda_h, k, cells);
    CrosscheckResult r;
    r.period = k;
    for (const auto& o : orbits)
    {
        if (!o.hyperbolic) continue;
        if (o.nonflip())
            ++r.nonflip_numeric;
        else
            ++r.flip_numeric;
    }
    switch (setup.family)
    {
    case HorseshoeFamily::quadratic: r.nonflip_symbolic = static_cast<std::int64_t>(gamma_1(k)); break;
    case HorseshoeFamily::cubic: r.nonflip_symbolic = cubic_nonflip_count(k); break;
    case HorseshoeFamily::coupled_quadratic: r.nonflip_symbolic = gamma_N(setup.shape.n, k); break;
    }
    r.match = r.nonflip_numeric == r.nonflip_symbolic;
    if (!r.match && throw_on_mismatch)
        throw CensusMismatch("period " + std::to_string(k) + ": " + std::to_string(r.nonflip_numeric) +
                             " nonflip orbits found, " + std::to_string(r.nonflip_symbolic) + " expected");
    return r;
}

inline CrosscheckResult numeric_census_crosscheck(const MapDefinition& map, double lambda_h, int k,
                                                  bool throw_on_mismatch = true)
{
    const auto setup = horseshoe_setup(map);
    if (!setup) throw BadParameter(map.name + " is not a horseshoe family");
    return numeric_census_crosscheck(map, *setup, lambda_h, k, throw_on_mismatch);
}

/// True iff the smallest period met along the component equals the
/// period of the horseshoe orbit it was seeded from.
inline bool stem_period_check(const ComponentTrace& trace, const PeriodicOrbit& horseshoe_orbit)
{
    return !trace.snapshots.empty() && trace.min_period() == horseshoe_orbit.period;
}

// ---------------------------------------------------------------------------
// Realizing the prediction

struct BoundaryTrace
{
    PeriodicOrbit orbit;
    ComponentTrace trace;
    std::vector<CascadeRecord> cascades;
    /// some cascade has all its doublings in [lambda0, lambda1]
    bool cascade_inside = false;
    bool stem_period_ok = false;
    std::string error;
};

/// True when every doubling of the cascade lies in [lambda0, lambda1].
inline bool essentially_inside(const CascadeRecord& c, double lambda0, double lambda1)
{
    return !c.pd_lambdas.empty() && std::all_of(c.pd_lambdas.begin(), c.pd_lambdas.end(),
                                                [&](double l) { return l >= lambda0 && l <= lambda1; });
}

/// Continues the component of each attributed boundary orbit across the
/// slab and records the cascades it carries. Failures of a single trace
/// are recorded in its `error` field.
inline std::vector<BoundaryTrace> realize_prediction(const MapDefinition& map, const BoundaryCensus& census,
                                                     const CascadePrediction& prediction, int max_orbit_period,
                                                     const ContinuationConfig& cfg = {}, int min_doublings = 4,
                                                     int jobs = 0)
{
    std::vector<PeriodicOrbit> seeds;
    for (const auto& o : prediction.attributed)
        if (o.period <= max_orbit_period) seeds.push_back(o);
    std::vector<BoundaryTrace> out(seeds.size());
    const Interval domain{census.lambda0, census.lambda1};
    parallel_for(seeds.size(), jobs, [&](std::size_t i) {
        BoundaryTrace& r = out[i];
        r.orbit = seeds[i];
        try
        {
            r.trace = continue_component(map, seeds[i], domain, cfg);
            r.cascades = detect_cascades(r.trace, min_doublings, "boundary-" + std::to_string(i));
            for (const auto& c : r.cascades) r.cascade_inside = r.cascade_inside || essentially_inside(c, domain.lo, domain.hi);
            r.stem_period_ok = stem_period_check(r.trace, seeds[i]);
        }
        catch (const Error& e)
        {
            r.error = e.what();
        }
    });
    return out;
}

/// Number of cascades per base period over a set of traces, counting each
/// cascade that lies essentially in [lambda0, lambda1].
inline std::map<int, int> cascades_per_stem_period(const std::vector<BoundaryTrace>& traces, double lambda0, double lambda1)
{
    std::map<int, int> counts;
    for (const auto& t : traces)
        for (const auto& c : t.cascades)
            if (essentially_inside(c, lambda0, lambda1)) ++counts[c.base_period];
    return counts;
}

// ---------------------------------------------------------------------------
// Off-on-off

struct OffOnOffOptions
{
    CensusOptions census;
    ContinuationConfig continuation;
    /// at most this many nonflip saddles at Lambda2 are continued
    int max_seeds = 8;
    int min_doublings = 4;
};

struct OffOnOffComponent
{
    PeriodicOrbit seed;
    bool traced = false;
    /// raised by the trace (e.g. a non-generic branch point); seed excluded
    std::string excluded_reason;
    bool bounded = false;
    int cascades = 0;
    /// cascades on the component that has an end leaving [Lambda1, Lambda3]
    int unbounded_cascades = 0;
    Interval lambda_range;
    /// duplicate of an earlier seed's component
    bool duplicate = false;
};

struct OffOnOffReport
{
    double lambda1 = 0.0, lambda2 = 0.0, lambda3 = 0.0;
    int max_period = 0;
    BoundaryCensus left;
    BoundaryCensus right;
    /// orbits at Lambda1 and Lambda3 (all kinds)
    int k = 0;
    std::vector<OffOnOffComponent> components;
    int bounded_pairs = 0;
    int unbounded_cascades = 0;

    bool within_bound() const { return unbounded_cascades <= k; }
};

namespace detail
{

inline bool same_component(const ComponentTrace& a, const ComponentTrace& b)
{
    if (a.events.empty() || b.events.empty()) return false;
    auto key = [](const ComponentTrace& t) {
        std::vector<std::pair<int, double>> k;
        for (const auto& e : t.events) k.emplace_back(e.period, e.lambda);
        std::sort(k.begin(), k.end());
        return k;
    };
    const auto ka = key(a);
    const auto kb = key(b);
    int shared = 0;
    for (const auto& x : ka)
        for (const auto& y : kb)
            if (x.first == y.first && std::abs(x.second - y.second) <= 1e-6 * (1.0 + std::abs(x.second))) ++shared;
    return shared >= 2 || (shared >= 1 && (ka.size() == 1 || kb.size() == 1));
}

} // namespace detail

/// Censuses of [Lambda1, Lambda2] and [Lambda2, Lambda3], then follows up to
/// `max_seeds` nonflip saddles at Lambda2 in both directions. Components
/// ending in period-doubling accumulations at both ends are bounded and
/// carry a pair of cascades; cascades on components that leave the slab
/// are counted against the bound k.
inline OffOnOffReport off_on_off_census(const MapDefinition& map, double lambda1, double lambda2, double lambda3,
                                        int max_period, const OffOnOffOptions& opt = {})
{
    if (!(lambda1 < lambda2 && lambda2 < lambda3)) throw BadParameter("off_on_off_census needs Lambda1 < Lambda2 < Lambda3");
    OffOnOffReport rep;
    rep.lambda1 = lambda1;
    rep.lambda2 = lambda2;
    rep.lambda3 = lambda3;
    rep.max_period = max_period;
    rep.left = boundary_census(map, lambda1, lambda2, max_period, opt.census);
    rep.right = boundary_census(map, lambda2, lambda3, max_period, opt.census);
    rep.k = rep.left.total_at_lambda0 + rep.right.total_at_lambda1;

    // unstable nonflip orbits at Lambda2 (saddles; repellers in dimension one)
    std::vector<PeriodicOrbit> saddles;
    for (const auto* list : {&rep.left.entry_orbits, &rep.left.exit_orbits})
        for (const auto& o : *list)
            if (o.lambda == lambda2 && o.dim_u > 0 && (o.dim_u < map.dimension || map.dimension == 1)) saddles.push_back(o);
    detail::sort_orbits(saddles);
    if (static_cast<int>(saddles.size()) > opt.max_seeds) saddles.resize(static_cast<std::size_t>(opt.max_seeds));

    std::vector<ComponentTrace> traces(saddles.size());
    rep.components.resize(saddles.size());
    const Interval domain{lambda1, lambda3};
    parallel_for(saddles.size(), opt.census.jobs, [&](std::size_t i) {
        OffOnOffComponent& c = rep.components[i];
        c.seed = saddles[i];
        try
        {
            traces[i] = continue_component(map, saddles[i], domain, opt.continuation);
            c.traced = true;
        }
        catch (const Error& e)
        {
            c.excluded_reason = e.what();
        }
    });

    for (std::size_t i = 0; i < saddles.size(); ++i)
    {
        OffOnOffComponent& c = rep.components[i];
        if (!c.traced) continue;
        const ComponentTrace& t = traces[i];
        for (std::size_t j = 0; j < i && !c.duplicate; ++j)
            c.duplicate = rep.components[j].traced && !rep.components[j].duplicate && detail::same_component(t, traces[j]);
        double lo = t.snapshots.front().lambda, hi = lo;
        for (const auto& s : t.snapshots)
        {
            lo = std::min(lo, s.lambda);
            hi = std::max(hi, s.lambda);
        }
        c.lambda_range = {lo, hi};
        const auto cascades = detect_cascades(t, opt.min_doublings);
        c.cascades = static_cast<int>(cascades.size());
        c.bounded = t.bounded_arc();
        const bool leaves = t.termination == Termination::left_domain || t.start_termination == Termination::left_domain;
        if (leaves) c.unbounded_cascades = c.cascades;
        if (c.duplicate) continue;
        if (c.bounded && c.cascades >= 2) ++rep.bounded_pairs;
        rep.unbounded_cascades += c.unbounded_cascades;
    }
    return rep;
}

} // namespace cascade
