#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "combinatorics.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "maps.hpp"

namespace cascade
{

struct Classification
{
    int sigma_plus = 0;
    int sigma_minus = 0;
    int dim_u = 0;
    bool is_flip = false;
    int orbit_index = 1;
    bool hyperbolic = true;
};

namespace detail
{

inline bool is_real(const ScaledEigenvalue& e)
{
    // |Im mu| <= 1e-9 max(1, |mu|), evaluated on the mantissa
    const double floor = e.exponent > 1000 ? 0.0 : std::ldexp(1.0, static_cast<int>(-e.exponent));
    return std::abs(e.mantissa.imag()) <= 1e-9 * std::max(floor, std::abs(e.mantissa));
}

/// |mu| - 1 without overflow; only its sign and small values matter.
inline double modulus_minus_one(const ScaledEigenvalue& e)
{
    const double l = e.log_abs();
    if (l > 50.0) return std::numeric_limits<double>::infinity();
    return std::expm1(l);
}

} // namespace detail

inline Classification classify_scaled(const std::vector<ScaledEigenvalue>& eigs, double tol_eig = 1e-9)
{
    Classification c;
    bool minus_one = false;
    for (const auto& e : eigs)
    {
        const double dm = detail::modulus_minus_one(e);
        if (dm > 0.0) ++c.dim_u;
        if (!(std::abs(dm) > tol_eig)) c.hyperbolic = false;
        if (detail::is_real(e))
        {
            const bool positive = e.mantissa.real() > 0.0;
            if (dm > 0.0 && positive) ++c.sigma_plus;
            if (dm > 0.0 && !positive) ++c.sigma_minus;
            if (!positive && std::abs(dm) <= tol_eig) minus_one = true;
        }
    }
    c.is_flip = c.sigma_minus % 2 == 1 && !minus_one;
    c.orbit_index = c.sigma_minus % 2 == 1 ? 0 : (c.sigma_plus % 2 == 0 ? 1 : -1);
    return c;
}

/// sigma+, sigma-, dim_u, flip flag and orbit index from monodromy eigenvalues.
/// For non-hyperbolic input the index follows the same parity rule and
/// `hyperbolic` is false: the index is then undefined at the bifurcation.
inline Classification classify(const std::vector<Complex>& eigs, double tol_eig = 1e-9)
{
    std::vector<ScaledEigenvalue> scaled;
    for (const auto& e : eigs) scaled.push_back({e, 0});
    return classify_scaled(scaled, tol_eig);
}

struct PeriodicOrbit
{
    double lambda = 0.0;
    std::vector<Vec> points;
    int period = 0;
    std::vector<Complex> eigenvalues;
    /// log |mu| for each eigenvalue, finite even when the value overflows
    std::vector<double> log_moduli;
    int sigma_plus = 0;
    int sigma_minus = 0;
    int dim_u = 0;
    bool is_flip = false;
    int orbit_index = 1;
    bool hyperbolic = true;
    double residual = 0.0;

    bool nonflip() const { return sigma_minus % 2 == 0; }
    int dimension() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
};

/// Iterates the map p times from x and records the chain and the scaled
/// product of Jacobians.
struct OrbitChain
{
    std::vector<Vec> points;
    Vec image; ///< F^p(x)
    ScaledMatrix monodromy;
};

inline OrbitChain iterate_chain(const MapDefinition& map, double lambda, const Vec& x, int p, bool with_jacobian = true)
{
    OrbitChain chain;
    chain.points.reserve(static_cast<std::size_t>(p));
    chain.monodromy = ScaledMatrix::identity(map.dimension);
    Vec y = x;
    for (int i = 0; i < p; ++i)
    {
        chain.points.push_back(y);
        if (with_jacobian)
        {
            MapStep s = eval_step(map, lambda, y, false);
            chain.monodromy.left_multiply(s.jacobian);
            y = std::move(s.value);
        }
        else
        {
            y = eval_map(map, lambda, y);
        }
    }
    chain.image = y;
    return chain;
}

inline ScaledMatrix orbit_monodromy_scaled(const MapDefinition& map, double lambda, const std::vector<Vec>& points)
{
    ScaledMatrix m = ScaledMatrix::identity(map.dimension);
    const std::size_t p = points.size();
    for (std::size_t i = 0; i < p; ++i)
    {
        const Vec next = eval_map(map, lambda, points[i]);
        const double gap = inf_norm(state_difference(map, next, points[(i + 1) % p]));
        if (gap > 1e-6 * std::max(1.0, inf_norm(next)))
            throw NotAnOrbit("point " + std::to_string(i) + " misses its successor by " + std::to_string(gap));
        m.left_multiply(eval_jacobian(map, lambda, points[i]));
    }
    return m;
}

/// D_xF(points[p-1]) ... D_xF(points[0]).
inline Mat orbit_monodromy(const MapDefinition& map, double lambda, const std::vector<Vec>& points)
{
    const Mat m = orbit_monodromy_scaled(map, lambda, points).value();
    if (!m.allFinite()) throw NumericalOverflow("monodromy exceeds double range; use the scaled form");
    return m;
}

/// Classified orbit built from a basepoint already on (or near) a period-p
/// orbit. No Newton correction is applied.
inline PeriodicOrbit make_orbit(const MapDefinition& map, double lambda, const Vec& x, int p, double tol_eig = 1e-9)
{
    OrbitChain chain = iterate_chain(map, lambda, x, p);
    PeriodicOrbit o;
    o.lambda = lambda;
    o.period = p;
    o.points = std::move(chain.points);
    o.residual = inf_norm(state_difference(map, chain.image, x));
    const auto eigs = scaled_eigenvalues(chain.monodromy);
    for (const auto& e : eigs)
    {
        o.eigenvalues.push_back(e.value());
        o.log_moduli.push_back(e.log_abs());
    }
    const Classification c = classify_scaled(eigs, tol_eig);
    o.sigma_plus = c.sigma_plus;
    o.sigma_minus = c.sigma_minus;
    o.dim_u = c.dim_u;
    o.is_flip = c.is_flip;
    o.orbit_index = c.orbit_index;
    o.hyperbolic = c.hyperbolic;
    return o;
}

struct FindOrbitOptions
{
    double tol = 1e-11;
    int max_iterations = 50;
    int max_halvings = 6;
    int max_period = 256;
    /// two divisor-period iterates closer than this count as the same point
    double least_period_tol = 1e-6;
};

namespace detail
{

/// Newton on G(x) = F^p(x) - x. The residual floor of G grows with the
/// size of the monodromy, so convergence is judged against
/// tol * max(1, |M|) * max(1, |x|).
inline Vec newton_periodic(const MapDefinition& map, double lambda, Vec x, int p, const FindOrbitOptions& opt)
{
    const int n = map.dimension;
    auto residual = [&](const Vec& y, OrbitChain& chain, bool jac) {
        chain = iterate_chain(map, lambda, y, p, jac);
        return Vec(state_difference(map, chain.image, y));
    };

    OrbitChain chain;
    Vec g;
    try
    {
        g = residual(x, chain, true);
    }
    catch (const NumericalOverflow& e)
    {
        throw NoConvergence(std::string("initial point escapes: ") + e.what());
    }
    catch (const TrajectoryEscape& e)
    {
        throw NoConvergence(std::string("initial point escapes: ") + e.what());
    }

    for (int it = 0; it <= opt.max_iterations; ++it)
    {
        const Mat m = chain.monodromy.value();
        if (!m.allFinite()) throw NoConvergence("monodromy overflow during Newton");
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff()) * std::max(1.0, inf_norm(x));
        const double gn = inf_norm(g);
        const Mat a = m - Mat::Identity(n, n);
        Eigen::FullPivLU<Mat> lu(a);
        bool singular = !lu.isInvertible();
        for (const auto& e : scaled_eigenvalues(chain.monodromy))
            singular = singular || std::abs(e.value() - Complex(1.0, 0.0)) < 1e-12;
        if (singular)
        {
            // A singular point with a large residual is a minimum of |G|,
            // not an orbit.
            if (gn <= 1e-6 * scale)
                throw SingularSystem("monodromy eigenvalue within 1e-12 of +1 at lambda=" + std::to_string(lambda));
            throw NoConvergence("Newton stalled at a singular point with residual " + std::to_string(gn) +
                                " at lambda=" + std::to_string(lambda));
        }
        if (gn <= opt.tol * scale)
        {
            // one polishing step, kept only if it does not increase the residual
            try
            {
                const Vec trial = x + lu.solve(-g);
                OrbitChain trial_chain;
                const Vec trial_g = residual(trial, trial_chain, false);
                if (inf_norm(trial_g) <= gn) return trial;
            }
            catch (const Error&)
            {
            }
            return x;
        }
        if (it == opt.max_iterations) break;

        const Vec dx = lu.solve(-g);

        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, step *= 0.5)
        {
            const Vec trial = x + step * dx;
            OrbitChain trial_chain;
            Vec trial_g;
            try
            {
                trial_g = residual(trial, trial_chain, true);
            }
            catch (const NumericalOverflow&)
            {
                continue;
            }
            catch (const TrajectoryEscape&)
            {
                continue;
            }
            if (inf_norm(trial_g) < gn || h == opt.max_halvings)
            {
                x = trial;
                g = std::move(trial_g);
                chain = std::move(trial_chain);
                accepted = true;
                break;
            }
        }
        if (!accepted) throw NoConvergence("every damped Newton step escapes at lambda=" + std::to_string(lambda));
    }
    throw NoConvergence("Newton did not converge in " + std::to_string(opt.max_iterations) +
                        " iterations at lambda=" + std::to_string(lambda) + ", period " + std::to_string(p));
}

} // namespace detail

/// Periodic orbit of period dividing p near x0, classified. If the
/// converged point has a smaller least period d | p, the period-d orbit is
/// returned.
inline PeriodicOrbit find_orbit(const MapDefinition& map, double lambda, const Vec& x0, int p,
                                const FindOrbitOptions& opt = {})
{
    if (p < 1 || p > opt.max_period)
        throw BadParameter("period must be in [1, " + std::to_string(opt.max_period) + "], got " + std::to_string(p));
    check_input(map, x0);
    Vec x = detail::newton_periodic(map, lambda, x0, p, opt);

    for (int d : divisors(p))
    {
        if (d == p) break;
        const OrbitChain c = iterate_chain(map, lambda, x, d, false);
        if (inf_norm(state_difference(map, c.image, x)) <= opt.least_period_tol)
        {
            x = detail::newton_periodic(map, lambda, x, d, opt);
            return make_orbit(map, lambda, x, d);
        }
    }
    return make_orbit(map, lambda, x, p);
}

/// Rotates the orbit so that points[0] is the lexicographically smallest
/// point (angular coordinates compared after reduction).
inline PeriodicOrbit canonical_rotation(const MapDefinition& map, PeriodicOrbit o)
{
    if (o.points.size() < 2) return o;
    auto key = [&](const Vec& v) {
        std::vector<double> k(v.data(), v.data() + v.size());
        for (std::size_t i = 0; i < map.coordinate_periods.size() && i < k.size(); ++i)
        {
            const double per = map.coordinate_periods[i];
            if (per > 0.0) k[i] = k[i] - per * std::floor(k[i] / per);
        }
        return k;
    };
    std::size_t best = 0;
    auto best_key = key(o.points[0]);
    for (std::size_t i = 1; i < o.points.size(); ++i)
    {
        auto k = key(o.points[i]);
        if (k < best_key)
        {
            best = i;
            best_key = std::move(k);
        }
    }
    std::rotate(o.points.begin(), o.points.begin() + static_cast<std::ptrdiff_t>(best), o.points.end());
    return o;
}

/// Hausdorff distance between the point sets plus |lambda1 - lambda2|.
/// Coordinates with a nonzero entry in `periods` are compared modulo it.
inline double hausdorff_distance(const PeriodicOrbit& a, const PeriodicOrbit& b, std::span<const double> periods = {})
{
    if (a.dimension() != b.dimension() && !a.points.empty() && !b.points.empty())
        throw BadParameter("hausdorff_distance: dimension mismatch");
    auto directed = [&](const PeriodicOrbit& from, const PeriodicOrbit& to) {
        double worst = 0.0;
        for (const auto& p : from.points)
        {
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& q : to.points) nearest = std::min(nearest, wrapped_difference(p, q, periods).norm());
            worst = std::max(worst, nearest);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a)) + std::abs(a.lambda - b.lambda);
}

inline double hausdorff_distance(const MapDefinition& map, const PeriodicOrbit& a, const PeriodicOrbit& b)
{
    return hausdorff_distance(a, b, map.coordinate_periods);
}

// ---------------------------------------------------------------------------
// Symbolic seeding

struct SeedingOptions
{
    int pullback_rounds = 8;
    int inverse_iterations = 60;
    double dedupe_tol = 1e-6;
    /// slack when checking that orbit points lie in their cells
    double cell_slack = 1e-7;
};

namespace detail
{

inline Vec clamp_to(const Box& b, Vec y)
{
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = std::clamp(y[i], b.lo[i], b.hi[i]);
    return y;
}

/// Solves F(lambda, y) = target for y inside `cell` (Newton from the cell
/// center, clamped). Returns false when no solution is found in the cell.
inline bool inverse_branch(const MapDefinition& map, double lambda, const Box& cell, const Vec& target, Vec& y,
                           int iterations)
{
    y = cell.center();
    for (int it = 0; it < iterations; ++it)
    {
        MapStep s;
        try
        {
            s = eval_step(map, lambda, y, false);
        }
        catch (const Error&)
        {
            return false;
        }
        const Vec r = s.value - target;
        if (inf_norm(r) <= 1e-14 * std::max(1.0, inf_norm(target))) return true;
        Eigen::FullPivLU<Mat> lu(s.jacobian);
        if (!lu.isInvertible()) return false;
        const Vec next = clamp_to(cell, y - lu.solve(r));
        if (inf_norm(next - y) <= 1e-15 * std::max(1.0, inf_norm(y))) return inf_norm(r) <= 1e-9 * std::max(1.0, inf_norm(target));
        y = next;
    }
    return inf_norm(eval_map(map, lambda, y) - target) <= 1e-9 * std::max(1.0, inf_norm(target));
}

} // namespace detail

/// All least-period-k orbits of a horseshoe, one per cyclic symbol class.
/// A seed for each Lyndon word is built by pulling a point back along the
/// itinerary through the inverse branches, then polished with find_orbit.
inline std::vector<PeriodicOrbit> seed_orbits_symbolic(const MapDefinition& map, double lambda, int k,
                                                       const std::vector<Box>& partition,
                                                       const SeedingOptions& opt = {})
{
    if (k < 1) throw BadParameter("seed_orbits_symbolic needs k >= 1");
    if (partition.size() < 2) throw BadParameter("partition needs at least two cells");
    for (std::size_t i = 0; i < partition.size(); ++i)
        for (std::size_t j = i + 1; j < partition.size(); ++j)
        {
            const Box& a = partition[i];
            const Box& b = partition[j];
            bool overlap = true;
            for (int c = 0; c < a.dimension(); ++c)
                overlap = overlap && a.lo[c] < b.hi[c] && b.lo[c] < a.hi[c];
            if (overlap) throw BadParameter("partition cells overlap");
        }

    std::vector<PeriodicOrbit> found;
    std::vector<std::string> failed;
    const int alphabet = static_cast<int>(partition.size());
    for_each_lyndon_word(alphabet, k, [&](const std::vector<int>& word) {
        auto cell = [&](int i) -> const Box& { return partition[static_cast<std::size_t>(word[static_cast<std::size_t>(i)])]; };
        Vec x0 = cell(0).center();
        bool ok = true;
        for (int round = 0; round < opt.pullback_rounds && ok; ++round)
        {
            Vec target = x0;
            for (int i = k - 1; i >= 0 && ok; --i)
            {
                Vec y;
                ok = detail::inverse_branch(map, lambda, cell(i), target, y, opt.inverse_iterations);
                target = y;
            }
            if (ok) x0 = target;
        }
        if (ok)
        {
            try
            {
                PeriodicOrbit o = find_orbit(map, lambda, x0, k);
                ok = o.period == k;
                for (int i = 0; i < k && ok; ++i)
                {
                    const Box& b = cell(i);
                    const Vec& pt = o.points[static_cast<std::size_t>(i)];
                    ok = ((pt - b.lo).array() >= -opt.cell_slack).all() && ((b.hi - pt).array() >= -opt.cell_slack).all();
                }
                if (ok)
                {
                    o = canonical_rotation(map, std::move(o));
                    const bool duplicate = std::any_of(found.begin(), found.end(), [&](const PeriodicOrbit& q) {
                        return hausdorff_distance(map, q, o) < opt.dedupe_tol;
                    });
                    if (!duplicate) found.push_back(std::move(o));
                }
            }
            catch (const Error&)
            {
                ok = false;
            }
        }
        if (!ok) failed.push_back(word_to_string(word));
    });
    if (!failed.empty())
        throw IncompleteEnumeration(std::to_string(failed.size()) + " of the period-" + std::to_string(k) +
                                        " words could not be realized",
                                    failed);
    return found;
}

} // namespace cascade
