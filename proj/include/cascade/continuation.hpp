#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "maps.hpp"
#include "orbits.hpp"

namespace cascade
{

enum class EventKind
{
    saddle_node,
    period_doubling,
    hopf
};

inline const char* to_string(EventKind k)
{
    switch (k)
    {
    case EventKind::saddle_node: return "saddle_node";
    case EventKind::period_doubling: return "period_doubling";
    case EventKind::hopf: return "hopf";
    }
    return "?";
}

enum class Termination
{
    left_domain,
    max_period_reached,
    step_underflow,
    closed_loop,
    max_arclength
};

inline const char* to_string(Termination t)
{
    switch (t)
    {
    case Termination::left_domain: return "left_domain";
    case Termination::max_period_reached: return "max_period_reached";
    case Termination::step_underflow: return "step_underflow";
    case Termination::closed_loop: return "closed_loop";
    case Termination::max_arclength: return "max_arclength";
    }
    return "?";
}

struct BifurcationEvent
{
    EventKind kind = EventKind::saddle_node;
    double lambda = 0.0;
    /// refined non-hyperbolic orbit (the period-p parent for doublings)
    PeriodicOrbit orbit;
    int period = 0;
    /// orbit index of the trace just before and just after the event
    int incoming_index = 0;
    int outgoing_index = 0;

    // Period doubling only: index of the nonflip and the flip period-p
    // sides and of the period-2p branch.
    int parent_nonflip_index = 0;
    int parent_flip_index = 0;
    int doubled_index = 0;
    bool doubled_known = false;
    /// true when the doubling was met from the period-2p side
    bool halving = false;

    /// the event lies between snapshots[position - 1] and snapshots[position]
    std::size_t position = 0;
    double arclength = 0.0;
};

struct OrientationSample
{
    double arclength = 0.0;
    int dlambda_sign = 0;
    int index = 0;
};

/// Polyline of nonflip orbits along one component, stored in the direction
/// of the index orientation (lambda increases where the index is -1).
struct ComponentTrace
{
    std::string map_name;
    Interval domain;
    std::vector<PeriodicOrbit> snapshots;
    std::vector<double> arclength;
    std::vector<BifurcationEvent> events;
    std::vector<OrientationSample> orientation_sign_history;
    /// end reached by following the orientation
    Termination termination = Termination::left_domain;
    /// end reached by following it backwards from the seed
    Termination start_termination = Termination::left_domain;
    std::size_t seed_position = 0;
    int max_period = 0;
    std::vector<std::string> notes;

    bool bounded_arc() const
    {
        return termination == Termination::max_period_reached && start_termination == Termination::max_period_reached;
    }
    int min_period() const
    {
        int m = std::numeric_limits<int>::max();
        for (const auto& s : snapshots) m = std::min(m, s.period);
        return m;
    }
};

struct ContinuationConfig
{
    /// steps in normalized arclength: actual step = h (1 + max(|lambda|, |x|))
    double initial_step = 1e-3;
    double max_step = 1e-2;
    double min_step = 1e-12;
    double growth = 1.3;
    int easy_steps_before_growth = 3;
    int max_corrector_iterations = 5;
    double corrector_tol = 1e-11;
    double event_tol = 1e-10;
    double tol_eig = 1e-9;
    int max_period_factor = 64;
    /// absolute cap on the period (0 = none)
    int max_period = 0;
    long max_steps = 200000;
    double max_arclength = 1e5;
    int min_doublings = 4;
    /// largest accepted change of asinh|mu| per step (guards against
    /// the corrector jumping to another branch)
    double max_multiplier_change = 1.5;
    std::vector<double> pd_epsilons = {1e-4, 1e-3, 1e-5, 1e-2, 1e-6, 1e-7, 1e-8};
    double closed_loop_tol = 1e-7;
    /// optional bound on the state; leaving it ends the trace as left_domain
    std::optional<Box> state_box;
};

namespace detail
{

/// F^p - x at (lambda, x) together with its (N x (N+1)) Jacobian
/// [dF^p/dlambda, M - I] and the scaled monodromy.
struct ExtendedEval
{
    Vec g;
    Mat jac;
    ScaledMatrix mono;
    std::vector<Vec> points;
    double scale = 1.0;
};

inline ExtendedEval extended_eval(const MapDefinition& map, double lambda, const Vec& x, int p)
{
    const int n = map.dimension;
    ExtendedEval e;
    e.mono = ScaledMatrix::identity(n);
    Vec d = Vec::Zero(n);
    Vec y = x;
    e.points.reserve(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k)
    {
        e.points.push_back(y);
        MapStep s = eval_step(map, lambda, y, true);
        d = s.jacobian * d + s.parameter_derivative;
        e.mono.left_multiply(s.jacobian);
        y = std::move(s.value);
    }
    const Mat m = e.mono.value();
    if (!m.allFinite() || !d.allFinite()) throw NumericalOverflow("extended Jacobian overflow at period " + std::to_string(p));
    e.g = state_difference(map, y, x);
    e.jac.resize(n, n + 1);
    e.jac.col(0) = d;
    e.jac.rightCols(n) = m - Mat::Identity(n, n);
    e.scale = std::max(1.0, m.cwiseAbs().maxCoeff()) * std::max(1.0, inf_norm(x));
    return e;
}

inline Vec pack(double lambda, const Vec& x)
{
    Vec y(x.size() + 1);
    y[0] = lambda;
    y.tail(x.size()) = x;
    return y;
}

inline Vec null_vector(const Mat& jac)
{
    Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeFullV);
    Vec t = svd.matrixV().col(jac.cols() - 1);
    return t / t.norm();
}

/// Signs of the three test functions at an orbit:
/// det(M - I), det(M + I) and the parity of complex pairs outside the circle.
struct TestSigns
{
    int plus = 1;
    int minus = 1;
    int hopf = 1;
    int complex_pairs = 0;
};

inline TestSigns test_signs(const std::vector<ScaledEigenvalue>& eigs)
{
    TestSigns s;
    for (const auto& e : eigs)
    {
        const bool real = is_real(e);
        const double l = e.log_abs();
        if (real)
        {
            const bool negative = e.mantissa.real() < 0.0;
            if (negative || l < 0.0) s.plus = -s.plus;
            if (negative && l > 0.0) s.minus = -s.minus;
        }
        else if (e.mantissa.imag() > 0.0)
        {
            ++s.complex_pairs;
            if (l > 0.0) s.hopf = -s.hopf;
        }
    }
    return s;
}

struct Point
{
    Vec y;
    int period = 1;
    ExtendedEval eval;
    PeriodicOrbit orbit;
    TestSigns signs;
};

inline PeriodicOrbit orbit_from_eval(const MapDefinition& map, double lambda, const ExtendedEval& e, int p,
                                     double tol_eig)
{
    PeriodicOrbit o;
    o.lambda = lambda;
    o.period = p;
    o.points = e.points;
    o.residual = inf_norm(e.g);
    const auto eigs = scaled_eigenvalues(e.mono);
    for (const auto& v : eigs)
    {
        o.eigenvalues.push_back(v.value());
        o.log_moduli.push_back(v.log_abs());
    }
    const Classification c = classify_scaled(eigs, tol_eig);
    o.sigma_plus = c.sigma_plus;
    o.sigma_minus = c.sigma_minus;
    o.dim_u = c.dim_u;
    o.is_flip = c.is_flip;
    o.orbit_index = c.orbit_index;
    o.hyperbolic = c.hyperbolic;
    (void)map;
    return o;
}

inline Point make_point(const MapDefinition& map, const Vec& y, int p, ExtendedEval e, double tol_eig)
{
    Point pt;
    pt.y = y;
    pt.period = p;
    pt.orbit = orbit_from_eval(map, y[0], e, p, tol_eig);
    pt.signs = test_signs(scaled_eigenvalues(e.mono));
    pt.eval = std::move(e);
    return pt;
}

/// Newton on [F^p - x; t.(y - y_ref)] = 0 from y0. Returns nullopt when it
/// does not converge within `max_iter` updates.
inline std::optional<std::pair<Vec, ExtendedEval>> correct(const MapDefinition& map, Vec y, int p, const Vec& t,
                                                           const Vec& y_ref, int max_iter, double tol,
                                                           int* iterations = nullptr)
{
    const int n = map.dimension;
    for (int it = 0; it <= max_iter; ++it)
    {
        ExtendedEval e;
        try
        {
            e = extended_eval(map, y[0], y.tail(n), p);
        }
        catch (const Error&)
        {
            return std::nullopt;
        }
        const double constraint = t.dot(y - y_ref);
        if (inf_norm(e.g) <= tol * e.scale && std::abs(constraint) <= 1e-13 * (1.0 + inf_norm(y)))
        {
            if (iterations) *iterations = it;
            return std::make_pair(y, std::move(e));
        }
        if (it == max_iter) break;
        Mat a(n + 1, n + 1);
        a.topRows(n) = e.jac;
        a.row(n) = t.transpose();
        Vec rhs(n + 1);
        rhs.head(n) = -e.g;
        rhs[n] = -constraint;
        Eigen::FullPivLU<Mat> lu(a);
        if (!lu.isInvertible()) return std::nullopt;
        y += lu.solve(rhs);
        if (!y.allFinite()) return std::nullopt;
    }
    return std::nullopt;
}

inline double half_gap(const MapDefinition& map, const ExtendedEval& e, int p)
{
    if (p % 2 != 0 || e.points.empty()) return std::numeric_limits<double>::infinity();
    double gap = 0.0;
    const std::size_t h = static_cast<std::size_t>(p / 2);
    for (std::size_t i = 0; i < h; ++i)
        gap = std::max(gap, inf_norm(state_difference(map, e.points[i + h], e.points[i])));
    return gap;
}

/// Largest change of asinh|mu| between two orbits, eigenvalues sorted by modulus.
inline double multiplier_jump(const PeriodicOrbit& a, const PeriodicOrbit& b)
{
    auto profile = [](const PeriodicOrbit& o) {
        std::vector<double> v;
        for (double l : o.log_moduli) v.push_back(l > 20.0 ? l + std::numbers::ln2 : std::asinh(std::exp(l)));
        std::sort(v.begin(), v.end());
        return v;
    };
    const auto pa = profile(a), pb = profile(b);
    if (pa.size() != pb.size()) return std::numeric_limits<double>::infinity();
    double m = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) m = std::max(m, std::abs(pa[i] - pb[i]));
    return m;
}

/// Distance of the defining eigenvalue from its target: +1 for folds,
/// -1 for doublings, the unit circle for a complex pair.
inline double defining_error(EventKind kind, const std::vector<ScaledEigenvalue>& eigs)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : eigs)
    {
        const double l = e.log_abs();
        if (l > 50.0) continue;
        const Complex mu = e.value();
        switch (kind)
        {
        case EventKind::saddle_node: best = std::min(best, std::abs(mu - Complex(1.0, 0.0))); break;
        case EventKind::period_doubling: best = std::min(best, std::abs(mu + Complex(1.0, 0.0))); break;
        case EventKind::hopf:
            if (!is_real(e)) best = std::min(best, std::abs(std::expm1(l)));
            break;
        }
    }
    return best;
}

inline int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

} // namespace detail

/// Refines a bifurcation between two snapshots of the same period by
/// bisection along the secant: each trial point is corrected onto the
/// component inside the hyperplane (b - a).(y - y_theta) = 0.
inline BifurcationEvent detect_and_refine_event(const PeriodicOrbit& a, const PeriodicOrbit& b, const MapDefinition& map,
                                                const ContinuationConfig& cfg = {})
{
    if (a.period != b.period) throw BadParameter("bracket snapshots must share the period");
    const int p = a.period;
    const int n = map.dimension;
    Vec ya = detail::pack(a.lambda, a.points.at(0));
    Vec yb = detail::pack(b.lambda, b.points.at(0));
    // Match basepoints: use the point of b nearest to a's basepoint.
    {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b.points)
        {
            const double d = inf_norm(state_difference(map, q, a.points[0]));
            if (d < best)
            {
                best = d;
                yb.tail(n) = q;
            }
        }
    }
    auto signs_at = [&](const Vec& y, detail::ExtendedEval& e) {
        e = detail::extended_eval(map, y[0], y.tail(n), p);
        return detail::test_signs(scaled_eigenvalues(e.mono));
    };
    detail::ExtendedEval ea, eb;
    const auto sa = signs_at(ya, ea);
    const auto sb = signs_at(yb, eb);
    const bool plus = sa.plus != sb.plus;
    const bool minus = sa.minus != sb.minus;
    const bool hopf = sa.complex_pairs == sb.complex_pairs && sa.complex_pairs > 0 && sa.hopf != sb.hopf;
    const int changed = int(plus) + int(minus) + int(hopf);
    if (changed == 0) throw BadParameter("no test function changes sign across the bracket");
    if (changed > 1) throw AmbiguousEvent("several test functions change sign between lambda=" + std::to_string(a.lambda) +
                                          " and " + std::to_string(b.lambda));
    const EventKind kind = plus ? EventKind::saddle_node : minus ? EventKind::period_doubling : EventKind::hopf;
    auto flag = [&](const detail::TestSigns& s) { return plus ? s.plus : minus ? s.minus : s.hopf; };
    const int flag_a = flag(sa);

    auto error_of = [&](const detail::ExtendedEval& e) {
        return detail::defining_error(kind, scaled_eigenvalues(e.mono));
    };
    const double floor = 4e-16 * (1.0 + inf_norm(ya));
    Vec lo = ya, hi = yb;
    detail::ExtendedEval elo = ea, ehi = eb;
    for (int iter = 0; iter < 200; ++iter)
    {
        const double width = inf_norm(hi - lo);
        if (width <= floor) break;
        if (width <= cfg.event_tol && std::min(error_of(elo), error_of(ehi)) <= 1e-8) break;
        const Vec d = hi - lo;
        const Vec t = d / d.norm();
        const Vec mid = 0.5 * (lo + hi);
        auto c = detail::correct(map, mid, p, t, mid, 20, cfg.corrector_tol);
        if (!c) break;
        const auto s = detail::test_signs(scaled_eigenvalues(c->second.mono));
        if (flag(s) == flag_a)
        {
            lo = c->first;
            elo = std::move(c->second);
        }
        else
        {
            hi = c->first;
            ehi = std::move(c->second);
        }
    }
    BifurcationEvent ev;
    ev.kind = kind;
    ev.period = p;
    // best of the two bracket ends and the corrected midpoint
    detail::ExtendedEval em = error_of(elo) <= error_of(ehi) ? elo : ehi;
    ev.lambda = error_of(elo) <= error_of(ehi) ? lo[0] : hi[0];
    {
        const Vec d = hi - lo;
        const double nd = d.norm();
        const Vec mid = 0.5 * (lo + hi);
        auto c = nd > 0.0 ? detail::correct(map, mid, p, d / nd, mid, 20, cfg.corrector_tol) : std::nullopt;
        if (c && error_of(c->second) < error_of(em))
        {
            ev.lambda = c->first[0];
            em = std::move(c->second);
        }
    }
    ev.orbit = detail::orbit_from_eval(map, ev.lambda, em, p, cfg.tol_eig);
    ev.incoming_index = a.orbit_index;
    ev.outgoing_index = b.orbit_index;
    if (kind == EventKind::period_doubling)
    {
        const bool a_nonflip = a.nonflip();
        ev.parent_nonflip_index = a_nonflip ? a.orbit_index : b.orbit_index;
        ev.parent_flip_index = a_nonflip ? b.orbit_index : a.orbit_index;
    }
    return ev;
}

namespace detail
{

struct SwitchResult
{
    PeriodicOrbit orbit;
    Vec y;
    Vec tangent;
    /// distance of the starting point from the doubling point
    double offset = 0.0;
};

/// Period-2p orbit near x* + eps v from the extended system
/// F^{2p}(lambda, x) - x = 0, v.(x - x*) = eps.
inline std::optional<Vec> solve_doubled(const MapDefinition& map, double lambda_star, const Vec& x_star, const Vec& v,
                                        int p2, double eps, double tol)
{
    const int n = map.dimension;
    Vec y = pack(lambda_star, x_star + eps * v);
    double last_update = std::numeric_limits<double>::infinity();
    int polish = 0;
    for (int it = 0; it < 40; ++it)
    {
        ExtendedEval e;
        try
        {
            e = extended_eval(map, y[0], y.tail(n), p2);
        }
        catch (const Error&)
        {
            return std::nullopt;
        }
        const double c = v.dot(Vec(y.tail(n) - x_star)) - eps;
        const bool converged = inf_norm(e.g) <= tol * e.scale && std::abs(c) <= 1e-13 * std::max(1.0, inf_norm(x_star));
        // near the doubling the system is poorly conditioned: keep polishing
        // until the update itself is negligible
        if (converged && last_update <= 1e-14 * (1.0 + inf_norm(y))) return y;
        if (converged && ++polish > 3) return y;
        Mat a(n + 1, n + 1);
        a.topRows(n) = e.jac;
        a(n, 0) = 0.0;
        a.row(n).tail(n) = v.transpose();
        Vec rhs(n + 1);
        rhs.head(n) = -e.g;
        rhs[n] = -c;
        Eigen::FullPivLU<Mat> lu(a);
        if (!lu.isInvertible()) return std::nullopt;
        const Vec dy = lu.solve(rhs);
        last_update = inf_norm(dy);
        y += dy;
        if (!y.allFinite()) return std::nullopt;
    }
    return std::nullopt;
}

/// Accepts a period-2p solution only if it sits next to the parent point,
/// is not the parent itself and still carries a multiplier near +1.
inline bool valid_doubled(const MapDefinition& map, const Vec& y, int p, double eps, double lambda_star,
                          const Vec& x_star, double tol_eig, PeriodicOrbit& out)
{
    const int n = map.dimension;
    if (std::abs(y[0] - lambda_star) > 0.05 * (1.0 + std::abs(lambda_star))) return false;
    if (inf_norm(state_difference(map, y.tail(n), x_star)) > 10.0 * std::abs(eps)) return false;
    try
    {
        const ExtendedEval e = extended_eval(map, y[0], y.tail(n), 2 * p);
        if (half_gap(map, e, 2 * p) < 0.1 * std::abs(eps)) return false;
        out = orbit_from_eval(map, y[0], e, 2 * p, tol_eig);
        bool near_one = false;
        for (const auto& mu : out.eigenvalues) near_one = near_one || std::abs(mu - Complex(1.0, 0.0)) < 0.5;
        return near_one && out.nonflip();
    }
    catch (const Error&)
    {
        return false;
    }
}

inline SwitchResult switch_branch_pd_full(const BifurcationEvent& event, const MapDefinition& map,
                                          const ContinuationConfig& cfg)
{
    if (event.kind != EventKind::period_doubling) throw BadParameter("switch_branch_pd needs a period-doubling event");
    const int p = event.period;
    const int n = map.dimension;
    const Vec x_star = event.orbit.points.at(0);
    const double lambda_star = event.lambda;
    const Mat mono = orbit_monodromy_scaled(map, lambda_star, event.orbit.points).mantissa;
    Vec v = eigenvector_near(mono, -1.0);
    // The sign of v is arbitrary; both signs lie on the same period-2p orbit.
    for (double eps : cfg.pd_epsilons)
    {
        auto y1 = solve_doubled(map, lambda_star, x_star, v, 2 * p, eps, cfg.corrector_tol);
        if (!y1) continue;
        auto y2 = solve_doubled(map, lambda_star, x_star, v, 2 * p, 2.0 * eps, cfg.corrector_tol);
        if (!y2) continue;
        PeriodicOrbit o1, o2;
        if (!valid_doubled(map, *y1, p, eps, lambda_star, x_star, cfg.tol_eig, o1)) continue;
        if (!valid_doubled(map, *y2, p, 2.0 * eps, lambda_star, x_star, cfg.tol_eig, o2)) continue;
        const Vec d = *y2 - *y1;
        return {o1, *y1, d / d.norm(), inf_norm(*y1 - pack(lambda_star, x_star))};
    }
    // Fallback: fixed-lambda Newton for the period-2p orbit on either side.
    for (double delta : {1e-8, 1e-6, 1e-4})
        for (int side : {1, -1})
        {
            const double scale = 1.0 + std::abs(lambda_star);
            const double eps = cfg.pd_epsilons.empty() ? 1e-4 : cfg.pd_epsilons.front();
            try
            {
                const double l1 = lambda_star + side * delta * scale;
                const double l2 = lambda_star + side * 2.0 * delta * scale;
                const PeriodicOrbit o1 = find_orbit(map, l1, x_star + eps * v, 2 * p);
                if (o1.period != 2 * p || !o1.nonflip()) continue;
                const PeriodicOrbit o2 = find_orbit(map, l2, o1.points[0], 2 * p);
                if (o2.period != 2 * p) continue;
                const Vec y1 = pack(l1, o1.points[0]);
                const Vec y2 = pack(l2, o2.points[0]);
                const Vec d = y2 - y1;
                return {o1, y1, d / d.norm(), inf_norm(y1 - pack(lambda_star, x_star))};
            }
            catch (const Error&)
            {
            }
        }
    (void)n;
    throw BranchSwitchFailure("no period-" + std::to_string(2 * p) + " orbit found near lambda=" +
                              std::to_string(lambda_star));
}

} // namespace detail

/// Period-2p orbit born at a period-doubling event.
inline PeriodicOrbit switch_branch_pd(const BifurcationEvent& event, const MapDefinition& map,
                                      const ContinuationConfig& cfg = {})
{
    return detail::switch_branch_pd_full(event, map, cfg).orbit;
}

namespace detail
{

/// One direction of a component walk.
struct Part
{
    std::vector<PeriodicOrbit> snapshots;
    std::vector<double> arclength;
    std::vector<int> dlambda_sign;
    std::vector<BifurcationEvent> events; ///< position = index of the snapshot after the event
    Termination termination = Termination::left_domain;
    std::vector<std::string> notes;
};

class Walker
{
public:
    Walker(const MapDefinition& map, const PeriodicOrbit& seed, Interval domain, const ContinuationConfig& cfg)
        : map_(map), seed_(seed), domain_(domain), cfg_(cfg), n_(map.dimension)
    {
        max_period_ = cfg.max_period_factor * seed.period;
        if (cfg.max_period > 0) max_period_ = std::min(max_period_, cfg.max_period);
    }

    int max_period() const { return max_period_; }

    Part run(const Point& start, int direction)
    {
        Part part;
        Point cur = start;
        Vec tau = oriented_tangent(cur, direction);
        double h = cfg_.initial_step;
        int easy = 0;
        double s = 0.0;
        push(part, cur, tau, s);

        for (long step = 0;; ++step)
        {
            if (step >= cfg_.max_steps || s > cfg_.max_arclength)
            {
                part.termination = Termination::max_arclength;
                return part;
            }
            const double h_act = h * (1.0 + std::max(std::abs(cur.y[0]), inf_norm(cur.y.tail(n_))));
            const Vec y_pred = cur.y + h_act * tau;
            int iters = 0;
            auto c = correct(map_, y_pred, cur.period, tau, y_pred, cfg_.max_corrector_iterations, cfg_.corrector_tol,
                             &iters);
            std::optional<Point> next;
            Vec tau_new;
            if (c && (c->first - y_pred).norm() <= 0.5 * h_act)
            {
                tau_new = null_vector(c->second.jac);
                if (tau_new.dot(tau) < 0.0) tau_new = -tau_new;
                if (tau_new.dot(tau) >= 0.5)
                {
                    Point cand = make_point(map_, c->first, cur.period, std::move(c->second), cfg_.tol_eig);
                    if (multiplier_jump(cur.orbit, cand.orbit) <= cfg_.max_multiplier_change) next = std::move(cand);
                }
            }
            if (!next)
            {
                easy = 0;
                h *= 0.5;
                if (h < cfg_.min_step)
                {
                    if (try_halving(part, cur, tau, s)) { h = restart_step(restart_offset_, cur.y); continue; }
                    part.termination = Termination::step_underflow;
                    return part;
                }
                continue;
            }

            // Left the parameter slab or the state box.
            if (!domain_.contains(next->y[0]) ||
                (cfg_.state_box && !cfg_.state_box->contains(next->y.tail(n_))))
            {
                part.termination = Termination::left_domain;
                return part;
            }

            const TestSigns& a = cur.signs;
            const TestSigns& b = next->signs;
            const bool plus = a.plus != b.plus;
            const bool minus = a.minus != b.minus;
            const bool hopf = a.complex_pairs == b.complex_pairs && a.complex_pairs > 0 && a.hopf != b.hopf;

            // On an even-period branch the corrector may land on the
            // half-period parent (reject), or the step may pass the vertex
            // where the branch folds back onto its own doubling point.
            if (cur.period % 2 == 0)
            {
                const double gap = half_gap(map_, next->eval, cur.period);
                const double size = 1.0 + inf_norm(next->y.tail(n_));
                if (gap < 1e-7 * size)
                {
                    easy = 0;
                    h *= 0.5;
                    if (h < cfg_.min_step)
                    {
                        if (try_halving(part, cur, tau, s)) { h = restart_step(restart_offset_, cur.y); continue; }
                        part.termination = Termination::step_underflow;
                        return part;
                    }
                    continue;
                }
                const bool reversal = sign_of(tau_new[0]) != sign_of(tau[0]) && !plus;
                if (reversal && half_gap(map_, cur.eval, cur.period) < 20.0 * h_act)
                {
                    if (try_halving(part, cur, tau, s))
                    {
                        h = restart_step(restart_offset_, cur.y);
                        easy = 0;
                        continue;
                    }
                    part.termination = Termination::step_underflow;
                    part.notes.push_back("period halving failed near lambda=" + std::to_string(cur.y[0]));
                    return part;
                }
            }

            const int changed = int(plus) + int(minus) + int(hopf);
            if (changed > 1)
            {
                easy = 0;
                h *= 0.5;
                if (h < cfg_.min_step)
                    throw AmbiguousEvent("several test functions change sign at lambda=" + std::to_string(cur.y[0]));
                continue;
            }

            if (changed == 1 && h > 8.0 * cfg_.min_step && !half_step_agrees(cur, tau, h_act, *next))
            {
                easy = 0;
                h *= 0.5;
                continue;
            }

            if (changed == 1)
            {
                // det(M - I) changing sign without a fold in lambda is a
                // branch point (transcritical or symmetry pitchfork).
                if (plus && sign_of(tau_new[0]) == sign_of(tau[0]))
                    throw AmbiguousEvent("branch point with a multiplier through +1 and no fold near lambda=" +
                                         std::to_string(0.5 * (cur.y[0] + next->y[0])));
                BifurcationEvent ev;
                try
                {
                    ev = detect_and_refine_event(cur.orbit, next->orbit, map_, cfg_);
                }
                catch (const AmbiguousEvent&)
                {
                    h *= 0.5;
                    if (h < cfg_.min_step) throw;
                    continue;
                }
                ev.arclength = s + (next->y - cur.y).norm() * 0.5;
                if (ev.kind == EventKind::period_doubling)
                {
                    if (next->orbit.nonflip())
                    {
                        // moving from the flip side cannot happen on a nonflip trace
                        part.notes.push_back("doubling entered from the flip side at lambda=" + std::to_string(ev.lambda));
                    }
                    SwitchResult sw;
                    try
                    {
                        sw = switch_branch_pd_full(ev, map_, cfg_);
                    }
                    catch (const BranchSwitchFailure& e)
                    {
                        ev.position = part.snapshots.size();
                        part.events.push_back(ev);
                        part.notes.push_back(e.what());
                        part.termination = Termination::step_underflow;
                        return part;
                    }
                    ev.doubled_index = sw.orbit.orbit_index;
                    ev.doubled_known = true;
                    ev.outgoing_index = sw.orbit.orbit_index;
                    ev.position = part.snapshots.size();
                    part.events.push_back(ev);
                    if (2 * cur.period > max_period_)
                    {
                        part.termination = Termination::max_period_reached;
                        return part;
                    }
                    ExtendedEval e = extended_eval(map_, sw.y[0], sw.y.tail(n_), 2 * cur.period);
                    Point p2 = make_point(map_, sw.y, 2 * cur.period, std::move(e), cfg_.tol_eig);
                    s += (p2.y - cur.y).norm();
                    cur = std::move(p2);
                    tau = sw.tangent;
                    push(part, cur, tau, s);
                    h = restart_step(sw.offset, cur.y);
                    easy = 0;
                    continue;
                }
                ev.position = part.snapshots.size();
                part.events.push_back(ev);
            }

            s += (next->y - cur.y).norm();
            cur = std::move(*next);
            tau = tau_new;
            push(part, cur, tau, s);

            if (closed_loop(cur, tau, s))
            {
                part.termination = Termination::closed_loop;
                return part;
            }

            if (iters <= 3)
            {
                if (++easy >= cfg_.easy_steps_before_growth)
                {
                    h = std::min(cfg_.max_step, h * cfg_.growth);
                    easy = 0;
                }
            }
            else
            {
                easy = 0;
            }
        }
    }

private:
    Vec oriented_tangent(const Point& p, int direction) const
    {
        Vec t = null_vector(p.eval.jac);
        const int phi = p.orbit.orbit_index;
        if (t[0] * (-phi) * direction < 0.0) t = -t;
        return t;
    }

    /// Step size after a branch change: comparable to the distance from the
    /// bifurcation point so the first step stays on the new branch.
    double restart_step(double offset, const Vec& y) const
    {
        const double scale = 1.0 + std::max(std::abs(y[0]), inf_norm(y.tail(n_)));
        return std::clamp(offset / scale, 16.0 * cfg_.min_step, cfg_.initial_step);
    }

    /// The half step from `cur` must land on the same smooth branch as `next`.
    bool half_step_agrees(const Point& cur, const Vec& tau, double h_act, const Point& next) const
    {
        const double hh = 0.5 * h_act;
        const Vec y_pred = cur.y + hh * tau;
        auto c = correct(map_, y_pred, cur.period, tau, y_pred, cfg_.max_corrector_iterations, cfg_.corrector_tol);
        if (!c || (c->first - y_pred).norm() > 0.5 * hh) return false;
        const Point mid = make_point(map_, c->first, cur.period, std::move(c->second), cfg_.tol_eig);
        if (multiplier_jump(cur.orbit, mid.orbit) > cfg_.max_multiplier_change ||
            multiplier_jump(mid.orbit, next.orbit) > cfg_.max_multiplier_change)
            return false;
        // next must continue the curve through mid
        const double d1 = (mid.y - cur.y).norm(), d2 = (next.y - mid.y).norm(), d = (next.y - cur.y).norm();
        return d1 + d2 <= 1.2 * d;
    }

    void push(Part& part, const Point& p, const Vec& tau, double s) const
    {
        part.snapshots.push_back(p.orbit);
        part.arclength.push_back(s);
        part.dlambda_sign.push_back(sign_of(tau[0]));
    }

    bool closed_loop(const Point& cur, const Vec& tau, double s) const
    {
        (void)tau;
        if (cur.period != seed_.period) return false;
        const double h0 = cfg_.initial_step * (1.0 + std::max(std::abs(seed_.lambda), inf_norm(seed_.points[0])));
        if (s <= 10.0 * h0) return false;
        const double d = hausdorff_distance(map_, cur.orbit, seed_);
        if (d > cfg_.max_step * (1.0 + std::max(std::abs(cur.y[0]), inf_norm(cur.y.tail(n_))))) return false;
        // Project onto the hyperplane through the seed, using the orbit point
        // of the current snapshot closest to the seed's basepoint.
        Vec z = cur.orbit.points[0];
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : cur.orbit.points)
        {
            const double dq = inf_norm(state_difference(map_, q, seed_.points[0]));
            if (dq < best)
            {
                best = dq;
                z = q;
            }
        }
        try
        {
            const Vec yz = pack(cur.y[0], z);
            const ExtendedEval e = extended_eval(map_, yz[0], z, cur.period);
            const Vec t = null_vector(e.jac);
            const Vec ys = pack(seed_.lambda, seed_.points[0]);
            auto c = correct(map_, yz, cur.period, t, ys, 10, cfg_.corrector_tol);
            if (!c) return false;
            Vec diff = c->first - ys;
            diff.tail(n_) = state_difference(map_, c->first.tail(n_), ys.tail(n_));
            return inf_norm(diff) < cfg_.closed_loop_tol;
        }
        catch (const Error&)
        {
            return false;
        }
    }

    /// Replace the current even-period point by the half-period branch at
    /// its doubling point and continue on the nonflip side of that branch.
    bool try_halving(Part& part, Point& cur, Vec& tau, double& s)
    {
        if (cur.period % 2 != 0) return false;
        const int q = cur.period / 2;
        const double gap = half_gap(map_, cur.eval, cur.period);
        if (gap > 0.05 * (1.0 + inf_norm(cur.y.tail(n_)))) return false;
        const double lc = cur.y[0];
        const Vec xc = cur.y.tail(n_);

        auto parity_at = [&](double lam, const Vec& x0, Vec& x_out) -> std::optional<int> {
            try
            {
                const PeriodicOrbit o = find_orbit(map_, lam, x0, q);
                if (o.period != q) return std::nullopt;
                x_out = o.points[0];
                return o.sigma_minus % 2;
            }
            catch (const Error&)
            {
                return std::nullopt;
            }
        };

        Vec xq;
        const auto pc = parity_at(lc, xc, xq);
        if (!pc) return false;
        // expanding search for the other parity
        double lo = lc, hi = lc;
        Vec xlo = xq, xhi = xq;
        int plo = *pc;
        bool found = false;
        Vec x_side[2] = {xq, xq};
        const double scale = 1.0 + std::abs(lc);
        for (int j = 0; j < 24 && !found; ++j)
        {
            const double delta = 1e-10 * scale * std::pow(4.0, j);
            for (int side = 0; side < 2 && !found; ++side)
            {
                const double lam = lc + (side == 0 ? delta : -delta);
                Vec xo;
                const auto pv = parity_at(lam, x_side[side], xo);
                if (!pv) continue;
                x_side[side] = xo;
                if (*pv != *pc)
                {
                    lo = lc;
                    xlo = xq;
                    hi = lam;
                    xhi = xo;
                    found = true;
                }
            }
        }
        if (!found) return false;
        for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-13 * scale; ++it)
        {
            const double mid = 0.5 * (lo + hi);
            Vec xm;
            const auto pm = parity_at(mid, xlo, xm);
            if (!pm) return false;
            if (*pm == plo)
            {
                lo = mid;
                xlo = xm;
            }
            else
            {
                hi = mid;
                xhi = xm;
            }
        }
        const double lambda_star = 0.5 * (lo + hi);
        const double nonflip_end = plo == 0 ? lo : hi;
        const double flip_end = plo == 0 ? hi : lo;
        const int away = sign_of(nonflip_end - lambda_star) != 0 ? sign_of(nonflip_end - lambda_star)
                                                                  : sign_of(nonflip_end - flip_end);
        const double offset = std::max(1e-9, 1e-7 * scale);
        const double l_start = lambda_star + away * offset;
        Vec x_start, x_flip, x_ev;
        try
        {
            const PeriodicOrbit start = find_orbit(map_, l_start, plo == 0 ? xlo : xhi, q);
            const PeriodicOrbit flip_side = find_orbit(map_, lambda_star - away * offset, plo == 0 ? xhi : xlo, q);
            if (start.period != q || start.sigma_minus % 2 != 0) return false;
            ExtendedEval e = extended_eval(map_, l_start, start.points[0], q);
            Point next = make_point(map_, pack(l_start, start.points[0]), q, std::move(e), cfg_.tol_eig);
            Vec t = null_vector(next.eval.jac);
            if (sign_of(t[0]) != away) t = -t;

            BifurcationEvent ev;
            ev.kind = EventKind::period_doubling;
            ev.period = q;
            ev.lambda = lambda_star;
            ev.halving = true;
            ExtendedEval ee = extended_eval(map_, lambda_star, plo == 0 ? xlo : xhi, q);
            ev.orbit = orbit_from_eval(map_, lambda_star, ee, q, cfg_.tol_eig);
            ev.incoming_index = cur.orbit.orbit_index;
            ev.outgoing_index = next.orbit.orbit_index;
            ev.parent_nonflip_index = next.orbit.orbit_index;
            ev.parent_flip_index = flip_side.orbit_index;
            ev.doubled_index = cur.orbit.orbit_index;
            ev.doubled_known = true;
            ev.position = part.snapshots.size();
            ev.arclength = s;
            part.events.push_back(ev);
            restart_offset_ = inf_norm(next.y - pack(lambda_star, ev.orbit.points[0]));

            s += (next.y - cur.y).norm();
            cur = std::move(next);
            tau = t;
            push(part, cur, tau, s);
            return true;
        }
        catch (const Error&)
        {
            return false;
        }
    }

    const MapDefinition& map_;
    PeriodicOrbit seed_;
    Interval domain_;
    ContinuationConfig cfg_;
    int n_;
    int max_period_ = 64;
    double restart_offset_ = 0.0;
};

} // namespace detail

/// Follows the component of nonflip orbits through `seed` in both
/// directions and returns it ordered along the index orientation: lambda
/// increases on stretches with index -1 and decreases where it is +1.
/// Period doublings switch onto the period-2p branch (or, met from that
/// branch, back onto the nonflip side of the period-p branch).
inline ComponentTrace continue_component(const MapDefinition& map, const PeriodicOrbit& seed, Interval domain,
                                         const ContinuationConfig& cfg = {})
{
    if (!map.smooth) throw BadParameter(map.name + " is piecewise linear and cannot be continued");
    if (!(domain.lo < domain.hi)) throw BadParameter("empty continuation domain");
    if (seed.points.empty()) throw BadSeed("seed has no points");
    if (!seed.nonflip() || seed.orbit_index == 0) throw NotNonflip("seed orbit is flip");

    PeriodicOrbit polished;
    try
    {
        polished = find_orbit(map, seed.lambda, seed.points[0], seed.period);
    }
    catch (const Error& e)
    {
        throw BadSeed(std::string("seed does not converge: ") + e.what());
    }
    if (polished.period != seed.period) throw BadSeed("seed has least period " + std::to_string(polished.period));
    if (!polished.hyperbolic) throw BadSeed("seed is not hyperbolic");
    if (!polished.nonflip() || polished.orbit_index == 0) throw NotNonflip("seed orbit is flip");

    detail::ExtendedEval e = detail::extended_eval(map, polished.lambda, polished.points[0], polished.period);
    const detail::Point start = detail::make_point(map, detail::pack(polished.lambda, polished.points[0]), polished.period,
                                                   std::move(e), cfg.tol_eig);

    detail::Walker walker(map, polished, domain, cfg);
    detail::Part fwd = walker.run(start, +1);
    detail::Part bwd;
    if (fwd.termination == Termination::closed_loop)
    {
        bwd.snapshots = {fwd.snapshots.front()};
        bwd.arclength = {0.0};
        bwd.dlambda_sign = {-fwd.dlambda_sign.front()};
        bwd.termination = Termination::closed_loop;
    }
    else
    {
        bwd = walker.run(start, -1);
    }

    ComponentTrace trace;
    trace.map_name = map.name;
    trace.domain = domain;
    trace.max_period = walker.max_period();
    trace.termination = fwd.termination;
    trace.start_termination = bwd.termination;
    const std::size_t nb = bwd.snapshots.size() - 1;
    const double total_b = bwd.arclength.back();
    for (std::size_t j = nb; j >= 1; --j)
    {
        trace.snapshots.push_back(bwd.snapshots[j]);
        trace.arclength.push_back(total_b - bwd.arclength[j]);
        trace.orientation_sign_history.push_back(
            {trace.arclength.back(), -bwd.dlambda_sign[j], bwd.snapshots[j].orbit_index});
    }
    trace.seed_position = trace.snapshots.size();
    for (std::size_t k = 0; k < fwd.snapshots.size(); ++k)
    {
        trace.snapshots.push_back(fwd.snapshots[k]);
        trace.arclength.push_back(total_b + fwd.arclength[k]);
        trace.orientation_sign_history.push_back(
            {trace.arclength.back(), fwd.dlambda_sign[k], fwd.snapshots[k].orbit_index});
    }
    for (auto it = bwd.events.rbegin(); it != bwd.events.rend(); ++it)
    {
        BifurcationEvent ev = *it;
        std::swap(ev.incoming_index, ev.outgoing_index);
        ev.halving = ev.kind == EventKind::period_doubling ? !ev.halving : false;
        ev.position = nb - ev.position + 1;
        ev.arclength = total_b - ev.arclength;
        trace.events.push_back(ev);
    }
    for (const auto& e0 : fwd.events)
    {
        BifurcationEvent ev = e0;
        ev.position = nb + ev.position;
        ev.arclength = total_b + ev.arclength;
        trace.events.push_back(ev);
    }
    // event arclengths are step-midpoint estimates; keep them between the
    // snapshots that bracket the event
    for (auto& ev : trace.events)
    {
        const std::size_t last = trace.arclength.size() - 1;
        const double lo = trace.arclength[std::min(ev.position == 0 ? 0 : ev.position - 1, last)];
        const double hi = trace.arclength[std::min(ev.position, last)];
        ev.arclength = std::clamp(ev.arclength, lo, hi);
    }
    for (const auto& n : bwd.notes) trace.notes.push_back("reverse: " + n);
    for (const auto& n : fwd.notes) trace.notes.push_back("forward: " + n);
    return trace;
}

// ---------------------------------------------------------------------------
// Cascades

enum class BoundedFlag
{
    bounded_end,
    unbounded_end,
    undetermined
};

inline const char* to_string(BoundedFlag f)
{
    switch (f)
    {
    case BoundedFlag::bounded_end: return "bounded_end";
    case BoundedFlag::unbounded_end: return "unbounded_end";
    case BoundedFlag::undetermined: return "undetermined";
    }
    return "?";
}

struct CascadeRecord
{
    int base_period = 0;
    /// doubling parameters m -> 2m -> 4m -> ... in that order
    std::vector<double> pd_lambdas;
    Interval monotone_window;
    BoundedFlag bounded_flag = BoundedFlag::undetermined;
    std::string component_id;
    /// the end of the trace the cascade accumulates at
    bool at_trace_end = true;

    int doublings() const { return static_cast<int>(pd_lambdas.size()); }
    /// |l_{j+1} - l_j| decreasing for j >= 2 (reported, not enforced)
    bool gaps_decreasing() const
    {
        for (std::size_t j = 2; j + 1 < pd_lambdas.size(); ++j)
            if (!(std::abs(pd_lambdas[j + 1] - pd_lambdas[j]) < std::abs(pd_lambdas[j] - pd_lambdas[j - 1]))) return false;
        return true;
    }
};

/// Maximal runs of period doublings with periods m, 2m, 4m, ... (at least
/// `min_doublings` of them). A bounded arc reports exactly the two runs at
/// its ends.
inline std::vector<CascadeRecord> detect_cascades(const ComponentTrace& trace, int min_doublings = 4,
                                                  const std::string& component_id = "")
{
    struct Run
    {
        std::vector<const BifurcationEvent*> events;
    };
    std::vector<Run> runs;
    Run cur;
    auto flush = [&] {
        if (!cur.events.empty()) runs.push_back(cur);
        cur.events.clear();
    };
    for (const auto& ev : trace.events)
    {
        if (ev.kind == EventKind::saddle_node)
        {
            flush();
            continue;
        }
        if (ev.kind != EventKind::period_doubling) continue;
        if (!cur.events.empty())
        {
            const int prev = cur.events.back()->period;
            if (ev.period == 2 * prev || 2 * ev.period == prev)
            {
                // direction must stay the same within a run
                const bool up = ev.period > prev;
                if (cur.events.size() >= 2)
                {
                    const bool was_up = cur.events.back()->period > cur.events[cur.events.size() - 2]->period;
                    if (up != was_up)
                    {
                        flush();
                    }
                }
                cur.events.push_back(&ev);
                continue;
            }
            flush();
        }
        cur.events.push_back(&ev);
    }
    flush();

    std::vector<CascadeRecord> out;
    auto emit = [&](const Run& r, bool at_end) {
        if (static_cast<int>(r.events.size()) < min_doublings) return;
        CascadeRecord c;
        std::vector<const BifurcationEvent*> ev = r.events;
        if (ev.front()->period > ev.back()->period) std::reverse(ev.begin(), ev.end());
        c.base_period = ev.front()->period;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto* e : ev)
        {
            c.pd_lambdas.push_back(e->lambda);
            lo = std::min(lo, e->lambda);
            hi = std::max(hi, e->lambda);
        }
        c.monotone_window = {lo, hi};
        c.component_id = component_id;
        c.at_trace_end = at_end;
        const Termination t = at_end ? trace.termination : trace.start_termination;
        if (trace.bounded_arc())
            c.bounded_flag = BoundedFlag::bounded_end;
        else if (t == Termination::max_period_reached)
        {
            const Termination other = at_end ? trace.start_termination : trace.termination;
            c.bounded_flag = other == Termination::left_domain ? BoundedFlag::unbounded_end : BoundedFlag::undetermined;
        }
        out.push_back(c);
    };
    // A run sits at the end of the trace when its highest period is reached
    // last in trace order.
    auto at_end = [](const Run& r) { return r.events.back()->period > r.events.front()->period; };
    if (trace.bounded_arc())
    {
        if (!runs.empty()) emit(runs.front(), false);
        if (runs.size() > 1) emit(runs.back(), true);
        return out;
    }
    for (const auto& r : runs) emit(r, r.events.size() > 1 ? at_end(r) : true);
    return out;
}

// ---------------------------------------------------------------------------
// Index checks

struct ConservationEntry
{
    std::size_t event = 0;
    EventKind kind = EventKind::saddle_node;
    double lambda = 0.0;
    bool pass = false;
    std::string detail;
};

struct ConservationReport
{
    std::vector<ConservationEntry> entries;
    int violations = 0;
    bool ok() const { return violations == 0; }
};

/// Index bookkeeping at each event: phi_a + phi_b = 0 at saddle-nodes,
/// phi_a = phi_b + phi_c at doublings (with exactly one flip parent side),
/// phi unchanged at Hopf points.
inline ConservationReport check_index_conservation(const ComponentTrace& trace)
{
    ConservationReport r;
    for (std::size_t i = 0; i < trace.events.size(); ++i)
    {
        const auto& ev = trace.events[i];
        ConservationEntry e{i, ev.kind, ev.lambda, false, ""};
        switch (ev.kind)
        {
        case EventKind::saddle_node:
            e.pass = ev.incoming_index + ev.outgoing_index == 0 && ev.incoming_index != 0;
            e.detail = std::to_string(ev.incoming_index) + " + " + std::to_string(ev.outgoing_index) + " = 0";
            break;
        case EventKind::period_doubling:
            e.pass = ev.doubled_known && ev.parent_flip_index == 0 && ev.parent_nonflip_index != 0 &&
                     ev.parent_nonflip_index == ev.parent_flip_index + ev.doubled_index;
            e.detail = std::to_string(ev.parent_nonflip_index) + " = " + std::to_string(ev.parent_flip_index) + " + " +
                       std::to_string(ev.doubled_index);
            break;
        case EventKind::hopf:
            e.pass = ev.incoming_index == ev.outgoing_index;
            e.detail = std::to_string(ev.incoming_index) + " -> " + std::to_string(ev.outgoing_index);
            break;
        }
        if (!e.pass) ++r.violations;
        r.entries.push_back(e);
    }
    return r;
}

inline ConservationReport verify_index_conservation(const ComponentTrace& trace)
{
    ConservationReport r = check_index_conservation(trace);
    for (const auto& e : r.entries)
        if (!e.pass)
            throw ConservationViolation(std::string(to_string(e.kind)) + " at lambda=" + std::to_string(e.lambda) +
                                        " fails " + e.detail);
    return r;
}

struct OrientationReport
{
    int checked = 0;
    int violations = 0;
    std::vector<std::size_t> violating_positions;
};

/// sign(delta lambda) = -phi between consecutive hyperbolic snapshots of the
/// same period and index with no event in between. Pairs with
/// |delta lambda| <= 1e-13 (1 + |lambda|) carry no sign and are skipped.
inline OrientationReport check_index_orientation(const ComponentTrace& trace)
{
    OrientationReport r;
    std::vector<bool> event_before(trace.snapshots.size() + 1, false);
    for (const auto& ev : trace.events)
        if (ev.position < event_before.size()) event_before[ev.position] = true;
    for (std::size_t i = 1; i < trace.snapshots.size(); ++i)
    {
        const auto& a = trace.snapshots[i - 1];
        const auto& b = trace.snapshots[i];
        if (event_before[i] || !a.hyperbolic || !b.hyperbolic || a.period != b.period) continue;
        if (a.orbit_index != b.orbit_index || a.orbit_index == 0) continue;
        const double dl = b.lambda - a.lambda;
        if (std::abs(dl) <= 1e-13 * (1.0 + std::abs(a.lambda))) continue;
        ++r.checked;
        if ((dl > 0.0 ? 1 : -1) != -a.orbit_index)
        {
            ++r.violations;
            r.violating_positions.push_back(i);
        }
    }
    return r;
}

} // namespace cascade
