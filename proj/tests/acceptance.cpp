// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cascade/cascade.hpp"

using namespace cascade;

namespace
{

// Pinned tolerances.
constexpr double landmark_tol = 1e-8;      // criteria 1, 2 (quadratic)
constexpr double logistic_pd_tol = 1e-6;   // criterion 2 (logistic)
constexpr double determinant_tol = 1e-6;   // criterion 10
constexpr double jacobian_rel_tol = 1e-5;  // criterion 10
constexpr double hausdorff_slack = 1e-12;  // criterion 10 (triangle inequality)

// Runtime budgets in seconds.
constexpr double budget_1 = 1.0;
constexpr double budget_2 = 10.0;
constexpr double budget_5 = 1.0;
constexpr double budget_6 = 10.0;
constexpr double budget_7 = 60.0;
constexpr double budget_8 = 300.0;
constexpr double budget_9 = 300.0;

struct Outcome
{
    bool pass = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond)
        {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Shared traces for criteria 1 to 4.
struct Traces
{
    ComponentTrace quadratic;
    ComponentTrace logistic;
    ComponentTrace coupled;
    bool have_quadratic = false, have_logistic = false, have_coupled = false;
};

Traces traces;

ComponentTrace quadratic_trace()
{
    const auto map = builtin_map("quadratic");
    const auto seed = find_orbit(map, 0.0, Vec::Constant(1, 0.0), 1);
    return continue_component(map, seed, {-1.0, 3.0});
}

const BifurcationEvent* find_event(const ComponentTrace& t, EventKind kind, double lambda, double x, double tol)
{
    for (const auto& e : t.events)
        if (e.kind == kind && std::abs(e.lambda - lambda) <= tol && !e.orbit.points.empty() &&
            std::abs(e.orbit.points.front()[0] - x) <= tol)
            return &e;
    return nullptr;
}

void criterion_1(Outcome& o)
{
    const auto t0 = Clock::now();
    traces.quadratic = quadratic_trace();
    traces.have_quadratic = true;
    const double dt = seconds_since(t0);
    const auto* sn = find_event(traces.quadratic, EventKind::saddle_node, -0.25, -0.5, landmark_tol);
    const auto* pd = find_event(traces.quadratic, EventKind::period_doubling, 0.75, 0.5, landmark_tol);
    o.require(sn != nullptr, "saddle-node at (-0.25, -0.5)");
    o.require(pd != nullptr, "period doubling at (0.75, 0.5)");
    if (sn) o.detail << "SN dl=" << std::abs(sn->lambda + 0.25) << " dx=" << std::abs(sn->orbit.points[0][0] + 0.5) << "; ";
    if (pd) o.detail << "PD dl=" << std::abs(pd->lambda - 0.75) << " dx=" << std::abs(pd->orbit.points[0][0] - 0.5) << "; ";
    o.require(dt < budget_1, "runtime < 1 s");
    o.detail << "t=" << dt << "s";
}

void criterion_2(Outcome& o)
{
    const auto t0 = Clock::now();
    if (!traces.have_quadratic)
    {
        traces.quadratic = quadratic_trace();
        traces.have_quadratic = true;
    }
    const auto cascades = detect_cascades(traces.quadratic, 4, "quadratic");
    const CascadeRecord* base = nullptr;
    for (const auto& c : cascades)
        if (c.base_period == 1) base = &c;
    o.require(base != nullptr, "period-1 cascade on the quadratic component");
    if (base)
    {
        o.require(base->doublings() >= 5, ">= 5 doublings");
        o.require(base->pd_lambdas.size() >= 2 && std::abs(base->pd_lambdas[0] - 0.75) <= landmark_tol &&
                      std::abs(base->pd_lambdas[1] - 1.25) <= landmark_tol,
                  "pd_lambdas start 0.75, 1.25");
        o.require(base->gaps_decreasing(), "gaps decreasing for j >= 2");
        o.detail << "quadratic doublings=" << base->doublings() << " first=" << base->pd_lambdas[0] << ","
                 << base->pd_lambdas[1] << "; ";
    }

    const auto logistic = builtin_map("logistic");
    const auto seed = find_orbit(logistic, 2.0, Vec::Constant(1, 0.5), 1);
    traces.logistic = continue_component(logistic, seed, {1.5, 3.6});
    traces.have_logistic = true;
    const auto lc = detect_cascades(traces.logistic, 4, "logistic");
    const CascadeRecord* lb = nullptr;
    for (const auto& c : lc)
        if (c.base_period == 1) lb = &c;
    o.require(lb != nullptr && lb->pd_lambdas.size() >= 2, "logistic period-1 cascade");
    if (lb && lb->pd_lambdas.size() >= 2)
    {
        const double e1 = std::abs(lb->pd_lambdas[0] - 3.0);
        const double e2 = std::abs(lb->pd_lambdas[1] - (1.0 + std::sqrt(6.0)));
        o.require(e1 <= logistic_pd_tol && e2 <= logistic_pd_tol, "logistic PDs at 3 and 1+sqrt(6)");
        o.detail << "logistic errors " << e1 << ", " << e2 << "; ";
    }
    const double dt = seconds_since(t0);
    o.require(dt < budget_2, "runtime < 10 s");
    o.detail << "t=" << dt << "s";
}

std::vector<const ComponentTrace*> index_traces()
{
    if (!traces.have_coupled)
    {
        const auto map = builtin_map("coupled_quadratic", {{"c", "0.1"}});
        const auto seed = find_orbit(map, 0.3, (Vec(2) << 0.27, 0.29).finished(), 1);
        traces.coupled = continue_component(map, seed, {-1.0, 1.2});
        traces.have_coupled = true;
    }
    if (!traces.have_quadratic)
    {
        traces.quadratic = quadratic_trace();
        traces.have_quadratic = true;
    }
    std::vector<const ComponentTrace*> out = {&traces.quadratic, &traces.coupled};
    if (traces.have_logistic) out.push_back(&traces.logistic);
    return out;
}

void criterion_3(Outcome& o)
{
    int events = 0, violations = 0;
    for (const auto* t : index_traces())
    {
        const auto r = check_index_conservation(*t);
        events += static_cast<int>(r.entries.size());
        violations += r.violations;
    }
    o.require(events > 0, "events present");
    o.require(violations == 0, "zero conservation violations");
    o.detail << "events=" << events << " violations=" << violations;
}

void criterion_4(Outcome& o)
{
    int checked = 0, violations = 0;
    for (const auto* t : index_traces())
    {
        const auto r = check_index_orientation(*t);
        checked += r.checked;
        violations += r.violations;
    }
    o.require(checked > 0, "hyperbolic snapshots checked");
    o.require(violations == 0, "zero orientation violations");
    o.detail << "snapshots=" << checked << " violations=" << violations;
}

BigInt pow_big(int base, int e)
{
    BigInt r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

void criterion_5(Outcome& o)
{
    const auto t0 = Clock::now();
    int mismatches = 0;
    for (int k = 1; k <= 20; ++k)
        if (gamma_1(k) != BigInt(tent_necklace_census(k, false).nonflip_count)) ++mismatches;
    o.require(mismatches == 0, "recursion equals necklace enumeration for k=1..20");
    for (int p : {3, 5, 7, 11, 13})
        o.require(gamma_1(p) == (pow_big(2, p) - 2) / (2 * p), "prime closed form p=" + std::to_string(p));
    const int table[] = {1, 0, 1, 1, 3, 4, 9, 14};
    for (int k = 1; k <= 8; ++k) o.require(gamma_1(k) == table[k - 1], "table k=" + std::to_string(k));
    const double dt = seconds_since(t0);
    o.require(dt < budget_5, "runtime < 1 s");
    o.detail << "mismatches=" << mismatches << " t=" << dt << "s";
}

void criterion_6(Outcome& o)
{
    const auto t0 = Clock::now();
    for (int p : {3, 5, 7})
    {
        const std::int64_t closed = static_cast<std::int64_t>((pow_big(3, p) - 3) / (2 * p));
        const auto brute = detail::necklace_census(SymbolicModel::cubic, 1, p, false).nonflip_count;
        o.require(cubic_nonflip_count(p) == closed && brute == closed, "cubic p=" + std::to_string(p));
    }
    auto product_brute = [](int n, int k) { return detail::necklace_census(SymbolicModel::product, n, k, false).nonflip_count; };
    o.require(gamma_N(2, 1) == 2 && product_brute(2, 1) == 2, "Gamma(2,1)=2");
    o.require(gamma_N(2, 2) == 2 && product_brute(2, 2) == 2, "Gamma(2,2)=2");
    for (int n = 1; n <= 8; ++n)
    {
        const std::int64_t expected = std::int64_t{1} << (n - 1);
        o.require(gamma_N(n, 1) == expected && product_brute(n, 1) == expected, "Gamma(N,1) N=" + std::to_string(n));
    }
    const double dt = seconds_since(t0);
    o.require(dt < budget_6, "runtime < 10 s");
    o.detail << "t=" << dt << "s";
}

void criterion_7(Outcome& o)
{
    const auto t0 = Clock::now();
    const auto cert = verify_horseshoe(HorseshoeFamily::quadratic, 1.0, -2.1, 36.1);
    o.require(cert.granted(), "certificate granted");
    for (const auto& [k, v] : cert.checks)
        o.require(v == Verdict::analytic_pass, std::string("estimate ") + k + " passes");
    const auto quadratic = builtin_map("quadratic");
    std::ostringstream counts;
    for (int k = 1; k <= 5; ++k)
    {
        const auto r = numeric_census_crosscheck(quadratic, 36.1, k, false);
        o.require(r.match, "quadratic k=" + std::to_string(k));
        counts << r.nonflip_numeric << (k < 5 ? "," : "");
    }
    o.require(numeric_census_crosscheck(quadratic, 36.1, 3, false).nonflip_numeric == 1, "1 nonflip orbit at k=3");
    o.require(numeric_census_crosscheck(quadratic, 36.1, 5, false).nonflip_numeric == 3, "3 nonflip orbits at k=5");
    const auto cubic = builtin_map("cubic");
    for (int k = 1; k <= 4; ++k)
        o.require(numeric_census_crosscheck(cubic, 16.0, k, false).match, "cubic k=" + std::to_string(k));
    const double dt = seconds_since(t0);
    o.require(dt < budget_7, "runtime < 60 s");
    o.detail << "quadratic nonflip k=1..5: " << counts.str() << "; t=" << dt << "s";
}

void criterion_8(Outcome& o)
{
    const auto t0 = Clock::now();
    const auto map = builtin_map("quadratic");
    const auto census = boundary_census(map, -2.1, 36.1, 3);
    const auto pred = predict_cascades(census);
    o.require(pred.kind == PredictionCase::one_to_one, "one-to-one case");
    o.require(pred.exits == 0 && pred.entries > 0, "entries only");
    const auto bt = realize_prediction(map, census, pred, 3, ContinuationConfig{}, 4);
    o.require(bt.size() == pred.attributed.size(), "one trace per attributed orbit");
    for (const auto& t : bt)
    {
        const std::string tag = "period-" + std::to_string(t.orbit.period) + " orbit";
        o.require(t.error.empty(), tag + " traced");
        o.require(t.cascade_inside, tag + " cascade inside the slab");
        o.require(t.stem_period_ok, tag + " stem period");
    }
    const double dt = seconds_since(t0);
    o.require(dt < budget_8, "runtime < 5 min");
    o.detail << "K=" << pred.entries << " J=" << pred.exits << " traces=" << bt.size() << " t=" << dt << "s";
}

std::size_t count_period(const std::vector<PeriodicOrbit>& v, int k)
{
    std::size_t n = 0;
    for (const auto& o : v) n += o.period == k;
    return n;
}

void criterion_9(Outcome& o)
{
    const auto t0 = Clock::now();
    const auto plain = builtin_map("quadratic");
    const auto bumped = builtin_map("perturbed_quadratic", {{"perturbation", "bump"}, {"gamma", "3"}});
    const auto setup = horseshoe_setup(bumped);
    o.require(setup.has_value(), "horseshoe setup for the bump map");
    if (!setup) return;
    const double beta = setup->beta;
    // bounds re-derived from beta with a 0.1 margin
    const double l0 = -(1.0 + 6.0 * beta + beta * beta) / 4.0 - 0.1;
    const double l1 = 4.0 * (beta + 2.0) * (beta + 2.0) + 0.1;
    o.require(verify_horseshoe(HorseshoeFamily::quadratic, beta, l0, l1).granted(), "re-derived bounds certified");
    o.require(eval_map(bumped, 2.5, Vec::Constant(1, -1.7))[0] == 0.0, "F vanishes on [-3,3]^2");

    const auto c_plain = boundary_census(plain, -2.1, 36.1, 3);
    const auto c_bump = boundary_census(bumped, l0, l1, 3);
    for (int k = 1; k <= 3; ++k)
    {
        o.require(count_period(c_bump.entry_orbits, k) == count_period(c_plain.entry_orbits, k),
                  "entry count k=" + std::to_string(k));
        o.require(count_period(c_bump.exit_orbits, k) == count_period(c_plain.exit_orbits, k),
                  "exit count k=" + std::to_string(k));
    }
    const auto t_plain = realize_prediction(plain, c_plain, predict_cascades(c_plain), 3);
    const auto t_bump = realize_prediction(bumped, c_bump, predict_cascades(c_bump), 3);
    for (const auto& t : t_bump) o.require(t.error.empty() && t.stem_period_ok, "bump trace period " + std::to_string(t.orbit.period));
    const auto per_plain = cascades_per_stem_period(t_plain, -2.1, 36.1);
    const auto per_bump = cascades_per_stem_period(t_bump, l0, l1);
    o.require(per_plain == per_bump, "cascades per stem period unchanged");
    const double dt = seconds_since(t0);
    o.require(dt < budget_9, "runtime < 5 min");
    o.detail << "beta=" << beta << " slab=[" << l0 << "," << l1 << "] cascades per k:";
    for (const auto& [k, n] : per_bump) o.detail << " " << k << ":" << n;
    o.detail << " t=" << dt << "s";
}

double relative_error(const Mat& a, const Mat& b)
{
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

/// Independent central-difference oracle.
Mat difference_jacobian(const MapDefinition& m, double lam, const Vec& x)
{
    Mat j(m.dimension, m.dimension);
    for (int i = 0; i < m.dimension; ++i)
    {
        const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        j.col(i) = (m.eval(lam, xp) - m.eval(lam, xm)) / (2.0 * h);
    }
    return j;
}

PeriodicOrbit random_orbit(std::mt19937_64& rng, int dim)
{
    std::uniform_int_distribution<int> period(1, 6);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    PeriodicOrbit o;
    o.period = period(rng);
    for (int i = 0; i < o.period; ++i)
    {
        Vec x(dim);
        for (int j = 0; j < dim; ++j) x[j] = u(rng);
        o.points.push_back(x);
    }
    return o;
}

void criterion_10(Outcome& o)
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20261017);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Liouville: det of the stroboscopic pendulum Jacobian is exp(-0.6 pi)
    {
        const auto pend = builtin_map("pendulum_strobe");
        const double expected = std::exp(-0.6 * std::numbers::pi);
        double worst = 0.0;
        for (int i = 0; i < 5; ++i)
        {
            const double lam = 10.0 * unit(rng);
            const Vec x = (Vec(2) << -3.0 + 6.0 * unit(rng), -3.0 + 6.0 * unit(rng)).finished();
            worst = std::max(worst, std::abs(eval_jacobian(pend, lam, x).determinant() - expected));
        }
        o.require(worst <= determinant_tol, "pendulum determinant");
        o.detail << "det err=" << worst << "; ";
    }

    // Hausdorff metric axioms
    {
        int bad = 0;
        const std::vector<double> cylinder = {2.0 * std::numbers::pi, 0.0};
        for (int trial = 0; trial < 300; ++trial)
        {
            const std::span<const double> periods =
                trial % 2 ? std::span<const double>(cylinder) : std::span<const double>();
            const auto a = random_orbit(rng, 2), b = random_orbit(rng, 2), c = random_orbit(rng, 2);
            PeriodicOrbit a_rot = a;
            std::rotate(a_rot.points.begin(), a_rot.points.begin() + 1, a_rot.points.end());
            const double ab = hausdorff_distance(a, b, periods), ba = hausdorff_distance(b, a, periods);
            const double ac = hausdorff_distance(a, c, periods), cb = hausdorff_distance(c, b, periods);
            if (hausdorff_distance(a, a_rot, periods) != 0.0) ++bad;
            if (ab != ba || ab < 0.0) ++bad;
            if (ab > ac + cb + hausdorff_slack) ++bad;
        }
        o.require(bad == 0, "Hausdorff axioms");
        o.detail << "hausdorff violations=" << bad << "; ";
    }

    // Jacobians against central differences on every built-in map
    {
        std::string worst_map;
        double worst = 0.0;
        for (const auto& n : builtin_map_names())
        {
            const bool ode = n == "duffing_strobe" || n == "pendulum_strobe";
            const MapDefinition m = builtin_map(n, ode ? Params{{"steps", "128"}} : Params{});
            const Interval lr = m.param_hint.value_or(Interval{0.0, 1.0});
            Box box = m.state_hint.value_or(Box{Vec::Zero(m.dimension), Vec::Ones(m.dimension)});
            if (n == "duffing_strobe") box = make_box({-1.5, -1.5}, {1.5, 1.5});
            for (int s = 0; s < (ode ? 5 : 20); ++s)
            {
                const double lam = n == "duffing_strobe" ? 2.0 * unit(rng) : lr.lo + unit(rng) * lr.width();
                Vec x(m.dimension);
                for (int i = 0; i < m.dimension; ++i) x[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
                if (!m.smooth)
                {
                    bool near_kink = false;
                    for (int i = 0; i < m.dimension; ++i)
                        for (double kink : {0.5, 1.0 / 3.0, 2.0 / 3.0}) near_kink = near_kink || std::abs(x[i] - kink) < 1e-4;
                    if (near_kink) continue;
                }
                try
                {
                    const double e = relative_error(eval_jacobian(m, lam, x), difference_jacobian(m, lam, x));
                    if (e > worst)
                    {
                        worst = e;
                        worst_map = n;
                    }
                }
                catch (const TrajectoryEscape&)
                {
                }
            }
        }
        o.require(worst <= jacobian_rel_tol, "Jacobian vs finite differences");
        o.detail << "jacobian worst=" << worst << " (" << worst_map << "); ";
    }

    // period-2 child approaches its parent as lambda -> 0.75
    {
        const auto map = builtin_map("quadratic");
        double prev = std::numeric_limits<double>::infinity();
        bool decreasing = true;
        for (double d : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4})
        {
            const double lam = 0.75 + d;
            const auto parent = find_orbit(map, lam, Vec::Constant(1, 0.5), 1);
            const auto child = find_orbit(map, lam, Vec::Constant(1, 0.5 + std::sqrt(4.0 * lam - 3.0) / 2.0), 2);
            const double dist = hausdorff_distance(map, child, parent);
            decreasing = decreasing && child.period == 2 && dist < prev;
            prev = dist;
        }
        o.require(decreasing, "PD child-to-parent distance decreasing");
        o.detail << "last PD distance=" << prev << "; ";
    }

    // Duffing and pendulum sweeps stay bounded (qualitative only)
    {
        bool bounded = true;
        for (const char* n : {"duffing_strobe", "pendulum_strobe"})
        {
            SweepConfig c;
            c.lambda_min = std::string(n) == "duffing_strobe" ? 0.0 : 1.0;
            c.lambda_max = std::string(n) == "duffing_strobe" ? 40.0 : 3.0;
            c.count = 6;
            c.transient_iterations = 40;
            c.record_iterations = 10;
            const auto r = attracting_set_sweep(builtin_map(n, {{"steps", "128"}}), c);
            bounded = bounded && r.escapes == 0 && !r.rows.empty();
            for (const auto& row : r.rows) bounded = bounded && std::isfinite(row.value) && std::abs(row.value) < 1e3;
        }
        o.require(bounded, "Duffing/pendulum sweeps bounded");
    }

    // pendulum off-on-off: unbounded cascades within the boundary orbit count
    {
        OffOnOffOptions opt;
        opt.census.grid_per_dim = 20;
        opt.max_seeds = 4;
        opt.continuation.max_period_factor = 16;
        const auto rep = off_on_off_census(builtin_map("pendulum_strobe"), 0.0, 2.5, 10.0, 2, opt);
        o.require(rep.unbounded_cascades <= 4 && rep.within_bound(), "at most k=4 unbounded cascades");
        int traced = 0;
        for (const auto& c : rep.components) traced += c.traced;
        o.detail << "pendulum k=" << rep.k << " unbounded=" << rep.unbounded_cascades
                 << " bounded_pairs=" << rep.bounded_pairs << " traced=" << traced << "/" << rep.components.size()
                 << "; ";
    }
    o.detail << "t=" << seconds_since(t0) << "s";
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
        {"quadratic landmark bifurcations", criterion_1},
        {"cascade detection", criterion_2},
        {"index conservation", criterion_3},
        {"index orientation", criterion_4},
        {"Gamma(1,k) counts", criterion_5},
        {"cubic and product counts", criterion_6},
        {"horseshoe certificate and numeric census", criterion_7},
        {"boundary-census prediction realized", criterion_8},
        {"large-perturbation robustness", criterion_9},
        {"property suite", criterion_10}};
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        Outcome o;
        try
        {
            criteria[i].second(o);
        }
        catch (const std::exception& e)
        {
            o.pass = false;
            o.detail << "[exception: " << e.what() << "]";
        }
        failures += !o.pass;
        std::printf("criterion %zu: %s  %s  (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
