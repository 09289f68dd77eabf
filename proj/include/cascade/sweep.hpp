#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "maps.hpp"
#include "orbits.hpp"
#include "parallel.hpp"

namespace cascade
{

enum class InitialPolicy
{
    fixed_point_seed, ///< start next to a fixed point found from x0
    carry_forward,    ///< start from the last state of the previous lambda
    fixed             ///< start from x0 at every lambda
};

inline const char* to_string(InitialPolicy p)
{
    switch (p)
    {
    case InitialPolicy::fixed_point_seed: return "fixed_point_seed";
    case InitialPolicy::carry_forward: return "carry_forward";
    case InitialPolicy::fixed: return "fixed";
    }
    return "?";
}

inline InitialPolicy parse_initial_policy(const std::string& s)
{
    if (s == "fixed_point_seed") return InitialPolicy::fixed_point_seed;
    if (s == "carry_forward") return InitialPolicy::carry_forward;
    if (s == "fixed") return InitialPolicy::fixed;
    throw BadParameter("unknown initial-condition policy '" + s + "'");
}

struct SweepConfig
{
    double lambda_min = 0.0;
    double lambda_max = 1.0;
    int count = 2;
    int transient_iterations = 1000;
    int record_iterations = 200;
    InitialPolicy policy = InitialPolicy::carry_forward;
    /// starting state; defaults to the center of the map's state hint
    std::optional<Vec> x0;
    double escape_radius = 1e6;
    int jobs = 0;
};

struct SweepRow
{
    double lambda = 0.0;
    int coordinate_index = 0;
    double value = 0.0;
};

struct EscapeSummary
{
    double lambda = 0.0;
    /// iteration at which the state left the escape radius, -1 if it stayed
    int escaped_at = -1;
};

struct SweepResult
{
    std::vector<SweepRow> rows;
    std::vector<EscapeSummary> summary;
    int escapes = 0;
    std::vector<std::string> warnings;
};

inline void validate(const SweepConfig& cfg)
{
    if (cfg.count < 2) throw BadParameter("sweep grid needs at least 2 points");
    if (cfg.transient_iterations < 0 || cfg.record_iterations < 0) throw BadParameter("iteration counts must be >= 0");
    if (!(cfg.lambda_min <= cfg.lambda_max)) throw BadParameter("sweep needs lambda_min <= lambda_max");
    if (!(cfg.escape_radius > 0.0)) throw BadParameter("escape radius must be positive");
}

namespace detail
{

/// Reduces angular coordinates into [-P/2, P/2).
inline Vec reduce_angles(const MapDefinition& map, Vec x)
{
    for (std::size_t i = 0; i < map.coordinate_periods.size() && i < static_cast<std::size_t>(x.size()); ++i)
    {
        const double p = map.coordinate_periods[i];
        if (p <= 0.0) continue;
        double& v = x[static_cast<Eigen::Index>(i)];
        v -= p * std::floor(v / p + 0.5);
        // rounding can leave v a hair outside the half-open range
        if (v < -0.5 * p) v += p;
        if (v >= 0.5 * p) v -= p;
    }
    return x;
}

struct Column
{
    std::vector<SweepRow> rows;
    EscapeSummary summary;
    Vec last;
};

inline Column run_column(const MapDefinition& map, double lambda, Vec x, const SweepConfig& cfg)
{
    Column col;
    col.summary.lambda = lambda;
    const int total = cfg.transient_iterations + cfg.record_iterations;
    for (int it = 0; it < total; ++it)
    {
        bool bad = false;
        try
        {
            x = reduce_angles(map, eval_map(map, lambda, x));
            bad = !x.allFinite() || inf_norm(x) > cfg.escape_radius;
        }
        catch (const Error&)
        {
            bad = true;
        }
        if (bad)
        {
            col.summary.escaped_at = it;
            col.rows.clear();
            return col;
        }
        if (it >= cfg.transient_iterations)
            for (int i = 0; i < map.dimension; ++i) col.rows.push_back({lambda, i, x[i]});
    }
    col.last = x;
    return col;
}

} // namespace detail

/// Attracting-set data for a bifurcation diagram: for each lambda on the
/// grid, iterate the transient, then record the state. Escaping columns
/// contribute no rows and are listed in the summary. Output is sorted by
/// lambda, then coordinate (stable within a column).
inline SweepResult attracting_set_sweep(const MapDefinition& map, const SweepConfig& cfg)
{
    validate(cfg);
    const int n = map.dimension;
    Vec x0 = cfg.x0 ? *cfg.x0 : (map.state_hint ? map.state_hint->center() : Vec(Vec::Zero(n)));
    check_input(map, x0);

    std::vector<double> grid(static_cast<std::size_t>(cfg.count));
    for (int i = 0; i < cfg.count; ++i)
        grid[static_cast<std::size_t>(i)] =
            cfg.lambda_min + (cfg.lambda_max - cfg.lambda_min) * static_cast<double>(i) / (cfg.count - 1);

    std::vector<detail::Column> cols(grid.size());
    if (cfg.policy == InitialPolicy::carry_forward)
    {
        Vec x = x0;
        for (std::size_t i = 0; i < grid.size(); ++i)
        {
            cols[i] = detail::run_column(map, grid[i], x, cfg);
            x = cols[i].summary.escaped_at < 0 ? cols[i].last : x0;
        }
    }
    else
    {
        parallel_for(grid.size(), cfg.jobs, [&](std::size_t i) {
            Vec start = x0;
            if (cfg.policy == InitialPolicy::fixed_point_seed)
            {
                try
                {
                    const PeriodicOrbit o = find_orbit(map, grid[i], x0, 1);
                    start = o.points[0] + Vec::Constant(n, 1e-6);
                }
                catch (const Error&)
                {
                }
            }
            cols[i] = detail::run_column(map, grid[i], start, cfg);
        });
    }

    SweepResult out;
    for (auto& c : cols)
    {
        if (c.summary.escaped_at >= 0) ++out.escapes;
        out.summary.push_back(c.summary);
        std::stable_sort(c.rows.begin(), c.rows.end(),
                         [](const SweepRow& a, const SweepRow& b) { return a.coordinate_index < b.coordinate_index; });
        out.rows.insert(out.rows.end(), c.rows.begin(), c.rows.end());
    }
    if (cfg.record_iterations > 0 && out.escapes == cfg.count)
        out.warnings.push_back("every grid point escaped; the dataset is empty");
    return out;
}

/// Number of distinct values (clusters wider than `tol` apart) among the
/// recorded values of one coordinate at one lambda.
inline int branch_count(const SweepResult& r, double lambda, int coordinate = 0, double tol = 1e-4)
{
    std::vector<double> v;
    for (const auto& row : r.rows)
        if (row.lambda == lambda && row.coordinate_index == coordinate) v.push_back(row.value);
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    int clusters = 1;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] - v[i - 1] > tol) ++clusters;
    return clusters;
}

/// The distinct lambda values of a sweep, in grid order.
inline std::vector<double> sweep_lambdas(const SweepResult& r)
{
    std::vector<double> out;
    for (const auto& s : r.summary) out.push_back(s.lambda);
    return out;
}

} // namespace cascade
