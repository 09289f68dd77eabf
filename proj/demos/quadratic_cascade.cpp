// Follows the fixed-point component of x -> lambda - x^2, prints its
// bifurcations and cascade, then counts boundary orbits of the slab
// [-2.1, 36.1] and the cascades they force.

#include <cstdio>

#include "cascade/cascade.hpp"

int main()
{
    using namespace cascade;
    const MapDefinition map = builtin_map("quadratic");

    const PeriodicOrbit seed = find_orbit(map, 0.0, Vec::Constant(1, 0.0), 1);
    ContinuationConfig cfg;
    cfg.max_period = 64;
    const ComponentTrace trace = continue_component(map, seed, {-1.0, 3.0}, cfg);

    std::printf("component through (0, 0): %zu snapshots, %zu events\n", trace.snapshots.size(), trace.events.size());
    for (const auto& e : trace.events)
        std::printf("  %-16s lambda = %.12f  period %d  index %+d -> %+d\n", to_string(e.kind), e.lambda, e.period,
                    e.incoming_index, e.outgoing_index);

    for (const auto& c : detect_cascades(trace, 4, "quadratic"))
    {
        std::printf("cascade: base period %d, %d doublings:", c.base_period, c.doublings());
        for (double l : c.pd_lambdas) std::printf(" %.6f", l);
        std::printf("\n");
    }

    const BoundaryCensus census = boundary_census(map, -2.1, 36.1, 4);
    const CascadePrediction p = predict_cascades(census);
    std::printf("slab [-2.1, 36.1], periods <= 4: %d entry and %d exit orbits, case %s, at least %d cascades\n",
                p.entries, p.exits, to_string(p.kind), p.min_cascades);
    for (const auto& [period, n] : p.per_period) std::printf("  stem period %d: %d\n", period, n);
    return 0;
}
