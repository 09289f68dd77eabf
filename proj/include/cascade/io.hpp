#pragma once

#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "census.hpp"
#include "combinatorics.hpp"
#include "continuation.hpp"
#include "orbits.hpp"
#include "sweep.hpp"

namespace cascade
{

inline constexpr const char* tool_name = "cascade_tracer";
inline constexpr const char* tool_version = "0.1.0";

using Json = nlohmann::ordered_json;

/// Run description written at the top of every output file.
struct Provenance
{
    std::string subcommand;
    std::string map_name;
    /// flag name (without dashes) -> value, kept sorted for stable output
    std::map<std::string, std::string> flags;
};

/// 17 significant digits, '.' decimal separator.
inline std::string format_real(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// RFC 4180 quoting: fields holding a comma, quote or line break are quoted
/// and inner quotes doubled.
inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i)
    {
        if (i) os << ',';
        os << csv_field(fields[i]);
    }
    os << "\r\n";
}

inline std::string flag_string(const Provenance& p)
{
    std::string s;
    for (const auto& [k, v] : p.flags)
    {
        if (!s.empty()) s += ' ';
        s += "--" + k + "=" + v;
    }
    return s;
}

/// CSV header comment: "# cascade_tracer <version> <subcommand> map=<name> flags: ..."
inline void write_csv_header(std::ostream& os, const Provenance& p)
{
    os << "# " << tool_name << ' ' << tool_version << ' ' << p.subcommand << " map=" << p.map_name
       << " flags: " << flag_string(p) << "\r\n";
}

inline Json header_json(const Provenance& p)
{
    Json j;
    j["type"] = "header";
    j["tool"] = tool_name;
    j["version"] = tool_version;
    j["subcommand"] = p.subcommand;
    j["map"] = p.map_name;
    Json flags = Json::object();
    for (const auto& [k, v] : p.flags) flags[k] = v;
    j["flags"] = flags;
    return j;
}

/// JSON-lines output: one compact record per line.
inline void write_json_line(std::ostream& os, const Json& j) { os << j.dump() << '\n'; }

// ---------------------------------------------------------------------------
// Records

inline Json vec_json(const Vec& v)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline Json orbit_json(const PeriodicOrbit& o)
{
    Json j;
    j["lambda"] = o.lambda;
    j["period"] = o.period;
    Json pts = Json::array();
    for (const auto& p : o.points) pts.push_back(vec_json(p));
    j["points"] = pts;
    Json eig = Json::array();
    for (const auto& e : o.eigenvalues) eig.push_back(Json::array({e.real(), e.imag()}));
    j["eigenvalues"] = eig;
    j["sigma_plus"] = o.sigma_plus;
    j["sigma_minus"] = o.sigma_minus;
    j["dim_u"] = o.dim_u;
    j["is_flip"] = o.is_flip;
    j["orbit_index"] = o.orbit_index;
    j["hyperbolic"] = o.hyperbolic;
    return j;
}

inline Json event_json(const BifurcationEvent& e)
{
    Json j;
    j["type"] = "event";
    j["kind"] = to_string(e.kind);
    j["lambda"] = e.lambda;
    j["period"] = e.period;
    j["point"] = e.orbit.points.empty() ? Json::array() : vec_json(e.orbit.points.front());
    j["incoming_index"] = e.incoming_index;
    j["outgoing_index"] = e.outgoing_index;
    if (e.kind == EventKind::period_doubling)
    {
        j["parent_nonflip_index"] = e.parent_nonflip_index;
        j["parent_flip_index"] = e.parent_flip_index;
        if (e.doubled_known) j["doubled_index"] = e.doubled_index;
        j["halving"] = e.halving;
    }
    j["arclength"] = e.arclength;
    return j;
}

inline Json cascade_json(const CascadeRecord& c)
{
    Json j;
    j["type"] = "cascade";
    j["component_id"] = c.component_id;
    j["base_period"] = c.base_period;
    j["pd_lambdas"] = c.pd_lambdas;
    j["doublings"] = c.doublings();
    j["gaps_decreasing"] = c.gaps_decreasing();
    j["monotone_window"] = Json::array({c.monotone_window.lo, c.monotone_window.hi});
    j["bounded_flag"] = to_string(c.bounded_flag);
    return j;
}

/// Header, then orbits and events in traversal order, then a summary line.
inline void write_trace_jsonl(std::ostream& os, const Provenance& p, const ComponentTrace& t)
{
    write_json_line(os, header_json(p));
    std::size_t ev = 0;
    for (std::size_t i = 0; i < t.snapshots.size(); ++i)
    {
        for (; ev < t.events.size() && t.events[ev].position <= i; ++ev) write_json_line(os, event_json(t.events[ev]));
        Json j;
        j["type"] = "orbit";
        if (i < t.arclength.size()) j["arclength"] = t.arclength[i];
        const Json body = orbit_json(t.snapshots[i]);
        for (const auto& [k, v] : body.items()) j[k] = v;
        write_json_line(os, j);
    }
    for (; ev < t.events.size(); ++ev) write_json_line(os, event_json(t.events[ev]));
    Json s;
    s["type"] = "summary";
    s["termination"] = to_string(t.termination);
    s["start_termination"] = to_string(t.start_termination);
    s["snapshots"] = t.snapshots.size();
    s["events"] = t.events.size();
    s["max_period"] = t.max_period;
    s["notes"] = t.notes;
    write_json_line(os, s);
}

inline void write_sweep_csv(std::ostream& os, const Provenance& p, const SweepResult& r)
{
    write_csv_header(os, p);
    write_csv_row(os, {"lambda", "coordinate_index", "value"});
    for (const auto& row : r.rows)
        write_csv_row(os, {format_real(row.lambda), std::to_string(row.coordinate_index), format_real(row.value)});
}

/// Sidecar summary: one row per lambda with the escape flag and iteration.
inline void write_sweep_summary_csv(std::ostream& os, const Provenance& p, const SweepResult& r)
{
    write_csv_header(os, p);
    write_csv_row(os, {"lambda", "escaped", "escaped_at"});
    for (const auto& s : r.summary)
        write_csv_row(os, {format_real(s.lambda), s.escaped_at >= 0 ? "1" : "0", std::to_string(s.escaped_at)});
}

inline void write_count_csv(std::ostream& os, const Provenance& p, const std::vector<CountRow>& rows)
{
    write_csv_header(os, p);
    write_csv_row(os, {"k", "periodic_points", "orbits", "nonflip", "flip"});
    for (const auto& r : rows)
        write_csv_row(os, {std::to_string(r.k), r.zeta.str(), r.orbits.str(), std::to_string(r.nonflip),
                           std::to_string(r.flip)});
}

inline Json census_json(const BoundaryCensus& c, const std::optional<CascadePrediction>& pred,
                        const std::string& no_prediction_reason)
{
    Json j;
    j["type"] = "census";
    j["lambda0"] = c.lambda0;
    j["lambda1"] = c.lambda1;
    j["max_period"] = c.max_period;
    j["method0"] = c.method0;
    j["method1"] = c.method1;
    Json entries = Json::array(), exits = Json::array(), flips = Json::array(), nonhyp = Json::array();
    for (const auto& o : c.entry_orbits) entries.push_back(orbit_json(o));
    for (const auto& o : c.exit_orbits) exits.push_back(orbit_json(o));
    for (const auto& o : c.flip_orbits_on_boundary) flips.push_back(orbit_json(o));
    for (const auto& o : c.nonhyperbolic_on_boundary) nonhyp.push_back(orbit_json(o));
    j["entries"] = entries;
    j["exits"] = exits;
    j["flip_orbits"] = flips;
    j["nonhyperbolic"] = nonhyp;
    if (pred)
    {
        Json pj;
        pj["case"] = to_string(pred->kind);
        pj["K"] = pred->entries;
        pj["J"] = pred->exits;
        pj["min_cascades"] = pred->min_cascades;
        Json per = Json::object();
        for (const auto& [k, n] : pred->per_period) per[std::to_string(k)] = n;
        pj["per_period"] = per;
        pj["note"] = pred->truncation_note;
        j["prediction"] = pj;
    }
    else
    {
        j["prediction"] = nullptr;
        j["no_prediction_reason"] = no_prediction_reason;
    }
    return j;
}

inline Json box_json(const Box& b) { return Json{{"lo", vec_json(b.lo)}, {"hi", vec_json(b.hi)}}; }

inline Json certificate_json(const HorseshoeCertificate& c)
{
    Json j;
    j["type"] = "horseshoe_certificate";
    j["family"] = to_string(c.family);
    j["beta"] = c.beta;
    j["lambda0"] = c.lambda0;
    j["lambda1"] = c.lambda1;
    Json checks = Json::object();
    for (const auto& [k, v] : c.checks)
    {
        const std::string key(1, k);
        checks[key] = Json{{"pass", v != Verdict::fail},
                           {"verdict", to_string(v)},
                           {"analytic", c.analytic.count(k) ? c.analytic.at(k) : false}};
        if (c.sampled.count(k)) checks[key]["sampled"] = c.sampled.at(k);
    }
    j["checks"] = checks;
    j["granted"] = c.granted();
    j["map_specific"] = c.map_specific;
    j["J"] = box_json(c.box_J);
    Json cells = Json::array();
    for (const auto& b : c.cells) cells.push_back(box_json(b));
    j["cells"] = cells;
    j["notes"] = c.notes;
    return j;
}

inline Json crosscheck_json(const CrosscheckResult& r)
{
    return Json{{"type", "crosscheck"},
                {"period", r.period},
                {"nonflip_numeric", r.nonflip_numeric},
                {"nonflip_symbolic", r.nonflip_symbolic},
                {"flip_numeric", r.flip_numeric},
                {"match", r.match}};
}

} // namespace cascade
