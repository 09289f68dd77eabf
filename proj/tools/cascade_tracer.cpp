// Command-line front end: sweeps, traces, cascade reports, count tables,
// boundary censuses and horseshoe certificates.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cascade/cascade.hpp"

namespace
{

using namespace cascade;

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_verdict = 2;
constexpr int exit_usage = 64;

/// Raised for flag values CLI11 accepts syntactically but that make no sense.
struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct Options
{
    std::string out;
    std::uint64_t seed = 1;
    int jobs = 0;
    std::string map = "quadratic";
    std::vector<std::string> params;

    // sweep
    double lambda_min = 0.0, lambda_max = 1.0;
    int count = 101;
    int transient = 1000;
    int record = 200;
    std::string ic = "carry_forward";
    std::string x0;
    double escape_radius = 1e6;

    // trace / cascades
    double seed_lambda = 0.0;
    std::string seed_x = "0";
    int period = 1;
    std::string domain = "-1:3";
    int max_period_factor = 64;
    int max_period = 0;
    int min_doublings = 4;

    // count / crosscheck
    std::string model = "tent";
    std::string k = "1..8";
    int n = 2;

    // census
    double lambda0 = 0.0, lambda1 = 1.0;
    int census_max_period = 3;
    int grid = 200;
    bool no_symbolic = false;

    // verify-horseshoe
    std::string family = "quadratic";
    double beta = 0.0;
    double kappa = 0.1;
    double coupling = 0.1;
    int samples = 1000;
    bool sample_map = false;

    // crosscheck
    double lambda_h = 36.1;
};

std::vector<double> parse_reals(const std::string& s)
{
    std::vector<double> out;
    std::stringstream in(s);
    in.imbue(std::locale::classic());
    std::string item;
    while (std::getline(in, item, ','))
    {
        std::istringstream one(item);
        one.imbue(std::locale::classic());
        double v = 0.0;
        if (!(one >> v) || !(one >> std::ws).eof()) throw UsageError("not a number list: '" + s + "'");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("empty number list");
    return out;
}

/// "a..b" or "a".
std::pair<int, int> parse_range(const std::string& s)
{
    const auto dots = s.find("..");
    try
    {
        std::size_t used = 0;
        if (dots == std::string::npos)
        {
            const int v = std::stoi(s, &used);
            if (used != s.size()) throw UsageError("");
            return {v, v};
        }
        const std::string a = s.substr(0, dots), b = s.substr(dots + 2);
        const int lo = std::stoi(a, &used);
        if (used != a.size()) throw UsageError("");
        const int hi = std::stoi(b, &used);
        if (used != b.size() || hi < lo) throw UsageError("");
        return {lo, hi};
    }
    catch (const std::exception&)
    {
        throw UsageError("bad range '" + s + "' (expected k or lo..hi)");
    }
}

Interval parse_domain(const std::string& s)
{
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw UsageError("bad domain '" + s + "' (expected lo:hi)");
    const auto lo = parse_reals(s.substr(0, colon));
    const auto hi = parse_reals(s.substr(colon + 1));
    if (lo.size() != 1 || hi.size() != 1 || !(lo[0] < hi[0])) throw UsageError("bad domain '" + s + "'");
    return {lo[0], hi[0]};
}

Params parse_params(const std::vector<std::string>& items)
{
    Params p;
    for (const auto& it : items)
    {
        const auto eq = it.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("map parameter must be key=value: '" + it + "'");
        p[it.substr(0, eq)] = it.substr(eq + 1);
    }
    return p;
}

Vec to_vec(const std::vector<double>& v)
{
    Vec x(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<Eigen::Index>(i)] = v[i];
    return x;
}

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

/// Reads `key = value` lines (with `#` comments) into "--key=value" tokens.
std::vector<std::string> read_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    std::vector<std::string> out;
    std::string line;
    int number = 0;
    while (std::getline(in, line))
    {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(number) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        while (!key.empty() && key.front() == '-') key.erase(0, 1);
        if (key.empty()) throw UsageError(path + ":" + std::to_string(number) + ": empty key");
        out.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
    }
    return out;
}

/// Collects every named option of the app and the active subcommand with its
/// effective value.
Provenance provenance(const CLI::App& app, const CLI::App& sub, const std::string& map_name)
{
    Provenance p;
    p.subcommand = sub.get_name();
    p.map_name = map_name;
    for (const CLI::App* a : {&app, &sub})
        for (const CLI::Option* o : a->get_options())
        {
            const auto& names = o->get_lnames();
            // --out names the destination and does not change the content
            if (names.empty() || names.front() == "help" || names.front() == "config" ||
                names.front() == "version" || names.front() == "out")
                continue;
            std::string value;
            if (o->count() > 0)
            {
                if (o->get_multi_option_policy() == CLI::MultiOptionPolicy::TakeAll)
                {
                    for (const auto& r : o->results())
                    {
                        if (!value.empty()) value += ';';
                        value += r;
                    }
                }
                else
                {
                    value = o->results().back();
                }
            }
            else
            {
                value = o->get_default_str();
            }
            p.flags[names.front()] = value;
        }
    return p;
}

/// Output sink: the --out file or stdout.
class Sink
{
public:
    explicit Sink(const std::string& path)
    {
        if (!path.empty())
        {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) throw std::runtime_error("cannot open output file '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

MapDefinition load_map(const Options& o) { return builtin_map(o.map, parse_params(o.params)); }

ContinuationConfig continuation_config(const Options& o)
{
    ContinuationConfig c;
    c.max_period_factor = o.max_period_factor;
    c.max_period = o.max_period;
    c.min_doublings = o.min_doublings;
    return c;
}

ComponentTrace run_trace(const Options& o, const MapDefinition& map)
{
    const Vec x = to_vec(parse_reals(o.seed_x));
    const PeriodicOrbit seed = find_orbit(map, o.seed_lambda, x, o.period);
    return continue_component(map, seed, parse_domain(o.domain), continuation_config(o));
}

int cmd_sweep(const Options& o, const Provenance& prov)
{
    const MapDefinition map = load_map(o);
    SweepConfig cfg;
    cfg.lambda_min = o.lambda_min;
    cfg.lambda_max = o.lambda_max;
    cfg.count = o.count;
    cfg.transient_iterations = o.transient;
    cfg.record_iterations = o.record;
    cfg.policy = parse_initial_policy(o.ic);
    if (!o.x0.empty()) cfg.x0 = to_vec(parse_reals(o.x0));
    cfg.escape_radius = o.escape_radius;
    cfg.jobs = o.jobs;
    const SweepResult r = attracting_set_sweep(map, cfg);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    Sink sink(o.out);
    write_sweep_csv(sink.stream(), prov, r);
    if (!o.out.empty())
    {
        Sink summary(o.out + ".summary.csv");
        write_sweep_summary_csv(summary.stream(), prov, r);
    }
    else
    {
        std::cerr << "escapes: " << r.escapes << " of " << cfg.count << '\n';
    }
    return exit_ok;
}

int cmd_trace(const Options& o, const Provenance& prov)
{
    const MapDefinition map = load_map(o);
    const ComponentTrace t = run_trace(o, map);
    Sink sink(o.out);
    write_trace_jsonl(sink.stream(), prov, t);
    return exit_ok;
}

int cmd_cascades(const Options& o, const Provenance& prov)
{
    const MapDefinition map = load_map(o);
    const ComponentTrace t = run_trace(o, map);
    const auto cascades = detect_cascades(t, o.min_doublings, map.name + "/p" + std::to_string(o.period));
    Sink sink(o.out);
    write_json_line(sink.stream(), header_json(prov));
    for (const auto& c : cascades) write_json_line(sink.stream(), cascade_json(c));
    return exit_ok;
}

int cmd_count(const Options& o, const Provenance& prov)
{
    const auto [lo, hi] = parse_range(o.k);
    if (lo < 1) throw UsageError("--k must start at 1 or above");
    SymbolicModel model = SymbolicModel::tent;
    if (o.model == "cubic")
        model = SymbolicModel::cubic;
    else if (o.model == "product")
        model = SymbolicModel::product;
    else if (o.model != "tent")
        throw UsageError("unknown model '" + o.model + "' (tent, cubic, product)");
    std::vector<CountRow> rows;
    for (int k = lo; k <= hi; ++k) rows.push_back(count_row(model, model == SymbolicModel::product ? o.n : 1, k));
    Sink sink(o.out);
    write_count_csv(sink.stream(), prov, rows);
    return exit_ok;
}

int cmd_census(const Options& o, const Provenance& prov)
{
    const MapDefinition map = load_map(o);
    CensusOptions opt;
    opt.grid_per_dim = o.grid;
    opt.symbolic = !o.no_symbolic;
    opt.seed = o.seed;
    opt.jobs = o.jobs;
    const BoundaryCensus c = boundary_census(map, o.lambda0, o.lambda1, o.census_max_period, opt);
    std::optional<CascadePrediction> pred;
    std::string reason;
    try
    {
        pred = predict_cascades(c);
    }
    catch (const NoPrediction& e)
    {
        reason = e.what();
    }
    Sink sink(o.out);
    write_json_line(sink.stream(), header_json(prov));
    write_json_line(sink.stream(), census_json(c, pred, reason));
    return exit_ok;
}

int cmd_verify(const Options& o, const Provenance& prov)
{
    HorseshoeOptions opt;
    opt.samples_per_cell = o.samples;
    opt.seed = o.seed;
    opt.shape.n = o.n;
    opt.shape.kappa = o.kappa;
    opt.shape.c = o.coupling;
    if (o.sample_map) opt.sample_map = load_map(o);
    const HorseshoeCertificate cert =
        verify_horseshoe(parse_horseshoe_family(o.family), o.beta, o.lambda0, o.lambda1, opt);
    Sink sink(o.out);
    write_json_line(sink.stream(), header_json(prov));
    write_json_line(sink.stream(), certificate_json(cert));
    return cert.granted() ? exit_ok : exit_verdict;
}

int cmd_crosscheck(const Options& o, const Provenance& prov)
{
    const MapDefinition map = load_map(o);
    const auto [lo, hi] = parse_range(o.k);
    if (lo < 1) throw UsageError("--k must start at 1 or above");
    std::vector<CrosscheckResult> results;
    for (int k = lo; k <= hi; ++k) results.push_back(numeric_census_crosscheck(map, o.lambda_h, k, false));
    Sink sink(o.out);
    write_json_line(sink.stream(), header_json(prov));
    bool all = true;
    for (const auto& r : results)
    {
        write_json_line(sink.stream(), crosscheck_json(r));
        all = all && r.match;
    }
    if (!all) std::cerr << "CensusMismatch: numeric nonflip counts disagree with the symbolic counts\n";
    return all ? exit_ok : exit_verdict;
}

void add_map_options(CLI::App* sub, Options& o)
{
    sub->add_option("--map", o.map, "built-in map name")->check(CLI::IsMember(builtin_map_names()));
    sub->add_option("--param", o.params, "map parameter key=value (repeatable)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
        ->default_str("");
}

void add_trace_options(CLI::App* sub, Options& o)
{
    add_map_options(sub, o);
    sub->add_option("--seed-lambda", o.seed_lambda, "parameter of the seed orbit");
    sub->add_option("--seed-x", o.seed_x, "initial guess for the seed orbit, comma separated");
    sub->add_option("--period", o.period, "period of the seed orbit")->check(CLI::PositiveNumber);
    sub->add_option("--domain", o.domain, "parameter domain lo:hi")->allow_extra_args(false);
    sub->add_option("--max-period-factor", o.max_period_factor, "stop once the period exceeds factor * seed period")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-period", o.max_period, "absolute period cap (0 = none)")->check(CLI::NonNegativeNumber);
    sub->add_option("--min-doublings", o.min_doublings, "doublings needed to report a cascade")
        ->check(CLI::PositiveNumber);
}

int run(int argc, char** argv)
{
    Options o;
    CLI::App app{"Period-doubling cascade tracer", tool_name};
    app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", tool_version);

    std::string config_path;
    app.add_option("--out", o.out, "output file (default stdout)");
    app.add_option("--seed", o.seed, "seed for every stochastic choice");
    app.add_option("--jobs", o.jobs, "worker threads (default CASCADE_TRACER_JOBS or all cores)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--config", config_path, "key = value file overriding flags");

    auto* sweep = app.add_subcommand("sweep", "attracting-set sweep (bifurcation diagram data, CSV)");
    add_map_options(sweep, o);
    sweep->add_option("--lambda-min", o.lambda_min);
    sweep->add_option("--lambda-max", o.lambda_max);
    sweep->add_option("--count", o.count, "grid points")->check(CLI::Range(2, 100000000));
    sweep->add_option("--transient", o.transient)->check(CLI::NonNegativeNumber);
    sweep->add_option("--record", o.record)->check(CLI::NonNegativeNumber);
    sweep->add_option("--ic", o.ic, "initial-condition policy")
        ->check(CLI::IsMember({"fixed_point_seed", "carry_forward", "fixed"}));
    sweep->add_option("--x0", o.x0, "initial state, comma separated (default: center of the map's state box)");
    sweep->add_option("--escape-radius", o.escape_radius)->check(CLI::PositiveNumber);

    auto* trace = app.add_subcommand("trace", "continue one component (JSON lines)");
    add_trace_options(trace, o);

    auto* cascades = app.add_subcommand("cascades", "cascades on one component (JSON lines)");
    add_trace_options(cascades, o);

    auto* count = app.add_subcommand("count", "symbolic orbit counts (CSV)");
    count->add_option("--model", o.model, "tent, cubic or product")->check(CLI::IsMember({"tent", "cubic", "product"}));
    count->add_option("--k", o.k, "period or range lo..hi");
    count->add_option("--N", o.n, "coordinates of the product model")->check(CLI::Range(1, 8));

    auto* census = app.add_subcommand("census", "boundary census and cascade prediction (JSON lines)");
    add_map_options(census, o);
    census->add_option("--lambda0", o.lambda0);
    census->add_option("--lambda1", o.lambda1);
    census->add_option("--max-period", o.census_max_period)->check(CLI::PositiveNumber);
    census->add_option("--grid", o.grid, "multi-start points per dimension")->check(CLI::PositiveNumber);
    census->add_flag("--no-symbolic", o.no_symbolic, "always use multi-start Newton")->default_str("false");

    auto* verify = app.add_subcommand("verify-horseshoe", "horseshoe certificate (JSON lines)");
    verify->add_option("--family", o.family)->check(CLI::IsMember({"quadratic", "cubic", "coupled_quadratic"}));
    verify->add_option("--beta", o.beta)->check(CLI::NonNegativeNumber);
    verify->add_option("--lambda0", o.lambda0);
    verify->add_option("--lambda1", o.lambda1);
    verify->add_option("--N", o.n)->check(CLI::Range(1, 8));
    verify->add_option("--kappa", o.kappa);
    verify->add_option("--c", o.coupling);
    verify->add_option("--samples", o.samples, "samples per cell")->check(CLI::PositiveNumber);
    verify->add_flag("--sample-map", o.sample_map, "also sample --map (map-specific verdicts)")
        ->default_str("false");
    add_map_options(verify, o);

    auto* cross = app.add_subcommand("crosscheck", "numeric vs symbolic nonflip counts (JSON lines)");
    add_map_options(cross, o);
    cross->add_option("--lambda", o.lambda_h, "parameter with a verified horseshoe");
    cross->add_option("--k", o.k, "period or range lo..hi");

    // --config: its entries are appended after the command line and win.
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    for (std::size_t i = 0; i < args.size(); ++i)
    {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size())
            path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            path = args[i].substr(9);
        if (path.empty()) continue;
        try
        {
            const auto extra = read_config(path);
            args.insert(args.end(), extra.begin(), extra.end());
        }
        catch (const UsageError& e)
        {
            std::cerr << "usage error: " << e.what() << '\n';
            return exit_usage;
        }
        break;
    }

    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    }
    catch (const CLI::Success& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return exit_usage;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const bool uses_map = sub != count && (sub != verify || o.sample_map);
    const Provenance prov = provenance(app, *sub, uses_map ? o.map : std::string("none"));

    try
    {
        if (sub == sweep) return cmd_sweep(o, prov);
        if (sub == trace) return cmd_trace(o, prov);
        if (sub == cascades) return cmd_cascades(o, prov);
        if (sub == count) return cmd_count(o, prov);
        if (sub == census) return cmd_census(o, prov);
        if (sub == verify) return cmd_verify(o, prov);
        if (sub == cross) return cmd_crosscheck(o, prov);
    }
    catch (const UsageError& e)
    {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    }
    catch (const CensusMismatch& e)
    {
        std::cerr << e.what() << '\n';
        return exit_verdict;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_error;
    }
    return exit_error;
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }
