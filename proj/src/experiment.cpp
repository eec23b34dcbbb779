#include "manet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "manet/format.hpp"
#include "manet/oracle.hpp"
#include "manet/report_io.hpp"
#include "manet/scheduling.hpp"
#include "manet/stats.hpp"

namespace manet {

namespace fs = std::filesystem;

std::string command_name(Command c)
{
    switch (c) {
    case Command::analyze: return "analyze";
    case Command::simulate: return "simulate";
    case Command::sweep: return "sweep";
    case Command::oracle: return "oracle";
    }
    return "?";
}

Command parse_command(const std::string& s)
{
    if (s == "analyze") return Command::analyze;
    if (s == "simulate") return Command::simulate;
    if (s == "sweep") return Command::sweep;
    if (s == "oracle") return Command::oracle;
    throw ConfigError("unknown command '" + s + "' (expected analyze, simulate, sweep or oracle)");
}

namespace {

std::string trim(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Plain decimal/scientific number, or an integer power written a^b.
double parse_number(const std::string& key, const std::string& raw)
{
    std::string s = trim(raw);
    auto caret = s.find('^');
    if (caret != std::string::npos) {
        double b = parse_number(key, s.substr(0, caret));
        double e = parse_number(key, s.substr(caret + 1));
        return std::pow(b, e);
    }
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError("key '" + key + "': '" + raw + "' is not a number");
    return v;
}

std::int64_t parse_integer(const std::string& key, const std::string& raw)
{
    double v = parse_number(key, raw);
    if (v != std::floor(v) || std::fabs(v) > 9.0e15) throw ConfigError("key '" + key + "': '" + raw + "' is not an integer");
    return static_cast<std::int64_t>(v);
}

bool parse_bool(const std::string& key, const std::string& raw)
{
    std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("key '" + key + "': '" + raw + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& raw)
{
    std::vector<std::string> out;
    std::string s = trim(raw);
    if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// exponent "0.25", "1/6" or "(1/6)"
double parse_exponent(const std::string& raw)
{
    std::string s = trim(raw);
    if (!s.empty() && s.front() == '(' && s.back() == ')') s = s.substr(1, s.size() - 2);
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        double a = parse_number("Z0", s.substr(0, slash));
        double b = parse_number("Z0", s.substr(slash + 1));
        if (b == 0.0) throw ConfigError("Z0: zero denominator in exponent");
        return a / b;
    }
    return parse_number("Z0", s);
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues read_flat(const std::string& text)
{
    KeyValues kv;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
        kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
}

std::string json_scalar(const nlohmann::json& v, const std::string& key)
{
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_float()) return fmt(v.get<double>());
    throw ConfigError("key '" + key + "': unsupported JSON value");
}

KeyValues read_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("JSON config must be an object");
    KeyValues kv;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.value().is_array()) {
            std::string joined;
            for (const auto& x : it.value()) joined += (joined.empty() ? "" : ",") + json_scalar(x, it.key());
            kv.emplace_back(it.key(), joined);
        } else {
            kv.emplace_back(it.key(), json_scalar(it.value(), it.key()));
        }
    }
    return kv;
}

const std::set<std::string> kSweepAxes{"n", "delta", "lambda", "load", "guard", "area_constant", "slots", "Z0", "c_far", "D"};

void apply_axis(SimConfig& cfg, ExperimentPlan& p, const std::string& axis, double v)
{
    if (axis == "n") {
        if (v != std::floor(v) || v < 4 || v > 1e8) throw ConfigError("sweep value n = " + fmt(v) + " is not a valid node count");
        cfg.n = static_cast<int>(v);
    } else if (axis == "delta") {
        cfg.delta = v;
    } else if (axis == "lambda") {
        cfg.lambda = v;
        p.load.reset();
    } else if (axis == "load") {
        p.load = v;
    } else if (axis == "guard") {
        cfg.guard = v;
    } else if (axis == "area_constant") {
        cfg.area_constant = v;
    } else if (axis == "slots") {
        cfg.slots = static_cast<std::int64_t>(v);
    } else if (axis == "Z0") {
        p.z0.fixed = true;
        p.z0.value = v;
        p.z0.text = fmt(v);
    } else if (axis == "c_far") {
        cfg.c_far = v;
    }
}

std::string grid_text(const std::vector<double>& g)
{
    std::string s;
    for (double v : g) s += (s.empty() ? "" : ";") + fmt(v);
    return s;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text)
{
    std::string s = trim(text);
    if (std::count(s.begin(), s.end(), ':') == 2) {
        auto c1 = s.find(':'), c2 = s.rfind(':');
        double a = parse_number("grid", s.substr(0, c1));
        double b = parse_number("grid", s.substr(c1 + 1, c2 - c1 - 1));
        double st = parse_number("grid", s.substr(c2 + 1));
        if (!(st > 0.0) || b < a) throw ConfigError("grid '" + text + "' needs start <= stop and step > 0");
        // integer numerators over a power of ten keep decimal grid points exact
        double den = 1.0;
        while (den < 1e9 && (std::fabs(a * den - std::round(a * den)) > 1e-9 || std::fabs(st * den - std::round(st * den)) > 1e-9))
            den *= 10.0;
        double an = std::round(a * den), sn = std::round(st * den);
        auto count = static_cast<long>(std::floor((b * den - an) / sn + 1e-9));
        if (count > 100000) throw ConfigError("grid '" + text + "' has too many points");
        std::vector<double> g;
        for (long k = 0; k <= count; ++k) g.push_back((an + k * sn) / den);
        return g;
    }
    std::vector<double> g;
    for (const auto& item : split_list(s)) g.push_back(parse_number("grid", item));
    if (g.empty()) throw ConfigError("empty grid '" + text + "'");
    return g;
}

Z0Spec parse_z0(const std::string& text, double delta, double auto_constant)
{
    Z0Spec z;
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    z.text = s;
    if (s == "auto") {
        z.is_auto = true;
        OrderExpr floor = z0_constraint_order(delta);
        z.scale = {auto_constant, floor.n_exp, floor.log_exp};
        return z;
    }
    double coef = 1.0;
    std::string body = s;
    static const std::regex coef_re(R"(^([0-9.eE+\-]+)\*(.+)$)");
    std::smatch m;
    if (std::regex_match(s, m, coef_re)) {
        coef = parse_number("Z0", m[1].str());
        body = m[2].str();
    }
    static const std::regex pow_re(R"(^n\^(.+)$)");
    static const std::regex sqrtlog_re(R"(^sqrt\(log\(?n\)?\)$)");
    static const std::regex logpow_re(R"(^log\(?n\)?\^(.+)$)");
    if (std::regex_match(body, m, pow_re)) {
        z.scale = {coef, parse_exponent(m[1].str()), 0.0};
    } else if (std::regex_match(body, sqrtlog_re)) {
        z.scale = {coef, 0.0, 0.5};
    } else if (std::regex_match(body, m, logpow_re)) {
        z.scale = {coef, 0.0, parse_exponent(m[1].str())};
    } else if (body == s) {
        z.fixed = true;
        z.value = parse_number("Z0", s);
    } else {
        throw ConfigError("Z0: cannot parse '" + text + "' (use auto, a number, c*n^x, c*sqrt(log n) or c*log(n)^y)");
    }
    if (!z.fixed && !(z.scale.coef > 0.0)) throw ConfigError("Z0: coefficient must be positive");
    return z;
}

void check_z0_floor(const Z0Spec& z0, double delta, double n)
{
    OrderExpr floor = z0_constraint_order(delta);
    std::string regime = regime_label(classify_regime(delta));
    bool ok;
    if (z0.fixed) {
        ok = z0.value >= z0_constraint(delta, n) * (1.0 - 1e-12);
    } else {
        const double eps = 1e-12;
        if (z0.scale.n_exp > floor.n_exp + eps)
            ok = true;
        else if (z0.scale.n_exp < floor.n_exp - eps)
            ok = false;
        else
            ok = z0.scale.log_exp >= floor.log_exp - eps;
    }
    if (!ok)
        throw ConfigError("Z0 = " + z0.text + " is below the admissible floor for regime " + regime + " at n = " +
                          fmt(n) + ": requires " + z0_constraint_text(delta));
}

double resolve_lambda(const ExperimentPlan& plan, const SimConfig& cfg)
{
    if (!plan.load) return cfg.lambda;
    OrderValue t = throughput_bound(cfg.delta, cfg.n, Z0Scale{cfg.Z0, 0.0, 0.0});
    double per_node = t.numeric / cfg.n;
    return std::min(1.0, *plan.load * plan.throughput_constant * per_node);
}

SimConfig derive_config(const ExperimentPlan& plan, std::optional<double> axis_value, std::uint64_t seed)
{
    ExperimentPlan p = plan;
    SimConfig cfg = p.base;
    if (axis_value && p.sweep_axis) apply_axis(cfg, p, p.sweep_axis->name, *axis_value);
    if (p.z0.is_auto) {
        OrderExpr floor = z0_constraint_order(cfg.delta);
        p.z0.scale.n_exp = floor.n_exp;
        p.z0.scale.log_exp = floor.log_exp;
    }
    cfg.seed = seed;
    cfg.Z0 = p.z0.at(cfg.n);
    check_z0_floor(p.z0, cfg.delta, cfg.n);
    try {
        if (!(cfg.Z0 >= 1.0) || cfg.Z0 > std::sqrt(static_cast<double>(cfg.n)))
            throw std::invalid_argument("Z0 = " + fmt(cfg.Z0) + " must lie in [1, sqrt(n)]");
        cfg.lambda = resolve_lambda(p, cfg);
        validate(cfg);
        build_step_params([&] {
            ScheduleConfig s;
            s.n = cfg.n;
            s.delta = cfg.delta;
            s.Z0 = cfg.Z0;
            s.area_constant = cfg.area_constant;
            s.guard = cfg.guard;
            s.phases = cfg.phases;
            s.max_step = cfg.max_step;
            s.range_ratio_max = cfg.range_ratio_max;
            return s;
        }());
    } catch (const std::invalid_argument& e) {
        std::string where = axis_value ? " (" + p.sweep_axis->name + " = " + fmt(*axis_value) + ")" : "";
        throw ConfigError(e.what() + where);
    }
    return cfg;
}

ExperimentPlan parse_config(const std::string& text)
{
    std::string t = trim(text);
    KeyValues kv = (!t.empty() && t.front() == '{') ? read_json(t) : read_flat(t);

    std::map<std::string, std::string> m;
    for (auto& [k, v] : kv)
        if (!m.emplace(k, v).second) throw ConfigError("duplicate key '" + k + "'");

    static const std::set<std::string> known{
        "command", "n", "delta", "Z0", "Z0_constant", "lambda", "load", "throughput_constant", "slots", "warmup",
        "seed", "seeds", "guard", "area_constant", "phases", "c_far", "queue_cap", "verify_protocol",
        "check_invariants", "trace_interval", "trace_cap", "ring_samples", "range_ratio_max", "max_step",
        "shape_resolution", "sweep_axis", "sweep_values", "output_dir", "workers", "delta_grid", "beta_grid",
        "oracle_kind", "oracle_D", "oracle_A", "oracle_area_scale", "oracle_trials", "oracle_instances",
        "oracle_slots", "oracle_step"};
    for (auto& [k, v] : m)
        if (!known.count(k)) throw ConfigError("unknown key '" + k + "'");

    ExperimentPlan p;
    p.source_text = text;
    SimConfig& c = p.base;
    auto has = [&](const char* k) { return m.count(k) > 0; };
    auto num = [&](const char* k) { return parse_number(k, m.at(k)); };
    auto integer = [&](const char* k) { return parse_integer(k, m.at(k)); };

    if (has("command")) p.command = parse_command(trim(m["command"]));
    if (has("n")) {
        auto n = integer("n");
        if (n < 4 || n > 100000000) throw ConfigError("n must lie in [4, 10^8], got " + m["n"]);
        c.n = static_cast<int>(n);
    }
    if (has("delta")) c.delta = num("delta");
    if (!(c.delta >= 0.0)) throw ConfigError("delta must be >= 0");
    double z0c = has("Z0_constant") ? num("Z0_constant") : 1.0;
    if (!(z0c > 0.0)) throw ConfigError("Z0_constant must be > 0");
    p.z0 = parse_z0(has("Z0") ? m["Z0"] : "auto", c.delta, z0c);
    if (has("lambda") && has("load")) throw ConfigError("give either lambda or load, not both");
    if (has("lambda")) c.lambda = num("lambda");
    if (has("load")) {
        p.load = num("load");
        if (!(*p.load >= 0.0)) throw ConfigError("load must be >= 0");
    }
    if (has("throughput_constant")) p.throughput_constant = num("throughput_constant");
    if (!(p.throughput_constant > 0.0)) throw ConfigError("throughput_constant must be > 0");
    if (has("slots")) c.slots = integer("slots");
    if (has("warmup")) c.warmup = integer("warmup");
    if (has("seed")) c.seed = static_cast<std::uint64_t>(integer("seed"));
    if (has("guard")) c.guard = num("guard");
    if (has("area_constant")) c.area_constant = num("area_constant");
    if (has("phases")) c.phases = static_cast<int>(integer("phases"));
    if (has("c_far")) c.c_far = num("c_far");
    if (has("queue_cap")) c.queue_cap = integer("queue_cap");
    if (has("verify_protocol")) c.verify_protocol = parse_bool("verify_protocol", m["verify_protocol"]);
    if (has("check_invariants")) c.check_invariants = parse_bool("check_invariants", m["check_invariants"]);
    if (has("trace_interval")) c.trace_interval = integer("trace_interval");
    if (has("trace_cap")) c.trace_cap = integer("trace_cap");
    if (has("ring_samples")) c.ring_samples = static_cast<int>(integer("ring_samples"));
    if (has("range_ratio_max")) c.range_ratio_max = num("range_ratio_max");
    if (has("max_step")) c.max_step = static_cast<int>(integer("max_step"));
    if (has("shape_resolution")) c.shape_resolution = static_cast<int>(integer("shape_resolution"));
    if (has("output_dir")) p.output_dir = trim(m["output_dir"]);
    if (has("workers")) {
        p.workers = static_cast<int>(integer("workers"));
        if (p.workers < 1) throw ConfigError("workers must be >= 1");
    }

    if (has("seeds")) {
        for (const auto& s : split_list(m["seeds"])) {
            auto v = parse_integer("seeds", s);
            if (v < 0) throw ConfigError("seeds must be non-negative");
            p.seeds.push_back(static_cast<std::uint64_t>(v));
        }
        if (p.seeds.empty()) throw ConfigError("seeds list is empty");
    } else {
        p.seeds.push_back(c.seed);
    }
    std::set<std::uint64_t> uniq(p.seeds.begin(), p.seeds.end());
    if (uniq.size() != p.seeds.size()) throw ConfigError("duplicate seeds in 'seeds'");

    if (has("sweep_axis") != has("sweep_values")) throw ConfigError("sweep_axis and sweep_values go together");
    if (has("sweep_axis")) {
        SweepAxis ax;
        ax.name = trim(m["sweep_axis"]);
        if (!kSweepAxes.count(ax.name)) throw ConfigError("sweep_axis '" + ax.name + "' is not sweepable");
        ax.values = parse_grid(m["sweep_values"]);
        p.sweep_axis = ax;
    }

    p.delta_grid = parse_grid(has("delta_grid") ? m["delta_grid"] : "0:4:0.1");
    p.beta_grid = parse_grid(has("beta_grid") ? m["beta_grid"] : "0:0.5:0.05");
    for (double d : p.delta_grid)
        if (!(d >= 0.0)) throw ConfigError("delta_grid values must be >= 0");
    for (double b : p.beta_grid)
        if (!(b >= 0.0 && b <= 0.5)) throw ConfigError("beta_grid values must lie in [0, 0.5]");

    OracleSettings& o = p.oracle;
    if (has("oracle_kind")) o.kind = trim(m["oracle_kind"]);
    if (o.kind != "meeting" && o.kind != "populated" && o.kind != "pbeta")
        throw ConfigError("oracle_kind must be meeting, populated or pbeta");
    if (has("oracle_D")) o.D = parse_grid(m["oracle_D"]);
    if (has("oracle_A")) o.A = num("oracle_A");
    if (has("oracle_area_scale")) o.area_scale = num("oracle_area_scale");
    if (has("oracle_trials")) o.trials = integer("oracle_trials");
    if (has("oracle_instances")) o.instances = static_cast<int>(integer("oracle_instances"));
    if (has("oracle_slots")) o.slots = static_cast<int>(integer("oracle_slots"));
    if (has("oracle_step")) o.step = static_cast<int>(integer("oracle_step"));
    if (o.A < 0.0 || !(o.area_scale > 0.0) || o.trials < 1 || o.instances < 1 || o.slots < 1 || o.step < 0)
        throw ConfigError("oracle settings out of range");

    if (p.command != Command::analyze || !p.sweep_axis) {
        std::vector<std::optional<double>> values;
        if (p.sweep_axis && p.sweep_axis->name != "D")
            for (double v : p.sweep_axis->values) values.emplace_back(v);
        else
            values.emplace_back(std::nullopt);
        for (auto v : values) derive_config(p, v, p.seeds.front());
    }
    return p;
}

ExperimentPlan load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

nlohmann::ordered_json plan_to_json(const ExperimentPlan& p)
{
    nlohmann::ordered_json j;
    j["command"] = command_name(p.command);
    j["base"] = config_to_json(p.base);
    j["Z0"] = p.z0.text;
    if (p.load) j["load"] = *p.load;
    j["throughput_constant"] = p.throughput_constant;
    if (p.sweep_axis) {
        j["sweep_axis"] = p.sweep_axis->name;
        j["sweep_values"] = p.sweep_axis->values;
    }
    j["seeds"] = p.seeds;
    j["output_dir"] = p.output_dir;
    return j;
}

std::string run_tag(const std::string& axis, double value, std::uint64_t seed, bool has_axis)
{
    std::string tag = has_axis ? axis + "_" + fmt(value) + "_" : "";
    return "run_" + tag + "seed" + std::to_string(seed);
}

void ensure_dir(const fs::path& p)
{
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw std::runtime_error("cannot create directory " + p.string() + ": " + ec.message());
}

// Fixed-order parallel map over indices [0, count).
template <class F>
void parallel_for(std::size_t count, int workers, F body)
{
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t k = next++; k < count; k = next++) body(k);
    };
    int w = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    if (w == 1) {
        loop();
        return;
    }
    std::vector<std::thread> pool;
    for (int i = 0; i < w; ++i) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
}

std::string opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

}  // namespace

SweepResult aggregate_rows(std::vector<RunRow> rows, const std::string& axis)
{
    SweepResult r;
    r.rows = std::move(rows);
    std::map<double, std::vector<const RunRow*>> by_value;
    for (const auto& row : r.rows) {
        by_value[row.value].push_back(&row);
        if (!row.ok) ++r.failures;
    }
    for (auto& [value, group] : by_value) {
        AggregateRow a;
        a.value = value;
        std::vector<double> thr, del;
        for (const RunRow* row : group) {
            ++a.runs;
            if (!row->ok) {
                ++a.failed;
                continue;
            }
            if (row->unstable) ++a.unstable;
            thr.push_back(row->throughput);
            if (row->mean_delay) del.push_back(*row->mean_delay);
        }
        a.throughput_mean = mean(thr);
        a.throughput_ci95 = t_half_width(thr);
        if (!del.empty()) {
            a.delay_mean = mean(del);
            a.delay_ci95 = t_half_width(del);
        }
        r.aggregate.push_back(a);
    }
    if (axis == "n" && r.aggregate.size() >= 3) {
        std::vector<double> xs, ts, xd, ds;
        for (const auto& a : r.aggregate) {
            if (a.throughput_mean > 0.0) {
                xs.push_back(a.value);
                ts.push_back(a.throughput_mean);
            }
            if (a.delay_mean && *a.delay_mean > 0.0) {
                xd.push_back(a.value);
                ds.push_back(*a.delay_mean);
            }
        }
        if (xs.size() >= 3) r.throughput_slope = slope_fit(xs, ts);
        if (xd.size() >= 3) r.delay_slope = slope_fit(xd, ds);
    }
    return r;
}

SweepResult run_sweep(const ExperimentPlan& plan)
{
    fs::path out(plan.output_dir);
    ensure_dir(out / "runs");
    std::string axis = plan.sweep_axis ? plan.sweep_axis->name : "";
    std::vector<std::optional<double>> values;
    if (plan.sweep_axis)
        for (double v : plan.sweep_axis->values) values.emplace_back(v);
    else
        values.emplace_back(std::nullopt);

    std::vector<RunRow> rows;
    for (auto v : values)
        for (auto s : plan.seeds) {
            RunRow r;
            r.value = v.value_or(0.0);
            r.seed = s;
            rows.push_back(r);
        }

    parallel_for(rows.size(), plan.workers, [&](std::size_t k) {
        RunRow& r = rows[k];
        std::optional<double> v = plan.sweep_axis ? std::optional<double>(r.value) : std::nullopt;
        try {
            r.cfg = derive_config(plan, v, r.seed);
            MetricsReport rep = run(r.cfg);
            std::string tag = run_tag(axis, r.value, r.seed, plan.sweep_axis.has_value());
            std::ostringstream flows, steps;
            write_flows_csv(flows, r.cfg, rep);
            write_steps_csv(steps, r.cfg, rep);
            write_text_file((out / "runs" / (tag + ".csv")).string(), flows.str());
            write_text_file((out / "runs" / (tag + "_steps.csv")).string(), steps.str());
            write_text_file((out / "runs" / (tag + ".json")).string(), report_to_json(r.cfg, rep).dump(2) + "\n");
            r.ok = true;
            r.throughput = rep.throughput();
            r.mean_delay = rep.mean_delay();
            r.injected = rep.injected;
            r.delivered = rep.delivered_total;
            r.hop_mismatches = rep.hop_mismatches;
            r.max_initial_step = rep.max_initial_step;
            r.max_step_bound = rep.max_step_bound;
            r.i_max = rep.i_max_formula;
            r.protocol_checked = rep.protocol_checked;
            r.unstable = rep.unstable;
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
    });

    SweepResult res = aggregate_rows(std::move(rows), axis);
    std::string header = "# params " + params_line(plan.base) + " Z0=" + plan.z0.text +
                         (plan.load ? " load=" + fmt(*plan.load) : "") +
                         " throughput_constant=" + fmt(plan.throughput_constant) +
                         (plan.sweep_axis ? " sweep_axis=" + axis + " sweep_values=" + grid_text(plan.sweep_axis->values) : "") +
                         " seeds=" + [&] {
                             std::string s;
                             for (auto x : plan.seeds) s += (s.empty() ? "" : ";") + std::to_string(x);
                             return s;
                         }() + "\n";

    std::ostringstream results;
    results << header;
    results << "value,seed,ok,n,delta,Z0,lambda,throughput,mean_delay,injected,delivered,hop_mismatches,"
               "max_initial_step,max_step_bound,i_max,protocol_checked,unstable,error\n";
    for (const auto& r : res.rows) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        results << fmt(r.value) << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << r.cfg.n << ',' << fmt(r.cfg.delta)
                << ',' << fmt(r.cfg.Z0) << ',' << fmt(r.cfg.lambda) << ',' << fmt(r.throughput) << ','
                << opt(r.mean_delay) << ',' << r.injected << ',' << r.delivered << ',' << r.hop_mismatches << ','
                << r.max_initial_step << ',' << r.max_step_bound << ',' << r.i_max << ',' << r.protocol_checked << ','
                << (r.unstable ? 1 : 0) << ',' << err << '\n';
    }
    write_text_file((out / "results.csv").string(), results.str());

    std::ostringstream agg;
    agg << header;
    agg << "kind,value,runs,failed,unstable,throughput_mean,throughput_ci95,delay_mean,delay_ci95,slope,slope_stderr,r2,points\n";
    for (const auto& a : res.aggregate)
        agg << "point," << fmt(a.value) << ',' << a.runs << ',' << a.failed << ',' << a.unstable << ','
            << fmt(a.throughput_mean) << ',' << fmt(a.throughput_ci95) << ',' << opt(a.delay_mean) << ','
            << (a.delay_mean ? fmt(a.delay_ci95) : "") << ",,,,\n";
    auto slope_row = [&](const char* kind, const std::optional<SlopeFit>& f) {
        if (!f) return;
        agg << kind << ",,,,,,,,," << fmt(f->slope) << ',' << fmt(f->std_error) << ',' << fmt(f->r2) << ','
            << f->points << '\n';
    };
    slope_row("throughput_slope", res.throughput_slope);
    slope_row("delay_slope", res.delay_slope);
    write_text_file((out / "aggregate.csv").string(), agg.str());
    write_text_file((out / "plan.json").string(), plan_to_json(plan).dump(2) + "\n");
    return res;
}

void emit_curves(const ExperimentPlan& plan)
{
    fs::path out(plan.output_dir);
    ensure_dir(out);
    std::string header = "# params delta_grid=" + grid_text(plan.delta_grid) + " beta_grid=" + grid_text(plan.beta_grid) + "\n";
    ScalingLaw alt = alternative_scheme_law();

    std::ostringstream fast;
    fast << header << "delta,bisection_power,alternative_power,power,scheme,regime\n";
    for (double d : plan.delta_grid) {
        double b = power_exponent(d);
        bool use_alt = alternative_preferred(d);
        fast << fmt(d) << ',' << fmt(b) << ',' << fmt(alt.power_exponent) << ','
             << fmt(use_alt ? alt.power_exponent : b) << ',' << (use_alt ? "alternative" : "bisection") << ','
             << regime_label(classify_regime(d)) << '\n';
    }
    write_text_file((out / "fast_power.csv").string(), fast.str());

    std::ostringstream trade;
    trade << header << "curve,delta,beta,lambda_exp,delay_exp,lambda_log_exp,delay_log_exp,power_exp\n";
    for (double d : plan.delta_grid) {
        if (d >= 2.0) {
            TradeoffPoint t = tradeoff_curve(d, 0.0);
            trade << "bisection," << fmt(d) << ",," << fmt(t.lambda_exp) << ',' << fmt(t.delay_exp) << ','
                  << fmt(t.lambda_log_exp) << ',' << fmt(t.delay_log_exp) << ',' << fmt(t.lambda_exp - t.delay_exp) << '\n';
            continue;
        }
        for (double b : plan.beta_grid) {
            if (b < beta_floor(d) - 1e-12) continue;
            TradeoffPoint t = tradeoff_curve(d, b);
            trade << "bisection," << fmt(d) << ',' << fmt(b) << ',' << fmt(t.lambda_exp) << ',' << fmt(t.delay_exp)
                  << ",0,0," << fmt(t.lambda_exp - t.delay_exp) << '\n';
        }
    }
    // reference lines through the same lambda exponents
    for (double b : plan.beta_grid) {
        double le = b - 0.5;
        trade << "D=n*lambda,,," << fmt(le) << ',' << fmt(1.0 + le) << ",0,0," << fmt(-1.0) << '\n';
        trade << "D=n*lambda^2,,," << fmt(le) << ',' << fmt(1.0 + 2.0 * le) << ",0,0," << fmt(-1.0 - le) << '\n';
    }
    write_text_file((out / "tradeoff.csv").string(), trade.str());

    std::ostringstream slow;
    slow << header << "delta,fast_power,slow_power,slow_scheme\n";
    for (double d : plan.delta_grid) {
        double f = power_exponent(d);
        double s = slow_power_exponent(d);
        slow << fmt(d) << ',' << fmt(f) << ',' << fmt(s) << ',' << (f >= s ? "bisection" : "single_step") << '\n';
    }
    write_text_file((out / "slow_power.csv").string(), slow.str());

    // bounds for the configured n, delta and Z0
    const SimConfig& c = plan.base;
    std::ostringstream bounds;
    bounds << "# params n=" << c.n << " delta=" << fmt(c.delta) << " Z0=" << plan.z0.text << "\n";
    bounds << "quantity,step,numeric,order,kind\n";
    Z0Scale z = plan.z0.fixed ? Z0Scale{plan.z0.value, 0.0, 0.0} : plan.z0.scale;
    if (plan.z0.is_auto) {
        OrderExpr floor = z0_constraint_order(c.delta);
        z.n_exp = floor.n_exp;
        z.log_exp = floor.log_exp;
    }
    OrderValue tb = throughput_bound(c.delta, c.n, z);
    bounds << "throughput,," << fmt(tb.numeric) << ',' << tb.order.str() << ',' << bound_label(tb.order.kind) << '\n';
    if (z.value(c.n) > 1.0 || c.delta != 2.0) {
        OrderValue db = delay_bound(c.delta, c.n, z);
        bounds << "delay,," << fmt(db.numeric) << ',' << db.order.str() << ',' << bound_label(db.order.kind) << '\n';
    }
    int top = i_max(c.n, z.value(c.n));
    for (int i = 0; i <= top; ++i) {
        ServiceProbabilities sp = service_probabilities(i, c.delta, c.n, z);
        bounds << "A," << i << ',' << fmt(sp.A) << ",,\n";
        bounds << "p_s," << i << ',' << fmt(sp.p_s) << ",,\n";
        bounds << "p_alpha," << i << ',' << fmt(sp.p_alpha) << ",," << bound_label(sp.alpha_kind) << '\n';
        bounds << "p_beta," << i << ',' << fmt(sp.p_beta) << ",," << bound_label(sp.beta_kind) << '\n';
        bounds << "p_T," << i << ',' << fmt(sp.p_T) << ',' << sp.p_T_order.str() << ',' << bound_label(sp.T_kind) << '\n';
    }
    write_text_file((out / "bounds.csv").string(), bounds.str());
}

int run_oracle(const ExperimentPlan& plan)
{
    fs::path out(plan.output_dir);
    ensure_dir(out);
    const OracleSettings& o = plan.oracle;
    std::string axis = plan.sweep_axis ? plan.sweep_axis->name : "";
    std::vector<std::optional<double>> values;
    if (plan.sweep_axis)
        for (double v : plan.sweep_axis->values) values.emplace_back(v);
    else if (o.kind == "meeting" && !o.D.empty())
        for (double d : o.D) values.emplace_back(d);
    else
        values.emplace_back(std::nullopt);
    bool d_axis = axis == "D" || (!plan.sweep_axis && o.kind == "meeting" && !o.D.empty());

    struct Job {
        std::optional<double> value;
        std::uint64_t seed;
        EstimateRow row;
        std::string error;
    };
    std::vector<Job> jobs;
    for (auto v : values)
        for (auto s : plan.seeds) jobs.push_back({v, s, {}, {}});

    for (auto& job : jobs) {
        try {
            std::optional<double> cfg_value = d_axis ? std::nullopt : job.value;
            SimConfig cfg = derive_config(plan, cfg_value, job.seed);
            int step = o.step;
            ScheduleConfig sc;
            sc.n = cfg.n;
            sc.delta = cfg.delta;
            sc.Z0 = cfg.Z0;
            sc.area_constant = cfg.area_constant;
            double A = o.A > 0.0 ? o.A : squarelet_area(step, cfg.delta, cfg.n, cfg.Z0, cfg.area_constant);
            A *= o.area_scale;
            EstimateRow& row = job.row;
            row.kind = o.kind;
            row.params = {{"n", double(cfg.n)}, {"delta", cfg.delta}, {"Z0", cfg.Z0}};
            if (o.kind == "meeting") {
                double D = d_axis ? *job.value : (o.D.empty() ? 0.0 : o.D.front());
                MeetingEstimate e = estimate_meeting_probability({D, A, cfg.delta, cfg.n, o.trials, job.seed, plan.workers});
                row.params.insert(row.params.end(), {{"D", D}, {"A", A}, {"cell_area", e.cell_area}});
                row.est = e.est;
            } else if (o.kind == "populated") {
                PopulatedQuery q;
                q.i = step;
                q.delta = cfg.delta;
                q.n = cfg.n;
                q.Z0 = cfg.Z0;
                q.A = A;
                q.instances = o.instances;
                q.slots = o.slots;
                q.seed = job.seed;
                q.workers = plan.workers;
                PopulatedEstimate e = estimate_populated_probability(q);
                row.params.insert(row.params.end(), {{"step", double(step)}, {"A", A}, {"cell_area", e.cell_area}});
                row.est = e.est;
            } else {
                PbetaQuery q;
                q.i = step;
                q.delta = cfg.delta;
                q.n = cfg.n;
                q.Z0 = cfg.Z0;
                q.area_constant = cfg.area_constant;
                q.guard = cfg.guard;
                q.slots = o.slots;
                q.seed = job.seed;
                PbetaEstimate e = estimate_pbeta(q);
                row.params.insert(row.params.end(), {{"step", double(step)}, {"A", e.A}, {"mean_pairs", e.mean_pairs}});
                row.est = e.est;
            }
            if (job.value) row.params.insert(row.params.begin(), {axis.empty() ? "D" : axis, *job.value});
        } catch (const std::exception& e) {
            job.error = e.what();
        }
    }

    int failures = 0;
    std::vector<EstimateRow> rows;
    std::ostringstream errs;
    for (const auto& j : jobs) {
        if (!j.error.empty()) {
            ++failures;
            errs << (j.value ? fmt(*j.value) : "") << ',' << j.seed << ',' << j.error << '\n';
            continue;
        }
        rows.push_back(j.row);
    }
    std::ostringstream csv;
    csv << "# params " << params_line(plan.base) << " Z0=" << plan.z0.text << " oracle_kind=" << o.kind
        << " trials=" << o.trials << " instances=" << o.instances << " slots=" << o.slots << " step=" << o.step
        << " area_scale=" << fmt(o.area_scale) << "\n";
    write_estimate_csv(csv, rows);
    write_text_file((out / "oracle.csv").string(), csv.str());
    if (failures) write_text_file((out / "oracle_errors.csv").string(), "value,seed,error\n" + errs.str());

    if (values.size() >= 3 && values.front()) {
        std::map<double, std::pair<double, int>> acc;
        for (const auto& j : jobs)
            if (j.error.empty() && j.row.est.p > 0.0) {
                acc[*j.value].first += j.row.est.p;
                acc[*j.value].second += 1;
            }
        std::vector<double> xs, ys;
        for (auto& [x, s] : acc) {
            xs.push_back(x);
            ys.push_back(s.first / s.second);
        }
        std::ostringstream sl;
        sl << "# params " << params_line(plan.base) << " oracle_kind=" << o.kind << " axis=" << (axis.empty() ? "D" : axis) << "\n";
        sl << "axis,slope,slope_stderr,intercept,r2,points\n";
        if (xs.size() >= 3) {
            SlopeFit f = slope_fit(xs, ys);
            sl << (axis.empty() ? "D" : axis) << ',' << fmt(f.slope) << ',' << fmt(f.std_error) << ',' << fmt(f.intercept)
               << ',' << fmt(f.r2) << ',' << f.points << '\n';
        }
        write_text_file((out / "slopes.csv").string(), sl.str());
    }
    return failures;
}

}  // namespace manet
