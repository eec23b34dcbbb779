// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as arguments to
// run a subset (e.g. `acceptance 1 2 10`).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "manet/analysis.hpp"
#include "manet/experiment.hpp"
#include "manet/format.hpp"
#include "manet/mobility.hpp"
#include "manet/oracle.hpp"
#include "manet/routing.hpp"
#include "manet/scheduling.hpp"
#include "manet/simcore.hpp"
#include "manet/stats.hpp"

using namespace manet;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes, fixed here so every run checks the same thing.
constexpr double kExactTol = 1e-12;
constexpr double kGSlopeTol = 0.05;
constexpr double kDelta2BandLo = 0.9;  // G / (pi ln n)
constexpr double kDelta2BandHi = 1.1;
constexpr double kDelta3RelDiff = 0.02;
constexpr double kMeetingTol = 0.15;
constexpr std::int64_t kMeetingTrials = 10000000;
constexpr double kPopulatedFloor = 0.05;
constexpr double kShrunkSlopeMax = -0.2;
constexpr std::int64_t kProtocolChecks = 1000000;
constexpr double kThroughputSlopeMin = -0.15;
constexpr double kDelaySlopeMax = 0.20;
constexpr double kUniformDelaySlopeMin = 0.45;
constexpr double kKingmanFactor = 4.0;
constexpr double kKsAlpha = 0.01;
constexpr std::uint64_t kSeed = 20240601;

struct Calibration {
    double area_constant = 1.0;
    double kappa2 = 1.0;
    double kappa0 = 1.0;
};

Calibration load_calibration()
{
    std::ifstream in(std::string(MANET_FIXTURES) + "/calibration.json");
    if (!in) throw std::runtime_error("missing calibration fixture");
    nlohmann::json j = nlohmann::json::parse(in);
    Calibration c;
    c.area_constant = j.at("area_constant").get<double>();
    c.kappa2 = j.at("throughput_constant").at("delta2").get<double>();
    c.kappa0 = j.at("throughput_constant").at("delta0").get<double>();
    return c;
}

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << "[fail] " << what << "; ";
        }
    }
    void note(const std::string& s) { detail << s << "; "; }
};

bool near(double a, double b, double tol = kExactTol) { return std::fabs(a - b) <= tol; }

std::string num(double v) { return fmt(v); }

// ----------------------------------------------------------------------------------------------

void exact_formulas(Outcome& o)
{
    int checked = 0;
    auto eq = [&](double got, double want, const std::string& what) {
        ++checked;
        o.require(near(got, want), what + " = " + num(got) + ", want " + num(want));
    };
    for (double Z0 : {1.0, 2.633, 3.7, 8.0}) {
        eq(compute_step(5 * Z0, Z0), 3, "compute_step(5 Z0)");
        eq(compute_step(Z0, Z0), 0, "compute_step(Z0)");
        eq(compute_step(1.5 * Z0, Z0), 1, "compute_step(1.5 Z0)");
        RelayRing r3 = relay_ring(3, Z0, {});
        eq(r3.inner, 2 * Z0, "relay_ring(3).inner");
        eq(r3.outer, 3 * Z0, "relay_ring(3).outer");
        RelayRing r1 = relay_ring(1, Z0, {});
        eq(r1.inner, Z0 / 2, "relay_ring(1).inner");
        eq(r1.outer, 3 * Z0 / 4, "relay_ring(1).outer");
        RelayRing r2 = relay_ring(2, Z0, {});
        eq(r2.inner, Z0, "relay_ring(2).inner");
        eq(r2.outer, 1.5 * Z0, "relay_ring(2).outer");
    }
    eq(i_max(65536, 4), 6, "i_max(2^16, 4)");
    eq(i_max(4096, 8), 3, "i_max(4096, 8)");
    eq(i_max(4096, 64), 0, "i_max(n, sqrt n)");

    auto eq_vec = [&](const std::vector<double>& got, const std::vector<double>& want, const std::string& what) {
        o.require(got.size() == want.size(), what + " size");
        for (std::size_t k = 0; k < std::min(got.size(), want.size()); ++k) eq(got[k], want[k], what + "[" + std::to_string(k) + "]");
    };
    eq_vec(slot_distribution({3, 3, 3, 3}), {0.25, 0.25, 0.25, 0.25}, "slot_distribution(equal)");
    eq_vec(slot_distribution({16, 8, 4, 2}), {16.0 / 30, 8.0 / 30, 4.0 / 30, 2.0 / 30}, "slot_distribution(16,8,4,2)");
    for (int k : {3, 6}) {
        std::vector<double> areas, want;
        for (int i = 0; i <= k; ++i) areas.push_back(std::ldexp(5.0, -i));
        for (int i = 0; i <= k; ++i) want.push_back(std::ldexp(1.0, -i) * 0.5 / (1.0 - std::ldexp(1.0, -(k + 1))));
        eq_vec(slot_distribution(areas), want, "slot_distribution(geometric)");
    }

    eq(power_exponent(2.0), 0.0, "power_exponent(2)");
    eq(power_exponent(1.5), -0.6, "power_exponent(1.5)");
    eq(power_exponent(2.5), -0.5, "power_exponent(2.5)");

    TradeoffPoint gt = tradeoff_curve(0.5, 0.5);
    eq(gt.lambda_exp, 0.0, "tradeoff(0.5, 0.5).lambda");
    eq(gt.delay_exp, 1.0, "tradeoff(0.5, 0.5).delay");
    TradeoffPoint t = tradeoff_curve(1.5, 0.1);
    eq(t.lambda_exp, -0.2, "tradeoff(1.5, 0.1).lambda");
    eq(t.delay_exp, 0.4, "tradeoff(1.5, 0.1).delay");
    eq(t.lambda_exp - t.delay_exp, power_exponent(1.5), "tradeoff(1.5, 0.1) power");
    for (double beta : {1.0 / 6.0, 0.25, 0.4, 0.5}) {
        TradeoffPoint q = tradeoff_curve(1.0, beta);
        eq(q.delay_exp - q.lambda_exp, 1.0, "tradeoff(1, beta) D - lambda");
    }

    eq(kingman_delay({0, 0, 0.5, 7.5}), 7.5, "kingman(0 variance)");
    eq(kingman_delay({1, 99, 0.5, 10}), 10.0, "kingman(10, 1, 99, 0.5)");
    o.note(std::to_string(checked) + " exact values");
}

void g_scaling(Outcome& o)
{
    std::vector<double> ns;
    for (int k = 10; k <= 20; k += 2) ns.push_back(std::ldexp(1.0, k));
    auto Gs = [&](double delta) {
        std::vector<double> g;
        for (double n : ns) g.push_back(normalization_constant(delta, TorusGeometry::from_area(n)));
        return g;
    };
    for (double delta : {0.0, 0.5, 1.0, 1.5}) {
        double s = slope_fit(ns, Gs(delta)).slope;
        double want = (2.0 - delta) / 2.0;
        o.note("delta " + num(delta) + " slope " + num(s) + " (want " + num(want) + ")");
        o.require(std::fabs(s - want) <= kGSlopeTol, "G slope at delta " + num(delta));
    }
    auto g2 = Gs(2.0);
    double lo = 1e9, hi = 0;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        double r = g2[k] / (std::numbers::pi * std::log(ns[k]));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    o.note("delta 2: G/(pi ln n) in [" + num(lo) + ", " + num(hi) + "]");
    o.require(lo >= kDelta2BandLo && hi <= kDelta2BandHi, "delta 2 band");
    double a = normalization_constant(3.0, TorusGeometry::from_area(std::ldexp(1.0, 20)));
    double b = normalization_constant(3.0, TorusGeometry::from_area(std::ldexp(1.0, 18)));
    double rel = std::fabs(a - b) / a;
    o.note("delta 3 relative change " + num(rel));
    o.require(rel < kDelta3RelDiff, "delta 3 saturation");
}

// p / cell area for a meeting query; the fitted grid cell can differ slightly from A.
double meeting_density(double D, double delta, int n, std::uint64_t seed)
{
    MeetingQuery q;
    q.D = D;
    q.A = 1.0;
    q.delta = delta;
    q.n = n;
    q.trials = kMeetingTrials;
    q.seed = seed;
    MeetingEstimate e = estimate_meeting_probability(q);
    if (e.est.successes == 0) throw std::runtime_error("no meetings at D = " + num(D));
    return e.est.p / e.cell_area;
}

void meeting_slopes(Outcome& o)
{
    const int n = 1 << 20;
    std::uint64_t seed = kSeed;
    auto d_fit = [&](double delta, const std::vector<double>& Ds, bool log_corrected) {
        std::vector<double> ys;
        for (double D : Ds) {
            double p = meeting_density(D, delta, n, ++seed);
            ys.push_back(log_corrected ? p / std::log(D) : p);
        }
        return slope_fit(Ds, ys).slope;
    };
    std::vector<double> D3{8, 8 * std::numbers::sqrt2, 16, 16 * std::numbers::sqrt2, 32};
    std::vector<double> Dwide{8, 16, 32, 64, 128};
    for (auto [delta, Ds, logc] : {std::tuple{3.0, D3, false}, std::tuple{1.5, Dwide, false}, std::tuple{2.0, Dwide, true}}) {
        double s = d_fit(delta, Ds, logc);
        double want = meeting_exponents(delta).D_exp;
        o.note("delta " + num(delta) + " D-slope " + num(s) + " (want " + num(want) + ")");
        o.require(std::fabs(s - want) <= kMeetingTol, "D exponent at delta " + num(delta));
    }
    std::vector<double> ns{1 << 10, 1 << 12, 1 << 14, 1 << 16};
    for (double delta : {0.5, 1.5}) {
        std::vector<double> ys;
        for (double nn : ns) ys.push_back(meeting_density(8.0, delta, static_cast<int>(nn), ++seed));
        double s = slope_fit(ns, ys).slope;
        double want = meeting_exponents(delta).n_exp;
        o.note("delta " + num(delta) + " n-slope " + num(s) + " (want " + num(want) + ")");
        o.require(std::fabs(s - want) <= kMeetingTol, "n exponent at delta " + num(delta));
    }
}

void populated(Outcome& o, const Calibration& cal)
{
    std::vector<double> ns{1 << 10, 1 << 12, 1 << 14, 1 << 16};
    double worst = 1.0;
    std::string worst_at;
    std::uint64_t seed = kSeed;
    std::vector<std::string> shrunk_notes;
    bool shrunk_ok = true;
    for (double delta : {1.5, 2.0, 3.0}) {
        for (int which = 0; which < 3; ++which) {
            std::vector<double> shrunk;
            for (double nd : ns) {
                int n = static_cast<int>(nd);
                double Z0 = z0_constraint(delta, n);
                int top = i_max(n, Z0);
                int i = which == 0 ? 0 : which == 1 ? (top + 1) / 2 : top;
                PopulatedQuery q;
                q.i = i;
                q.delta = delta;
                q.n = n;
                q.Z0 = Z0;
                q.A = squarelet_area(i, delta, n, Z0, cal.area_constant);
                q.seed = ++seed;
                double p = estimate_populated_probability(q).est.p;
                if (p < worst) {
                    worst = p;
                    worst_at = "delta " + num(delta) + " n " + std::to_string(n) + " i " + std::to_string(i);
                }
                q.A /= 16.0;
                q.seed = ++seed;
                shrunk.push_back(std::max(estimate_populated_probability(q).est.p, 1e-9));
            }
            double s = slope_fit(ns, shrunk).slope;
            const char* label[] = {"0", "ceil(i_max/2)", "i_max"};
            shrunk_notes.push_back("delta " + num(delta) + " i=" + label[which] + ": " + num(s));
            shrunk_ok = shrunk_ok && s < kShrunkSlopeMax;
        }
    }
    o.note("smallest estimate " + num(worst) + " at " + worst_at);
    o.require(worst >= kPopulatedFloor, "populated probability floor");
    std::string joined;
    for (const auto& s : shrunk_notes) joined += (joined.empty() ? "" : ", ") + s;
    o.note("area/16 slopes vs n: " + joined);
    o.require(shrunk_ok, "area/16 slope below " + num(kShrunkSlopeMax));
}

void protocol_soundness(Outcome& o)
{
    struct Cell {
        double delta;
        int n;
        double guard;
    };
    std::vector<Cell> grid;
    for (double delta : {0.0, 0.5, 1.5, 2.0, 3.0})
        for (int n : {1024, 4096}) grid.push_back({delta, n, 0.0});
    grid.push_back({2.0, 1024, 1.0});
    grid.push_back({3.0, 1024, 0.5});
    std::int64_t quota = kProtocolChecks / static_cast<std::int64_t>(grid.size()) + 1;
    std::int64_t total = 0, violations = 0;
    for (const auto& c : grid) {
        SimConfig cfg;
        cfg.n = c.n;
        cfg.delta = c.delta;
        cfg.Z0 = z0_constraint(c.delta, c.n);
        cfg.guard = c.guard;
        cfg.lambda = 0.01;
        cfg.slots = 400000;
        cfg.warmup = 0;
        cfg.seed = kSeed + static_cast<std::uint64_t>(c.n + 10 * c.delta + 100 * c.guard);
        cfg.verify_protocol = true;
        cfg.trace_cap = 0;
        Simulation sim(cfg);
        std::int64_t mine = 0;
        try {
            while (mine < quota && sim.slot() < cfg.slots) {
                sim.step_slot();
                mine += static_cast<std::int64_t>(sim.last_slot().transmissions.size());
            }
        } catch (const std::logic_error& e) {
            ++violations;
            o.note(std::string("violation: ") + e.what());
        }
        std::int64_t checked = sim.report().protocol_checked;
        total += checked;
    }
    o.note(std::to_string(total) + " transmissions checked pairwise over " + std::to_string(grid.size()) +
           " (delta, n, guard) settings, " + std::to_string(violations) + " violations");
    o.require(violations == 0, "no interference violations");
    o.require(total >= kProtocolChecks, "at least 10^6 checked transmissions");
}

struct SweepRows {
    std::vector<RunRow> rows;
};

ExperimentPlan sweep_plan(const std::string& body, const std::string& dir)
{
    ExperimentPlan p = parse_config(body);
    p.output_dir = dir;
    p.workers = 1;
    return p;
}

std::string work_dir(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("manet_acceptance_" + name);
    fs::remove_all(p);
    return p.string();
}

void routing_exactness(Outcome& o, const Calibration& cal, const std::vector<RunRow>& extra)
{
    std::vector<RunRow> rows = extra;
    for (double delta : {0.5, 1.5, 2.0, 3.0}) {
        std::ostringstream cfg;
        cfg << "delta = " << delta << "\nZ0 = auto\nload = 0.25\nthroughput_constant = "
            << (delta >= 2.0 ? cal.kappa2 : cal.kappa0) << "\nslots = 30000\nwarmup = 3000\nseeds = 11,12\n"
            << "sweep_axis = n\nsweep_values = 1024,4096\n";
        SweepResult r = run_sweep(sweep_plan(cfg.str(), work_dir("routing")));
        rows.insert(rows.end(), r.rows.begin(), r.rows.end());
    }
    std::int64_t delivered = 0, mismatches = 0;
    int failed = 0, above_imax = 0, above_bound = 0;
    for (const auto& row : rows) {
        if (!row.ok) {
            ++failed;
            continue;
        }
        delivered += row.delivered;
        mismatches += row.hop_mismatches;
        if (row.max_initial_step > row.i_max) ++above_imax;
        if (row.max_initial_step > row.max_step_bound) ++above_bound;
    }
    o.note(std::to_string(rows.size()) + " runs, " + std::to_string(delivered) + " delivered, " +
           std::to_string(mismatches) + " with hops != initial_step + 1");
    o.note(std::to_string(above_imax) + " runs whose largest initial step exceeds floor(log2(sqrt n) - log2 Z0); " +
           std::to_string(above_bound) + " exceed the simulated step range S");
    o.require(failed == 0, "all runs completed");
    o.require(delivered > 0 && mismatches == 0, "hop count exactness");
    o.require(above_bound == 0, "initial step within simulated range");
    o.require(above_imax == 0, "initial step <= i_max");
}

SweepResult end_to_end(Outcome& o, const std::string& body, const std::string& name)
{
    SweepResult r = run_sweep(sweep_plan(body, work_dir(name)));
    for (const auto& a : r.aggregate)
        o.note("n " + num(a.value) + ": throughput " + num(a.throughput_mean) + " delay " +
               (a.delay_mean ? num(*a.delay_mean) : std::string("none")) + " unstable " + std::to_string(a.unstable));
    o.require(r.failures == 0, "all runs completed");
    return r;
}

std::string sweep_body(double delta, const std::string& z0, double kappa, std::int64_t slots, std::int64_t warmup)
{
    std::ostringstream s;
    s << "command = sweep\ndelta = " << delta << "\nZ0 = " << z0 << "\nload = 0.25\nthroughput_constant = " << kappa
      << "\nslots = " << slots << "\nwarmup = " << warmup
      << "\nsweep_axis = n\nsweep_values = 1024,2048,4096,8192,16384\nseeds = 1,2,3,4,5\n";
    return s.str();
}

std::vector<RunRow> near_optimal(Outcome& o, const Calibration& cal)
{
    SweepResult r = end_to_end(o, sweep_body(2.0, "sqrt(log n)", cal.kappa2, 60000, 10000), "delta2");
    double ts = r.throughput_slope ? r.throughput_slope->slope : std::numeric_limits<double>::quiet_NaN();
    double ds = r.delay_slope ? r.delay_slope->slope : std::numeric_limits<double>::quiet_NaN();
    o.note("throughput slope " + num(ts) + " (need >= " + num(kThroughputSlopeMin) + "), delay slope " + num(ds) +
           " (need <= " + num(kDelaySlopeMax) + ")");
    o.require(ts >= kThroughputSlopeMin, "throughput slope");
    o.require(ds <= kDelaySlopeMax, "delay slope");
    return r.rows;
}

std::vector<RunRow> uniform_contrast(Outcome& o, const Calibration& cal)
{
    SweepResult r = end_to_end(o, sweep_body(0.0, "n^(1/6)", cal.kappa0, 400000, 40000), "delta0");
    double ds = r.delay_slope ? r.delay_slope->slope : std::numeric_limits<double>::quiet_NaN();
    o.note("delay slope " + num(ds) + " (need >= " + num(kUniformDelaySlopeMin) + ")");
    o.require(ds >= kUniformDelaySlopeMin, "delay slope");
    return r.rows;
}

void stability_and_service(Outcome& o, const Calibration& cal)
{
    std::ostringstream body;
    body << "n = 4096\ndelta = 2\nZ0 = sqrt(log n)\nload = 1\nthroughput_constant = " << cal.kappa2
         << "\nslots = 100000\nwarmup = 20000\nseed = " << kSeed << "\n";
    ExperimentPlan plan = parse_config(body.str());
    SimConfig cfg = derive_config(plan, std::nullopt, kSeed);
    double unit = cfg.lambda;

    std::vector<double> fractions{0.25, 0.5, 1.0, 2.0};
    auto verdicts = stability_probe(cfg, fractions, unit);
    bool monotone = true, seen_unstable = false;
    std::string line;
    for (const auto& v : verdicts) {
        if (seen_unstable && v.stable) monotone = false;
        seen_unstable = seen_unstable || !v.stable;
        line += num(v.fraction) + (v.stable ? ":stable " : ":unstable ");
    }
    o.note("probe " + line);
    o.require(monotone, "verdicts monotone in load");
    o.require(verdicts.front().stable, "stable at load 0.25");

    Simulation shape_only(cfg);
    int S = static_cast<int>(shape_only.steps().size()) - 1;
    double service_sum = 0.0;
    bool ks_ok = true;
    std::string ks_line;
    for (int i = 0; i <= S; ++i) {
        SaturationResult sat = measure_saturated_service(cfg, i, 200000);
        service_sum += 1.0 / sat.p_T;
        KsResult ks = geometric_ks(sat.queue_samples, kSeed + i);
        ks_line += "step " + std::to_string(i) + " p_T " + num(sat.p_T) + " KS p " + num(ks.p_value) + " (" +
                   std::to_string(ks.n) + "), ";
        ks_ok = ks_ok && ks.n > 0 && ks.p_value > kKsAlpha;
    }
    auto delay = verdicts.front().mean_delay;
    o.note("mean delay at 0.25 " + (delay ? num(*delay) : std::string("none")) + ", sum 1/p_T " + num(service_sum));
    o.require(delay && *delay <= kKingmanFactor * service_sum, "delay within 4x the saturated service sum");
    o.note(ks_line);
    o.require(ks_ok, "geometric service times per step");
}

void curves(Outcome& o)
{
    ExperimentPlan p = parse_config("command = analyze\nn = 1024\ndelta = 2\nZ0 = auto\nlambda = 0.01\n");
    p.output_dir = work_dir("curves");
    emit_curves(p);
    std::ifstream in(fs::path(p.output_dir) / "fast_power.csv");
    std::string line;
    std::vector<std::string> header;
    std::map<double, double> power;
    std::map<double, std::string> scheme;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (header.empty()) {
            header = cells;
            continue;
        }
        std::map<std::string, std::string> row;
        for (std::size_t k = 0; k < header.size() && k < cells.size(); ++k) row[header[k]] = cells[k];
        double d = std::stod(row["delta"]);
        power[d] = std::stod(row["power"]);
        scheme[d] = row["scheme"];
    }
    auto at = [&](double d) {
        for (auto [k, v] : power)
            if (std::fabs(k - d) < 1e-9) return v;
        return std::numeric_limits<double>::quiet_NaN();
    };
    for (auto [d, want] : {std::pair{1.0, -1.0}, {1.5, -0.6}, {2.0, 0.0}, {2.5, -0.5}, {3.0, -1.0}}) {
        double got = at(d);
        o.note("(" + num(d) + ", " + num(got) + ")");
        o.require(near(got, want), "power at delta " + num(d));
    }
    int plateau = 0;
    for (auto [d, v] : power) {
        if (d <= 3.0 + 1e-9) continue;
        ++plateau;
        o.require(near(v, -1.0) && scheme[d] == "alternative", "plateau at delta " + num(d));
    }
    o.note(std::to_string(plateau) + " grid points above 3 on the -1 plateau");
    o.require(plateau > 0, "grid extends past 3");
}

}  // namespace

int main(int argc, char** argv)
{
    std::set<int> want;
    for (int k = 1; k < argc; ++k) want.insert(std::stoi(argv[k]));
    auto enabled = [&](int c) { return want.empty() || want.count(c); };

    Calibration cal = load_calibration();
    std::cout << "calibration: area_constant " << num(cal.area_constant) << ", throughput constant delta=2 "
              << num(cal.kappa2) << ", delta=0 " << num(cal.kappa0) << "\n"
              << std::flush;

    int failures = 0;
    std::vector<RunRow> sweep_rows;
    std::map<int, std::string> lines;
    auto run = [&](int id, const std::string& title, const std::function<void(Outcome&)>& body) {
        if (!enabled(id)) return;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            body(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "[error] " << e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        std::ostringstream l;
        l << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " (" << title << ", "
          << fmt(std::round(secs * 10) / 10) << " s): " << o.detail.str();
        lines[id] = l.str();
        std::cerr << "[done] " << l.str() << "\n" << std::flush;
    };

    run(1, "exact formulas", exact_formulas);
    run(2, "G scaling", g_scaling);
    run(3, "meeting probability exponents", meeting_slopes);
    run(4, "populated squarelets", [&](Outcome& o) { populated(o, cal); });
    run(5, "protocol model", protocol_soundness);
    run(7, "delta = 2 end to end", [&](Outcome& o) {
        auto rows = near_optimal(o, cal);
        sweep_rows.insert(sweep_rows.end(), rows.begin(), rows.end());
    });
    run(8, "delta = 0 contrast", [&](Outcome& o) {
        auto rows = uniform_contrast(o, cal);
        sweep_rows.insert(sweep_rows.end(), rows.begin(), rows.end());
    });
    run(6, "routing exactness", [&](Outcome& o) { routing_exactness(o, cal, sweep_rows); });
    run(9, "stability and service", [&](Outcome& o) { stability_and_service(o, cal); });
    run(10, "curve emission", curves);

    for (const auto& [id, l] : lines) std::cout << l << "\n";
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << "\n";
    return failures ? 1 : 0;
}
