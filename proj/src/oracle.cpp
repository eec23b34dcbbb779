#include "manet/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "manet/format.hpp"
#include "manet/random.hpp"
#include "manet/scheduling.hpp"
#include "manet/simcore.hpp"

namespace manet {

namespace {

constexpr int kChunks = 64;

// Runs body(chunk) for chunk in [0, chunks) on up to `workers` threads. Each chunk writes only
// its own slot of the caller's result array, so the merge is order independent.
template <class F>
void for_chunks(int chunks, int workers, F body)
{
    workers = std::clamp(workers, 1, chunks);
    if (workers == 1) {
        for (int c = 0; c < chunks; ++c) body(c);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (int c = w; c < chunks; c += workers) body(c);
        });
    for (auto& t : pool) t.join();
}

// 4-point Gauss-Legendre on [-1, 1]
constexpr std::array<double, 4> kGlX{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                     0.8611363115940526};
constexpr std::array<double, 4> kGlW{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                     0.3478548451374538};

template <class F>
double gl_square(const F& f, double x0, double y0, double w)
{
    double h = 0.5 * w, s = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) s += kGlW[a] * kGlW[b] * f(x0 + h * (1.0 + kGlX[a]), y0 + h * (1.0 + kGlX[b]));
    return s * h * h;
}

template <class F>
double gl2_square(const F& f, double x0, double y0, double w)
{
    constexpr double r = 0.5773502691896257;
    double h = 0.5 * w, c = x0 + h, d = y0 + h;
    return (f(c - h * r, d - h * r) + f(c - h * r, d + h * r) + f(c + h * r, d - h * r) + f(c + h * r, d + h * r)) * h * h;
}

template <class F>
double adaptive_square(const F& f, double x0, double y0, double w, double whole, double tol, int depth)
{
    double h = 0.5 * w;
    double q[4] = {gl_square(f, x0, y0, h), gl_square(f, x0 + h, y0, h), gl_square(f, x0, y0 + h, h),
                   gl_square(f, x0 + h, y0 + h, h)};
    double split = q[0] + q[1] + q[2] + q[3];
    if (depth >= 5 || std::fabs(split - whole) <= tol) return split;
    return adaptive_square(f, x0, y0, h, q[0], 0.25 * tol, depth + 1) +
           adaptive_square(f, x0 + h, y0, h, q[1], 0.25 * tol, depth + 1) +
           adaptive_square(f, x0, y0 + h, h, q[2], 0.25 * tol, depth + 1) +
           adaptive_square(f, x0 + h, y0 + h, h, q[3], 0.25 * tol, depth + 1);
}

}  // namespace

Estimate make_estimate(std::int64_t successes, std::int64_t trials, std::uint64_t seed)
{
    Estimate e;
    e.successes = successes;
    e.trials = trials;
    e.seed = seed;
    e.p = trials > 0 ? static_cast<double>(successes) / trials : 0.0;
    if (trials > 0) e.ci = wilson_interval(successes, trials);
    return e;
}

MeetingEstimate estimate_meeting_probability(const MeetingQuery& q)
{
    if (q.trials < 10000) throw std::invalid_argument("meeting estimate needs at least 10^4 trials");
    if (!(q.A > 0.0) || !(std::sqrt(q.A) < q.D / 4.0))
        throw std::invalid_argument("cell side sqrt(A) = " + fmt(std::sqrt(q.A)) + " must be below D/4 = " +
                                    fmt(q.D / 4.0));
    TorusGeometry g = TorusGeometry::from_area(q.n);
    if (q.D > g.half_side())
        throw std::invalid_argument("D = " + fmt(q.D) + " exceeds half the torus side " + fmt(g.half_side()));
    MobilityShape shape(q.delta, g, 4096);
    CellGrid grid = CellGrid::fit(g, std::sqrt(q.A));

    std::vector<std::int64_t> hits(kChunks, 0);
    for_chunks(kChunks, q.workers, [&](int c) {
        std::int64_t count = q.trials / kChunks + (c < q.trials % kChunks ? 1 : 0);
        Stream rng = Stream::derive(q.seed, {kOracleStream, 1, static_cast<std::uint64_t>(c)});
        std::int64_t h = 0;
        for (std::int64_t t = 0; t < count; ++t) {
            TorusPoint ha{g.side() * rng.uniform(), g.side() * rng.uniform()};
            double th = 2.0 * M_PI * rng.uniform();
            TorusPoint hb = wrap(ha.x + q.D * std::cos(th), ha.y + q.D * std::sin(th), g);
            TorusPoint pa = sample_position(ha, shape, rng);
            TorusPoint pb = sample_position(hb, shape, rng);
            if (grid.index(pa) == grid.index(pb)) ++h;
        }
        hits[c] = h;
    });
    std::int64_t total = 0;
    for (auto h : hits) total += h;
    return {make_estimate(total, q.trials, q.seed), grid.cell_area()};
}

std::pair<double, double> populated_band(int i, double Z0)
{
    if (i < 0) throw std::invalid_argument("step must be >= 0");
    if (i == 0) return {0.5 * Z0, 0.75 * Z0};
    double Z = std::ldexp(Z0, i);
    return {Z / 8.0, 11.0 * Z / 8.0};
}

double cell_occupancy_mass(const TorusPoint& home, const CellGrid& grid, CellIndex cell, const MobilityShape& shape)
{
    if (grid.cells_per_axis() == 1) return 1.0;
    const TorusGeometry& g = shape.geometry();
    double a = grid.cell_side();
    double x0 = cell.cx * a, y0 = cell.cy * a;
    if (shape.uniform()) return grid.cell_area() / g.area();
    double delta = shape.delta();
    double side = g.side();
    auto f = [&](double x, double y) {
        return unnormalized_density(torus_distance_unchecked(home, TorusPoint{x, y}, side), delta);
    };
    auto gap = [&](double h, double lo, double w) {
        double d = std::fabs(std::remainder(h - (lo + 0.5 * w), side));
        return std::max(0.0, d - 0.5 * w);
    };
    // Quadtree graded toward the home: a square far away relative to its width gets a fixed
    // rule, small squares that still touch the unit disc (the kink) get adaptive refinement.
    auto mass = [&](auto& self, double x, double y, double w) -> double {
        double dmin = std::hypot(gap(home.x, x, w), gap(home.y, y, w));
        if (dmin > 8.0 * w) return gl2_square(f, x, y, w);
        if (dmin > 2.0 * w) return gl_square(f, x, y, w);
        if (w > 0.5) {
            double h = 0.5 * w;
            return self(self, x, y, h) + self(self, x + h, y, h) + self(self, x, y + h, h) + self(self, x + h, y + h, h);
        }
        return adaptive_square(f, x, y, w, gl_square(f, x, y, w), 1e-6 * w * w, 0);
    };
    return mass(mass, x0, y0, a) / shape.G();
}

PopulatedEstimate estimate_populated_probability(const PopulatedQuery& q)
{
    if (q.instances < 1 || q.slots < 1) throw std::invalid_argument("need at least one instance and one slot");
    TorusGeometry g = TorusGeometry::from_area(q.n);
    if (!(q.A > 0.0) || q.A > g.area()) throw std::invalid_argument("cell area must lie in (0, n]");
    MobilityShape shape(q.delta, g, 4096);
    CellGrid grid = CellGrid::fit(g, std::sqrt(q.A));
    CellIndex ref{q.reference.cx % grid.cells_per_axis(), q.reference.cy % grid.cells_per_axis()};
    auto [lo, hi] = populated_band(q.i, q.Z0);

    std::vector<std::int64_t> hits(q.instances, 0);
    std::vector<double> occupancy(q.instances, 0.0);
    for_chunks(q.instances, q.workers, [&](int inst) {
        Stream hrng = Stream::derive(q.seed, {kOracleStream, 2, static_cast<std::uint64_t>(inst)});
        HomePoints homes = generate_homes(q.n, hrng);
        Stream rng = Stream::derive(q.seed, {kOracleStream, 3, static_cast<std::uint64_t>(inst)});
        std::vector<std::vector<NodeId>> present(q.slots);
        double occ = 0.0;
        for (NodeId v = 0; v < q.n; ++v) {
            double m = cell_occupancy_mass(homes[v], grid, ref, shape);
            occ += m;
            if (m <= 0.0) continue;
            if (m >= 1.0) {
                for (auto& p : present) p.push_back(v);
                continue;
            }
            // slots of presence form a Bernoulli(m) sequence: jump by geometric gaps
            double lq = std::log1p(-m);
            std::int64_t t = -1;
            for (;;) {
                double u = 1.0 - rng.uniform();
                double gap = std::floor(std::log(u) / lq);
                if (gap >= static_cast<double>(q.slots)) break;
                t += 1 + static_cast<std::int64_t>(gap);
                if (t >= q.slots) break;
                present[t].push_back(v);
            }
        }
        std::int64_t h = 0;
        for (const auto& members : present) {
            bool found = false;
            for (std::size_t x = 0; x < members.size() && !found; ++x)
                for (std::size_t y = x + 1; y < members.size() && !found; ++y) {
                    double d = torus_distance_unchecked(homes[members[x]], homes[members[y]], g.side());
                    found = lo <= d && d <= hi;
                }
            if (found) ++h;
        }
        hits[inst] = h;
        occupancy[inst] = occ;
    });
    std::int64_t total = 0;
    double occ = 0.0;
    for (int k = 0; k < q.instances; ++k) {
        total += hits[k];
        occ += occupancy[k];
    }
    PopulatedEstimate r;
    r.est = make_estimate(total, static_cast<std::int64_t>(q.instances) * q.slots, q.seed);
    r.cell_area = grid.cell_area();
    r.mean_occupancy = occ / q.instances;
    return r;
}

PbetaEstimate estimate_pbeta(const PbetaQuery& q)
{
    TorusGeometry g = TorusGeometry::from_area(q.n);
    MobilityShape shape(q.delta, g, 4096);
    ScheduleConfig sc;
    sc.n = q.n;
    sc.delta = q.delta;
    sc.Z0 = q.Z0;
    sc.area_constant = q.area_constant;
    sc.guard = q.guard;
    auto steps = build_step_params(sc);
    if (q.i < 0 || q.i >= static_cast<int>(steps.size()))
        throw std::invalid_argument("step " + std::to_string(q.i) + " outside the schedule");
    Scheduler sched(g, steps, q.guard, false);
    SlotPlanner planner(steps, Stream::derive(q.seed, {kOracleStream, 4}));

    Stream hrng = Stream::derive(q.seed, {kOracleStream, 5});
    HomePoints homes = generate_homes(q.n, hrng);
    Stream pick = Stream::derive(q.seed, {kOracleStream, 6});
    SaturatedQueues view(homes, g, q.Z0, q.i, pick);
    Stream rng = Stream::derive(q.seed, {kOracleStream, 7});
    Stream tag = Stream::derive(q.seed, {kOracleStream, 8});

    std::vector<TorusPoint> pos(q.n);
    WorldView world{&g, &homes, &pos, q.Z0};
    int k = steps[q.i].cells_per_axis;
    std::vector<std::pair<NodeId, NodeId>> pairs;
    std::vector<std::int64_t> cum;
    std::int64_t trials = 0, hits = 0;
    double pair_sum = 0.0;
    for (std::int64_t t = 0; t < q.slots; ++t) {
        SlotPlan plan = planner.next_for_step(q.i);
        for (int v = 0; v < q.n; ++v) pos[v] = sample_position(homes[v], shape, rng);
        auto cells = sched.bucket_active_cells(plan, pos);
        cum.assign(1, 0);
        for (const auto& ac : cells) {
            eligible_pairs(ac.members, q.i, world, view, pairs);
            cum.push_back(cum.back() + static_cast<std::int64_t>(pairs.size()));
        }
        if (cum.back() == 0) continue;
        auto r = static_cast<std::int64_t>(tag.below(static_cast<std::uint64_t>(cum.back())));
        std::size_t c = std::upper_bound(cum.begin(), cum.end(), r) - cum.begin() - 1;
        const auto& ac = cells[c];
        eligible_pairs(ac.members, q.i, world, view, pairs);
        auto tagged = pairs[r - cum[c]];
        std::uint64_t cell_id = static_cast<std::uint64_t>(ac.cell.cx) * k + ac.cell.cy;
        Stream crng = Stream::derive(q.seed, {kCellStream, static_cast<std::uint64_t>(t), cell_id});
        auto sel = select_pair(ac.members, ac.cell, q.i, world, view, crng);
        ++trials;
        pair_sum += static_cast<double>(pairs.size());
        if (sel && sel->tx == tagged.first && sel->rx == tagged.second) ++hits;
    }
    PbetaEstimate res;
    res.est = make_estimate(hits, trials, q.seed);
    res.A = steps[q.i].A_eff;
    res.mean_pairs = trials ? pair_sum / trials : 0.0;
    return res;
}

void write_estimate_csv(std::ostream& out, const std::vector<EstimateRow>& rows)
{
    out << "kind,params,estimate,ci_lo,ci_hi,successes,trials,seed\n";
    for (const auto& r : rows) {
        out << r.kind << ',';
        for (std::size_t k = 0; k < r.params.size(); ++k)
            out << (k ? ";" : "") << r.params[k].first << '=' << fmt(r.params[k].second);
        out << ',' << fmt(r.est.p) << ',' << fmt(r.est.ci.lo) << ',' << fmt(r.est.ci.hi) << ',' << r.est.successes
            << ',' << r.est.trials << ',' << r.est.seed << '\n';
    }
}

}  // namespace manet
