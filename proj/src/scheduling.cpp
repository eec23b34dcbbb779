#include "manet/scheduling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "manet/format.hpp"

namespace manet {

double squarelet_area(int i, double delta, double n, double Z0, double c)
{
    if (i < 0) throw std::invalid_argument("negative step index");
    if (!(n >= 1.0) || !(Z0 > 0.0) || !(c > 0.0))
        throw std::invalid_argument("squarelet_area needs n >= 1, Z0 > 0, c > 0");
    double Zi = step_length(i, Z0);
    double A;
    if (delta <= 1.0) {
        A = c * std::sqrt(n) / Zi;
    } else if (delta < 2.0) {
        A = c * std::pow(n, (2.0 - delta) / 2.0) / std::pow(Zi, 2.0 - delta);
    } else if (delta == 2.0) {
        A = c * std::log(n);
    } else {
        A = c * std::pow(Zi, delta - 2.0);
    }
    return std::clamp(A, 1.0, n);
}

int i_max(double n, double Z0)
{
    if (!(Z0 >= 1.0)) throw std::invalid_argument("i_max requires Z0 >= 1, got " + fmt(Z0));
    if (Z0 > std::sqrt(n) * (1.0 + 1e-12))
        throw std::invalid_argument("i_max requires Z0 <= sqrt(n); Z0 = " + fmt(Z0) + ", sqrt(n) = " + fmt(std::sqrt(n)));
    double x = 0.5 * std::log2(n) - std::log2(Z0);
    double r = std::round(x);
    int v = std::fabs(x - r) < 1e-9 ? static_cast<int>(r) : static_cast<int>(std::floor(x));
    return std::max(0, v);
}

std::vector<double> slot_distribution(const std::vector<double>& areas)
{
    if (areas.empty()) throw std::invalid_argument("slot_distribution needs at least one area");
    double total = 0.0;
    for (double a : areas) {
        if (!(a > 0.0)) throw std::invalid_argument("areas must be positive");
        total += a;
    }
    std::vector<double> p(areas.size());
    for (std::size_t k = 0; k < areas.size(); ++k) p[k] = areas[k] / total;
    return p;
}

int phase_side(double guard)
{
    if (!(guard >= 0.0)) throw std::invalid_argument("guard factor must be >= 0");
    return static_cast<int>(std::ceil(1.0 + std::sqrt(2.0) + (1.0 + guard) * std::sqrt(2.0)));
}

int phase_count(double guard)
{
    int s = phase_side(guard);
    return s * s;
}

int effective_max_step(double n, double Z0)
{
    TorusGeometry g = TorusGeometry::from_area(n);
    return std::max(i_max(n, Z0), compute_step(g.max_distance(), Z0));
}

std::vector<StepParams> build_step_params(const ScheduleConfig& cfg)
{
    TorusGeometry g = TorusGeometry::from_area(cfg.n);
    int S = cfg.max_step >= 0 ? cfg.max_step : effective_max_step(cfg.n, cfg.Z0);

    int s = phase_side(cfg.guard);
    if (cfg.phases > 0) {
        int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cfg.phases))));
        if (r * r != cfg.phases)
            throw std::invalid_argument("phases must be a perfect square, got " + std::to_string(cfg.phases));
        // same-phase cells are separated by r - 1 cells, which must exceed the interference radius
        if (r < 2 || (r - 1) < (1.0 + cfg.guard) * std::sqrt(2.0))
            throw std::invalid_argument("phases = " + std::to_string(cfg.phases) +
                                        " cannot separate same-phase cells by (1 + guard) * R");
        s = r;
    }

    std::vector<StepParams> out;
    std::vector<double> areas;
    for (int i = 0; i <= S; ++i) {
        StepParams sp;
        sp.i = i;
        sp.Z = step_length(i, cfg.Z0);
        sp.A = squarelet_area(i, cfg.delta, cfg.n, cfg.Z0, cfg.area_constant);
        int k0 = std::max(1, static_cast<int>(std::lround(g.side() / std::sqrt(sp.A))));
        int k;
        if (k0 < s) {
            k = k0;
            sp.phase_side = k0;
        } else {
            k = s * std::max(1, static_cast<int>(std::lround(static_cast<double>(k0) / s)));
            sp.phase_side = s;
        }
        sp.cells_per_axis = k;
        sp.phases = sp.phase_side * sp.phase_side;
        double cell = g.side() / k;
        sp.A_eff = cell * cell;
        sp.R = std::sqrt(2.0 * sp.A_eff);
        if (sp.R > cfg.range_ratio_max * sp.Z) {
            std::ostringstream msg;
            msg << "step " << i << ": transmission range " << fmt(sp.R) << " exceeds " << fmt(cfg.range_ratio_max)
                << " * Z_i = " << fmt(cfg.range_ratio_max * sp.Z) << "; lower area_constant or raise Z0";
            throw std::invalid_argument(msg.str());
        }
        areas.push_back(sp.A_eff);
        out.push_back(sp);
    }
    auto p = slot_distribution(areas);
    for (std::size_t k = 0; k < out.size(); ++k) out[k].p_s = p[k];
    return out;
}

SlotPlanner::SlotPlanner(const std::vector<StepParams>& steps, Stream rng) : rng_(rng)
{
    if (steps.empty()) throw std::invalid_argument("no steps to plan");
    double acc = 0.0;
    for (const auto& sp : steps) {
        acc += sp.p_s;
        cdf_.push_back(acc);
        phases_.push_back(sp.phases);
    }
    cdf_.back() = 1.0;
    counters_.assign(steps.size(), 0);
}

SlotPlan SlotPlanner::next()
{
    double u = rng_.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    int step = std::min(static_cast<int>(it - cdf_.begin()), static_cast<int>(cdf_.size()) - 1);
    return next_for_step(step);
}

SlotPlan SlotPlanner::next_for_step(int step)
{
    int phase = counters_[step];
    counters_[step] = (phase + 1) % phases_[step];
    return {step, phase};
}

void eligible_pairs(std::span<const NodeId> members, int step, const WorldView& world,
                    const QueueView& queues, std::vector<std::pair<NodeId, NodeId>>& out)
{
    out.clear();
    const HomePoints& homes = *world.homes;
    double side = world.geometry->side();
    if (step == 0) {
        for (NodeId a : members) {
            auto dests = queues.direct_destinations(a);
            if (dests.empty()) continue;
            for (NodeId d : dests) {
                if (d == a) continue;
                if (std::find(members.begin(), members.end(), d) == members.end()) continue;
                if (torus_distance_unchecked(homes[a], homes[d], side) < world.Z0) out.emplace_back(a, d);
            }
        }
        return;
    }
    double inner = std::ldexp(world.Z0, step - 2);
    double outer = 0.75 * std::ldexp(world.Z0, step - 1);
    for (NodeId a : members) {
        const Message* m = queues.head(a, step);
        if (m == nullptr) continue;
        const TorusPoint& hd = homes[m->dst];
        for (NodeId b : members) {
            if (b == a) continue;
            double d = torus_distance_unchecked(homes[b], hd, side);
            if (inner < d && d < outer) out.emplace_back(a, b);
        }
    }
}

namespace {

std::optional<Transmission> pick(const std::vector<std::pair<NodeId, NodeId>>& pairs, CellIndex cell, int step,
                                 const QueueView& queues, Stream& rng)
{
    if (pairs.empty()) return std::nullopt;
    auto [a, b] = pairs[pairs.size() == 1 ? 0 : rng.below(pairs.size())];
    Transmission t;
    t.tx = a;
    t.rx = b;
    t.cell = cell;
    if (step > 0) t.msg = queues.head(a, step)->id;
    return t;
}

}  // namespace

std::optional<Transmission> select_pair(std::span<const NodeId> members, CellIndex cell, int step,
                                        const WorldView& world, const QueueView& queues, Stream& rng)
{
    std::vector<std::pair<NodeId, NodeId>> pairs;
    eligible_pairs(members, step, world, queues, pairs);
    return pick(pairs, cell, step, queues, rng);
}

std::vector<ProtocolViolation> check_protocol(const std::vector<Transmission>& txs,
                                              const std::vector<TorusPoint>& positions,
                                              const TorusGeometry& g, double R, double guard)
{
    std::vector<ProtocolViolation> bad;
    double keep_out = (1.0 + guard) * R;
    for (std::size_t j = 0; j < txs.size(); ++j) {
        const TorusPoint& rx = positions[txs[j].rx];
        double link = torus_distance_unchecked(positions[txs[j].tx], rx, g.side());
        if (link > R) bad.push_back({txs[j], txs[j], link, "link longer than the transmission range"});
        for (std::size_t k = 0; k < txs.size(); ++k) {
            if (k == j) continue;
            double d = torus_distance_unchecked(positions[txs[k].tx], rx, g.side());
            if (d < keep_out) bad.push_back({txs[k], txs[j], d, "interferer inside the guard zone of a receiver"});
        }
    }
    return bad;
}

Scheduler::Scheduler(const TorusGeometry& g, std::vector<StepParams> steps, double guard, bool verify_protocol)
    : geom_(g), steps_(std::move(steps)), guard_(guard), verify_(verify_protocol)
{
    for (const auto& sp : steps_) grids_.emplace_back(g, sp.cells_per_axis);
}

std::vector<Scheduler::ActiveCell> Scheduler::bucket_active_cells(const SlotPlan& plan,
                                                                  const std::vector<TorusPoint>& positions)
{
    const StepParams& sp = steps_.at(plan.step);
    const CellGrid& grid = grids_[plan.step];
    int s = sp.phase_side;
    int px = plan.phase / s, py = plan.phase % s;
    int per_axis = sp.cells_per_axis / s;
    int buckets = per_axis * per_axis;

    std::size_t n = positions.size();
    bucket_of_node_.resize(n);
    bucket_start_.assign(buckets + 1, 0);
    for (std::size_t v = 0; v < n; ++v) {
        CellIndex c = grid.index(positions[v]);
        if (c.cx % s != px || c.cy % s != py) {
            bucket_of_node_[v] = -1;
            continue;
        }
        int b = (c.cx / s) * per_axis + c.cy / s;
        bucket_of_node_[v] = b;
        ++bucket_start_[b + 1];
    }
    for (int b = 0; b < buckets; ++b) bucket_start_[b + 1] += bucket_start_[b];
    bucket_nodes_.resize(bucket_start_[buckets]);
    std::vector<std::int32_t> fill(bucket_start_.begin(), bucket_start_.end() - 1);
    for (std::size_t v = 0; v < n; ++v) {
        int b = bucket_of_node_[v];
        if (b >= 0) bucket_nodes_[fill[b]++] = static_cast<NodeId>(v);
    }

    std::vector<ActiveCell> cells;
    for (int b = 0; b < buckets; ++b) {
        int lo = bucket_start_[b], hi = bucket_start_[b + 1];
        if (hi - lo < 2) continue;
        CellIndex cell{(b / per_axis) * s + px, (b % per_axis) * s + py};
        cells.push_back({cell, std::span<const NodeId>(bucket_nodes_.data() + lo, hi - lo)});
    }
    return cells;
}

std::vector<Transmission> Scheduler::enabled_transmissions(const SlotPlan& plan, const WorldView& world,
                                                           const QueueView& queues, std::uint64_t seed,
                                                           std::int64_t slot)
{
    std::vector<Transmission> out;
    auto cells = bucket_active_cells(plan, *world.positions);
    int k = steps_[plan.step].cells_per_axis;
    for (const auto& ac : cells) {
        eligible_pairs(ac.members, plan.step, world, queues, scratch_);
        if (scratch_.empty()) continue;
        std::uint64_t cell_id = static_cast<std::uint64_t>(ac.cell.cx) * k + ac.cell.cy;
        Stream rng = Stream::derive(seed, {kCellStream, static_cast<std::uint64_t>(slot), cell_id});
        if (auto t = pick(scratch_, ac.cell, plan.step, queues, rng)) out.push_back(*t);
    }
    if (verify_) {
        auto bad = check_protocol(out, *world.positions, geom_, steps_[plan.step].R, guard_);
        checked_ += out.size();
        if (!bad.empty()) {
            const auto& v = bad.front();
            std::ostringstream msg;
            msg << "protocol model violated at slot " << slot << " step " << plan.step << ": " << v.what
                << " (tx " << v.a.tx << " -> rx " << v.b.rx << ", distance " << fmt(v.distance) << ", R "
                << fmt(steps_[plan.step].R) << ")";
            throw std::logic_error(msg.str());
        }
    }
    return out;
}

}  // namespace manet
