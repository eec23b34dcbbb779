#include "manet/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "manet/format.hpp"

namespace manet {

void validate(const SimConfig& cfg)
{
    auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
    if (cfg.n < 4) fail("n must be >= 4, got " + std::to_string(cfg.n));
    if (!(cfg.delta >= 0.0) || !std::isfinite(cfg.delta)) fail("delta must be finite and >= 0");
    if (!(cfg.Z0 >= 1.0)) fail("Z0 must be >= 1, got " + fmt(cfg.Z0));
    if (cfg.Z0 > std::sqrt(static_cast<double>(cfg.n))) fail("Z0 must not exceed sqrt(n), got " + fmt(cfg.Z0));
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) fail("lambda must lie in [0, 1], got " + fmt(cfg.lambda));
    if (cfg.slots < 1) fail("slots must be positive");
    if (cfg.warmup >= 0 && cfg.warmup >= cfg.slots) fail("warmup must be smaller than slots");
    if (!(cfg.guard >= 0.0)) fail("guard must be >= 0");
    if (!(cfg.area_constant > 0.0)) fail("area_constant must be > 0");
    if (!(cfg.c_far > 0.0 && cfg.c_far < M_SQRT1_2)) fail("c_far must lie in (0, 1/sqrt(2))");
    if (cfg.queue_cap < 1) fail("queue_cap must be >= 1");
    if (cfg.trace_interval < 1) fail("trace_interval must be >= 1");
    if (cfg.trace_cap < 0) fail("trace_cap must be >= 0");
    if (cfg.shape_resolution < 1024) fail("shape_resolution must be >= 1024");
}

std::vector<FlowSpec> generate_traffic(const HomePoints& homes, double lambda, double c_far, Stream& rng,
                                       int max_rounds)
{
    int n = static_cast<int>(homes.size());
    if (n < 4) throw std::invalid_argument("traffic generation needs n >= 4");
    TorusGeometry g = TorusGeometry::from_area(n);
    double min_d = c_far * g.side();
    auto ok = [&](int s, int d) { return s != d && torus_distance_unchecked(homes[s], homes[d], g.side()) >= min_d; };

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int k = n - 1; k > 0; --k) std::swap(perm[k], perm[rng.below(k + 1)]);

    for (int round = 0; round < max_rounds; ++round) {
        int bad = 0;
        for (int s = 0; s < n; ++s) {
            if (ok(s, perm[s])) continue;
            bool fixed = false;
            for (int attempt = 0; attempt < 64 && !fixed; ++attempt) {
                int j = static_cast<int>(rng.below(n));
                if (j == s) continue;
                if (ok(s, perm[j]) && ok(j, perm[s])) {
                    std::swap(perm[s], perm[j]);
                    fixed = true;
                }
            }
            if (!fixed) ++bad;
        }
        if (bad == 0) {
            std::vector<FlowSpec> flows(n);
            for (int s = 0; s < n; ++s) flows[s] = {s, perm[s], lambda};
            return flows;
        }
    }
    throw std::runtime_error("no permutation with home distance >= " + fmt(min_d) + " found for n = " +
                             std::to_string(n) + " within the retry budget");
}

void Histogram::add(std::int64_t v, std::int64_t times)
{
    counts[v] += times;
    total += times;
    sum += static_cast<double>(v) * times;
    sumsq += static_cast<double>(v) * v * times;
}

void Histogram::merge(const Histogram& o)
{
    for (auto [v, c] : o.counts) counts[v] += c;
    total += o.total;
    sum += o.sum;
    sumsq += o.sumsq;
}

double Histogram::variance() const
{
    if (total < 2) return 0.0;
    double m = mean();
    return std::max(0.0, (sumsq - total * m * m) / (total - 1));
}

double MetricsReport::throughput() const
{
    if (delivered.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < delivered.size(); ++k)
        if (flow_slots[k] > 0) acc += static_cast<double>(delivered[k]) / flow_slots[k];
    return acc / delivered.size();
}

std::int64_t MetricsReport::total_delivered() const
{
    return std::accumulate(delivered.begin(), delivered.end(), std::int64_t{0});
}

std::optional<double> MetricsReport::mean_delay() const
{
    std::int64_t L = total_delivered();
    if (L == 0) return std::nullopt;
    double D = std::accumulate(delay_sum.begin(), delay_sum.end(), 0.0);
    return D / L;
}

void MetricsReport::merge(const MetricsReport& o)
{
    auto append = [](auto& a, const auto& b) { a.insert(a.end(), b.begin(), b.end()); };
    append(delivered, o.delivered);
    append(delay_sum, o.delay_sum);
    append(flow_slots, o.flow_slots);
    if (service.size() < o.service.size()) service.resize(o.service.size());
    for (std::size_t i = 0; i < o.service.size(); ++i) service[i].merge(o.service[i]);
    if (step_slots.size() < o.step_slots.size()) step_slots.resize(o.step_slots.size());
    for (std::size_t i = 0; i < o.step_slots.size(); ++i) step_slots[i] += o.step_slots[i];
    if (step_transmissions.size() < o.step_transmissions.size()) step_transmissions.resize(o.step_transmissions.size());
    for (std::size_t i = 0; i < o.step_transmissions.size(); ++i) step_transmissions[i] += o.step_transmissions[i];
    append(node_max_queue, o.node_max_queue);
    append(node_mean_queue, o.node_mean_queue);
    append(backlog_trace, o.backlog_trace);
    append(rings, o.rings);
    for (auto [k, c] : o.hop_histogram) hop_histogram[k] += c;
    for (auto [k, c] : o.initial_step_histogram) initial_step_histogram[k] += c;
    injected += o.injected;
    delivered_total += o.delivered_total;
    in_flight_end += o.in_flight_end;
    transmissions += o.transmissions;
    protocol_checked += o.protocol_checked;
    hop_mismatches += o.hop_mismatches;
    max_initial_step = std::max(max_initial_step, o.max_initial_step);
    max_step_bound = std::max(max_step_bound, o.max_step_bound);
    i_max_formula = std::max(i_max_formula, o.i_max_formula);
    if (o.unstable && !unstable) instability = o.instability;
    unstable = unstable || o.unstable;
    append(events, o.events);
}

namespace {

struct Fifo {
    std::int32_t head = -1;
    std::int32_t tail = -1;
    std::int32_t size = 0;
    std::int64_t hol_since = 0;
};

struct Entry {
    Message m;
    std::int32_t next = -1;
    std::int64_t avail = 0;    // first slot the current holder may transmit it
    std::int64_t sojourn = 0;  // summed per-hop (queueing + service) slots so far
};

struct NodeQueues {
    std::vector<Fifo> steps;        // index = step; index 0 unused
    std::vector<NodeId> direct_dst;  // step-0 queues, one per destination with pending messages
    std::vector<Fifo> direct_q;
    std::int64_t backlog = 0;
    std::int64_t max_backlog = 0;
    double area = 0.0;
    std::int64_t last_change = 0;
};

HomePoints homes_for(const SimConfig& cfg)
{
    Stream rng = Stream::derive(cfg.seed, {kHomesStream});
    return generate_homes(cfg.n, rng);
}

std::vector<FlowSpec> flows_for(const SimConfig& cfg, const HomePoints& homes)
{
    Stream rng = Stream::derive(cfg.seed, {kTrafficStream});
    return generate_traffic(homes, cfg.lambda, cfg.c_far, rng);
}

ScheduleConfig schedule_for(const SimConfig& cfg)
{
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
}

std::int64_t next_gap(Stream& rng, double lambda)
{
    if (lambda >= 1.0) return 1;
    if (lambda <= 0.0) return std::numeric_limits<std::int64_t>::max() / 4;
    double u = 1.0 - rng.uniform();  // (0, 1]
    double g = std::floor(std::log(u) / std::log1p(-lambda));
    if (g > 1e15) return std::numeric_limits<std::int64_t>::max() / 4;
    return 1 + static_cast<std::int64_t>(g);
}

}  // namespace

struct Simulation::Impl final : QueueView {
    SimConfig cfg;
    TorusGeometry geom;
    MobilityShape shape;
    HomePoints homes_;
    std::vector<FlowSpec> flows_;
    std::vector<StepParams> steps_;
    Scheduler sched;
    SlotPlanner planner;
    int S = 0;
    std::int64_t warmup = 0;

    std::vector<Stream> node_rng;
    std::vector<Stream> arrival_rng;
    std::vector<std::int64_t> next_arrival;
    std::vector<TorusPoint> pos;
    std::vector<NodeQueues> nodes;
    std::vector<Entry> pool;
    std::vector<std::int32_t> free_list;
    std::int64_t live = 0;
    std::int64_t delivered_all = 0;
    std::int64_t t = 0;
    std::uint64_t next_id = 0;
    MetricsReport rep;
    LastSlot last;

    Impl(const SimConfig& c, HomePoints h, std::vector<FlowSpec> f)
        : cfg(c),
          geom(TorusGeometry::from_area(c.n)),
          shape(c.delta, geom, c.shape_resolution),
          homes_(std::move(h)),
          flows_(std::move(f)),
          steps_(build_step_params(schedule_for(c))),
          sched(geom, steps_, c.guard, c.verify_protocol),
          planner(steps_, Stream::derive(c.seed, {kPlanStream}))
    {
        if (static_cast<int>(homes_.size()) != cfg.n) throw std::invalid_argument("home count differs from n");
        if (static_cast<int>(flows_.size()) != cfg.n) throw std::invalid_argument("flow count differs from n");
        for (int s = 0; s < cfg.n; ++s)
            if (flows_[s].src != s) throw std::invalid_argument("flows must be indexed by source");
        S = static_cast<int>(steps_.size()) - 1;
        warmup = cfg.effective_warmup();
        int n = cfg.n;
        node_rng.reserve(n);
        arrival_rng.reserve(n);
        next_arrival.resize(n);
        for (int v = 0; v < n; ++v) {
            node_rng.push_back(Stream::derive(cfg.seed, {kNodeStream, static_cast<std::uint64_t>(v)}));
            arrival_rng.push_back(Stream::derive(cfg.seed, {kArrivalStream, static_cast<std::uint64_t>(v)}));
            next_arrival[v] = next_gap(arrival_rng[v], flows_[v].lambda) - 1;
        }
        pos.resize(n);
        nodes.resize(n);
        for (auto& q : nodes) q.steps.resize(S + 1);

        rep.delivered.assign(n, 0);
        rep.delay_sum.assign(n, 0);
        rep.flow_slots.assign(n, 0);
        rep.service.resize(S + 1);
        rep.step_slots.assign(S + 1, 0);
        rep.step_transmissions.assign(S + 1, 0);
        rep.max_step_bound = S;
        rep.i_max_formula = i_max(cfg.n, cfg.Z0);
        compute_ring_occupancy();
    }

    void compute_ring_occupancy()
    {
        int samples = std::min(cfg.ring_samples, cfg.n);
        if (samples <= 0 || S < 1) return;
        Stream rng = Stream::derive(cfg.seed, {kTrafficStream, 1});
        std::vector<NodeId> picks;
        for (int k = 0; k < samples; ++k) picks.push_back(static_cast<NodeId>(rng.below(cfg.n)));
        for (int i = 1; i <= S; ++i) {
            RingOccupancy ro;
            ro.step = i;
            ro.samples = samples;
            ro.min_count = std::numeric_limits<std::int64_t>::max();
            std::int64_t sum = 0, empty = 0;
            for (NodeId d : picks) {
                RelayRing ring = relay_ring(i, cfg.Z0, homes_[d]);
                std::int64_t c = 0;
                for (const auto& h : homes_) {
                    double dist = torus_distance_unchecked(h, ring.center, geom.side());
                    if (ring.inner < dist && dist < ring.outer) ++c;
                }
                sum += c;
                if (c == 0) ++empty;
                ro.min_count = std::min(ro.min_count, c);
            }
            ro.mean_count = static_cast<double>(sum) / samples;
            ro.empty_fraction = static_cast<double>(empty) / samples;
            rep.rings.push_back(ro);
        }
    }

    // QueueView
    const Message* head(NodeId a, int step) const override
    {
        const Fifo& f = nodes[a].steps[step];
        return f.head >= 0 ? &pool[f.head].m : nullptr;
    }
    bool has_direct(NodeId a, NodeId d) const override
    {
        const auto& v = nodes[a].direct_dst;
        return std::find(v.begin(), v.end(), d) != v.end();
    }
    std::span<const NodeId> direct_destinations(NodeId a) const override { return nodes[a].direct_dst; }

    bool measuring() const { return t >= warmup; }

    void touch(NodeId v, int change)
    {
        NodeQueues& q = nodes[v];
        if (measuring()) q.area += static_cast<double>(q.backlog) * (t - q.last_change);
        q.last_change = t;
        q.backlog += change;
        if (measuring()) q.max_backlog = std::max(q.max_backlog, q.backlog);
    }

    std::int32_t alloc()
    {
        if (!free_list.empty()) {
            std::int32_t idx = free_list.back();
            free_list.pop_back();
            return idx;
        }
        if (pool.size() >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
            throw std::runtime_error("message pool exhausted");
        pool.emplace_back();
        return static_cast<std::int32_t>(pool.size() - 1);
    }

    void push(Fifo& f, std::int32_t idx)
    {
        Entry& e = pool[idx];
        e.next = -1;
        if (f.head < 0) {
            f.head = f.tail = idx;
            f.hol_since = e.avail;
        } else {
            pool[f.tail].next = idx;
            f.tail = idx;
        }
        ++f.size;
        if (f.size > cfg.queue_cap && !rep.unstable) {
            rep.unstable = true;
            rep.instability = "queue exceeded " + std::to_string(cfg.queue_cap) + " messages at slot " + std::to_string(t);
        }
    }

    std::int32_t pop(Fifo& f)
    {
        std::int32_t idx = f.head;
        f.head = pool[idx].next;
        if (f.head < 0) f.tail = -1;
        --f.size;
        if (f.size > 0) f.hol_since = std::max(t + 1, pool[f.head].avail);
        pool[idx].next = -1;
        return idx;
    }

    Fifo& direct_queue(NodeId a, NodeId d)
    {
        NodeQueues& q = nodes[a];
        for (std::size_t k = 0; k < q.direct_dst.size(); ++k)
            if (q.direct_dst[k] == d) return q.direct_q[k];
        q.direct_dst.push_back(d);
        q.direct_q.emplace_back();
        return q.direct_q.back();
    }

    void drop_direct_if_empty(NodeId a, NodeId d)
    {
        NodeQueues& q = nodes[a];
        for (std::size_t k = 0; k < q.direct_dst.size(); ++k) {
            if (q.direct_dst[k] != d) continue;
            if (q.direct_q[k].size == 0) {
                q.direct_dst[k] = q.direct_dst.back();
                q.direct_q[k] = q.direct_q.back();
                q.direct_dst.pop_back();
                q.direct_q.pop_back();
            }
            return;
        }
    }

    void enqueue(NodeId holder, std::int32_t idx)
    {
        const Message& m = pool[idx].m;
        if (m.step >= 1)
            push(nodes[holder].steps[m.step], idx);
        else
            push(direct_queue(holder, m.dst), idx);
        touch(holder, +1);
    }

    std::uint64_t inject(NodeId src)
    {
        const FlowSpec& f = flows_[src];
        double dH = torus_distance_unchecked(homes_[src], homes_[f.dst], geom.side());
        int step = compute_step(dH, cfg.Z0);
        if (step > S)
            throw std::logic_error("message born at step " + std::to_string(step) + " above the largest step " +
                                   std::to_string(S));
        std::int32_t idx = alloc();
        Entry& e = pool[idx];
        e.m = Message{};
        e.m.id = next_id++;
        e.m.src = src;
        e.m.dst = f.dst;
        e.m.holder = src;
        e.m.step = step;
        e.m.initial_step = step;
        e.m.created_slot = t;
        e.avail = t;
        e.sojourn = 0;
        enqueue(src, idx);
        ++live;
        ++rep.injected;
        ++rep.initial_step_histogram[step];
        rep.max_initial_step = std::max(rep.max_initial_step, step);
        return e.m.id;
    }

    void execute(const Transmission& tx, int step)
    {
        NodeQueues& A = nodes[tx.tx];
        Fifo& f = step >= 1 ? A.steps[step] : direct_queue(tx.tx, tx.rx);
        if (f.head < 0) throw std::logic_error("scheduled transmission from an empty queue");
        std::int64_t service = t - f.hol_since + 1;
        std::int32_t idx = pop(f);
        Entry& e = pool[idx];
        if (step >= 1 && e.m.id != tx.msg) throw std::logic_error("scheduled message is not head-of-line");
        if (e.m.step != step) throw std::logic_error("message found in a queue of the wrong step");
        e.sojourn += t - e.avail + 1;
        if (measuring()) {
            rep.service[step].add(service);
            ++rep.step_transmissions[step];
            ++rep.transmissions;
        }
        touch(tx.tx, -1);
        Message moved = advance(e.m, tx.rx, homes_, cfg.Z0, geom, t);
        if (step == 0) {
            drop_direct_if_empty(tx.tx, tx.rx);
            std::int64_t delay = moved.delivered_slot - moved.created_slot + 1;
            if (e.sojourn != delay)
                throw std::logic_error("delay of message " + std::to_string(moved.id) +
                                       " differs from the sum of its per-hop sojourns");
            if (moved.hops != moved.initial_step + 1) ++rep.hop_mismatches;
            if (measuring()) {
                ++rep.delivered[moved.src];
                rep.delay_sum[moved.src] += delay;
                ++rep.hop_histogram[moved.hops];
            }
            ++delivered_all;
            --live;
            ++last.deliveries;
            if (cfg.record_events && static_cast<std::int64_t>(rep.events.size()) < cfg.trace_cap)
                rep.events.push_back({t, step, last.plan.phase, tx.tx, tx.rx, moved.id, true});
            free_list.push_back(idx);
            return;
        }
        double dH = torus_distance_unchecked(homes_[tx.rx], homes_[moved.dst], geom.side());
        if (compute_step(dH, cfg.Z0) != moved.step)
            throw std::logic_error("relay of message " + std::to_string(moved.id) + " does not reduce its step by one");
        e.m = moved;
        e.avail = t + 1;
        enqueue(tx.rx, idx);
        if (cfg.record_events && static_cast<std::int64_t>(rep.events.size()) < cfg.trace_cap)
            rep.events.push_back({t, step, last.plan.phase, tx.tx, tx.rx, moved.id, false});
    }

    void check_queues()
    {
        std::vector<char> seen(pool.size(), 0);
        std::int64_t count = 0;
        auto walk = [&](const Fifo& f, NodeId holder, int step, NodeId dst) {
            std::int32_t size = 0;
            for (std::int32_t idx = f.head; idx >= 0; idx = pool[idx].next) {
                if (seen[idx]) throw std::logic_error("message stored in two queues");
                seen[idx] = 1;
                const Message& m = pool[idx].m;
                if (m.step != step || m.holder != holder || (step == 0 && m.dst != dst))
                    throw std::logic_error("message " + std::to_string(m.id) + " sits in the wrong queue");
                ++size;
            }
            if (size != f.size) throw std::logic_error("queue length bookkeeping is off");
            count += size;
        };
        for (NodeId v = 0; v < cfg.n; ++v) {
            const NodeQueues& q = nodes[v];
            for (int s = 1; s <= S; ++s) walk(q.steps[s], v, s, -1);
            for (std::size_t k = 0; k < q.direct_dst.size(); ++k) walk(q.direct_q[k], v, 0, q.direct_dst[k]);
        }
        if (count != live) throw std::logic_error("queued message count differs from messages in flight");
    }

    void step_slot()
    {
        if (t == warmup) {
            for (auto& q : nodes) {
                q.area = 0.0;
                q.last_change = t;
                q.max_backlog = q.backlog;
            }
        }
        last = LastSlot{};
        int n = cfg.n;
        for (int v = 0; v < n; ++v) pos[v] = sample_position(homes_[v], shape, node_rng[v]);

        for (int v = 0; v < n; ++v) {
            while (next_arrival[v] == t) {
                inject(v);
                ++last.arrivals;
                next_arrival[v] += next_gap(arrival_rng[v], flows_[v].lambda);
            }
        }

        last.plan = planner.next();
        if (measuring()) ++rep.step_slots[last.plan.step];
        WorldView world{&geom, &homes_, &pos, cfg.Z0};
        last.transmissions = sched.enabled_transmissions(last.plan, world, *this, cfg.seed, t);
        for (const auto& tx : last.transmissions) execute(tx, last.plan.step);

        if (rep.injected != live + delivered_all) throw std::logic_error("message conservation violated");
        if (t % cfg.trace_interval == 0) {
            if (static_cast<std::int64_t>(rep.backlog_trace.size()) < cfg.trace_cap) rep.backlog_trace.emplace_back(t, live);
            if (cfg.check_invariants) check_queues();
        }
        ++t;
    }

    MetricsReport report() const
    {
        MetricsReport r = rep;
        std::int64_t measured = std::max<std::int64_t>(0, t - warmup);
        std::fill(r.flow_slots.begin(), r.flow_slots.end(), measured);
        r.node_max_queue.resize(cfg.n);
        r.node_mean_queue.resize(cfg.n);
        for (int v = 0; v < cfg.n; ++v) {
            const NodeQueues& q = nodes[v];
            r.node_max_queue[v] = q.max_backlog;
            double area = q.area + (t > warmup ? static_cast<double>(q.backlog) * (t - std::max(q.last_change, warmup)) : 0.0);
            r.node_mean_queue[v] = measured > 0 ? area / measured : 0.0;
        }
        r.in_flight_end = live;
        r.delivered_total = delivered_all;
        r.protocol_checked = static_cast<std::int64_t>(sched.transmissions_checked());
        if (!r.unstable) {
            ProbeVerdict v = classify_backlog(r.backlog_trace, warmup);
            if (!v.stable) {
                r.unstable = true;
                r.instability = "backlog grows after warmup (batch slope t = " + fmt(v.t_stat) + ", growth " +
                                fmt(v.growth) + ")";
            }
        }
        return r;
    }
};

Simulation::Simulation(const SimConfig& cfg)
{
    validate(cfg);
    HomePoints homes = homes_for(cfg);
    auto flows = flows_for(cfg, homes);
    impl_ = std::make_unique<Impl>(cfg, std::move(homes), std::move(flows));
}

Simulation::Simulation(const SimConfig& cfg, HomePoints homes, std::vector<FlowSpec> flows)
{
    validate(cfg);
    impl_ = std::make_unique<Impl>(cfg, std::move(homes), std::move(flows));
}

Simulation::~Simulation() = default;

void Simulation::step_slot() { impl_->step_slot(); }

void Simulation::run_to_end()
{
    while (impl_->t < impl_->cfg.slots) impl_->step_slot();
}

MetricsReport Simulation::report() const { return impl_->report(); }
std::uint64_t Simulation::inject(NodeId src) { return impl_->inject(src); }
std::int64_t Simulation::slot() const { return impl_->t; }
std::int64_t Simulation::in_flight() const { return impl_->live; }

std::int64_t Simulation::queued_total() const
{
    std::int64_t c = 0;
    for (const auto& q : impl_->nodes) {
        for (const auto& f : q.steps) c += f.size;
        for (const auto& f : q.direct_q) c += f.size;
    }
    return c;
}

const std::vector<TorusPoint>& Simulation::positions() const { return impl_->pos; }
const HomePoints& Simulation::homes() const { return impl_->homes_; }
const std::vector<FlowSpec>& Simulation::flows() const { return impl_->flows_; }
const std::vector<StepParams>& Simulation::steps() const { return impl_->steps_; }
const MobilityShape& Simulation::shape() const { return impl_->shape; }
const Simulation::LastSlot& Simulation::last_slot() const { return impl_->last; }

MetricsReport run(const SimConfig& cfg)
{
    Simulation sim(cfg);
    sim.run_to_end();
    return sim.report();
}

ProbeVerdict classify_backlog(const std::vector<std::pair<std::int64_t, std::int64_t>>& trace, std::int64_t from_slot,
                              int batches)
{
    ProbeVerdict v;
    std::vector<double> xs;
    for (auto [slot, b] : trace)
        if (slot >= from_slot) xs.push_back(static_cast<double>(b));
    if (batches < 3 || static_cast<int>(xs.size()) < batches) return v;
    std::size_t per = xs.size() / batches;
    std::vector<double> means(batches, 0.0);
    for (int b = 0; b < batches; ++b) {
        for (std::size_t k = 0; k < per; ++k) means[b] += xs[b * per + k];
        means[b] /= per;
    }
    double xbar = (batches - 1) / 2.0;
    double ybar = std::accumulate(means.begin(), means.end(), 0.0) / batches;
    double sxx = 0.0, sxy = 0.0;
    for (int b = 0; b < batches; ++b) {
        sxx += (b - xbar) * (b - xbar);
        sxy += (b - xbar) * (means[b] - ybar);
    }
    v.slope = sxy / sxx;
    double rss = 0.0;
    for (int b = 0; b < batches; ++b) {
        double r = means[b] - (ybar + v.slope * (b - xbar));
        rss += r * r;
    }
    double se = std::sqrt(rss / (batches - 2) / sxx);
    v.t_stat = se > 0.0 ? v.slope / se : (v.slope > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    v.growth = (means.back() - means.front()) / std::max(1.0, means.front());
    v.stable = !(v.t_stat > 3.0 && v.growth > 0.25);
    return v;
}

std::vector<ProbeVerdict> stability_probe(const SimConfig& cfg, const std::vector<double>& fractions,
                                          double lambda_unit)
{
    std::vector<ProbeVerdict> out;
    for (double f : fractions) {
        if (!(f >= 0.0 && f <= 2.0)) throw std::invalid_argument("load fractions must lie in [0, 2]");
        SimConfig c = cfg;
        c.lambda = std::min(1.0, f * lambda_unit);
        MetricsReport r = run(c);
        ProbeVerdict v = classify_backlog(r.backlog_trace, c.effective_warmup());
        v.fraction = f;
        v.lambda = c.lambda;
        if (r.unstable) v.stable = false;
        v.mean_delay = r.mean_delay();
        v.throughput = r.throughput();
        out.push_back(v);
    }
    return out;
}

SaturatedQueues::SaturatedQueues(const HomePoints& homes, const TorusGeometry& g, double Z0, int step, Stream& rng)
    : step_(step)
{
    auto n = static_cast<NodeId>(homes.size());
    heads_.resize(n);
    has_head_.assign(n, 0);
    dests_.resize(n);
    offset_.assign(n + 1, 0);
    std::vector<NodeId> cand;
    for (NodeId a = 0; a < n; ++a) {
        if (step >= 1) {
            cand.clear();
            for (NodeId d = 0; d < n; ++d) {
                if (d == a) continue;
                if (compute_step(torus_distance_unchecked(homes[a], homes[d], g.side()), Z0) == step) cand.push_back(d);
            }
            if (!cand.empty()) {
                Message& m = heads_[a];
                m.id = static_cast<std::uint64_t>(a);
                m.src = a;
                m.holder = a;
                m.dst = cand[rng.below(cand.size())];
                m.step = m.initial_step = step;
                has_head_[a] = 1;
            }
            offset_[a + 1] = offset_[a] + 1;
        } else {
            for (NodeId d = 0; d < n; ++d) {
                if (d == a) continue;
                double dH = torus_distance_unchecked(homes[a], homes[d], g.side());
                if (0.5 * Z0 < dH && dH < 0.75 * Z0) dests_[a].push_back(d);
            }
            offset_[a + 1] = offset_[a] + static_cast<std::int64_t>(dests_[a].size());
        }
    }
}

const Message* SaturatedQueues::head(NodeId a, int s) const
{
    return s == step_ && has_head_[a] ? &heads_[a] : nullptr;
}

bool SaturatedQueues::has_direct(NodeId a, NodeId d) const
{
    return std::find(dests_[a].begin(), dests_[a].end(), d) != dests_[a].end();
}

std::span<const NodeId> SaturatedQueues::direct_destinations(NodeId a) const
{
    if (step_ != 0) return {};
    return dests_[a];
}

std::int64_t SaturatedQueues::queue_index(NodeId tx, NodeId rx) const
{
    if (step_ >= 1) return offset_[tx];
    const auto& d = dests_[tx];
    auto it = std::find(d.begin(), d.end(), rx);
    if (it == d.end()) throw std::logic_error("no saturated queue for this pair");
    return offset_[tx] + (it - d.begin());
}

SaturationResult measure_saturated_service(const SimConfig& cfg, int step, std::int64_t slots)
{
    validate(cfg);
    TorusGeometry geom = TorusGeometry::from_area(cfg.n);
    MobilityShape shape(cfg.delta, geom, cfg.shape_resolution);
    HomePoints homes = homes_for(cfg);
    auto steps = build_step_params(schedule_for(cfg));
    int S = static_cast<int>(steps.size()) - 1;
    if (step < 0 || step > S) throw std::invalid_argument("saturated step outside [0, " + std::to_string(S) + "]");
    Scheduler sched(geom, steps, cfg.guard, cfg.verify_protocol);
    SlotPlanner planner(steps, Stream::derive(cfg.seed, {kPlanStream}));

    int n = cfg.n;
    Stream pick = Stream::derive(cfg.seed, {kTrafficStream, 2});
    SaturatedQueues view(homes, geom, cfg.Z0, step, pick);

    SaturationResult res;
    res.step = step;
    res.slots = slots;
    res.p_s = steps[step].p_s;
    res.queue_samples.resize(view.queue_count());
    std::vector<std::int64_t> start(view.queue_count(), 0);
    std::vector<Stream> node_rng;
    node_rng.reserve(n);
    for (int v = 0; v < n; ++v) node_rng.push_back(Stream::derive(cfg.seed, {kNodeStream, static_cast<std::uint64_t>(v)}));
    std::vector<TorusPoint> pos(n);
    WorldView world{&geom, &homes, &pos, cfg.Z0};
    std::int64_t active = 0;
    for (std::int64_t t = 0; t < slots; ++t) {
        SlotPlan plan = planner.next();
        if (plan.step != step) continue;
        ++res.step_slots;
        // positions in other slots cannot influence this queue, so they are only drawn here
        for (int v = 0; v < n; ++v) pos[v] = sample_position(homes[v], shape, node_rng[v]);
        auto txs = sched.enabled_transmissions(plan, world, view, cfg.seed, t);
        active += static_cast<std::int64_t>(txs.size());
        for (const auto& tx : txs) {
            std::int64_t q = view.queue_index(tx.tx, tx.rx);
            res.queue_samples[q].push_back(t - start[q] + 1);
            start[q] = t + 1;
        }
    }
    double sum = 0.0;
    std::int64_t cnt = 0;
    for (const auto& qs : res.queue_samples)
        for (auto s : qs) {
            sum += static_cast<double>(s);
            ++cnt;
        }
    res.mean_service = cnt ? sum / cnt : 0.0;
    res.p_T = cnt ? cnt / sum : 0.0;
    res.active_cells_per_step_slot = res.step_slots ? static_cast<double>(active) / res.step_slots : 0.0;
    return res;
}

}  // namespace manet
