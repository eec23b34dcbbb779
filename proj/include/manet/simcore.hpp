#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "manet/geometry.hpp"
#include "manet/mobility.hpp"
#include "manet/random.hpp"
#include "manet/routing.hpp"
#include "manet/scheduling.hpp"

namespace manet {

struct SimConfig {
    int n = 1024;
    double delta = 2.0;
    double Z0 = 0.0;
    double lambda = 0.0;
    std::int64_t slots = 10000;
    std::int64_t warmup = -1;  // -1: 10% of slots
    std::uint64_t seed = 1;
    double guard = 0.0;
    double area_constant = 1.0;
    int phases = 0;
    double c_far = 0.25;
    std::int64_t queue_cap = 1000000;
    bool verify_protocol = false;
    bool check_invariants = true;
    std::int64_t trace_interval = 100;
    std::int64_t trace_cap = 100000;
    bool record_events = false;
    int ring_samples = 64;
    double range_ratio_max = 4.0;
    int max_step = -1;
    int shape_resolution = 4096;

    std::int64_t effective_warmup() const { return warmup >= 0 ? warmup : slots / 10; }
};

// Throws std::invalid_argument naming the offending field.
void validate(const SimConfig& cfg);

struct FlowSpec {
    NodeId src = 0;
    NodeId dst = 0;
    double lambda = 0.0;
};

// Derangement whose home distances are all >= c_far * sqrt(n), indexed by source.
std::vector<FlowSpec> generate_traffic(const HomePoints& homes, double lambda, double c_far, Stream& rng,
                                       int max_rounds = 200);

struct Histogram {
    std::map<std::int64_t, std::int64_t> counts;
    std::int64_t total = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(std::int64_t v, std::int64_t times = 1);
    void merge(const Histogram& o);
    double mean() const { return total ? sum / total : 0.0; }
    double variance() const;
};

struct RingOccupancy {
    int step = 0;
    int samples = 0;
    double mean_count = 0.0;
    std::int64_t min_count = 0;
    double empty_fraction = 0.0;
};

struct SlotEvent {
    std::int64_t slot = 0;
    int step = 0;
    int phase = 0;
    NodeId tx = 0;
    NodeId rx = 0;
    std::uint64_t msg = 0;
    bool delivery = false;
};

struct MetricsReport {
    // Per flow, indexed by source node (runs appended by merge).
    std::vector<std::int64_t> delivered;
    std::vector<std::int64_t> delay_sum;
    std::vector<std::int64_t> flow_slots;

    std::vector<Histogram> service;  // per step, slots from head-of-line to transmission
    std::vector<std::int64_t> step_slots;
    std::vector<std::int64_t> step_transmissions;

    std::vector<std::int64_t> node_max_queue;
    std::vector<double> node_mean_queue;
    std::vector<std::pair<std::int64_t, std::int64_t>> backlog_trace;  // (slot, messages in flight)

    std::vector<RingOccupancy> rings;
    std::map<int, std::int64_t> hop_histogram;
    std::map<int, std::int64_t> initial_step_histogram;

    std::int64_t injected = 0;
    std::int64_t delivered_total = 0;
    std::int64_t in_flight_end = 0;
    std::int64_t transmissions = 0;
    std::int64_t protocol_checked = 0;
    std::int64_t hop_mismatches = 0;
    int max_initial_step = -1;
    int max_step_bound = 0;  // number of step queues minus one
    int i_max_formula = 0;
    bool unstable = false;
    std::string instability;
    std::vector<SlotEvent> events;

    // Mean over flows of delivered / measured slots.
    double throughput() const;
    // Summed delay over delivered count; empty when nothing was delivered.
    std::optional<double> mean_delay() const;
    std::int64_t total_delivered() const;

    void merge(const MetricsReport& other);
};

class Simulation {
public:
    explicit Simulation(const SimConfig& cfg);
    Simulation(const SimConfig& cfg, HomePoints homes, std::vector<FlowSpec> flows);
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    void step_slot();
    void run_to_end();
    MetricsReport report() const;

    // Creates one message on src's flow in the current slot, as an arrival would.
    std::uint64_t inject(NodeId src);

    std::int64_t slot() const;
    std::int64_t in_flight() const;
    std::int64_t queued_total() const;  // walks every queue
    const std::vector<TorusPoint>& positions() const;
    const HomePoints& homes() const;
    const std::vector<FlowSpec>& flows() const;
    const std::vector<StepParams>& steps() const;
    const MobilityShape& shape() const;

    struct LastSlot {
        SlotPlan plan;
        std::vector<Transmission> transmissions;
        int arrivals = 0;
        int deliveries = 0;
    };
    const LastSlot& last_slot() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

MetricsReport run(const SimConfig& cfg);

struct ProbeVerdict {
    double fraction = 0.0;
    double lambda = 0.0;
    bool stable = true;
    double slope = 0.0;   // batch-mean backlog growth per batch
    double t_stat = 0.0;
    double growth = 0.0;  // (last batch - first batch) / max(1, first batch)
    std::optional<double> mean_delay;
    double throughput = 0.0;
};

// Batch-means growth test on a backlog trace (entries at or after `from_slot`).
ProbeVerdict classify_backlog(const std::vector<std::pair<std::int64_t, std::int64_t>>& trace,
                              std::int64_t from_slot, int batches = 10);

// One run per fraction with lambda = fraction * lambda_unit.
std::vector<ProbeVerdict> stability_probe(const SimConfig& cfg, const std::vector<double>& fractions,
                                          double lambda_unit);

// Queue heads for a network where every queue of one step is permanently backlogged.
// Steps >= 1 give each node one fixed destination whose home is at that step's distance;
// step 0 backlogs every destination whose home lies in (Z0/2, 3Z0/4) of the node's.
class SaturatedQueues final : public QueueView {
public:
    SaturatedQueues(const HomePoints& homes, const TorusGeometry& g, double Z0, int step, Stream& rng);

    const Message* head(NodeId a, int s) const override;
    bool has_direct(NodeId a, NodeId d) const override;
    std::span<const NodeId> direct_destinations(NodeId a) const override;

    int step() const { return step_; }
    // Dense index of the queue that (tx, rx) is served from.
    std::int64_t queue_index(NodeId tx, NodeId rx) const;
    std::int64_t queue_count() const { return offset_.back(); }

private:
    int step_;
    std::vector<Message> heads_;
    std::vector<char> has_head_;
    std::vector<std::vector<NodeId>> dests_;
    std::vector<std::int64_t> offset_;
};

struct SaturationResult {
    int step = 0;
    std::int64_t slots = 0;
    std::int64_t step_slots = 0;
    std::vector<std::vector<std::int64_t>> queue_samples;  // completed service times per queue
    double mean_service = 0.0;
    double p_T = 0.0;                     // 1 / mean service time
    double active_cells_per_step_slot = 0.0;
    double p_s = 0.0;
};

// Service times with every queue of the given step permanently backlogged (see SaturatedQueues).
SaturationResult measure_saturated_service(const SimConfig& cfg, int step, std::int64_t slots);

}  // namespace manet
