#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "manet/geometry.hpp"
#include "manet/mobility.hpp"
#include "manet/random.hpp"
#include "manet/routing.hpp"

namespace manet {

// Minimum squarelet area for step i: c*sqrt(n)/Z_i (delta <= 1), c*n^((2-d)/2)/Z_i^(2-d)
// (1 < delta < 2), c*ln n (delta == 2), c*Z_i^(delta-2) (delta > 2); clamped to [1, n].
double squarelet_area(int i, double delta, double n, double Z0, double c = 1.0);

// floor(log2(n)/2 - log2(Z0)); throws for Z0 outside [1, sqrt(n)].
int i_max(double n, double Z0);

std::vector<double> slot_distribution(const std::vector<double>& areas);

// Side s of the s x s phase pattern; phase_count = s^2.
int phase_side(double guard);
int phase_count(double guard);

struct StepParams {
    int i = 0;
    double Z = 0.0;        // 2^i Z0
    double A = 0.0;        // nominal area from the squarelet formula
    double A_eff = 0.0;    // area of the fitted grid cell
    double R = 0.0;        // sqrt(2 A_eff)
    double p_s = 0.0;
    int cells_per_axis = 1;
    int phase_side = 1;
    int phases = 1;
};

struct ScheduleConfig {
    double n = 0.0;
    double delta = 0.0;
    double Z0 = 1.0;
    double area_constant = 1.0;
    double guard = 0.0;
    int phases = 0;                // 0 = phase_count(guard)
    int max_step = -1;             // -1 = step of the largest torus distance, at least i_max
    double range_ratio_max = 4.0;  // reject configs with R_i > range_ratio_max * Z_i
};

// Largest step any message can be born with: max(i_max, compute_step(side * sqrt(2) / 2)).
int effective_max_step(double n, double Z0);

std::vector<StepParams> build_step_params(const ScheduleConfig& cfg);

struct SlotPlan {
    int step = 0;
    int phase = 0;
};

// Draws the step of each slot from p_s and cycles the phase of that step round-robin.
class SlotPlanner {
public:
    SlotPlanner(const std::vector<StepParams>& steps, Stream rng);
    SlotPlan next();
    // Plan a slot for a given step (used by saturation experiments that force one step).
    SlotPlan next_for_step(int step);
    const std::vector<int>& phase_counters() const { return counters_; }

private:
    std::vector<double> cdf_;
    std::vector<int> phases_;
    std::vector<int> counters_;
    Stream rng_;
};

// Read access to the queue heads the scheduler needs.
class QueueView {
public:
    virtual ~QueueView() = default;
    // Head-of-line message of a's step queue (step >= 1), or nullptr.
    virtual const Message* head(NodeId a, int step) const = 0;
    // Whether a holds a step-0 message for d.
    virtual bool has_direct(NodeId a, NodeId d) const = 0;
    // Destinations a holds step-0 messages for.
    virtual std::span<const NodeId> direct_destinations(NodeId a) const = 0;
};

struct Transmission {
    NodeId tx = 0;
    NodeId rx = 0;
    std::uint64_t msg = 0;
    CellIndex cell;
};

struct WorldView {
    const TorusGeometry* geometry = nullptr;
    const HomePoints* homes = nullptr;
    const std::vector<TorusPoint>* positions = nullptr;
    double Z0 = 1.0;
};

// Eligible (tx, rx) pairs among the nodes of one cell for the given step.
void eligible_pairs(std::span<const NodeId> members, int step, const WorldView& world,
                    const QueueView& queues, std::vector<std::pair<NodeId, NodeId>>& out);

std::optional<Transmission> select_pair(std::span<const NodeId> members, CellIndex cell, int step,
                                        const WorldView& world, const QueueView& queues, Stream& rng);

struct ProtocolViolation {
    Transmission a;
    Transmission b;
    double distance = 0.0;
    std::string what;
};

// Exhaustive pairwise protocol-model check. Empty result means the set is admissible.
std::vector<ProtocolViolation> check_protocol(const std::vector<Transmission>& txs,
                                              const std::vector<TorusPoint>& positions,
                                              const TorusGeometry& g, double R, double guard);

// Buckets the nodes of the active phase by cell and runs select_pair in each.
class Scheduler {
public:
    Scheduler(const TorusGeometry& g, std::vector<StepParams> steps, double guard, bool verify_protocol);

    const std::vector<StepParams>& steps() const { return steps_; }
    double guard() const { return guard_; }

    std::vector<Transmission> enabled_transmissions(const SlotPlan& plan, const WorldView& world,
                                                    const QueueView& queues, std::uint64_t seed,
                                                    std::int64_t slot);

    // Members of active cells from the last call, for estimators that inspect cells.
    struct ActiveCell {
        CellIndex cell;
        std::span<const NodeId> members;
    };
    std::vector<ActiveCell> bucket_active_cells(const SlotPlan& plan, const std::vector<TorusPoint>& positions);

    std::uint64_t transmissions_checked() const { return checked_; }

private:
    TorusGeometry geom_;
    std::vector<StepParams> steps_;
    std::vector<CellGrid> grids_;
    double guard_;
    bool verify_;
    std::uint64_t checked_ = 0;
    std::vector<std::int32_t> bucket_of_node_;
    std::vector<std::int32_t> bucket_start_;
    std::vector<NodeId> bucket_nodes_;
    std::vector<std::pair<NodeId, NodeId>> scratch_;
};

}  // namespace manet
