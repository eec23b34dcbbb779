#pragma once

#include <cstdint>

#include "manet/geometry.hpp"
#include "manet/mobility.hpp"

namespace manet {

using NodeId = std::int32_t;

struct Message {
    std::uint64_t id = 0;
    NodeId src = 0;
    NodeId dst = 0;
    NodeId holder = 0;
    int step = 0;
    int initial_step = 0;
    int hops = 0;
    std::int64_t created_slot = 0;
    std::int64_t delivered_slot = -1;

    bool delivered() const { return delivered_slot >= 0; }
};

// Open annulus inner < d < outer around a destination home-point.
struct RelayRing {
    TorusPoint center;
    double inner = 0.0;
    double outer = 0.0;

    bool contains(const TorusPoint& p, const TorusGeometry& g) const
    {
        return in_annulus(center, inner, outer, p, g);
    }
};

// 0 when dH <= Z0, otherwise the i >= 1 with 2^(i-1) Z0 < dH <= 2^i Z0.
int compute_step(double dH, double Z0);

// Z_i = 2^i Z0
inline double step_length(int i, double Z0) { return std::ldexp(Z0, i); }

// Ring (2^(i-2) Z0, (3/4) 2^(i-1) Z0) around H_d for a message in step i >= 1.
RelayRing relay_ring(int i_star, double Z0, const TorusPoint& H_d);

// Ring [Z_i/8, 11 Z_i/8] around H_a that holds every possible relay for a step-i holder a.
// The `center` field is left at the origin; callers place it.
RelayRing union_tx_ring(int i, double Z0);
bool in_union_tx_ring(double dH_ab, int i, double Z0);

bool is_eligible_relay(NodeId b, const Message& msg, const HomePoints& homes, double Z0,
                       const TorusGeometry& g);

// Forward msg to relay (step >= 1) or deliver it to the destination (step 0).
// Throws std::logic_error for an ineligible receiver.
Message advance(const Message& msg, NodeId relay_or_dst, const HomePoints& homes, double Z0,
                const TorusGeometry& g, std::int64_t slot);

}  // namespace manet
