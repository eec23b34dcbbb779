#include "manet/routing.hpp"

#include <stdexcept>
#include <string>

namespace manet {

int compute_step(double dH, double Z0)
{
    if (!(Z0 > 0.0)) throw std::invalid_argument("Z0 must be positive");
    if (!(dH >= 0.0)) throw std::invalid_argument("home distance must be non-negative");
    if (dH <= Z0) return 0;
    // doubling is exact in binary floating point, so the boundaries are hit exactly
    int i = 1;
    double bound = 2.0 * Z0;
    while (dH > bound) {
        bound *= 2.0;
        ++i;
    }
    return i;
}

RelayRing relay_ring(int i_star, double Z0, const TorusPoint& H_d)
{
    if (i_star < 1) throw std::invalid_argument("relay rings exist only for steps >= 1");
    return {H_d, std::ldexp(Z0, i_star - 2), 0.75 * std::ldexp(Z0, i_star - 1)};
}

RelayRing union_tx_ring(int i, double Z0)
{
    if (i < 1) throw std::invalid_argument("union ring exists only for steps >= 1");
    double Zi = step_length(i, Z0);
    return {TorusPoint{}, Zi / 8.0, 11.0 * Zi / 8.0};
}

bool in_union_tx_ring(double dH_ab, int i, double Z0)
{
    double Zi = step_length(i, Z0);
    return Zi / 8.0 <= dH_ab && dH_ab <= 11.0 * Zi / 8.0;
}

bool is_eligible_relay(NodeId b, const Message& msg, const HomePoints& homes, double Z0,
                       const TorusGeometry& g)
{
    if (msg.step < 0) throw std::invalid_argument("negative message step");
    if (msg.step == 0) return b == msg.dst;
    const TorusPoint& hd = homes[msg.dst];
    double d = torus_distance_unchecked(homes[b], hd, g.side());
    return std::ldexp(Z0, msg.step - 2) < d && d < 0.75 * std::ldexp(Z0, msg.step - 1);
}

Message advance(const Message& msg, NodeId relay_or_dst, const HomePoints& homes, double Z0,
                const TorusGeometry& g, std::int64_t slot)
{
    if (msg.delivered()) throw std::logic_error("message " + std::to_string(msg.id) + " already delivered");
    if (!is_eligible_relay(relay_or_dst, msg, homes, Z0, g))
        throw std::logic_error("node " + std::to_string(relay_or_dst) + " is not eligible for message " +
                               std::to_string(msg.id) + " at step " + std::to_string(msg.step));
    Message out = msg;
    out.hops += 1;
    out.holder = relay_or_dst;
    if (msg.step == 0) {
        out.delivered_slot = slot;
        return out;
    }
    out.step -= 1;
    return out;
}

}  // namespace manet
