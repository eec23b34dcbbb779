#include "manet/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace manet {

TorusGeometry::TorusGeometry(double side) : side_(side)
{
    if (!(side > 0.0) || !std::isfinite(side))
        throw std::invalid_argument("torus side must be positive and finite, got " + std::to_string(side));
}

TorusGeometry TorusGeometry::from_area(double area)
{
    if (!(area > 0.0))
        throw std::invalid_argument("torus area must be positive");
    return TorusGeometry(std::sqrt(area));
}

bool is_canonical(const TorusPoint& p, const TorusGeometry& g)
{
    return p.x >= 0.0 && p.x < g.side() && p.y >= 0.0 && p.y < g.side();
}

namespace {

double wrap_coordinate(double v, double side)
{
    if (v >= 0.0 && v < side) return v;
    if (v < 0.0 && v >= -side) {
        double r = v + side;
        return r < side ? r : 0.0;
    }
    if (v >= side && v < 2.0 * side) return v - side;
    double r = std::fmod(v, side);
    if (r < 0.0) r += side;
    // fmod of a tiny negative value plus side can round up to side itself
    if (r >= side) r = 0.0;
    return r;
}

}  // namespace

TorusPoint wrap(double x, double y, const TorusGeometry& g)
{
    if (!std::isfinite(x) || !std::isfinite(y))
        throw std::invalid_argument("cannot wrap a non-finite point");
    return {wrap_coordinate(x, g.side()), wrap_coordinate(y, g.side())};
}

double torus_distance(const TorusPoint& p, const TorusPoint& q, const TorusGeometry& g)
{
    if (!is_canonical(p, g) || !is_canonical(q, g))
        throw std::invalid_argument("torus_distance requires canonical points");
    return torus_distance_unchecked(p, q, g.side());
}

bool in_annulus(const TorusPoint& center, double r_in, double r_out, const TorusPoint& p,
                const TorusGeometry& g)
{
    if (r_in < 0.0 || !(r_in < r_out))
        throw std::invalid_argument("annulus requires 0 <= r_in < r_out");
    double d = torus_distance(center, p, g);
    return r_in < d && d < r_out;
}

CellGrid::CellGrid(const TorusGeometry& g, int cells_per_axis) : k_(cells_per_axis)
{
    if (cells_per_axis < 1)
        throw std::invalid_argument("a cell grid needs at least one cell per axis");
    cell_side_ = g.side() / k_;
    inv_cell_side_ = k_ / g.side();
}

CellGrid CellGrid::fit(const TorusGeometry& g, double requested_cell_side)
{
    if (!(requested_cell_side > 0.0) || requested_cell_side > g.side())
        throw std::invalid_argument("cell side must lie in (0, side], got " + std::to_string(requested_cell_side));
    double ratio = g.side() / requested_cell_side;
    int k = std::max(1, static_cast<int>(std::lround(ratio)));
    return CellGrid(g, k);
}

CellIndex cell_index(const TorusPoint& p, double cell_side, const TorusGeometry& g)
{
    if (!is_canonical(p, g))
        throw std::invalid_argument("cell_index requires a canonical point");
    return CellGrid::fit(g, cell_side).index(p);
}

}  // namespace manet
