#pragma once

#include <cmath>
#include <cstdint>

namespace manet {

// Square torus of side sqrt(n); node density is 1 for every n.
class TorusGeometry {
public:
    explicit TorusGeometry(double side);
    static TorusGeometry from_area(double area);

    double side() const { return side_; }
    double area() const { return side_ * side_; }
    double half_side() const { return 0.5 * side_; }
    // Largest torus distance between two points (half the diagonal).
    double max_distance() const { return side_ * M_SQRT1_2; }

private:
    double side_;
};

struct TorusPoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
};

bool is_canonical(const TorusPoint& p, const TorusGeometry& g);

// Reduce raw coordinates into [0, side). Throws std::invalid_argument on non-finite input.
TorusPoint wrap(double x, double y, const TorusGeometry& g);

// Wrap-around distance; throws std::invalid_argument for non-canonical points.
double torus_distance(const TorusPoint& p, const TorusPoint& q, const TorusGeometry& g);

// Hot-path variant for points already known to be canonical.
inline double torus_distance_unchecked(const TorusPoint& p, const TorusPoint& q, double side)
{
    double dx = std::fabs(p.x - q.x);
    double dy = std::fabs(p.y - q.y);
    if (dx > 0.5 * side) dx = side - dx;
    if (dy > 0.5 * side) dy = side - dy;
    return std::sqrt(dx * dx + dy * dy);
}

// Strict annulus membership r_in < d < r_out. Throws when r_in >= r_out or r_in < 0.
bool in_annulus(const TorusPoint& center, double r_in, double r_out, const TorusPoint& p,
                const TorusGeometry& g);

struct CellIndex {
    int cx = 0;
    int cy = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// Regular square tessellation whose cell count per axis divides the torus exactly.
class CellGrid {
public:
    CellGrid(const TorusGeometry& g, int cells_per_axis);

    // k = max(1, round(side / requested_cell_side)); the effective cell side is side / k.
    static CellGrid fit(const TorusGeometry& g, double requested_cell_side);

    int cells_per_axis() const { return k_; }
    double cell_side() const { return cell_side_; }
    double cell_area() const { return cell_side_ * cell_side_; }
    std::int64_t cell_count() const { return static_cast<std::int64_t>(k_) * k_; }

    CellIndex index(const TorusPoint& p) const
    {
        int cx = static_cast<int>(p.x * inv_cell_side_);
        int cy = static_cast<int>(p.y * inv_cell_side_);
        if (cx >= k_) cx = k_ - 1;
        if (cy >= k_) cy = k_ - 1;
        return {cx, cy};
    }

private:
    int k_;
    double cell_side_;
    double inv_cell_side_;
};

// Cell coordinates of p in the grid fitted to cell_side. Throws unless 0 < cell_side <= side.
CellIndex cell_index(const TorusPoint& p, double cell_side, const TorusGeometry& g);

}  // namespace manet
