#pragma once

#include <string>
#include <utility>
#include <vector>

#include "manet/geometry.hpp"
#include "manet/random.hpp"

namespace manet {

using HomePoints = std::vector<TorusPoint>;

// s(d) = min(1, d^-delta)
double unnormalized_density(double d, double delta);

// Integral of s(torus distance to a fixed point) over the whole torus.
double normalization_constant(double delta, const TorusGeometry& g);

// Length of the set of torus points at torus distance rho from a fixed point.
double torus_circle_length(double rho, const TorusGeometry& g);

// Radial law of the home-to-position distance. Up to half the side the circles are whole
// and the CDF inverts in closed form. Beyond that (the corner band where circles are
// clipped by the square) the CDF is tabulated in the angle theta with rho = L / cos(theta)
// and inverted by Hermite interpolation plus Newton steps.
class MobilityShape {
public:
    MobilityShape(double delta, const TorusGeometry& g, int resolution);

    double delta() const { return delta_; }
    const TorusGeometry& geometry() const { return geom_; }
    double G() const { return G_; }
    int resolution() const { return resolution_; }

    // P(distance <= rho)
    double radial_cdf(double rho) const;
    // Smallest rho with radial_cdf(rho) >= u, u in [0, 1].
    double radial_quantile(double u) const;

    // (quantile, distance) rows on a uniform quantile grid of `rows` + 1 points.
    std::vector<std::pair<double, double>> quantile_table(int rows) const;

    bool uniform() const { return delta_ == 0.0; }

private:
    double corner_density_theta(double theta) const;
    double corner_cdf_theta(double theta) const;
    double invert_corner(double mass) const;

    double delta_;
    TorusGeometry geom_;
    int resolution_;
    double L_;
    double inner_radius_;   // min(1, L)
    double inner_mass_;     // unnormalized mass of the disc of radius inner_radius_
    double disc_mass_;      // unnormalized mass of the disc of radius L
    double G_;
    std::vector<double> theta_;        // corner nodes on [0, pi/4]
    std::vector<double> corner_cum_;   // unnormalized mass from L up to rho(theta_k)
    std::vector<double> corner_dens_;  // d mass / d theta at the nodes
};

MobilityShape build_shape(double delta, const TorusGeometry& g, int resolution = 4096);

// A point at torus distance rho from home, uniform over the (possibly clipped) torus circle.
TorusPoint point_at_distance(const TorusPoint& home, double rho, const TorusGeometry& g, Stream& rng);

TorusPoint sample_position(const TorusPoint& home, const MobilityShape& shape, Stream& rng);

HomePoints generate_homes(int n, Stream& rng);

void write_shape_csv(const MobilityShape& shape, const std::string& path, int rows);

}  // namespace manet
