#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "manet/geometry.hpp"
#include "manet/mobility.hpp"
#include "manet/stats.hpp"

namespace manet {

struct Estimate {
    double p = 0.0;
    Interval ci;  // 95% Wilson
    std::int64_t successes = 0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
};

Estimate make_estimate(std::int64_t successes, std::int64_t trials, std::uint64_t seed);

struct MeetingQuery {
    double D = 0.0;
    double A = 0.0;  // requested cell area; the grid is fitted to the torus
    double delta = 0.0;
    int n = 0;
    std::int64_t trials = 0;
    std::uint64_t seed = 1;
    int workers = 1;
};

struct MeetingEstimate {
    Estimate est;
    double cell_area = 0.0;
};

// Two homes at torus distance D in a uniformly random direction, both positions drawn from
// the mobility law, success when they fall into the same grid cell. Requires trials >= 10^4,
// sqrt(A) < D / 4 and D <= sqrt(n) / 2.
MeetingEstimate estimate_meeting_probability(const MeetingQuery& q);

struct PopulatedQuery {
    int i = 0;
    double delta = 0.0;
    int n = 0;
    double Z0 = 1.0;
    double A = 0.0;
    int instances = 100;
    int slots = 100;
    std::uint64_t seed = 1;
    CellIndex reference{0, 0};
    int workers = 1;
};

struct PopulatedEstimate {
    Estimate est;
    double cell_area = 0.0;
    double mean_occupancy = 0.0;  // expected nodes in the reference cell per slot
};

// Home-distance band of a pair that can serve step i: [Z0/2, 3 Z0/4] for step 0 and
// [Z_i/8, 11 Z_i/8] for i >= 1 (closed).
std::pair<double, double> populated_band(int i, double Z0);

// Integral over the cell of the position density of a node with the given home.
double cell_occupancy_mass(const TorusPoint& home, const CellGrid& grid, CellIndex cell, const MobilityShape& shape);

// Fraction of slots in which the reference cell holds two nodes whose homes lie within the
// step's band. Each instance draws a fresh home set; a node's presence in the cell is a
// Bernoulli variable per slot with the exact cell mass of its position law, independent
// across slots and nodes, which is how the i.i.d. mobility model places it.
PopulatedEstimate estimate_populated_probability(const PopulatedQuery& q);

struct PbetaQuery {
    int i = 0;
    double delta = 0.0;
    int n = 0;
    double Z0 = 1.0;
    double area_constant = 1.0;
    double guard = 0.0;
    std::int64_t slots = 10000;  // step-i slots to simulate
    std::uint64_t seed = 1;
};

struct PbetaEstimate {
    Estimate est;
    double A = 0.0;           // effective cell area of the step
    double mean_pairs = 0.0;  // eligible pairs in the tagged pair's cell
};

// Saturated queues for step i. In every slot with at least one eligible pair, one pair is
// tagged uniformly among all eligible pairs of the active cells; success when the scheduler
// selects it.
PbetaEstimate estimate_pbeta(const PbetaQuery& q);

struct EstimateRow {
    std::string kind;
    std::vector<std::pair<std::string, double>> params;
    Estimate est;
};

// Columns kind,params,estimate,ci_lo,ci_hi,successes,trials,seed; params as key=value;...
void write_estimate_csv(std::ostream& out, const std::vector<EstimateRow>& rows);

}  // namespace manet
