#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "manet/analysis.hpp"
#include "manet/simcore.hpp"
#include "manet/stats.hpp"

namespace manet {

// Raised for anything wrong with a configuration; the CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command { analyze, simulate, sweep, oracle };
std::string command_name(Command c);
Command parse_command(const std::string& s);

// Z0 as a function of n: a fixed number, or coef * n^n_exp * (ln n)^log_exp.
struct Z0Spec {
    bool fixed = false;
    double value = 0.0;
    Z0Scale scale;
    bool is_auto = false;
    std::string text;

    double at(double n) const { return fixed ? value : scale.value(n); }
};

// "auto", "2.5", "n^0.25", "3*n^(1/6)", "sqrt(log n)", "1.5*sqrt(log(n))", "log(n)^0.75".
// "auto" resolves to auto_constant times the smallest admissible order for delta.
Z0Spec parse_z0(const std::string& text, double delta, double auto_constant);

// Rejects Z0 below the admissible floor for the mobility regime, naming regime and bound.
void check_z0_floor(const Z0Spec& z0, double delta, double n);

struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

struct OracleSettings {
    std::string kind = "meeting";  // meeting | populated | pbeta
    std::vector<double> D;
    double A = 0.0;                // 0: squarelet area of the step with area_constant
    double area_scale = 1.0;       // multiplies the squarelet area
    std::int64_t trials = 1000000;
    int instances = 100;
    int slots = 100;
    int step = 0;
};

struct ExperimentPlan {
    Command command = Command::simulate;
    SimConfig base;
    Z0Spec z0;
    std::optional<double> load;      // lambda = load * throughput_constant / sum_i A_i
    double throughput_constant = 1.0;
    std::optional<SweepAxis> sweep_axis;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "out";
    int workers = 1;
    std::vector<double> delta_grid;
    std::vector<double> beta_grid;
    OracleSettings oracle;
    std::string source_text;
};

// Flat "key = value" lines ('#' comments) or a JSON object with the same keys.
ExperimentPlan parse_config(const std::string& text);
ExperimentPlan load_config(const std::string& path);

// Offered per-node rate for a configuration: the explicit lambda, or load times the
// throughput constant over the summed unit squarelet areas.
double resolve_lambda(const ExperimentPlan& plan, const SimConfig& cfg);

// Base config with the sweep value applied and Z0 / lambda resolved. Throws ConfigError.
SimConfig derive_config(const ExperimentPlan& plan, std::optional<double> axis_value, std::uint64_t seed);

struct RunRow {
    double value = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    SimConfig cfg;
    double throughput = 0.0;
    std::optional<double> mean_delay;
    std::int64_t injected = 0;
    std::int64_t delivered = 0;
    std::int64_t hop_mismatches = 0;
    int max_initial_step = -1;
    int max_step_bound = 0;
    int i_max = 0;
    std::int64_t protocol_checked = 0;
    bool unstable = false;
};

struct AggregateRow {
    double value = 0.0;
    int runs = 0;
    int failed = 0;
    int unstable = 0;
    double throughput_mean = 0.0;
    double throughput_ci95 = 0.0;
    std::optional<double> delay_mean;
    double delay_ci95 = 0.0;
};

struct SweepResult {
    std::vector<RunRow> rows;
    std::vector<AggregateRow> aggregate;
    std::optional<SlopeFit> throughput_slope;
    std::optional<SlopeFit> delay_slope;
    int failures = 0;
};

// Runs every (sweep value x seed) on a worker pool and writes runs/, results.csv,
// aggregate.csv and plan.json under output_dir. A failed run is recorded and the rest go on.
SweepResult run_sweep(const ExperimentPlan& plan);

SweepResult aggregate_rows(std::vector<RunRow> rows, const std::string& axis);

// fast_power.csv, tradeoff.csv, slow_power.csv and bounds.csv in output_dir. Consumes no randomness.
void emit_curves(const ExperimentPlan& plan);

// oracle.csv (and slopes.csv when the axis has at least 3 values) in output_dir.
// Returns the number of failed estimates.
int run_oracle(const ExperimentPlan& plan);

// Grid from "a:b:step" (inclusive, values k/denominator to stay exact) or "v1,v2,...".
std::vector<double> parse_grid(const std::string& text);

}  // namespace manet
