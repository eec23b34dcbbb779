#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "manet/experiment.hpp"
#include "manet/format.hpp"

using namespace manet;

namespace {

int dispatch(Command cmd, const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
             std::optional<int> workers)
{
    ExperimentPlan plan;
    try {
        plan = load_config(config);
        plan.command = cmd;
        if (!out.empty()) plan.output_dir = out;
        if (seed) {
            plan.seeds = {*seed};
            plan.base.seed = *seed;
        }
        if (workers) {
            if (*workers < 1) throw ConfigError("--workers must be >= 1");
            plan.workers = *workers;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    try {
        switch (cmd) {
        case Command::analyze:
            emit_curves(plan);
            std::cout << "wrote curves to " << plan.output_dir << "\n";
            return 0;
        case Command::simulate:
        case Command::sweep: {
            SweepResult r = run_sweep(plan);
            for (const auto& a : r.aggregate) {
                std::cout << (plan.sweep_axis ? plan.sweep_axis->name + "=" + fmt(a.value) + " " : "")
                          << "runs=" << a.runs << " failed=" << a.failed << " throughput=" << fmt(a.throughput_mean)
                          << " delay=" << (a.delay_mean ? fmt(*a.delay_mean) : "none") << "\n";
            }
            if (r.throughput_slope) std::cout << "throughput slope vs n: " << fmt(r.throughput_slope->slope) << "\n";
            if (r.delay_slope) std::cout << "delay slope vs n: " << fmt(r.delay_slope->slope) << "\n";
            for (const auto& row : r.rows)
                if (!row.ok) std::cerr << "run failed (value " << fmt(row.value) << ", seed " << row.seed << "): " << row.error << "\n";
            return r.failures ? 2 : 0;
        }
        case Command::oracle: {
            int failed = run_oracle(plan);
            std::cout << "wrote " << plan.output_dir << "/oracle.csv\n";
            return failed ? 2 : 0;
        }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Restricted-mobility MANET simulator and scaling-law toolkit"};
    app.require_subcommand(1);
    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    Command chosen = Command::simulate;

    auto add = [&](const char* name, const char* help, Command c) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "configuration file (key = value lines or JSON)")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "single seed overriding the config");
        sub->add_option("--workers", workers, "parallel workers");
        sub->callback([&chosen, c] { chosen = c; });
    };
    add("analyze", "emit closed-form curves and bounds", Command::analyze);
    add("simulate", "run the simulator for the configured seeds", Command::simulate);
    add("sweep", "run a parameter sweep", Command::sweep);
    add("oracle", "run a Monte Carlo estimator", Command::oracle);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    return dispatch(chosen, config, out, seed, workers);
}
