#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "manet/experiment.hpp"

using namespace manet;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("manet_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Rows of a CSV file keyed by header name; '#' lines are skipped.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::vector<std::string> header;
    std::vector<std::map<std::string, std::string>> rows;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cell;
        std::stringstream ss(s);
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        if (!s.empty() && s.back() == ',') out.push_back("");
        return out;
    };
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header.empty()) {
            header = split(line);
            continue;
        }
        auto cells = split(line);
        std::map<std::string, std::string> row;
        for (std::size_t k = 0; k < header.size() && k < cells.size(); ++k) row[header[k]] = cells[k];
        rows.push_back(row);
    }
    return rows;
}

std::map<std::string, std::string> snapshot(const fs::path& dir)
{
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    return files;
}

const std::string kMinimal = "n = 1024\ndelta = 2\nZ0 = auto\nlambda = 0.01\nslots = 10000\nseed = 1\n";

}  // namespace

TEST_CASE("minimal config resolves Z0 from the admissible floor")
{
    ExperimentPlan p = parse_config(kMinimal);
    CHECK(p.base.n == 1024);
    CHECK(p.z0.is_auto);
    SimConfig c = derive_config(p, std::nullopt, 1);
    CHECK(c.Z0 == doctest::Approx(std::sqrt(std::log(1024.0))).epsilon(1e-12));
    CHECK(c.lambda == 0.01);
    CHECK(p.seeds == std::vector<std::uint64_t>{1});

    ExperimentPlan scaled = parse_config(kMinimal + "Z0_constant = 2\n");
    CHECK(derive_config(scaled, std::nullopt, 1).Z0 == doctest::Approx(2.0 * std::sqrt(std::log(1024.0))));

    ExperimentPlan js = parse_config(R"({"n": 1024, "delta": 2, "Z0": "auto", "lambda": 0.01, "slots": 10000, "seed": 1})");
    CHECK(derive_config(js, std::nullopt, 1).Z0 == c.Z0);
}

TEST_CASE("config errors are precise")
{
    CHECK_THROWS_WITH_AS(parse_config("n = 1024\ndelta = 0.5\nZ0 = n^0.1\nlambda = 0.01\n"),
                         doctest::Contains("n^(1/6)"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(kMinimal + "seeds = 1, 2, 1\n"), doctest::Contains("duplicate"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(kMinimal + "colour = red\n"), doctest::Contains("colour"), ConfigError);
    CHECK_THROWS_AS(parse_config("n = 1024\nlambda = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(kMinimal + "sweep_axis = n\n"), ConfigError);
    CHECK_NOTHROW(parse_config("n = 1024\ndelta = 0.5\nZ0 = n^0.2\nlambda = 0.01\n"));
}

TEST_CASE("Z0 expressions and grids")
{
    CHECK(parse_z0("2.5", 2.0, 1.0).at(4096) == 2.5);
    CHECK(parse_z0("n^0.25", 2.0, 1.0).at(65536) == doctest::Approx(16.0));
    CHECK(parse_z0("3*n^(1/6)", 0.0, 1.0).at(64) == doctest::Approx(6.0));
    CHECK(parse_z0("sqrt(log n)", 2.0, 1.0).at(std::exp(9.0)) == doctest::Approx(3.0));
    CHECK(parse_z0("1.5*sqrt(log(n))", 2.0, 1.0).at(std::exp(4.0)) == doctest::Approx(3.0));
    CHECK(parse_z0("log(n)^0.75", 2.0, 1.0).at(std::exp(16.0)) == doctest::Approx(8.0));
    CHECK(parse_z0("auto", 0.5, 1.0).at(std::ldexp(1.0, 18)) == doctest::Approx(8.0));
    CHECK_THROWS_AS(parse_z0("n^", 2.0, 1.0), ConfigError);

    std::vector<double> g = parse_grid("0:1:0.25");
    REQUIRE(g.size() == 5);
    CHECK(g[3] == 0.75);
    CHECK(parse_grid("0:4:0.1").size() == 41);
    CHECK(parse_grid("0:4:0.1")[30] == 3.0);
    CHECK(parse_grid("1, 2.5,4") == std::vector<double>{1, 2.5, 4});
}

TEST_CASE("sweep with one value and five seeds")
{
    fs::path out = scratch_dir("sweep");
    ExperimentPlan p = parse_config(
        "n = 256\ndelta = 2\nZ0 = auto\nlambda = 0.002\nslots = 2000\nwarmup = 200\nseeds = 1,2,3,4,5\n"
        "shape_resolution = 1024\n");
    p.output_dir = out.string();
    SweepResult r = run_sweep(p);
    CHECK(r.rows.size() == 5);
    CHECK(r.aggregate.size() == 1);
    CHECK(r.failures == 0);
    CHECK(r.aggregate[0].runs == 5);
    CHECK_FALSE(r.throughput_slope.has_value());
    CHECK(read_csv(out / "results.csv").size() == 5);
    CHECK(read_csv(out / "aggregate.csv").size() >= 1);
    CHECK(fs::exists(out / "plan.json"));
    CHECK(fs::exists(out / "runs"));
    CHECK(slurp(out / "results.csv").rfind("# params", 0) == 0);

    double m = 0.0;
    for (const auto& row : r.rows) m += row.throughput;
    CHECK(r.aggregate[0].throughput_mean == doctest::Approx(m / 5));
}

TEST_CASE("sweep over n is reproducible and fits slopes")
{
    std::string text =
        "n = 256\ndelta = 2\nZ0 = auto\nload = 0.25\nthroughput_constant = 0.015625\nslots = 1500\nwarmup = 150\n"
        "seeds = 7,8\nsweep_axis = n\nsweep_values = 256,512,1024\nshape_resolution = 1024\n";
    fs::path a = scratch_dir("repro_a"), b = scratch_dir("repro_b");
    ExperimentPlan pa = parse_config(text);
    pa.output_dir = a.string();
    ExperimentPlan pb = pa;
    pb.output_dir = b.string();
    pb.workers = 2;
    SweepResult ra = run_sweep(pa);
    run_sweep(pb);
    CHECK(ra.rows.size() == 6);
    CHECK(ra.aggregate.size() == 3);
    CHECK(ra.throughput_slope.has_value());
    CHECK(ra.delay_slope.has_value());

    auto sa = snapshot(a), sb = snapshot(b);
    sa.erase("plan.json");
    sb.erase("plan.json");
    CHECK(sa.size() >= 8);
    CHECK(sa == sb);
}

TEST_CASE("failed runs are recorded and the sweep goes on")
{
    fs::path out = scratch_dir("fail");
    ExperimentPlan p = parse_config(
        "n = 1024\ndelta = 2\nZ0 = auto\nlambda = 0.01\nslots = 500\nseeds = 1,2\nmax_step = 1\nshape_resolution = 1024\n");
    p.output_dir = out.string();
    SweepResult r = run_sweep(p);
    CHECK(r.failures == 2);
    CHECK(r.rows.size() == 2);
    CHECK_FALSE(r.rows[0].ok);
    CHECK_FALSE(r.rows[0].error.empty());
}

TEST_CASE("emitted curves")
{
    fs::path out = scratch_dir("curves");
    ExperimentPlan p = parse_config("command = analyze\n" + kMinimal);
    p.output_dir = out.string();
    emit_curves(p);
    auto fast = read_csv(out / "fast_power.csv");
    std::map<std::string, double> power;
    for (const auto& row : fast) power[row.at("delta")] = std::stod(row.at("power"));
    CHECK(power.size() == 41);
    CHECK(power.at("2") == 0.0);
    CHECK(power.at("3") == -1.0);
    CHECK(power.at("1") == -1.0);
    CHECK(power.at("1.5") == doctest::Approx(-0.6).epsilon(1e-12));
    CHECK(power.at("2.5") == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(power.at("4") == -1.0);

    bool marker = false;
    for (const auto& row : read_csv(out / "tradeoff.csv")) {
        if (row.at("curve") == "D=n*lambda^2") marker = true;
        if (row.at("curve") != "bisection" || row.at("beta").empty()) continue;
        double d = std::stod(row.at("delta"));
        if (d <= 1.0) CHECK(std::stod(row.at("delay_exp")) == doctest::Approx(std::stod(row.at("lambda_exp")) + 1.0));
    }
    CHECK(marker);
    CHECK(fs::exists(out / "slow_power.csv"));
    CHECK(fs::exists(out / "bounds.csv"));

    // no randomness consumed: a second emission is identical
    std::string first = slurp(out / "tradeoff.csv");
    emit_curves(p);
    CHECK(slurp(out / "tradeoff.csv") == first);
}

TEST_CASE("command line exit codes")
{
    fs::path dir = scratch_dir("cli");
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream(dir / name) << body;
        return (dir / name).string();
    };
    auto run_cli = [&](const std::string& args) {
        std::string cmd = std::string(MANET_CLI) + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
        int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };
    std::string good = write("good.cfg", kMinimal);
    std::string bad = write("bad.cfg", "n = 1024\ndelta = 0.5\nZ0 = n^0.1\nlambda = 0.01\n");
    std::string broken = write("broken.cfg", "n = 1024\ndelta = 2\nlambda = 0.01\nslots = 300\nmax_step = 1\n");
    std::string out = (dir / "out").string();
    CHECK(run_cli("analyze --config " + good + " --out " + out) == 0);
    CHECK(fs::exists(dir / "out" / "fast_power.csv"));
    CHECK(run_cli("simulate --config " + bad + " --out " + out) == 1);
    CHECK(slurp(dir / "log.txt").find("n^(1/6)") != std::string::npos);
    CHECK(run_cli("simulate --config " + (dir / "missing.cfg").string()) == 1);
    CHECK(run_cli("simulate --config " + broken + " --out " + out + " --seed 3") == 2);
}
