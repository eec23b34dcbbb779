#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "manet/mobility.hpp"
#include "manet/random.hpp"
#include "manet/routing.hpp"
#include "manet/scheduling.hpp"
#include "manet/simcore.hpp"
#include "manet/stats.hpp"

using namespace manet;

namespace {

// Hand-built queue contents for small cells.
class FixedQueues : public QueueView {
public:
    explicit FixedQueues(int n) : heads_(n), has_(n, 0), direct_(n) {}
    void set_head(NodeId a, NodeId dst, int step)
    {
        heads_[a].id = 1000 + a;
        heads_[a].src = a;
        heads_[a].holder = a;
        heads_[a].dst = dst;
        heads_[a].step = step;
        has_[a] = 1;
    }
    void add_direct(NodeId a, NodeId d) { direct_[a].push_back(d); }
    const Message* head(NodeId a, int step) const override
    {
        return has_[a] && heads_[a].step == step ? &heads_[a] : nullptr;
    }
    bool has_direct(NodeId a, NodeId d) const override
    {
        return std::find(direct_[a].begin(), direct_[a].end(), d) != direct_[a].end();
    }
    std::span<const NodeId> direct_destinations(NodeId a) const override { return direct_[a]; }

private:
    std::vector<Message> heads_;
    std::vector<char> has_;
    std::vector<std::vector<NodeId>> direct_;
};

}  // namespace

TEST_CASE("squarelet areas")
{
    CHECK(squarelet_area(0, 0.5, std::ldexp(1.0, 20), 64.0, 1.0) == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(squarelet_area(2, 3.0, 4096, 4.0, 1.0) == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(squarelet_area(1, 2.0, std::exp(8.0), 2.0, 1.0) == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(squarelet_area(0, 2.0, std::exp(8.0), 2.0, 3.0) == doctest::Approx(24.0).epsilon(1e-12));
    // clamped to [1, n]
    CHECK(squarelet_area(0, 3.0, 4096, 1.0, 1.0) == 1.0);
    CHECK(squarelet_area(0, 0.0, 64, 1.0, 100.0) == 64.0);
}

TEST_CASE("i_max")
{
    CHECK(i_max(65536, 4) == 6);
    CHECK(i_max(65536, 256) == 0);
    CHECK(i_max(4096, 8) == 3);
    CHECK_THROWS(i_max(4096, 0.5));
    CHECK_THROWS(i_max(4096, 65));
}

TEST_CASE("slot distribution")
{
    auto eq = slot_distribution({3, 3, 3, 3});
    for (double p : eq) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
    auto p = slot_distribution({16, 8, 4, 2});
    CHECK(p[0] == doctest::Approx(16.0 / 30).epsilon(1e-15));
    CHECK(p[3] == doctest::Approx(2.0 / 30).epsilon(1e-15));

    for (int k : {0, 1, 4, 9}) {
        std::vector<double> a;
        for (int i = 0; i <= k; ++i) a.push_back(std::ldexp(5.0, -i));
        auto q = slot_distribution(a);
        double sum = 0.0;
        for (int i = 0; i <= k; ++i) {
            double expect = std::ldexp(1.0, -i) * 0.5 / (1.0 - std::ldexp(1.0, -(k + 1)));
            CHECK(q[i] == doctest::Approx(expect).epsilon(1e-13));
            sum += q[i];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK_THROWS(slot_distribution({}));
    CHECK_THROWS(slot_distribution({1, -1}));
}

TEST_CASE("phase pattern size")
{
    CHECK(phase_side(0.0) == 4);
    CHECK(phase_count(0.0) == 16);
    CHECK(phase_side(1.0) == 6);
    CHECK(phase_count(1.0) == 36);
    int prev = 0;
    for (int k = 0; k <= 40; ++k) {
        int m = phase_count(k * 0.1);
        CHECK(m >= prev);
        prev = m;
    }
    CHECK_THROWS(phase_count(-0.1));
}

TEST_CASE("step parameters")
{
    for (double delta : {0.0, 1.5, 2.0, 3.0}) {
        ScheduleConfig c;
        c.n = 4096;
        c.delta = delta;
        c.Z0 = delta < 1 ? std::pow(4096.0, 1.0 / 6) : std::sqrt(std::log(4096.0)) * 1.2;
        auto steps = build_step_params(c);
        REQUIRE(!steps.empty());
        double sum = 0.0, area_sum = 0.0;
        for (const auto& sp : steps) area_sum += sp.A_eff;
        for (const auto& sp : steps) {
            sum += sp.p_s;
            CHECK(sp.R == doctest::Approx(std::sqrt(2 * sp.A_eff)));
            CHECK(sp.cells_per_axis % sp.phase_side == 0);
            CHECK(sp.p_s == doctest::Approx(sp.A_eff / area_sum));
            CHECK(sp.A_eff == doctest::Approx(4096.0 / (sp.cells_per_axis * sp.cells_per_axis)));
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(static_cast<int>(steps.size()) - 1 == effective_max_step(4096, c.Z0));
    }
}

TEST_CASE("slot planner: step frequencies and round-robin phases")
{
    ScheduleConfig c;
    c.n = 4096;
    c.delta = 2.0;
    c.Z0 = std::sqrt(std::log(4096.0));
    auto steps = build_step_params(c);
    SlotPlanner planner(steps, Stream::derive(3, {kPlanStream}));
    const int T = 200000;
    std::vector<double> counts(steps.size(), 0.0);
    std::vector<std::vector<int>> phase_seq(steps.size());
    for (int t = 0; t < T; ++t) {
        SlotPlan p = planner.next();
        counts[p.step] += 1;
        phase_seq[p.step].push_back(p.phase);
    }
    std::vector<double> expct;
    for (const auto& sp : steps) expct.push_back(sp.p_s * T);
    CHECK(chi_square(counts, expct).p_value > 0.01);
    for (std::size_t s = 0; s < steps.size(); ++s) {
        int M = steps[s].phases;
        for (std::size_t k = 0; k < phase_seq[s].size(); ++k) REQUIRE(phase_seq[s][k] == static_cast<int>(k % M));
    }
}

TEST_CASE("pair selection inside one cell")
{
    TorusGeometry g(100.0);
    double Z0 = 4.0;
    // destination 0 at the center; 1 holds a step-2 message for 0; 2 and 3 have homes in the ring (Z0, 1.5 Z0)
    HomePoints homes{{50, 50}, {50 + 3 * Z0, 50}, {50 + 1.2 * Z0, 50}, {50, 50 + 1.3 * Z0}, {90, 90}};
    std::vector<TorusPoint> pos(homes.size(), TorusPoint{10, 10});
    WorldView w{&g, &homes, &pos, Z0};
    FixedQueues q(5);
    q.set_head(1, 0, 2);
    Stream rng = Stream::derive(1, {2});

    std::vector<NodeId> only_one{1, 2, 4};
    for (int k = 0; k < 100; ++k) {
        auto t = select_pair(only_one, {0, 0}, 2, w, q, rng);
        REQUIRE(t);
        REQUIRE(t->tx == 1);
        REQUIRE(t->rx == 2);
        REQUIRE(t->msg == 1001);
    }

    // head-of-line blocking: no co-resident relay in the ring means nothing is sent
    std::vector<NodeId> blocked{1, 4};
    CHECK_FALSE(select_pair(blocked, {0, 0}, 2, w, q, rng));
    // wrong step
    CHECK_FALSE(select_pair(only_one, {0, 0}, 1, w, q, rng));

    // k eligible pairs: uniform choice
    FixedQueues many(5);
    many.set_head(1, 0, 2);
    many.set_head(4, 0, 2);
    std::vector<NodeId> members{0, 1, 2, 3, 4};
    std::vector<std::pair<NodeId, NodeId>> pairs;
    eligible_pairs(members, 2, w, many, pairs);
    REQUIRE(pairs.size() == 4);
    std::map<std::pair<NodeId, NodeId>, int> index;
    for (std::size_t k = 0; k < pairs.size(); ++k) index[pairs[k]] = static_cast<int>(k);
    std::vector<double> obs(pairs.size(), 0.0);
    const int N = 100000;
    for (int k = 0; k < N; ++k) {
        auto t = select_pair(members, {0, 0}, 2, w, many, rng);
        REQUIRE(t);
        obs[index.at({t->tx, t->rx})] += 1;
    }
    CHECK(chi_square(obs, std::vector<double>(pairs.size(), double(N) / pairs.size())).p_value > 0.01);
    // step 0: only the destination receives, and only from a node whose home is within Z0 of its own
    // step 0: only the destination itself, and only when the homes are within Z0
    HomePoints near{{50, 50}, {53, 50}, {56, 50}};
    WorldView wn{&g, &near, &pos, Z0};
    FixedQueues d(3);
    d.add_direct(1, 0);
    d.add_direct(2, 0);
    std::vector<NodeId> cell{0, 1, 2};
    auto t = select_pair(cell, {0, 0}, 0, wn, d, rng);
    REQUIRE(t);
    CHECK(t->tx == 1);
    CHECK(t->rx == 0);
}

TEST_CASE("protocol check detects crafted violations")
{
    TorusGeometry g(100.0);
    std::vector<TorusPoint> pos{{10, 10}, {11, 10}, {12, 10}, {13, 10}, {60, 60}, {61, 60}};
    std::vector<Transmission> ok{{0, 1, 0, {}}, {4, 5, 0, {}}};
    CHECK(check_protocol(ok, pos, g, 1.5, 0.0).empty());
    std::vector<Transmission> close{{0, 1, 0, {}}, {2, 3, 0, {}}};
    CHECK_FALSE(check_protocol(close, pos, g, 1.5, 0.0).empty());
    std::vector<Transmission> too_long{{0, 3, 0, {}}};
    CHECK_FALSE(check_protocol(too_long, pos, g, 1.5, 0.0).empty());
    // wrap-around interference
    std::vector<TorusPoint> wp{{0.2, 50}, {1.0, 50}, {99.5, 50}, {98.9, 50}};
    std::vector<Transmission> wrapped{{0, 1, 0, {}}, {2, 3, 0, {}}};
    CHECK(check_protocol(wrapped, wp, g, 2.0, 0.0).size() == 2);
}

TEST_CASE("enabled transmissions respect the protocol model")
{
    std::int64_t checked = 0;
    for (double delta : {0.0, 2.0, 3.0}) {
        for (double guard : {0.0, 1.0}) {
            int n = 1024;
            TorusGeometry g = TorusGeometry::from_area(n);
            ScheduleConfig c;
            c.n = n;
            c.delta = delta;
            c.Z0 = delta < 1 ? std::pow(double(n), 1.0 / 6) : std::sqrt(std::log(double(n)));
            c.guard = guard;
            auto steps = build_step_params(c);
            Scheduler sched(g, steps, guard, true);
            Stream hr = Stream::derive(4, {kHomesStream});
            HomePoints homes = generate_homes(n, hr);
            MobilityShape shape(delta, g, 1024);
            std::vector<TorusPoint> pos(n);
            WorldView w{&g, &homes, &pos, c.Z0};
            Stream pr = Stream::derive(4, {kNodeStream});
            for (int s = 0; s < static_cast<int>(steps.size()); ++s) {
                Stream pick = Stream::derive(4, {kTrafficStream, static_cast<std::uint64_t>(s)});
                SaturatedQueues q(homes, g, c.Z0, s, pick);
                SlotPlanner planner(steps, Stream::derive(4, {kPlanStream}));
                for (int t = 0; t < 300; ++t) {
                    for (int v = 0; v < n; ++v) pos[v] = sample_position(homes[v], shape, pr);
                    SlotPlan plan = planner.next_for_step(s);
                    auto txs = sched.enabled_transmissions(plan, w, q, 4, t);
                    std::set<std::pair<int, int>> cells;
                    for (const auto& tx : txs) {
                        REQUIRE(cells.insert({tx.cell.cx, tx.cell.cy}).second);
                        REQUIRE(tx.cell.cx % steps[s].phase_side == plan.phase / steps[s].phase_side);
                        REQUIRE(tx.cell.cy % steps[s].phase_side == plan.phase % steps[s].phase_side);
                    }
                }
            }
            checked += static_cast<std::int64_t>(sched.transmissions_checked());
        }
    }
    CHECK(checked > 10000);

    // an empty network sends nothing
    TorusGeometry g = TorusGeometry::from_area(256);
    ScheduleConfig c;
    c.n = 256;
    c.delta = 2;
    c.Z0 = 2.5;
    Scheduler sched(g, build_step_params(c), 0.0, true);
    HomePoints homes(256);
    std::vector<TorusPoint> pos(256);
    WorldView w{&g, &homes, &pos, 2.5};
    FixedQueues none(256);
    CHECK(sched.enabled_transmissions({0, 0}, w, none, 1, 0).empty());
}
