#include <gtest/gtest.h>

#include <chrono>

#include "hpn/errors.hpp"
#include "hpn/evolution.hpp"
#include "support.hpp"

using namespace hpn;
using namespace hpn::evolution;
using hpn::test::Builder;
using hpn::test::R;

namespace {

HybridNet with_case(const std::vector<std::string>& p1, const std::vector<std::string>& p5) {
    return test::fixture_net()
        .with_timing(3, ExtRational(3))
        .with_timing(4, ExtRational(2))
        .with_timing(11, ExtRational(1))
        .with_timing(18, ExtRational(R(1, 2)))
        .with_policy_overrides({ConflictPolicy::priority("P1", p1), ConflictPolicy::priority("P5", p5)});
}

HybridNet case_a() { return with_case({"T15", "T4", "T5", "T6", "T16"}, {"T4", "T5", "T6"}); }
HybridNet case_b() { return with_case({"T15", "T5", "T4", "T6", "T16"}, {"T5", "T4", "T6"}); }
HybridNet case_c() { return with_case({"T15", "T5", "T6", "T4", "T16"}, {"T5", "T6", "T4"}); }

EvolveOptions deliver(Rational n = 1000) {
    EvolveOptions o;
    o.target = Target{"P4", n};
    return o;
}

void expect_well_formed(const HybridNet& net, const EvolutionGraph& g) {
    ASSERT_FALSE(g.phases.empty());
    EXPECT_EQ(g.phases.front().start, Rational(0));
    for (std::size_t k = 0; k < g.phases.size(); ++k) {
        const auto& ph = g.phases[k];
        Rational end = ph.duration ? ph.start + *ph.duration : g.end_time;
        for (std::size_t p = 0; p < net.place_count(); ++p) {
            EXPECT_GE(ph.marking[p], Rational(0));
            EXPECT_GE(ph.marking_at(p, end), Rational(0));
        }
        if (k + 1 < g.phases.size()) {
            ASSERT_TRUE(ph.duration.has_value());
            const auto& next = g.phases[k + 1];
            EXPECT_EQ(next.start, end);
            // only discrete firings at the boundary may move fluid
            std::vector<bool> touched(net.place_count(), false);
            for (const auto& e : g.events) {
                if (e.time != end || e.kind != EventKind::D1) continue;
                auto t = net.transition_index(e.subject);
                for (const auto& l : net.inputs(t)) touched[l.node] = true;
                for (const auto& l : net.outputs(t)) touched[l.node] = true;
            }
            for (std::size_t p = 0; p < net.place_count(); ++p) {
                if (!net.is_continuous_place(p) || touched[p]) continue;
                EXPECT_EQ(next.marking[p], ph.marking_at(p, end));
            }
        }
    }
}

}  // namespace

TEST(Evolve, FigureFourSinglePhase) {
    auto net = test::fixture_net();
    auto g = evolve(net, deliver());
    EXPECT_EQ(g.status, Status::TargetReached);
    ASSERT_EQ(g.phases.size(), 1u);
    EXPECT_EQ(g.completion_time, R(2000, 7));
    auto p4 = net.place_index("P4"), p5 = net.place_index("P5");
    EXPECT_EQ(g.phases[0].balances[p4], R(7, 2));
    EXPECT_EQ(g.phases[0].balances[p5], R(-7, 2));
    EXPECT_EQ(g.phases[0].marking_at(p5, Rational(100)), Rational(650));
    EXPECT_EQ(g.final_marking[p5], Rational(0));
    EXPECT_EQ(g.final_marking[p4], Rational(1000));
    expect_well_formed(net, g);
}

TEST(Evolve, CaseTotals) {
    struct Row {
        HybridNet net;
        Rational total;
        std::size_t phases;
        long rounded;
    };
    std::vector<Row> rows{{case_a(), R(6000, 7), 2, 857}, {case_b(), R(3000, 7), 2, 429}, {case_c(), R(2000, 7), 1, 286}};
    for (const auto& row : rows) {
        auto start = std::chrono::steady_clock::now();
        auto g = evolve(row.net, deliver());
        auto elapsed = std::chrono::steady_clock::now() - start;
        EXPECT_EQ(g.status, Status::TargetReached);
        EXPECT_EQ(g.completion_time, row.total);
        EXPECT_EQ(g.phases.size(), row.phases);
        EXPECT_NEAR(g.completion_time->to_double(), static_cast<double>(row.rounded), 1.0);
        EXPECT_LT(elapsed, std::chrono::seconds(1));
        expect_well_formed(row.net, g);
    }
}

TEST(Evolve, CaseAPhaseStructure) {
    auto net = case_a();
    auto g = evolve(net, deliver());
    ASSERT_EQ(g.phases.size(), 2u);
    auto p5 = net.place_index("P5"), p6 = net.place_index("P6");
    EXPECT_EQ(g.phases[0].balances[p6], Rational(2));
    EXPECT_EQ(*g.phases[0].duration, R(2000, 7));
    EXPECT_EQ(g.phases[1].marking[p5], Rational(0));
    EXPECT_LT(g.phases[1].balances[p6], Rational(0));
    bool c1_p5 = false;
    for (const auto& e : g.events)
        if (e.kind == EventKind::C1 && e.subject == "P5" && e.time == R(2000, 7)) c1_p5 = true;
    EXPECT_TRUE(c1_p5);
}

TEST(Evolve, Deterministic) {
    auto net = case_b();
    EXPECT_EQ(evolve(net, deliver()), evolve(net, deliver()));
}

TEST(ComputePhase, ZeroSpeedsAreOpenEnded) {
    Builder b;
    b.cplace("P").cplace("Q");
    b.ctrans("T", ExtRational(1));
    b.arc("P", "T").arc("T", "Q");
    auto net = b.build();
    auto ph = compute_phase(net, initial_state(net), net.policies());
    for (const auto& bal : ph.balances) EXPECT_EQ(bal, Rational(0));
    EXPECT_FALSE(ph.duration.has_value());
    EXPECT_FALSE(next_event(net, ph, initial_state(net).clocks).has_value());
    auto g = evolve(net);
    EXPECT_EQ(g.status, Status::Deadlock);
    EXPECT_EQ(g.phases.size(), 1u);
}

TEST(NextEvent, ContinuousEmptiesBeforeClock) {
    Builder b;
    b.cplace("P", 3).cplace("Q").dplace("D", 1);
    b.ctrans("T", ExtRational(1)).dtrans("X", R(5));
    b.arc("P", "T").arc("T", "Q").arc("D", "X").arc("X", "D");
    auto net = b.build();
    auto state = initial_state(net);
    ASSERT_TRUE(state.clocks.remaining[1].has_value());
    EXPECT_EQ(*state.clocks.remaining[1], ExtRational(5));
    auto ph = compute_phase(net, state, net.policies());
    auto boundary = next_event(net, ph, state.clocks);
    ASSERT_TRUE(boundary.has_value());
    EXPECT_EQ(boundary->time, Rational(3));
    ASSERT_EQ(boundary->events.size(), 1u);
    EXPECT_EQ(boundary->events[0].kind, EventKind::C1);
    EXPECT_EQ(boundary->events[0].subject, "P");
}

TEST(NextEvent, CaseStudyEmptiesSource) {
    auto net = test::fixture_net();
    auto state = initial_state(net);
    auto boundary = next_event(net, compute_phase(net, state, net.policies()), state.clocks);
    ASSERT_TRUE(boundary.has_value());
    EXPECT_EQ(boundary->time, R(2000, 7));
    EXPECT_EQ(boundary->events[0].subject, "P5");
}

TEST(NextEvent, SimultaneousEventsOrdered) {
    Builder b;
    b.cplace("P", 2).cplace("Q").dplace("D", 1).dplace("E");
    b.ctrans("T", ExtRational(1)).dtrans("X", R(2));
    b.arc("P", "T").arc("T", "Q").arc("D", "X").arc("X", "E");
    auto net = b.build();
    auto state = initial_state(net);
    auto boundary = next_event(net, compute_phase(net, state, net.policies()), state.clocks);
    ASSERT_TRUE(boundary.has_value());
    ASSERT_EQ(boundary->events.size(), 2u);
    EXPECT_EQ(boundary->events[0].kind, EventKind::D1);
    EXPECT_EQ(boundary->events[1].kind, EventKind::C1);
}

TEST(FireDiscrete, Rules) {
    Builder b;
    b.dplace("P", 1).dplace("Q").dplace("L", 1);
    b.dtrans("Move", R(1)).dtrans("Loop", R(1));
    b.arc("P", "Move").arc("Move", "Q").arc("L", "Loop").arc("Loop", "L");
    auto net = b.build();
    auto m = fire_discrete(net, net.initial_marking(), 0);
    EXPECT_EQ(m[0], Rational(0));
    EXPECT_EQ(m[1], Rational(1));
    EXPECT_EQ(fire_discrete(net, net.initial_marking(), 1), net.initial_marking());
    EXPECT_THROW((void)fire_discrete(net, m, 0), ContractViolation);
}

TEST(Evolve, AvailabilityToggleFiresAtDelay) {
    // A gates the single connection T; X takes the token away after 10.
    Builder b;
    b.cplace("S", 100).cplace("D").dplace("A", 1);
    b.ctrans("T", ExtRational(2)).dtrans("X", R(10));
    b.arc("S", "T").arc("T", "D").arc("A", "T").arc("T", "A").arc("A", "X");
    auto net = b.build();
    auto g = evolve(net);
    ASSERT_EQ(g.phases.size(), 2u);
    EXPECT_EQ(g.phases[0].speeds[0], Rational(2));
    EXPECT_EQ(*g.phases[0].duration, Rational(10));
    EXPECT_EQ(g.phases[1].speeds[0], Rational(0));
    EXPECT_EQ(g.phases[1].discrete_degrees[0], 0);
    std::vector<Event> d1;
    for (const auto& e : g.events)
        if (e.kind == EventKind::D1) d1.push_back(e);
    ASSERT_EQ(d1.size(), 1u);
    EXPECT_EQ(d1[0].subject, "X");
    EXPECT_EQ(d1[0].time, Rational(10));
    EXPECT_EQ(g.status, Status::Deadlock);
    EXPECT_EQ(g.final_marking[1], Rational(20));
    expect_well_formed(net, g);
}

TEST(Evolve, FluidCrossingEnablesDiscreteTransition) {
    Builder b;
    b.cplace("P").dplace("Out");
    b.ctrans("Fill", ExtRational(1)).dtrans("X", R(1));
    b.arc("Fill", "P").arc("P", "X", 2).arc("X", "Out");
    auto net = b.build();
    EvolveOptions o;
    o.horizon = Rational(5, 2);
    auto g = evolve(net, o);
    EXPECT_EQ(g.status, Status::HorizonReached);
    bool d2 = false, d1 = false;
    for (const auto& e : g.events) {
        if (e.kind == EventKind::D2 && e.subject == "X" && e.time == Rational(2)) d2 = true;
        if (e.kind == EventKind::D1 && e.subject == "X" && e.time == Rational(3)) d1 = true;
    }
    EXPECT_TRUE(d2);
    EXPECT_FALSE(d1);
    o.horizon = Rational(7, 2);
    g = evolve(net, o);
    for (const auto& e : g.events)
        if (e.kind == EventKind::D1 && e.subject == "X") {
            EXPECT_EQ(e.time, Rational(3));
            d1 = true;
        }
    EXPECT_TRUE(d1);
    EXPECT_EQ(g.final_marking[net.place_index("Out")], Rational(1));
    EXPECT_EQ(g.final_marking[net.place_index("P")], R(3, 2));
    expect_well_formed(net, g);
}

TEST(Evolve, HorizonStopsRun) {
    Builder b;
    b.cplace("P");
    b.ctrans("Fill", ExtRational(R(1, 3)));
    b.arc("Fill", "P");
    auto net = b.build();
    EvolveOptions o;
    o.horizon = Rational(9);
    auto g = evolve(net, o);
    EXPECT_EQ(g.status, Status::HorizonReached);
    EXPECT_EQ(g.end_time, Rational(9));
    EXPECT_EQ(g.final_marking[0], Rational(3));
    EXPECT_FALSE(g.completion_time.has_value());
}

TEST(Evolve, TargetSolvedInsidePhase) {
    Builder b;
    b.cplace("P");
    b.ctrans("Fill", ExtRational(R(2, 3)));
    b.arc("Fill", "P");
    auto net = b.build();
    EvolveOptions o;
    o.target = Target{"P", Rational(5)};
    auto g = evolve(net, o);
    EXPECT_EQ(g.status, Status::TargetReached);
    EXPECT_EQ(g.completion_time, R(15, 2));
}

TEST(Evolve, PhaseCapIsAnError) {
    Builder b;
    b.dplace("L", 1);
    b.dtrans("Tick", R(1));
    b.arc("L", "Tick").arc("Tick", "L");
    auto net = b.build();
    EvolveOptions o;
    o.phase_cap = 5;
    auto g = evolve(net, o);
    EXPECT_EQ(g.status, Status::Error);
    EXPECT_NE(g.detail.find("phase cap"), std::string::npos);
}

TEST(Evolve, ZeroDelayLoopIsAnError) {
    Builder b;
    b.dplace("A", 1).dplace("B");
    b.dtrans("X", R(0)).dtrans("Y", R(0));
    b.arc("A", "X").arc("X", "B").arc("B", "Y").arc("Y", "A");
    auto g = evolve(b.build());
    EXPECT_EQ(g.status, Status::Error);
}

TEST(Evolve, SolverErrorsNamePhase) {
    Builder b;
    b.cplace("P").cplace("Q");
    b.ctrans("Ts", ExtRational(1)).ctrans("A", ExtRational(1)).ctrans("B", ExtRational(1));
    b.arc("Ts", "P").arc("P", "A").arc("P", "B").arc("A", "Q").arc("B", "Q");
    try {
        (void)evolve(b.build());
        FAIL() << "expected UnresolvedConflict";
    } catch (const UnresolvedConflict& e) {
        EXPECT_EQ(std::string(e.what()).rfind("phase 0", 0), 0u) << e.what();
    }
}

TEST(Evolve, RejectsInvalidNet) {
    Builder b;
    b.cplace("P", -1);
    b.ctrans("T", ExtRational(1));
    b.arc("P", "T");
    EXPECT_THROW((void)evolve(b.build()), ValidationError);
}

TEST(Sampling, MarkingAtAndSample) {
    auto net = case_a();
    auto g = evolve(net, deliver());
    auto p4 = net.place_index("P4");
    EXPECT_EQ(marking_at(g, Rational(0))[p4], Rational(0));
    EXPECT_EQ(marking_at(g, *g.completion_time)[p4], Rational(1000));
    auto samples = sample(g, Rational(100));
    ASSERT_EQ(samples.size(), 9u);
    EXPECT_EQ(samples[1].first, Rational(100));
    for (std::size_t i = 1; i < samples.size(); ++i) EXPECT_GE(samples[i].second[p4], samples[i - 1].second[p4]);
}
