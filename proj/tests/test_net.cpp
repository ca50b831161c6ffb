#include <gtest/gtest.h>

#include "hpn/errors.hpp"
#include "hpn/json_io.hpp"
#include "hpn/net.hpp"
#include "support.hpp"

using namespace hpn;
using hpn::test::Builder;
using hpn::test::R;

namespace {

// P -> T1 -> Q continuous; D <-> TD discrete self loop; D gates T1.
Builder valid_base() {
    Builder b;
    b.cplace("P", 10).cplace("Q").dplace("D", 1);
    b.ctrans("T1", ExtRational(2)).dtrans("TD", R(1));
    b.arc("P", "T1").arc("T1", "Q").arc("D", "T1").arc("T1", "D");
    b.arc("D", "TD").arc("TD", "D");
    return b;
}

void expect_violation(const HybridNet& net, const std::string& code) {
    auto report = validate(net);
    EXPECT_TRUE(report.has(code)) << "expected " << code << ", got: " << report.summary();
    EXPECT_THROW(require_valid(net), ValidationError);
}

}  // namespace

TEST(Validate, BaseNetIsValid) {
    auto report = validate(valid_base().build());
    EXPECT_TRUE(report.ok()) << report.summary();
}

TEST(Validate, CaseStudyFixtureIsValid) {
    auto net = test::fixture_net();
    EXPECT_EQ(net.place_count(), 19u);
    EXPECT_EQ(net.transition_count(), 19u);
    EXPECT_TRUE(validate(net).ok()) << validate(net).summary();
}

TEST(Validate, EmptyNet) {
    NetParts parts;
    auto report = validate(HybridNet(parts));
    EXPECT_TRUE(report.has("no-places"));
    EXPECT_TRUE(report.has("no-transitions"));
}

TEST(Validate, IdProblems) {
    auto b = valid_base();
    b.parts().places.push_back(Place{"", NodeKind::Continuous, {}});
    expect_violation(b.build(), "empty-id");

    auto c = valid_base();
    c.ctrans("P", ExtRational(1));
    expect_violation(c.build(), "duplicate-id");
}

TEST(Validate, ArcProblems) {
    expect_violation(valid_base().arc("X", "T1").build(), "unknown-node");
    expect_violation(valid_base().arc("P", "Q").build(), "arc-direction");
    expect_violation(valid_base().arc("P", "T1").build(), "duplicate-arc");
    expect_violation(valid_base().arc("T1", "P", R(-1)).build(), "negative-weight");

    auto b = valid_base();
    b.parts().arcs[4].weight = R(1, 2);
    expect_violation(b.build(), "non-integer-weight");
}

TEST(Validate, DiscreteLoopAroundContinuousTransition) {
    auto b = valid_base();
    b.parts().arcs[3].weight = R(2);  // T1 -> D
    expect_violation(b.build(), "loop-mismatch");
}

TEST(Validate, MarkingProblems) {
    expect_violation(valid_base().mark("Z", 1).build(), "unknown-marking");
    auto dup = valid_base();
    dup.parts().initial_marking.emplace_back("P", R(1));
    expect_violation(dup.build(), "duplicate-marking");
    expect_violation(valid_base().mark("P", -1).build(), "negative-marking");
    expect_violation(valid_base().mark("D", R(1, 2)).build(), "non-integer-marking");
}

TEST(Validate, TimingProblems) {
    auto neg = valid_base();
    neg.parts().transitions[1].timing = ExtRational(-1);
    expect_violation(neg.build(), "bad-timing");

    auto zero = valid_base();
    zero.parts().transitions[0].timing = ExtRational(0);
    expect_violation(zero.build(), "bad-timing");

    auto effect = valid_base();
    effect.parts().transitions[1].on_fire.push_back(RateAssignment{"TD", ExtRational(1)});
    expect_violation(effect.build(), "bad-rate-effect");

    auto negative_rate = valid_base();
    negative_rate.parts().transitions[1].on_fire.push_back(RateAssignment{"T1", ExtRational(-1)});
    expect_violation(negative_rate.build(), "bad-rate-effect");

    auto on_continuous = valid_base();
    on_continuous.parts().transitions[0].on_fire.push_back(RateAssignment{"T1", ExtRational(1)});
    expect_violation(on_continuous.build(), "bad-rate-effect");
}

TEST(Validate, PolicyProblems) {
    auto conflict = [] {
        auto b = valid_base();
        b.ctrans("T2", ExtRational(1)).arc("P", "T2").arc("T2", "Q");
        return b;
    };
    expect_violation(conflict().build(), "missing-conflict-policy");
    EXPECT_TRUE(validate(conflict().policy(ConflictPolicy::priority("P", {"T1", "T2"})).build()).ok());

    expect_violation(conflict().policy(ConflictPolicy::priority("Z", {"T1"})).build(), "policy-unknown-place");
    expect_violation(conflict()
                         .policy(ConflictPolicy::priority("P", {"T1", "T2"}))
                         .policy(ConflictPolicy::priority("P", {"T2", "T1"}))
                         .build(),
                     "policy-duplicate-place");
    expect_violation(conflict().policy(ConflictPolicy::grouped("P", {{{"T1"}, {"T2"}}, {}})).build(),
                     "policy-empty-group");
    expect_violation(conflict().policy(ConflictPolicy::priority("P", {"T1", "T2", "TD"})).build(),
                     "policy-not-output");
    expect_violation(conflict().policy(ConflictPolicy::priority("P", {"T1", "T2", "T1"})).build(),
                     "policy-duplicate-member");
    expect_violation(conflict().policy(ConflictPolicy::sharing("P", {{"T1", R(1)}, {"T2", R(0)}})).build(),
                     "policy-weight");
    expect_violation(valid_base().policy(ConflictPolicy::grouped("Q", {})).build(), "policy-empty");
}

TEST(Validate, ViolationsAreDataNotExceptions) {
    auto b = valid_base();
    b.arc("X", "Y").mark("P", -1);
    ValidationReport report;
    EXPECT_NO_THROW(report = validate(b.build()));
    EXPECT_GE(report.violations.size(), 2u);
    for (const auto& v : report.violations) EXPECT_FALSE(v.subject.empty());
}

TEST(StructuralConflicts, FourCases) {
    Builder b;
    b.dplace("D1", 1).cplace("C", 1).dplace("D2", 1).cplace("M", 1);
    b.dtrans("a", R(1)).dtrans("b", R(1));
    b.arc("D1", "a").arc("D1", "b");
    b.ctrans("c1", ExtRational(1)).ctrans("c2", ExtRational(1));
    b.arc("C", "c1").arc("C", "c2");
    b.ctrans("e1", ExtRational(1)).ctrans("e2", ExtRational(1));
    b.arc("D2", "e1").arc("e1", "D2").arc("D2", "e2").arc("e2", "D2");
    b.dtrans("f", R(1)).ctrans("g", ExtRational(1));
    b.arc("M", "f").arc("M", "g");
    auto conflicts = structural_conflicts(b.build());
    ASSERT_EQ(conflicts.size(), 4u);
    EXPECT_EQ(conflicts[0].place, "D1");
    EXPECT_EQ(conflicts[0].conflict_case, 1);
    EXPECT_EQ(conflicts[1].conflict_case, 2);
    EXPECT_EQ(conflicts[2].conflict_case, 4);
    EXPECT_EQ(conflicts[3].conflict_case, 3);
    EXPECT_EQ(conflicts[3].transitions, (std::vector<std::string>{"f", "g"}));
}

TEST(Net, AdjacencyAndLookups) {
    auto net = valid_base().build();
    auto p = net.place_index("P");
    auto t1 = net.transition_index("T1");
    EXPECT_EQ(net.pre(p, t1), R(1));
    EXPECT_EQ(net.post(net.place_index("Q"), t1), R(1));
    EXPECT_EQ(net.consumers(p).size(), 1u);
    EXPECT_THROW((void)net.place_index("nope"), NotFound);
    EXPECT_THROW((void)net.transition_index("nope"), NotFound);
    EXPECT_EQ(net.initial_marking()[p], R(10));
}

TEST(Net, WithCopiesLeaveOriginalUntouched) {
    auto net = valid_base().build();
    auto copy = net;
    auto retimed = net.with_timing(0, ExtRational(R(7, 2)));
    EXPECT_EQ(net, copy);
    EXPECT_EQ(retimed.transition(0).timing, ExtRational(R(7, 2)));
    Marking m = net.initial_marking();
    m[0] = R(3);
    EXPECT_EQ(net.with_initial_marking(m).initial_marking()[0], R(3));
    EXPECT_EQ(net, copy);
}

TEST(NetFile, RoundTripIsBitExact) {
    for (const char* name : {"case_study.hpn.json", "relay_a.hpn.json", "relay_b.hpn.json", "relay.hpn.json"}) {
        std::string first = save_net(test::fixture_net(name));
        HybridNet reloaded = load_net(first);
        EXPECT_EQ(reloaded, test::fixture_net(name)) << name;
        EXPECT_EQ(save_net(reloaded), first) << name;
    }
}

TEST(NetFile, CodeBuiltNetRoundTrips) {
    auto b = valid_base();
    b.parts().transitions[1].on_fire.push_back(RateAssignment{"T1", ExtRational::infinity()});
    b.ctrans("T2", ExtRational::infinity(), TransitionRole::LowPriorityDrain).arc("P", "T2");
    b.policy(ConflictPolicy::grouped("P", {{{"T1", R(2)}}, {{"T2", R(1)}}}));
    auto net = b.build();
    ASSERT_TRUE(validate(net).ok()) << validate(net).summary();
    auto text = save_net(net);
    EXPECT_EQ(load_net(text), net);
    EXPECT_EQ(save_net(load_net(text)), text);
}

TEST(NetFile, ParseErrorsCarryContext) {
    try {
        (void)load_net("{\n  \"places\": [\n    {\"id\": \"P\",, }\n  ]\n}");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    try {
        (void)load_net(R"({"places":[{"id":"P","kind":"fluid"}],"transitions":[],"arcs":[]})");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("places[0]"), std::string::npos) << e.what();
    }
    EXPECT_THROW((void)load_net(R"({"places":[],"bogus":1})"), ParseError);
    EXPECT_THROW((void)load_net(""), ParseError);
}

TEST(NetFile, SaveRejectsInvalidNet) {
    EXPECT_THROW((void)save_net(valid_base().mark("P", -1).build()), ValidationError);
}
