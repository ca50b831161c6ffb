#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "hpn/errors.hpp"
#include "hpn/formats.hpp"
#include "hpn/store.hpp"
#include "support.hpp"

using namespace hpn;
using namespace hpn::store;
using hpn::test::Builder;
using hpn::test::R;
using hpn::test::TempDir;

namespace {

// X -> ta -> Y
HybridNet chain(const std::string& in, const std::string& t, const std::string& out, Rational m_in = 0) {
    Builder b;
    b.cplace(in, m_in).cplace(out);
    b.ctrans(t, ExtRational(1));
    b.arc(in, t).arc(t, out);
    return b.build();
}

FusionMap fuse_places(std::vector<std::pair<std::string, std::string>> pairs) {
    FusionMap f;
    f.places = std::move(pairs);
    return f;
}

std::string composition_error(const HybridNet& a, const HybridNet& b, const FusionMap& f) {
    try {
        (void)compose(a, b, f);
    } catch (const CompositionError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Repository, PutGetList) {
    TempDir dir;
    ModelRepository repo(dir.path());
    auto net = test::fixture_net();
    auto id = repo.put(net, "case-study");
    EXPECT_EQ(id, "case-study@1");
    EXPECT_EQ(repo.get(id), net);
    EXPECT_EQ(repo.put(net, "case-study"), "case-study@2");
    EXPECT_EQ(repo.put(test::fixture_net("relay.hpn.json"), "relay"), "relay@1");

    auto models = repo.list();
    ASSERT_EQ(models.size(), 3u);
    EXPECT_EQ(models[0].hash, sha256_hex(save_net(net)));
    EXPECT_EQ(models[0].hash, models[1].hash);
    EXPECT_EQ(repo.get(models[0].hash), net);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "models" / (models[0].hash + ".hpn.json")));
    EXPECT_EQ(test::read_file(dir.path() / "models" / (models[0].hash + ".hpn.json")), save_net(net));

    EXPECT_THROW((void)repo.get("nope@1"), NotFound);
    EXPECT_THROW((void)repo.put(net, "bad@name"), ContractViolation);
    Builder invalid;
    invalid.cplace("P", -1).ctrans("T", ExtRational(1)).arc("P", "T");
    EXPECT_THROW((void)repo.put(invalid.build(), "x"), ValidationError);
}

TEST(Repository, SurvivesReopen) {
    TempDir dir;
    std::string model_id, run_id;
    auto net = test::fixture_net();
    auto s = test::fixture_scenario("case_b.json");
    auto result = dss::run_scenario(net, s, s.name);
    {
        ModelRepository repo(dir.path());
        model_id = repo.put(net, "cs");
        run_id = repo.append_history(net, result);
    }
    ModelRepository reopened(dir.path());
    EXPECT_EQ(reopened.get(model_id), net);
    auto index = reopened.history_index();
    ASSERT_EQ(index.size(), 1u);
    EXPECT_EQ(index[0].id, run_id);
    EXPECT_EQ(index[0].label, "case B");
    auto entry = reopened.history_entry(run_id);
    EXPECT_EQ(entry.result, result);
    EXPECT_EQ(entry.label, "case B");
    EXPECT_NE(run_id.find("case-b"), std::string::npos) << run_id;
    EXPECT_THROW((void)reopened.history_entry("missing"), NotFound);
}

TEST(Repository, HistoryComparisonAcrossRuns) {
    TempDir dir;
    ModelRepository repo(dir.path());
    auto net = test::fixture_net();
    std::vector<std::string> ids;
    for (const char* c : {"a", "b", "c"}) {
        auto s = test::fixture_scenario(std::string("case_") + c + ".json");
        ids.push_back(repo.append_history(net, dss::run_scenario(net, s, s.name)));
    }
    std::set<std::string> unique(ids.begin(), ids.end());
    EXPECT_EQ(unique.size(), 3u);
    auto rows = dss::compare_runs(repo.load_history(), ids);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].label, "case C");
    EXPECT_EQ(rows[1].label, "case B");
    EXPECT_EQ(rows[2].label, "case A");
}

TEST(Repository, DuplicateLabelsGetDistinctIds) {
    TempDir dir;
    ModelRepository repo(dir.path());
    auto net = test::fixture_net();
    auto s = test::fixture_scenario("case_c.json");
    auto r = dss::run_scenario(net, s, s.name);
    auto a = repo.append_history(net, r);
    auto b = repo.append_history(net, r);
    EXPECT_NE(a, b);
    EXPECT_EQ(repo.history_index().size(), 2u);
}

TEST(Repository, ConcurrentAppendsAreSerialized) {
    TempDir dir;
    auto net = test::fixture_net();
    auto s = test::fixture_scenario("case_c.json");
    auto r = dss::run_scenario(net, s, s.name);
    std::vector<std::thread> threads;
    for (int i = 0; i < 4; ++i)
        threads.emplace_back([&] {
            ModelRepository repo(dir.path());
            for (int k = 0; k < 3; ++k) (void)repo.append_history(net, r);
        });
    for (auto& t : threads) t.join();
    ModelRepository repo(dir.path());
    auto index = repo.history_index();
    EXPECT_EQ(index.size(), 12u);
    std::set<std::string> ids;
    for (const auto& h : index) ids.insert(h.id);
    EXPECT_EQ(ids.size(), 12u);
}

TEST(Compose, RelayFixture) {
    auto a = test::fixture_net("relay_a.hpn.json");
    auto b = test::fixture_net("relay_b.hpn.json");
    auto f = load_fusion(test::read_file(test::fixture_path("relay_fusion.json")));
    auto c = compose(a, b, f);
    EXPECT_EQ(c.place_count(), 5u);
    EXPECT_EQ(c.transition_count(), 7u);
    EXPECT_TRUE(validate(c).ok());
    EXPECT_EQ(c, test::fixture_net("relay.hpn.json"));
    auto r = c.place_index("R");
    EXPECT_EQ(c.producers(r).size(), 1u);
    EXPECT_EQ(c.consumers(r).size(), 1u);
}

TEST(Compose, CollidingIdsArePrefixed) {
    auto a = chain("X", "t", "Y");
    auto b = chain("Y", "t", "X");
    auto c = compose(a, b, fuse_places({{"Y", "Y"}}));
    EXPECT_TRUE(c.find_place("b.X").has_value());
    EXPECT_TRUE(c.find_transition("b.t").has_value());
    EXPECT_EQ(c.place_count(), 3u);
}

TEST(Compose, TransitionFusion) {
    auto a = chain("X", "t", "Y");
    auto b = chain("U", "t", "V");
    FusionMap f;
    f.transitions = {{"t", "t"}};
    auto c = compose(a, b, f);
    EXPECT_EQ(c.transition_count(), 1u);
    EXPECT_EQ(c.inputs(0).size(), 2u);
    EXPECT_EQ(c.outputs(0).size(), 2u);
}

TEST(Compose, Mismatches) {
    auto a = chain("X", "t", "Y");

    Builder discrete;
    discrete.dplace("Y").dtrans("d", R(1)).arc("Y", "d");
    EXPECT_NE(composition_error(a, discrete.build(), fuse_places({{"Y", "Y"}})).find("kind"), std::string::npos);

    auto marked = chain("Y", "u", "Z", 5);
    EXPECT_NE(composition_error(a, marked, fuse_places({{"Y", "Y"}})).find("marking"), std::string::npos);

    Builder fast;
    fast.cplace("X").cplace("Y").ctrans("t", ExtRational(2)).arc("X", "t").arc("t", "Y");
    FusionMap ft;
    ft.transitions = {{"t", "t"}};
    EXPECT_NE(composition_error(a, fast.build(), ft).find("timing"), std::string::npos);

    Builder heavy;
    heavy.cplace("X").cplace("Y").ctrans("t", ExtRational(1)).arc("X", "t", 2).arc("t", "Y");
    FusionMap all = fuse_places({{"X", "X"}, {"Y", "Y"}});
    all.transitions = {{"t", "t"}};
    EXPECT_NE(composition_error(a, heavy.build(), all).find("conflicting weights"), std::string::npos);

    EXPECT_FALSE(composition_error(a, chain("Q", "u", "R"), fuse_places({{"nope", "Q"}})).empty());
}

TEST(Compose, FusedPolicyMustBeRedeclared) {
    // both sides resolve a conflict at the shared place S
    auto side = [](const std::string& t1, const std::string& t2) {
        Builder b;
        b.cplace("S", 10).cplace("D");
        b.ctrans(t1, ExtRational(1)).ctrans(t2, ExtRational(1));
        b.arc("S", t1).arc("S", t2).arc(t1, "D").arc(t2, "D");
        b.policy(ConflictPolicy::priority("S", {t1, t2}));
        return b.build();
    };
    auto a = side("a1", "a2");
    auto b = side("b1", "b2");
    auto f = fuse_places({{"S", "S"}, {"D", "D"}});
    EXPECT_NE(composition_error(a, b, f).find("policy"), std::string::npos);

    f.policies.push_back(ConflictPolicy::priority("S", {"b1", "a1", "a2", "b2"}));
    auto c = compose(a, b, f);
    EXPECT_EQ(c.policy_for(c.place_index("S"))->order(), (std::vector<std::string>{"b1", "a1", "a2", "b2"}));

    FusionMap stray = fuse_places({{"D", "D"}});
    stray.policies.push_back(ConflictPolicy::priority("S", {"a1", "a2"}));
    EXPECT_FALSE(composition_error(a, side("c1", "c2"), stray).empty());
}

TEST(Compose, InvalidResultIsRejected) {
    // fused X gains a second continuous consumer and no policy covers it
    auto a = chain("X", "t", "Y", 1);
    auto b = chain("X", "u", "Z", 1);
    EXPECT_NE(composition_error(a, b, fuse_places({{"X", "X"}})).find("invalid"), std::string::npos);
}

TEST(Compose, Associative) {
    auto a = chain("X", "ta", "Y");
    auto b = chain("Y", "tb", "Z");
    auto c = chain("Z", "tc", "W");
    auto left = compose(compose(a, b, fuse_places({{"Y", "Y"}})), c, fuse_places({{"Z", "Z"}}));
    auto right = compose(a, compose(b, c, fuse_places({{"Z", "Z"}})), fuse_places({{"Y", "Y"}}));
    EXPECT_EQ(left, right);
    EXPECT_EQ(save_net(left), save_net(right));

    auto ra = test::fixture_net("relay_a.hpn.json");
    auto rb = test::fixture_net("relay_b.hpn.json");
    auto tail = chain("D", "te", "E");
    auto f = load_fusion(test::read_file(test::fixture_path("relay_fusion.json")));
    auto l2 = compose(compose(ra, rb, f), tail, fuse_places({{"D", "D"}}));
    auto r2 = compose(ra, compose(rb, tail, fuse_places({{"D", "D"}})), f);
    EXPECT_EQ(save_net(l2), save_net(r2));
}

TEST(FusionFile, RoundTrip) {
    auto text = test::read_file(test::fixture_path("relay_fusion.json"));
    auto f = load_fusion(text);
    EXPECT_EQ(save_fusion(f), text);
    f.policies.push_back(ConflictPolicy::sharing("R", {{"x", R(1, 2)}}));
    f.transitions = {{"p", "q"}};
    f.prefix = "right.";
    auto again = load_fusion(save_fusion(f));
    EXPECT_EQ(again.policies, f.policies);
    EXPECT_EQ(again.transitions, f.transitions);
    EXPECT_EQ(again.prefix, "right.");
    EXPECT_THROW((void)load_fusion(R"({"places":[{"a":"X"}]})"), ParseError);
    EXPECT_THROW((void)load_fusion(R"({"bogus":[]})"), ParseError);
}
