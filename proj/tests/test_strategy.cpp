#include "doctest.h"

#include <numeric>

#include "ibis/fixtures.hpp"
#include "ibis/strategy.hpp"

using namespace ibis;

TEST_CASE("uniform enumeration: counts follow the per-block product") {
    Icgs m = load_fixture("fig1");

    // agent 2: blocks {q1,q2} (idle), {q3..q6} (pub/np), q0 (pub/np), q7, q8 (idle)
    Coalition two = m.coalition_from_names({"2"});
    StrategyEnumerator en = StrategyEnumerator::all_states(m, two);
    CHECK(en.count() == 4);
    size_t n = 0;
    std::set<std::string> distinct;
    while (auto s = en.next()) {
        ++n;
        std::string sig;
        for (const auto& p : s->pieces) sig += std::to_string(p.block) + ":" + std::to_string(p.action) + ";";
        distinct.insert(sig);
    }
    CHECK(n == 4);
    CHECK(distinct.size() == 4);  // no duplicates

    // one action everywhere
    Coalition one = m.coalition_from_names({"1"});
    Icgs g6 = load_fixture("fig5_g6");
    StrategyEnumerator single(g6, {}, {});
    (void)one;

    // the empty coalition has exactly one (empty) strategy
    StrategyEnumerator empty_en = StrategyEnumerator::all_states(m, {});
    CHECK(empty_en.count() == 1);
    int count = 0;
    while (auto s = empty_en.next()) {
        ++count;
        CHECK(s->pieces.empty());
    }
    CHECK(count == 1);
}

TEST_CASE("partial strategies on a sub-domain") {
    // the four-state uncertainty core: agent 1 blocks {q1,q2},{q3,q4},
    // agent 2 blocks {q1},{q2,q3},{q4}, three actions each
    Icgs g3 = load_fixture("fig4_g3");
    Coalition ag = g3.coalition_from_names({"1", "2"});
    std::vector<StateId> domain{
        g3.state_or_throw("q1"), g3.state_or_throw("q2"),
        g3.state_or_throw("q3"), g3.state_or_throw("q4")};
    auto all = partial_strategies(g3, ag, domain);
    CHECK(all.size() == 243);  // 3^2 agent-1 pieces times 3^3 agent-2 pieces

    // singleton domain with three enabled actions
    auto singleton = partial_strategies(g3, g3.coalition_from_names({"1"}),
                                        {g3.state_or_throw("qtop")});
    CHECK(singleton.size() == 3);
}

TEST_CASE("successors under a strategy") {
    Icgs m = load_fixture("fig1");
    Coalition one = m.coalition_from_names({"1"});

    // fix flip at q1's block
    std::vector<StateId> dom{m.state_or_throw("q1")};
    auto strategies = partial_strategies(m, one, dom);
    bool saw_flip = false;
    for (const auto& s : strategies) {
        if (m.actions[s.pieces[0].action] == "flip") {
            saw_flip = true;
            auto succ = succ_under(m, dom[0], s);
            REQUIRE(succ.size() == 1);
            CHECK(m.state_names[succ[0]] == "q4");
        }
    }
    CHECK(saw_flip);

    // full-coalition strategy on a deterministic model gives singletons
    Icgs g3 = load_fixture("fig4_g3");
    Coalition ag = g3.coalition_from_names({"1", "2"});
    StrategyEnumerator en = StrategyEnumerator::all_states(g3, ag);
    while (auto s = en.next()) {
        for (StateId q = 0; q < g3.n_states(); ++q) CHECK(succ_under(g3, q, *s).size() == 1);
        break;
    }

    // outside the domain
    auto s0 = partial_strategies(m, one, dom).front();
    CHECK_THROWS_AS((void)succ_under(m, m.state_or_throw("q2"), s0), Error);
}

TEST_CASE("joint successor set over a whole uncertainty core") {
    Icgs g3 = load_fixture("fig4_g3");
    Coalition ag = g3.coalition_from_names({"1", "2"});
    std::vector<StateId> domain{
        g3.state_or_throw("q1"), g3.state_or_throw("q2"),
        g3.state_or_throw("q3"), g3.state_or_throw("q4")};
    // everyone plays (a, x): every state of the core reaches the goal
    PartialStrategy s;
    s.coalition = ag;
    s.domain = domain;
    std::sort(s.domain.begin(), s.domain.end());
    for (AgentId i : ag) {
        std::set<uint32_t> blocks;
        for (StateId q : domain) blocks.insert(g3.block_of(i, q));
        for (uint32_t b : blocks)
            s.pieces.push_back({i, b, *g3.find_action(i == 0 ? "a" : "x")});
    }
    std::sort(s.pieces.begin(), s.pieces.end(), [](const auto& a, const auto& b) {
        return std::tie(a.agent, a.block) < std::tie(b.agent, b.block);
    });
    auto succ = succ_set(g3, s);
    REQUIRE(succ.size() == 1);
    CHECK(g3.state_names[succ[0]] == "qtop");
}

TEST_CASE("pruning keeps the state set and seriality") {
    Icgs m = load_fixture("fig1");
    Coalition two = m.coalition_from_names({"2"});
    StrategyEnumerator en = StrategyEnumerator::all_states(m, two);
    while (auto s = en.next()) {
        Icgs pruned = materialize_pruned(m, *s);
        CHECK(pruned.n_states() == m.n_states());
        for (StateId q = 0; q < pruned.n_states(); ++q) {
            CHECK(pruned.edges_of(q).size() >= 1);
            for (const auto& e : pruned.edges_of(q)) {
                CHECK(s->compatible(m, q, e.joint));
                CHECK(m.joint_enabled(q, e.joint));
            }
        }
        // the official refusing to publish pins the middle states in place
        if (m.actions[s->action_of(m, 1, m.state_or_throw("q3")).value()] == "np") {
            for (const char* name : {"q3", "q4", "q5", "q6"}) {
                StateId q = m.state_or_throw(name);
                auto es = pruned.edges_of(q);
                REQUIRE(es.size() == 1);
                CHECK(es[0].to == q);
            }
        }
    }
}

TEST_CASE("single-action models prune to themselves") {
    ModelDoc doc;
    doc.agents = {"1"};
    doc.actions = {"a"};
    doc.states = {{"s0", {}}, {"s1", {}}};
    doc.initial = "s0";
    doc.protocol["1"]["s0"] = {"a"};
    doc.protocol["1"]["s1"] = {"a"};
    doc.transitions = {{"s0", {"a"}, "s1"}, {"s1", {"a"}, "s0"}};
    Icgs m = compile(doc);
    auto strategies = partial_strategies(m, {0}, {0, 1});
    REQUIRE(strategies.size() == 1);
    UniformStrategy s = strategies[0];
    Icgs pruned = materialize_pruned(m, s);
    CHECK(pruned.edges.size() == m.edges.size());
}

TEST_CASE("subjective start sets") {
    Icgs m = load_fixture("fig1");
    Coalition two = m.coalition_from_names({"2"});
    auto start = subjective_start_set(m, two, m.state_or_throw("q3"));
    std::vector<std::string> names;
    for (StateId s : start) names.push_back(m.state_names[s]);
    CHECK(names == std::vector<std::string>{"q3", "q4", "q5", "q6"});

    Icgs g6 = load_fixture("fig5_g6");
    CHECK(subjective_start_set(g6, g6.coalition_from_names({"1"}), 0) == std::vector<StateId>{0});
    CHECK(subjective_start_set(m, {}, 2) == std::vector<StateId>{2});
}

TEST_CASE("restriction and completion round-trip") {
    Icgs m = load_fixture("fig1");
    Coalition two = m.coalition_from_names({"2"});
    StrategyEnumerator en = StrategyEnumerator::all_states(m, two);
    std::vector<StateId> q{m.state_or_throw("q3"), m.state_or_throw("q5")};
    while (auto s = en.next()) {
        PartialStrategy restricted = restrict_strategy(m, *s, q);
        UniformStrategy completed = complete_strategy(m, restricted);
        for (StateId t : q)
            CHECK(completed.action_of(m, 1, t) == s->action_of(m, 1, t));
    }
}
