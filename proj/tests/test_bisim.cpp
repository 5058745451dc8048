#include "doctest.h"

#include "ibis/bisim.hpp"
#include "ibis/fixtures.hpp"
#include "ibis/json_io.hpp"
#include "ibis/mc.hpp"
#include "oracle.hpp"

using namespace ibis;

namespace {

std::vector<std::pair<StateId, StateId>> identity_pairs(const Icgs& m) {
    std::vector<std::pair<StateId, StateId>> pairs;
    for (StateId s = 0; s < m.n_states(); ++s) pairs.emplace_back(s, s);
    return pairs;
}

}  // namespace

TEST_CASE("identity relations verify on every fixture and coalition") {
    for (const auto& name : fixture_names()) {
        Icgs m = load_fixture(name);
        std::vector<Coalition> coalitions{{}};
        for (AgentId i = 0; i < m.n_agents(); ++i) coalitions.push_back({i});
        Coalition all;
        for (AgentId i = 0; i < m.n_agents(); ++i) all.push_back(i);
        coalitions.push_back(all);
        for (const auto& a : coalitions) {
            Verdict v = verify_bisimulation(m, m, a, identity_pairs(m));
            CAPTURE(name);
            CHECK(v.pass);
        }
    }
}

TEST_CASE("the reduced voting model simulates the full one") {
    Icgs fig1 = load_fixture("fig1");
    Icgs fig2a = load_fixture("fig2a");
    BisimRelation rel = load_fixture_relation("rel_example3", fig1, fig2a);
    Coalition a = fig1.coalition_from_names(rel.coalition);

    CHECK(verify_simulation(fig1, fig2a, a, rel.pairs).pass);
    Verdict v = verify_bisimulation(fig1, fig2a, a, rel.pairs);
    CHECK(v.pass);
    REQUIRE(v.simulator);
    CHECK(!v.simulator->entries.empty());

    // the published pairing with the outcome-crossed middle states fails the
    // strategy-transfer clause
    BisimRelation listing = load_fixture_relation("rel_example3_listing", fig1, fig2a);
    Verdict lv = verify_bisimulation(fig1, fig2a, a, listing.pairs);
    CHECK(!lv.pass);
    CHECK(lv.violated == BisimCond::C1c);
}

TEST_CASE("label mismatches are reported as condition 1a") {
    Icgs fig1 = load_fixture("fig1");
    Icgs fig2a = load_fixture("fig2a");
    Coalition a = fig1.coalition_from_names({"2"});
    std::vector<std::pair<StateId, StateId>> bad{
        {fig1.state_or_throw("q7"), fig2a.state_or_throw("q8")}};
    Verdict v = verify_bisimulation(fig1, fig2a, a, bad);
    CHECK(!v.pass);
    CHECK(v.violated == BisimCond::C1a);
}

TEST_CASE("one-bit-memory split: condition 1 passes, injectivity fails") {
    Icgs g1 = load_fixture("fig3_g1");
    Icgs g2 = load_fixture("fig3_g2");
    BisimRelation rel = load_fixture_relation("rel_fig3_red", g1, g2);
    Coalition a = g1.coalition_from_names(rel.coalition);

    // forward direction satisfies everything including injectivity
    Verdict fwd = verify_simulation(g1, g2, a, rel.pairs);
    CHECK(fwd.pass);

    Verdict v = verify_bisimulation(g1, g2, a, rel.pairs);
    REQUIRE(!v.pass);
    CHECK(v.violated == BisimCond::C2);
    CHECK(v.converse);
    REQUIRE(v.witness);
    // witness: q1 related to both q11 and q12, whose neighbourhoods differ
    CHECK(g1.state_names[v.witness->rp] == "q1");
    std::set<std::string> pair_names{g2.state_names[v.witness->q],
                                     g2.state_names[*v.witness->q2]};
    CHECK((pair_names == std::set<std::string>{"q11", "q12"} ||
           pair_names == std::set<std::string>{"q21", "q22"}));
}

TEST_CASE("entry-state pair: the published relation is not a pre-bisimulation") {
    // The stated relation violates the epistemic back-simulation clause: q3'
    // can be confused with q2' by agent 2, but q4 (related to q3') is an
    // agent-2 singleton and has no partner related to q2'. An exhaustive
    // search (see the skipped case below) shows no conforming relation
    // relating the entry states exists at all.
    Icgs g7 = load_fixture("fig7_g7");
    Icgs g8 = load_fixture("fig8_g8");
    BisimRelation rel = load_fixture_relation("rel_fig78", g7, g8);
    Coalition a = g7.coalition_from_names(rel.coalition);

    Verdict pre = verify_pre_bisimulation(g7, g8, a, rel.pairs);
    REQUIRE(!pre.pass);
    CHECK(pre.violated == BisimCond::C1b);
    REQUIRE(pre.witness);
    CHECK(!pre.converse);
    CHECK(g7.state_names[pre.witness->q] == "q4");
    CHECK(g8.state_names[pre.witness->qp] == "q3");
    CHECK(pre.witness->agent == "2");
    CHECK(g8.state_names[pre.witness->rp] == "q2");

    Verdict full = verify_bisimulation(g7, g8, a, rel.pairs);
    CHECK(!full.pass);

    // identity-shaped pre-bisimulations exist between the equivalent pair
    Icgs g3 = load_fixture("fig4_g3");
    Icgs g4 = load_fixture("fig4_g4");
    std::vector<std::pair<StateId, StateId>> id;
    for (const char* n : {"q1", "q2", "q3", "q4", "qtop", "qbot"})
        id.emplace_back(g3.state_or_throw(n), g4.state_or_throw(n));
    Coalition ag = g3.coalition_from_names({"1", "2"});
    CHECK(verify_pre_bisimulation(g3, g4, ag, id).pass);

    // ...but the full cross-equivalence relation between them is not one:
    // two left states sharing an uncertainty piece map onto a single right
    // state with independently controllable outcomes
    std::vector<std::pair<StateId, StateId>> full_cross;
    for (const char* x : {"q1", "q2", "q3", "q4"})
        for (const char* y : {"q1", "q2", "q3", "q4"})
            full_cross.emplace_back(g3.state_or_throw(x), g4.state_or_throw(y));
    full_cross.emplace_back(g3.state_or_throw("qtop"), g4.state_or_throw("qtop"));
    full_cross.emplace_back(g3.state_or_throw("qbot"), g4.state_or_throw("qbot"));
    Verdict cross = verify_pre_bisimulation(g3, g4, ag, full_cross);
    CHECK(!cross.pass);
}

TEST_CASE("exhaustive: no entry-state pre-bisimulation exists" * doctest::skip()) {
    // ~35s: complete enumeration over the type-respecting pair universe.
    Icgs g7 = load_fixture("fig7_g7"), g8 = load_fixture("fig8_g8");
    Coalition a = g7.coalition_from_names({"1", "2"});
    std::vector<std::pair<StateId, StateId>> universe;
    for (const char* x : {"qI1", "qI2", "qI3", "qI4"})
        for (const char* y : {"qI1", "qI2", "qI3"})
            universe.emplace_back(g7.state_or_throw(x), g8.state_or_throw(y));
    for (const char* x : {"q1", "q2", "q3", "q4"})
        for (const char* y : {"q1", "q2", "q3"})
            universe.emplace_back(g7.state_or_throw(x), g8.state_or_throw(y));
    universe.emplace_back(g7.state_or_throw("qtop"), g8.state_or_throw("qtop"));
    universe.emplace_back(g7.state_or_throw("qbot"), g8.state_or_throw("qbot"));
    size_t n = universe.size();
    bool found = false;
    for (uint64_t mask = 1; mask < (uint64_t{1} << n) && !found; mask += 2) {
        // bit 0 is the entry pair (qI1, qI1')
        std::vector<std::pair<StateId, StateId>> rel;
        for (size_t i = 0; i < n; ++i)
            if ((mask >> i) & 1) rel.push_back(universe[i]);
        found = verify_pre_bisimulation(g7, g8, a, rel).pass;
    }
    CHECK(!found);
}

TEST_CASE("re-checking fail witnesses") {
    // the crossed-outcome listing of the reduced voting relation fails the
    // strategy-transfer clause and carries a re-checkable witness
    Icgs fig1 = load_fixture("fig1");
    Icgs fig2a = load_fixture("fig2a");
    BisimRelation rel = load_fixture_relation("rel_example3_listing", fig1, fig2a);
    Coalition a = fig1.coalition_from_names(rel.coalition);
    Verdict v = verify_bisimulation(fig1, fig2a, a, rel.pairs);
    REQUIRE(!v.pass);
    CHECK(v.violated == BisimCond::C1c);
    REQUIRE(v.witness);
    REQUIRE(v.witness->strategy);
    const Icgs& left = v.converse ? fig2a : fig1;
    auto in_rel = [&](StateId x, StateId y) {
        for (auto [p, q] : rel.pairs) {
            StateId l = v.converse ? q : p, r = v.converse ? p : q;
            if (l == x && r == y) return true;
        }
        return false;
    };
    CHECK(in_rel(v.witness->r, v.witness->rp));
    auto left_succ = succ_under(left, v.witness->r, *v.witness->strategy);
    for (StateId s : left_succ) CHECK(!in_rel(s, v.witness->sp));
}

TEST_CASE("deciding bisimilarity: reflexive, split pairs, budget") {
    Icgs fig1 = load_fixture("fig1");
    Coalition two = fig1.coalition_from_names({"2"});
    DecideResult self = decide_bisimilarity(fig1, fig1.initial, fig1, fig1.initial, two);
    CHECK(self.kind == DecideResult::Bisimilar);
    REQUIRE(self.relation);
    CHECK(verify_bisimulation(fig1, fig1, two, *self.relation).pass);

    Icgs g3 = load_fixture("fig4_g3");
    Icgs g4 = load_fixture("fig4_g4");
    Coalition ag = g3.coalition_from_names({"1", "2"});
    DecideResult split = decide_bisimilarity(g3, g3.state_or_throw("q1"), g4,
                                             g4.state_or_throw("q1"), ag);
    CHECK(split.kind == DecideResult::NotBisimilar);

    Icgs g5 = load_fixture("fig5_g5");
    Icgs g6 = load_fixture("fig5_g6");
    DecideResult split2 = decide_bisimilarity(g5, g5.state_or_throw("q0"), g6,
                                              g6.state_or_throw("q0"),
                                              g5.coalition_from_names({"1"}));
    CHECK(split2.kind == DecideResult::NotBisimilar);

    // a tiny budget is reported as such, never as a truth claim
    DecideResult capped = decide_bisimilarity(g3, g3.state_or_throw("q1"), g4,
                                              g4.state_or_throw("q1"), ag, 3);
    CHECK(capped.kind == DecideResult::BudgetExceeded);
}

TEST_CASE("bisimilarity witnesses satisfy the neighbourhood covering property") {
    Icgs fig1 = load_fixture("fig1");
    Icgs fig2a = load_fixture("fig2a");
    BisimRelation rel = load_fixture_relation("rel_example3", fig1, fig2a);
    Coalition a = fig1.coalition_from_names(rel.coalition);
    REQUIRE(verify_bisimulation(fig1, fig2a, a, rel.pairs).pass);
    // for every related pair, every member of the right neighbourhood has a
    // related member of the left neighbourhood, and vice versa
    for (auto [q, qp] : rel.pairs) {
        for (StateId rp : fig2a.ckn_members(a, qp)) {
            bool found = false;
            for (StateId r : fig1.ckn_members(a, q))
                for (auto [x, y] : rel.pairs)
                    if (x == r && y == rp) found = true;
            CHECK(found);
        }
        for (StateId r : fig1.ckn_members(a, q)) {
            bool found = false;
            for (StateId rp : fig2a.ckn_members(a, qp))
                for (auto [x, y] : rel.pairs)
                    if (x == r && y == rp) found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("a bisimulation is a simulation plus its converse") {
    Icgs fig1 = load_fixture("fig1");
    Icgs fig2a = load_fixture("fig2a");
    BisimRelation rel = load_fixture_relation("rel_example3", fig1, fig2a);
    Coalition a = fig1.coalition_from_names(rel.coalition);
    std::vector<std::pair<StateId, StateId>> swapped;
    for (auto [x, y] : rel.pairs) swapped.emplace_back(y, x);
    bool both = verify_simulation(fig1, fig2a, a, rel.pairs).pass &&
                verify_simulation(fig2a, fig1, a, swapped).pass;
    CHECK(verify_bisimulation(fig1, fig2a, a, rel.pairs).pass == both);

    // and on a one-directional example: the converse direction alone fails
    BisimRelation red = load_fixture_relation("rel_fig3_red",
                                              load_fixture("fig3_g1"), load_fixture("fig3_g2"));
    Icgs g1 = load_fixture("fig3_g1"), g2 = load_fixture("fig3_g2");
    Coalition one = g1.coalition_from_names(red.coalition);
    std::vector<std::pair<StateId, StateId>> red_swapped;
    for (auto [x, y] : red.pairs) red_swapped.emplace_back(y, x);
    CHECK(verify_simulation(g1, g2, one, red.pairs).pass);
    CHECK(!verify_simulation(g2, g1, one, red_swapped).pass);
    CHECK(!verify_bisimulation(g1, g2, one, red.pairs).pass);
}

TEST_CASE("distinguishing formulas: found for split pairs, absent for equivalent ones") {
    Icgs g7 = load_fixture("fig7_g7");
    Icgs g8 = load_fixture("fig8_g8");
    Coalition ag = g7.coalition_from_names({"1", "2"});
    auto f = find_distinguishing_formula(g7, g7.state_or_throw("qI1"), g8,
                                         g8.state_or_throw("qI1"), ag,
                                         Semantics::Subjective, 4);
    REQUIRE(f);
    bool left = check(g7, g7.state_or_throw("qI1"), *f, Semantics::Subjective);
    bool right = check(g8, g8.state_or_throw("qI1"), *f, Semantics::Subjective);
    CHECK(left != right);

    Icgs g3 = load_fixture("fig4_g3");
    Icgs g4 = load_fixture("fig4_g4");
    auto none = find_distinguishing_formula(g3, g3.state_or_throw("q1"), g4,
                                            g4.state_or_throw("q1"),
                                            g3.coalition_from_names({"1", "2"}),
                                            Semantics::Subjective, 6);
    CHECK(!none);

    auto self = find_distinguishing_formula(g3, g3.state_or_throw("q1"), g3,
                                            g3.state_or_throw("q1"),
                                            g3.coalition_from_names({"1", "2"}),
                                            Semantics::Subjective, 4);
    CHECK(!self);
}

TEST_CASE("run bisimilarity is pointwise membership") {
    Icgs fig1 = load_fixture("fig1");
    Icgs fig2a = load_fixture("fig2a");
    BisimRelation rel = load_fixture_relation("rel_example3", fig1, fig2a);

    LassoRun left{{fig1.state_or_throw("q0"), fig1.state_or_throw("q1"),
                   fig1.state_or_throw("q3"), fig1.state_or_throw("q7")},
                  3};
    LassoRun right{{fig2a.state_or_throw("q0"), fig2a.state_or_throw("q1"),
                    fig2a.state_or_throw("q3"), fig2a.state_or_throw("q7")},
                   3};
    CHECK(run_bisimilarity(fig1, left, fig2a, right, rel.pairs));

    LassoRun self_run{{fig1.state_or_throw("q0")}, 0};
    CHECK(run_bisimilarity(fig1, self_run, fig1, self_run, identity_pairs(fig1)));

    LassoRun bad = right;
    bad.states[0] = fig2a.state_or_throw("q8");
    CHECK(!run_bisimilarity(fig1, left, fig2a, bad, rel.pairs));

    LassoRun shape = right;
    shape.cycle_start = 1;
    CHECK_THROWS_AS((void)run_bisimilarity(fig1, left, fig2a, shape, rel.pairs), Error);
}

TEST_CASE("satisfiability gadget: model checking matches the truth table") {
    // two satisfiable clauses
    Cnf phi{2, {{1, 2}, {-1, 2}}};
    CHECK(cnf_satisfiable(phi));
    SatReductionModels ms = sat_reduction_model(phi);
    CHECK(check(ms.g, ms.q0, parse_formula("<1,2,3> X yes"), Semantics::Subjective));
    CHECK(check(ms.g_prime, ms.q0, parse_formula("<1,2,3> X yes"), Semantics::Subjective));

    Cnf contradiction{1, {{1}, {-1}}};
    CHECK(!cnf_satisfiable(contradiction));
    SatReductionModels ms2 = sat_reduction_model(contradiction);
    CHECK(!check(ms2.g, ms2.q0, parse_formula("<1,2,3> X yes"), Semantics::Subjective));
    CHECK(check(ms2.g_prime, ms2.q0, parse_formula("<1,2,3> X yes"), Semantics::Subjective));

    CHECK_THROWS_AS((void)sat_reduction_model(Cnf{1, {{}}}), Error);
}

TEST_CASE("satisfiability gadget: bisimilarity tracks satisfiability on the paper instance") {
    Cnf phi{2, {{1, 2}, {-1, 2}}};
    SatReductionModels ms = sat_reduction_model(phi);
    Coalition a = ms.g.coalition_from_names({"1", "2", "3"});
    DecideResult r = decide_bisimilarity(ms.g, ms.q0, ms.g_prime, ms.q0, a);
    CHECK(r.kind == DecideResult::Bisimilar);

    Cnf contradiction{1, {{1}, {-1}}};
    SatReductionModels ms2 = sat_reduction_model(contradiction);
    DecideResult r2 = decide_bisimilarity(ms2.g, ms2.q0, ms2.g_prime, ms2.q0, a);
    CHECK(r2.kind == DecideResult::NotBisimilar);
}

TEST_CASE("canonical formula stream is deduplicated and ordered by size") {
    auto fs = enumerate_a_formulas({"win1", "win2"}, {"2"}, 5);
    CHECK(fs.size() >= 500);
    std::set<std::string> seen;
    size_t last = 0;
    for (const auto& f : fs) {
        CHECK(f->size() >= last);
        last = f->size();
        CHECK(f->size() <= 5);
        CHECK(seen.insert(print_formula(f)).second);
    }
}
