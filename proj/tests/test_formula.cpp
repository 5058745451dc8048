#include "doctest.h"

#include "ibis/fixtures.hpp"
#include "ibis/formula.hpp"
#include "ibis/mc.hpp"
#include "oracle.hpp"

using namespace ibis;

TEST_CASE("parser: coalition with until-style goals") {
    FormulaPtr f = parse_formula("<1,2> F win1");
    REQUIRE(f->op == StateOp::Coalition);
    CHECK(f->agents == std::vector<std::string>{"1", "2"});
    CHECK(f->path == PathOp::F);
    CHECK(f->lhs->op == StateOp::Atom);
    CHECK(f->lhs->atom == "win1");
}

TEST_CASE("parser: knowledge under negation and the safety shorthand") {
    FormulaPtr f = parse_formula("AG (!(K att ch_1_eq_1))");
    REQUIRE(f->op == StateOp::AG);
    REQUIRE(f->lhs->op == StateOp::Not);
    REQUIRE(f->lhs->lhs->op == StateOp::K);
    CHECK(f->lhs->lhs->agents == std::vector<std::string>{"att"});
    CHECK(f->lhs->lhs->lhs->atom == "ch_1_eq_1");
}

TEST_CASE("parser: bare atom, precedence, empty coalition") {
    CHECK(parse_formula("p")->op == StateOp::Atom);

    FormulaPtr f = parse_formula("!a & b -> c | d");
    REQUIRE(f->op == StateOp::Implies);
    CHECK(f->lhs->op == StateOp::And);
    CHECK(f->lhs->lhs->op == StateOp::Not);
    CHECK(f->rhs->op == StateOp::Or);

    FormulaPtr g = parse_formula("a -> b -> c");  // right associative
    REQUIRE(g->op == StateOp::Implies);
    CHECK(g->lhs->atom == "a");
    CHECK(g->rhs->op == StateOp::Implies);

    FormulaPtr e = parse_formula("<> G p");
    REQUIRE(e->op == StateOp::Coalition);
    CHECK(e->agents.empty());
    CHECK(e->path == PathOp::G);

    FormulaPtr u = parse_formula("<1> p & q U r");
    REQUIRE(u->op == StateOp::Coalition);
    CHECK(u->path == PathOp::U);
    CHECK(u->lhs->op == StateOp::And);
}

TEST_CASE("parser: position-carrying errors") {
    CHECK_THROWS_AS(parse_formula("p &"), ParseError);
    CHECK_THROWS_AS(parse_formula("<1> p"), ParseError);     // missing path operator
    CHECK_THROWS_AS(parse_formula("(p"), ParseError);
    CHECK_THROWS_AS(parse_formula("p q"), ParseError);
    try {
        parse_formula("p &\n& q");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("print/parse round-trip on random formulas") {
    oracle::Rng rng(7);
    Icgs m = load_fixture("fig1");
    for (int k = 0; k < 300; ++k) {
        FormulaPtr f = oracle::random_formula(rng, m, 1 + k % 9, false);
        FormulaPtr g = parse_formula(print_formula(f));
        CHECK(formula_equal(f, g));
        CHECK(print_formula(f) == print_formula(g));
    }
}

TEST_CASE("formula files: one per line with comments") {
    auto fs = parse_formula_file("# header\np & q\n\n<1> X p # trailing\n");
    REQUIRE(fs.size() == 2);
    CHECK(fs[0]->op == StateOp::And);
    CHECK(fs[1]->op == StateOp::Coalition);
}

TEST_CASE("dualize: pushes negations and expands the derived operators") {
    FormulaPtr f = dualize(parse_formula("!(p & q)"));
    CHECK(print_formula(f) == "!p | !q");

    FormulaPtr g = dualize(parse_formula("<1> F p"));
    REQUIRE(g->op == StateOp::Coalition);
    CHECK(g->path == PathOp::U);
    CHECK(g->lhs->op == StateOp::True);

    // negation stays on the modality itself
    FormulaPtr h = dualize(parse_formula("!(<1> X p)"));
    REQUIRE(h->op == StateOp::Not);
    CHECK(h->lhs->op == StateOp::Coalition);
}

TEST_CASE("dualize: idempotent and truth-preserving on every bundled model") {
    for (const auto& name : fixture_names()) {
        Icgs m = load_fixture(name);
        oracle::Rng rng(11 + name.size());
        for (int k = 0; k < 25; ++k) {
            FormulaPtr f = oracle::random_formula(rng, m, 1 + k % 7, false);
            FormulaPtr d = dualize(f);
            CHECK(formula_equal(d, dualize(d)));
            for (Semantics sem : {Semantics::Subjective, Semantics::Objective}) {
                CHECK(label(m, f, sem) == label(m, d, sem));
            }
        }
    }
}

TEST_CASE("coalition scan and positivity") {
    FormulaPtr f = parse_formula("<1,2> F p -> !(K 1 q)");
    auto cs = coalitions_of(f);
    CHECK(cs.count({"1", "2"}) == 1);
    CHECK(cs.count({"1"}) == 1);

    CHECK(coalition_positive(parse_formula("<1> F p | K 2 q")));
    CHECK(!coalition_positive(parse_formula("!(<1> F p)")));
    CHECK(!coalition_positive(parse_formula("(<1> X p) -> q")));  // negative position
    CHECK(coalition_positive(parse_formula("!(K 1 p)")));       // knowledge is neutral
}
