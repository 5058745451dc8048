#pragma once

// Independent reference implementations used only by tests: a brute-force
// model checker that enumerates whole uniform strategies and verifies path
// conditions by explicit path exploration with cycle detection, plus seeded
// generators for random models, formulas and CNF instances. Kept free of the
// fixpoint machinery it is checking.

#include <cstdint>

#include "ibis/bisim.hpp"
#include "ibis/formula.hpp"
#include "ibis/icgs.hpp"
#include "ibis/mc.hpp"

namespace ibis::oracle {

bool oracle_check(const Icgs& m, StateId s, const FormulaPtr& f, Semantics sem);

// Deterministic xorshift generator; avoids the implementation-defined
// behaviour of the standard distributions.
struct Rng {
    uint64_t state;
    explicit Rng(uint64_t seed) : state(seed * 2654435761u + 1442695040888963407ull) {}
    uint64_t next() {
        uint64_t x = state;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        return state = x;
    }
    uint64_t below(uint64_t n) { return n ? next() % n : 0; }
};

/// Valid random game: up to `max_states` states, `max_agents` agents,
/// `max_actions` actions, two atoms, uniform protocols by construction.
Icgs random_model(uint64_t seed, unsigned max_states = 8, unsigned max_agents = 3,
                  unsigned max_actions = 3);

/// Random formula over the model's atoms and agents, roughly `size` nodes.
FormulaPtr random_formula(Rng& rng, const Icgs& m, unsigned size, bool coalition_positive);

Cnf random_cnf(uint64_t seed, unsigned max_vars = 4, unsigned max_clauses = 4);

}  // namespace ibis::oracle
