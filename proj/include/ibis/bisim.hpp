#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ibis/formula.hpp"
#include "ibis/icgs.hpp"
#include "ibis/mc.hpp"
#include "ibis/strategy.hpp"

namespace ibis {

// Cross-model state relation for one coalition. Pairs are (state in M,
// state in M'); no structural constraint is assumed beyond existing ids.
struct BisimRelation {
    std::vector<std::string> coalition;  // agent names, shared by both models
    std::vector<std::pair<StateId, StateId>> pairs;
};

enum class BisimCond { None, C1a, C1b, C1c, C2, PreC };
const char* bisim_cond_name(BisimCond c);

struct BisimWitness {
    // Populated fields depend on the violated condition; see to_json.
    StateId q = 0, qp = 0;          // the pair under which the violation arose
    std::string agent;              // 1b: the agent whose epistemic edge fails
    StateId r = 0, rp = 0, sp = 0;  // 1b: rp; 1c: (r, rp, sp)
    std::optional<PartialStrategy> strategy;      // 1c: the untransferable strategy
    std::optional<StateId> q2;      // 2: second left state sharing the partner
};

struct SimulatorWitness {
    // Per matched neighbourhood pair: the chosen image strategy per source
    // strategy, as indices into the deterministic enumerations.
    struct Entry {
        std::vector<StateId> domain, domain_p;
        std::vector<uint32_t> image;  // image[i] = index of matched strategy for source i
    };
    std::vector<Entry> entries;
};

struct Verdict {
    bool pass = false;
    BisimCond violated = BisimCond::None;
    bool converse = false;  // violation found while checking the converse direction
    std::optional<BisimWitness> witness;
    std::optional<SimulatorWitness> simulator;  // on pass
};

/// One-directional simulation check per the coalition-indexed conditions:
/// label agreement, epistemic back-simulation for coalition members, and
/// strategy transfer over common-knowledge neighbourhoods, plus neighbourhood
/// injectivity. Deterministic first violation.
Verdict verify_simulation(const Icgs& m, const Icgs& mp, const Coalition& a,
                          const std::vector<std::pair<StateId, StateId>>& pairs);

/// Both directions.
Verdict verify_bisimulation(const Icgs& m, const Icgs& mp, const Coalition& a,
                            const std::vector<std::pair<StateId, StateId>>& pairs);

/// Weaker variant: strategy transfer over "everybody knows" neighbourhoods,
/// no injectivity condition. Both directions.
Verdict verify_pre_bisimulation(const Icgs& m, const Icgs& mp, const Coalition& a,
                                const std::vector<std::pair<StateId, StateId>>& pairs);

struct DecideResult {
    enum Kind { Bisimilar, NotBisimilar, BudgetExceeded } kind;
    std::optional<std::vector<std::pair<StateId, StateId>>> relation;  // on Bisimilar
    std::optional<FormulaPtr> refutation;  // distinguishing formula, when found
    uint64_t budget_used = 0;
};

/// Exhaustive search for an A-bisimulation relating (m,q) and (mp,qp):
/// sound refutation by bounded distinguishing-formula search first, then
/// backtracking over neighbourhood-class matchings and per-matching
/// sub-relations, each candidate re-checked by verify_bisimulation.
/// NotBisimilar is only reported on a refutation or an exhausted search.
DecideResult decide_bisimilarity(const Icgs& m, StateId q, const Icgs& mp, StateId qp,
                                 const Coalition& a, uint64_t budget = 10'000'000);

/// First A-formula (size order, canonicalized, semantically deduplicated)
/// distinguishing (m,q) from (mp,qp), or nullopt. Absence is evidence, not
/// proof, of equivalence.
std::optional<FormulaPtr> find_distinguishing_formula(const Icgs& m, StateId q,
                                                      const Icgs& mp, StateId qp,
                                                      const Coalition& a, Semantics sem,
                                                      size_t max_size);

// Finite lasso presentation of an infinite run: states[0..cycle_start-1] is
// the stem, states[cycle_start..] repeats forever.
struct LassoRun {
    std::vector<StateId> states;
    size_t cycle_start = 0;
};

/// Pointwise relation membership of two equal-shape lassos. Throws on shape
/// mismatch.
bool run_bisimilarity(const Icgs& m, const LassoRun& run, const Icgs& mp, const LassoRun& runp,
                      const std::vector<std::pair<StateId, StateId>>& pairs);

// CNF over variables 1..n_vars; a literal is +v or -v.
struct Cnf {
    unsigned n_vars = 0;
    std::vector<std::vector<int>> clauses;
};

bool cnf_satisfiable(const Cnf& f);  // truth-table decision

struct SatReductionModels {
    Icgs g;        // base model
    Icgs g_prime;  // with the extra always-win action for agent 1
    StateId q0;    // same index in both
};

/// Three-agent game family whose initial state satisfies <1,2,3>X yes
/// (subjectively) exactly when the formula is satisfiable; the primed variant
/// adds a skip action that wins unconditionally. Throws on empty clauses.
SatReductionModels sat_reduction_model(const Cnf& f);

/// Size-ordered canonical A-formula stream (atoms shared by both uses,
/// boolean connectives, <A> with X/F/G/U/R, K_i for members). Used by the
/// distinguishing search and the preservation suite.
std::vector<FormulaPtr> enumerate_a_formulas(const std::vector<std::string>& atoms,
                                             const std::vector<std::string>& coalition,
                                             size_t max_size, size_t limit = 0);

}  // namespace ibis
