#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>

#include "ibis/formula.hpp"
#include "ibis/icgs.hpp"
#include "ibis/strategy.hpp"
#include "ibis/types.hpp"

namespace ibis {

enum class Semantics { Subjective, Objective, PerfectInfo };

const char* semantics_name(Semantics s);
std::optional<Semantics> semantics_from_name(const std::string& s);

struct TruthSet {
    FormulaPtr formula;
    Semantics semantics;
    StateSet states;
};

struct CheckResult {
    bool value;
    std::optional<UniformStrategy> witness;  // top-level <A> witness when true
};

struct McOptions {
    unsigned jobs = 1;  // parallel start-set resolution inside coalition labeling
};

// State labeling engine. Truth sets are memoized per formula node, so callers
// that evaluate many formulas sharing subtrees should keep one Labeler alive.
class Labeler {
public:
    Labeler(const Icgs& m, Semantics sem, McOptions opt = {});

    const StateSet& label(const FormulaPtr& f);
    TruthSet truth_set(const FormulaPtr& f);

    bool check(StateId s, const FormulaPtr& f);
    CheckResult check_with_witness(StateId s, const FormulaPtr& f);

    const Icgs& model() const { return m_; }
    Semantics semantics() const { return sem_; }

private:
    struct PathCondition {
        PathOp op;  // X, U or R after normalization
        const StateSet* t1;
        const StateSet* t2;
    };

    const StateSet& label_impl(const FormulaPtr& f);
    StateSet eval_coalition(const FormulaPtr& f, UniformStrategy* witness_out, std::optional<StateId> witness_state);
    PathCondition normalize_path(const FormulaPtr& f, const StateSet*& hold1, const StateSet*& hold2);

    // Universal path condition over all enabled transitions.
    StateSet universal_set(const PathCondition& pc) const;
    // Perfect-information <A> fixpoint.
    StateSet perfect_info_set(const Coalition& a, const PathCondition& pc) const;

    bool search_uniform(const Coalition& a, const PathCondition& pc,
                        const std::vector<StateId>& start, UniformStrategy* witness_out);

    const Icgs& m_;
    Semantics sem_;
    McOptions opt_;
    std::unordered_map<const Formula*, StateSet> memo_;
    std::vector<FormulaPtr> retained_;  // pins memo keys
    std::vector<StateSet> owned_;       // constant full/empty operand sets
};

StateSet label(const Icgs& m, const FormulaPtr& f, Semantics sem);
bool check(const Icgs& m, StateId s, const FormulaPtr& f, Semantics sem);
CheckResult check_with_witness(const Icgs& m, StateId s, const FormulaPtr& f, Semantics sem);

struct SoundnessReport {
    bool ok = true;
    // states violating an inclusion, with the pair of semantics involved
    struct Violation {
        Semantics weaker, stronger;
        StateId state;
    };
    std::vector<Violation> violations;
};

/// For coalition-positive formulas: Subjective truth is contained in
/// Objective truth, which is contained in PerfectInfo truth. Violations are
/// engine bugs. Throws on non-positive input.
SoundnessReport check_reduction_soundness(const Icgs& m, const FormulaPtr& f);

}  // namespace ibis
