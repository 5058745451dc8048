#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ibis/types.hpp"

namespace ibis {

enum class StateOp { Atom, True, False, Not, And, Or, Implies, Coalition, K, E, C, AG };
enum class PathOp { X, F, G, U, R };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// Immutable AST node. Coalition nodes carry one path operator applied to
// state-formula operands (lhs, and rhs for U/R); there is no deeper path
// nesting. Agent references are plain names, resolved against a model at
// check time.
struct Formula {
    StateOp op;
    std::string atom;                 // Atom
    std::vector<std::string> agents;  // Coalition / K (single) / E / C
    PathOp path = PathOp::X;          // Coalition only
    FormulaPtr lhs;
    FormulaPtr rhs;                   // And/Or/Implies, and U/R right operand

    size_t size() const;  // node count
};

FormulaPtr f_atom(std::string name);
FormulaPtr f_true();
FormulaPtr f_false();
FormulaPtr f_not(FormulaPtr a);
FormulaPtr f_and(FormulaPtr a, FormulaPtr b);
FormulaPtr f_or(FormulaPtr a, FormulaPtr b);
FormulaPtr f_implies(FormulaPtr a, FormulaPtr b);
FormulaPtr f_coalition(std::vector<std::string> agents, PathOp op, FormulaPtr a, FormulaPtr b = nullptr);
FormulaPtr f_k(std::string agent, FormulaPtr a);
FormulaPtr f_e(std::vector<std::string> agents, FormulaPtr a);
FormulaPtr f_c(std::vector<std::string> agents, FormulaPtr a);
FormulaPtr f_ag(FormulaPtr a);

bool formula_equal(const FormulaPtr& a, const FormulaPtr& b);
size_t formula_hash(const FormulaPtr& f);

std::string print_formula(const FormulaPtr& f);

/// Negation normal form over the state layer: negations pushed down to atoms
/// and modal operators (Coalition/K/E/C keep an outer Not when negated), with
/// the definitional rewrites F(a) -> U(true,a), G(a) -> R(false,a) and
/// AG(a) -> <>R(false,a) applied. Idempotent.
FormulaPtr dualize(const FormulaPtr& f);

/// Every coalition appearing under <A>/K/E/C, as sorted name lists.
std::set<std::vector<std::string>> coalitions_of(const FormulaPtr& f);

/// True when no Coalition modality occurs under an odd number of negations
/// (Implies counts as negating its left operand). K/E/C are neutral.
bool coalition_positive(const FormulaPtr& f);

struct ParseError : Error {
    ParseError(size_t line, size_t col, const std::string& msg)
        : Error("parse error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    size_t line, col;
};

/// Parse one formula. Grammar (precedence ! > & > | > ->, -> right-assoc):
///   state := atom | "true" | "false" | "!" state | state ("&"|"|"|"->") state
///          | "(" state ")" | "<" agents ">" path | "K" agent state
///          | "E" agents state | "C" agents state | "AG" state
///   path  := "X" state | "F" state | "G" state | state "U" state | state "R" state
///   agents := agent ("," agent)* | <empty>
FormulaPtr parse_formula(const std::string& text);

/// One formula per non-empty line; '#' starts a comment.
std::vector<FormulaPtr> parse_formula_file(const std::string& content);

}  // namespace ibis
