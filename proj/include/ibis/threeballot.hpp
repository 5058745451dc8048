#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ibis/bisim.hpp"
#include "ibis/formula.hpp"
#include "ibis/icgs.hpp"

namespace ibis {

enum class TbVariant { Tot, Lex, Count };
const char* tb_variant_name(TbVariant v);
std::optional<TbVariant> tb_variant_from_name(const std::string& s);

struct ThreeBallotConfig {
    unsigned voters = 2;      // voter `voters` is the attacker
    unsigned candidates = 2;
    TbVariant variant = TbVariant::Count;
    uint64_t state_cap = 25'000'000;  // overridable via IBIS_STATE_CAP
};

uint64_t default_state_cap();

/// All ordered strip triples encoding a valid marked ballot for the given
/// choice: two marks on the chosen candidate's row, one mark on every other
/// row; bit k-1 of a strip is the mark for candidate k. 3^candidates triples.
std::vector<std::array<uint32_t, 3>> compatible_ballots(unsigned ch, unsigned candidates);

struct TbModel {
    ThreeBallotConfig config;
    Icgs model;
    // Packed encoding of each state, aligned with model state indices. States
    // are ordered by the cross-variant matching key so that related states
    // sit in contiguous runs; index 0 is the setup state.
    std::vector<uint64_t> packed;
    std::vector<uint64_t> group_key;  // tot/lex matching key per state
    AgentId env = 0;
    AgentId attacker = 0;
};

/// Build the reachable game for one variant. Rough size estimate is checked
/// against the cap before expansion, and the cap is enforced during it.
TbModel build(const ThreeBallotConfig& config);

/// <att> F ((pub & voted_i) -> OR_j K att ch_i_eq_j). Throws when i is the attacker.
FormulaPtr coercion_formula(const ThreeBallotConfig& config, unsigned voter);

/// AG ( AND_j !K att ch_i_eq_j ). Throws when i is the attacker.
FormulaPtr anonymity_formula(const ThreeBallotConfig& config, unsigned voter);

/// The attacker-coalition relation between the full and the sorted-ballot
/// variant, materialized over reachable states: equal bulletin board, votes,
/// flags and attacker locals, with each other voter's strip triple permuted.
BisimRelation relation_tot_lex(const TbModel& tot, const TbModel& lex);

/// Between the sorted-ballot and the counter variant: identical locals, with
/// each counter equal to the per-candidate mark total over copied ribbons.
BisimRelation relation_lex_count(const TbModel& lex, const TbModel& count);

}  // namespace ibis
