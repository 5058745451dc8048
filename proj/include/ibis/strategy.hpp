#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ibis/icgs.hpp"
#include "ibis/types.hpp"

namespace ibis {

// Uniform action assignment for a coalition on a sub-domain of states.
// Stored per (member agent, block piece): all states of one agent block that
// fall inside the domain share one action. A strategy whose domain is the
// whole state set is a (total) uniform strategy.
struct PartialStrategy {
    Coalition coalition;
    std::vector<StateId> domain;  // sorted

    struct Piece {
        AgentId agent;
        uint32_t block;
        ActionId action;
    };
    std::vector<Piece> pieces;  // sorted by (agent, block)

    bool total(const Icgs& m) const { return domain.size() == m.n_states(); }
    bool in_domain(StateId s) const;
    std::optional<ActionId> action_of(const Icgs& m, AgentId agent, StateId s) const;

    /// True when a full joint action agrees with this strategy at s.
    bool compatible(const Icgs& m, StateId s, JointAction j) const;
};

using UniformStrategy = PartialStrategy;

/// Lazy odometer over all uniform assignments for coalition `a` on domain `q`
/// (all states when `q` is empty and `total` is set). Order: lexicographic by
/// (agent index, block index, action index). Deterministic.
class StrategyEnumerator {
public:
    StrategyEnumerator(const Icgs& m, Coalition a, std::vector<StateId> domain);
    static StrategyEnumerator all_states(const Icgs& m, Coalition a);

    std::optional<PartialStrategy> next();
    void rewind();

    /// Closed-form count (product of per-piece action counts); throws on
    /// uint64 overflow.
    uint64_t count() const;

private:
    const Icgs& m_;
    Coalition a_;
    std::vector<StateId> domain_;
    struct PieceInfo {
        AgentId agent;
        uint32_t block;
        std::vector<ActionId> options;
    };
    std::vector<PieceInfo> pieces_;
    std::vector<uint32_t> cursor_;
    bool done_ = false;
    bool fresh_ = true;
};

std::vector<PartialStrategy> partial_strategies(const Icgs& m, const Coalition& a,
                                                std::vector<StateId> domain);

/// Successors of q under all joint actions compatible with the strategy.
/// Throws if q is outside the strategy domain.
std::vector<StateId> succ_under(const Icgs& m, StateId q, const PartialStrategy& s);

/// Union of succ_under over the whole domain.
std::vector<StateId> succ_set(const Icgs& m, const PartialStrategy& s);

/// Same state set, transition relation restricted to joint actions compatible
/// with a total uniform strategy. Keeps seriality.
Icgs materialize_pruned(const Icgs& m, const UniformStrategy& s);

/// Start states for the subjective reading at s: ekn(A, s), or {s} for the
/// empty coalition.
std::vector<StateId> subjective_start_set(const Icgs& m, const Coalition& a, StateId s);

/// Restriction of a strategy to a sub-domain (pieces clipped to blocks that
/// intersect it).
PartialStrategy restrict_strategy(const Icgs& m, const PartialStrategy& s,
                                  std::vector<StateId> domain);

/// Extend to a total uniform strategy; unassigned blocks take their lowest
/// enabled action.
UniformStrategy complete_strategy(const Icgs& m, const PartialStrategy& s);

}  // namespace ibis
