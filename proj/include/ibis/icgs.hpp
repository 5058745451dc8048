#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibis/types.hpp"

namespace ibis {

// Raw, name-based model description as it appears in model files.
// Anything goes here; validate() reports every problem instead of throwing.
struct ModelDoc {
    std::vector<std::string> agents;
    std::vector<std::string> atoms;
    std::vector<std::string> actions;

    struct StateDecl {
        std::string id;
        std::vector<std::string> label;
    };
    std::vector<StateDecl> states;
    std::string initial;

    // protocol[agent][state] = available actions
    std::map<std::string, std::map<std::string, std::vector<std::string>>> protocol;

    struct TransDecl {
        std::string from;
        std::vector<std::string> joint;  // one action per agent, in agent order
        std::string to;
    };
    std::vector<TransDecl> transitions;

    // indist[agent] = blocks; singleton blocks may be omitted
    std::map<std::string, std::vector<std::vector<std::string>>> indist;
};

struct ValidationIssue {
    std::string kind;  // "dangling-id" | "uniformity" | "seriality" | "partition" | "shape"
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
    std::string to_string() const;
};

struct CknPartition {
    std::vector<uint32_t> class_of;   // per state
    std::vector<uint32_t> offset;     // per class, into members
    std::vector<StateId> members;     // states grouped by class

    std::span<const StateId> members_of_class(uint32_t c) const {
        return {members.data() + offset[c], members.data() + offset[c + 1]};
    }
    std::span<const StateId> members_of(StateId s) const { return members_of_class(class_of[s]); }
    size_t n_classes() const { return offset.size() - 1; }
};

// Compiled imperfect-information concurrent game structure. Immutable after
// construction; queries are pure. Limits: <=64 atoms, <=32 actions, packed
// joint actions must fit 64 bits.
class Icgs {
public:
    Icgs() = default;
    // Copies and moves transfer the model data; derived caches start fresh.
    Icgs(const Icgs& o) { assign_from(o); }
    Icgs& operator=(const Icgs& o) { assign_from(o); return *this; }
    Icgs(Icgs&& o) noexcept { assign_from(o); }
    Icgs& operator=(Icgs&& o) noexcept { assign_from(o); return *this; }

    std::vector<std::string> agents;
    std::vector<std::string> atoms;
    std::vector<std::string> actions;
    std::vector<std::string> state_names;
    StateId initial = 0;

    std::vector<uint64_t> labels;                     // [state] atom mask
    std::vector<std::vector<uint32_t>> protocol;      // [agent][state] action mask
    std::vector<std::vector<uint32_t>> agent_block;   // [agent][state] -> block id
    std::vector<std::vector<uint32_t>> block_offset;  // [agent][block+1] into block_states
    std::vector<std::vector<StateId>> block_states;   // [agent] states grouped by block

    struct Edge {
        JointAction joint;
        StateId to;
    };
    std::vector<uint64_t> edge_offset;  // [state+1]
    std::vector<Edge> edges;            // sorted by (state, joint, to)
    unsigned bits_per_agent = 1;

    size_t n_states() const { return state_names.size(); }
    size_t n_agents() const { return agents.size(); }
    size_t n_atoms() const { return atoms.size(); }
    size_t n_actions() const { return actions.size(); }

    ActionId joint_component(JointAction j, AgentId i) const {
        return static_cast<ActionId>((j >> (bits_per_agent * i)) & ((uint64_t{1} << bits_per_agent) - 1));
    }
    JointAction pack_joint(std::span<const ActionId> per_agent) const;

    bool has_atom(StateId s, AtomId a) const { return (labels[s] >> a) & 1; }

    std::span<const Edge> edges_of(StateId s) const {
        return {edges.data() + edge_offset[s], edges.data() + edge_offset[s + 1]};
    }

    /// All joint actions enabled at s (cartesian product of the per-agent
    /// protocols), in lexicographic agent-major order.
    std::vector<JointAction> enabled_joint_actions(StateId s) const;
    bool joint_enabled(StateId s, JointAction j) const;

    /// Successor states of s under an enabled joint action. Throws if disabled.
    std::vector<StateId> successors(StateId s, JointAction j) const;

    uint32_t block_of(AgentId i, StateId s) const { return agent_block[i][s]; }
    std::span<const StateId> block_members(AgentId i, uint32_t block) const {
        return {block_states[i].data() + block_offset[i][block],
                block_states[i].data() + block_offset[i][block + 1]};
    }

    /// "Everybody knows" neighbourhood: union over i in A of s's block.
    /// Returns {s} for the empty coalition.
    std::vector<StateId> ekn(const Coalition& a, StateId s) const;

    /// Common-knowledge partition for a coalition (transitive closure of the
    /// union of member indistinguishability relations). Cached per coalition.
    const CknPartition& ckn(const Coalition& a) const;
    std::vector<StateId> ckn_members(const Coalition& a, StateId s) const;

    // Predecessor CSR aligned with `edges`: for every edge, its source state,
    // bucketed by target. Built lazily.
    struct ReverseEdges {
        std::vector<uint64_t> offset;  // [state+1], by target
        std::vector<StateId> src;      // source of each incoming edge
        std::vector<uint32_t> edge_index_of;  // position of the original edge
    };
    const ReverseEdges& reverse_edges() const;

    // Edges grouped by their coalition projection within each state: the
    // alternatives a coalition can force between. Cached per coalition.
    struct CoalitionGroups {
        std::vector<uint32_t> edge_group;    // per edge index
        std::vector<StateId> group_state;    // per group
        std::vector<uint32_t> group_size;    // edges per group
        std::vector<uint32_t> state_groups;  // #groups per state
    };
    const CoalitionGroups& coalition_groups(const Coalition& a) const;

    StateSet reachable() const;

    std::optional<StateId> find_state(const std::string& name) const;
    std::optional<AgentId> find_agent(const std::string& name) const;
    std::optional<AtomId> find_atom(const std::string& name) const;
    std::optional<ActionId> find_action(const std::string& name) const;
    StateId state_or_throw(const std::string& name) const;
    AgentId agent_or_throw(const std::string& name) const;

    Coalition coalition_from_names(const std::vector<std::string>& names) const;

private:
    void assign_from(const Icgs& o);

    mutable std::map<uint64_t, std::unique_ptr<CknPartition>> ckn_cache_;
    mutable std::map<uint64_t, std::unique_ptr<CoalitionGroups>> group_cache_;
    mutable std::unique_ptr<ReverseEdges> reverse_;
    mutable std::mutex ckn_mutex_;
    mutable std::unique_ptr<std::map<std::string, StateId>> name_index_;
};

/// Full invariant scan of a raw model description: dangling identifiers,
/// protocol uniformity across indistinguishability blocks, seriality of the
/// transition relation against the protocol, partition well-formedness.
ValidationReport validate(const ModelDoc& doc);

/// Same checks on an already-compiled model (used for generated models).
ValidationReport validate(const Icgs& m);

/// Compile a raw description. Throws Error listing the report if invalid.
Icgs compile(const ModelDoc& doc);

ModelDoc to_doc(const Icgs& m);

}  // namespace ibis
