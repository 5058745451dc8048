#include "ibis/icgs.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ibis {

std::string ValidationReport::to_string() const {
    if (ok()) return "valid";
    std::ostringstream os;
    for (const auto& i : issues) os << i.kind << ": " << i.detail << "\n";
    return os.str();
}

namespace {

unsigned bits_for(size_t n) {
    unsigned b = 1;
    while ((size_t{1} << b) < n) ++b;
    return b;
}

template <class T>
std::unordered_map<std::string, uint32_t> index_of(const std::vector<T>& names) {
    std::unordered_map<std::string, uint32_t> m;
    for (uint32_t i = 0; i < names.size(); ++i) m.emplace(names[i], i);
    return m;
}

struct DocIndex {
    std::unordered_map<std::string, uint32_t> agent, atom, action, state;
};

void check_identifier(const std::string& id, const std::string& what,
                      std::vector<ValidationIssue>& out) {
    if (id.empty() || id.find_first_of(" \t\r\n") != std::string::npos)
        out.push_back({"shape", what + " '" + id + "' must be a nonempty identifier without whitespace"});
}

}  // namespace

ValidationReport validate(const ModelDoc& doc) {
    ValidationReport rep;
    auto issue = [&](const std::string& kind, const std::string& detail) {
        rep.issues.push_back({kind, detail});
    };

    if (doc.agents.empty()) issue("shape", "no agents declared");
    if (doc.states.empty()) issue("shape", "no states declared");
    if (doc.actions.empty()) issue("shape", "no actions declared");
    for (const auto& a : doc.agents) check_identifier(a, "agent", rep.issues);
    for (const auto& a : doc.atoms) check_identifier(a, "atom", rep.issues);
    for (const auto& a : doc.actions) check_identifier(a, "action", rep.issues);
    for (const auto& s : doc.states) check_identifier(s.id, "state", rep.issues);

    if (doc.atoms.size() > 64) issue("shape", "more than 64 atoms");
    if (doc.actions.size() > 32) issue("shape", "more than 32 actions");
    if (!doc.agents.empty() && doc.agents.size() * bits_for(std::max<size_t>(doc.actions.size(), 2)) > 64)
        issue("shape", "joint actions do not fit 64 bits");

    DocIndex ix;
    auto build_index = [&](const std::vector<std::string>& names,
                           std::unordered_map<std::string, uint32_t>& out, const char* what) {
        for (uint32_t i = 0; i < names.size(); ++i)
            if (!out.emplace(names[i], i).second)
                issue("shape", std::string("duplicate ") + what + " '" + names[i] + "'");
    };
    build_index(doc.agents, ix.agent, "agent");
    build_index(doc.atoms, ix.atom, "atom");
    build_index(doc.actions, ix.action, "action");
    std::vector<std::string> state_ids;
    for (const auto& s : doc.states) state_ids.push_back(s.id);
    build_index(state_ids, ix.state, "state");

    for (const auto& s : doc.states)
        for (const auto& a : s.label)
            if (!ix.atom.count(a)) issue("dangling-id", "state '" + s.id + "' labeled with unknown atom '" + a + "'");
    if (!ix.state.count(doc.initial)) issue("dangling-id", "unknown initial state '" + doc.initial + "'");

    // protocol shape + references
    for (const auto& [agent, per_state] : doc.protocol) {
        if (!ix.agent.count(agent)) {
            issue("dangling-id", "protocol for unknown agent '" + agent + "'");
            continue;
        }
        for (const auto& [state, acts] : per_state) {
            if (!ix.state.count(state)) issue("dangling-id", "protocol of '" + agent + "' mentions unknown state '" + state + "'");
            if (acts.empty()) issue("shape", "empty protocol for agent '" + agent + "' at state '" + state + "'");
            for (const auto& a : acts)
                if (!ix.action.count(a)) issue("dangling-id", "protocol of '" + agent + "' uses unknown action '" + a + "'");
        }
    }
    for (const auto& a : doc.agents) {
        auto it = doc.protocol.find(a);
        for (const auto& s : doc.states)
            if (it == doc.protocol.end() || !it->second.count(s.id))
                issue("shape", "missing protocol entry for agent '" + a + "' at state '" + s.id + "'");
    }

    for (const auto& t : doc.transitions) {
        if (!ix.state.count(t.from)) issue("dangling-id", "transition from unknown state '" + t.from + "'");
        if (!ix.state.count(t.to)) issue("dangling-id", "transition to unknown state '" + t.to + "'");
        if (t.joint.size() != doc.agents.size())
            issue("shape", "transition from '" + t.from + "' has a joint action of arity " +
                               std::to_string(t.joint.size()) + ", expected " + std::to_string(doc.agents.size()));
        for (const auto& a : t.joint)
            if (!ix.action.count(a)) issue("dangling-id", "transition uses unknown action '" + a + "'");
    }

    // indistinguishability partitions
    for (const auto& [agent, blocks] : doc.indist) {
        if (!ix.agent.count(agent)) {
            issue("dangling-id", "indistinguishability for unknown agent '" + agent + "'");
            continue;
        }
        std::set<std::string> seen;
        for (const auto& block : blocks) {
            if (block.empty()) issue("partition", "agent '" + agent + "' has an empty block");
            for (const auto& s : block) {
                if (!ix.state.count(s)) {
                    issue("dangling-id", "block of '" + agent + "' mentions unknown state '" + s + "'");
                    continue;
                }
                if (!seen.insert(s).second)
                    issue("partition", "state '" + s + "' appears in two blocks of agent '" + agent + "'");
            }
        }
    }

    if (!rep.ok()) return rep;  // remaining checks need a well-formed shape

    // Uniformity: d(i,.) constant on each declared block.
    for (const auto& [agent, blocks] : doc.indist) {
        const auto& per_state = doc.protocol.at(agent);
        for (const auto& block : blocks) {
            const auto& ref = per_state.at(block.front());
            std::set<std::string> ref_set(ref.begin(), ref.end());
            for (const auto& s : block) {
                const auto& cur = per_state.at(s);
                if (std::set<std::string>(cur.begin(), cur.end()) != ref_set)
                    issue("uniformity", "agent '" + agent + "' has differing protocols inside block containing '" +
                                            block.front() + "' (state '" + s + "' differs)");
            }
        }
    }

    // Seriality both ways: every enabled joint action has a successor, and
    // every transition uses only enabled components.
    std::map<std::pair<std::string, std::vector<std::string>>, bool> has_succ;
    for (const auto& t : doc.transitions) {
        bool enabled = true;
        for (size_t i = 0; i < doc.agents.size(); ++i) {
            const auto& acts = doc.protocol.at(doc.agents[i]).at(t.from);
            if (std::find(acts.begin(), acts.end(), t.joint[i]) == acts.end()) {
                issue("seriality", "transition from '" + t.from + "' uses action '" + t.joint[i] +
                                       "' not enabled for agent '" + doc.agents[i] + "'");
                enabled = false;
            }
        }
        if (enabled) has_succ[{t.from, t.joint}] = true;
    }
    for (const auto& s : doc.states) {
        std::vector<std::vector<std::string>> acts;
        for (const auto& a : doc.agents) acts.push_back(doc.protocol.at(a).at(s.id));
        std::vector<size_t> cur(acts.size(), 0);
        while (true) {
            std::vector<std::string> joint;
            for (size_t i = 0; i < acts.size(); ++i) joint.push_back(acts[i][cur[i]]);
            if (!has_succ.count({s.id, joint})) {
                std::string j;
                for (const auto& a : joint) j += (j.empty() ? "" : ",") + a;
                issue("seriality", "no successor for state '" + s.id + "' under enabled joint action (" + j + ")");
            }
            size_t k = acts.size();
            while (k > 0) {
                if (++cur[k - 1] < acts[k - 1].size()) break;
                cur[k - 1] = 0;
                --k;
            }
            if (k == 0) break;
        }
    }

    return rep;
}

Icgs compile(const ModelDoc& doc) {
    ValidationReport rep = validate(doc);
    if (!rep.ok()) throw Error("invalid model:\n" + rep.to_string());

    Icgs m;
    m.agents = doc.agents;
    m.atoms = doc.atoms;
    m.actions = doc.actions;
    for (const auto& s : doc.states) m.state_names.push_back(s.id);

    auto agent_ix = index_of(m.agents);
    auto atom_ix = index_of(m.atoms);
    auto action_ix = index_of(m.actions);
    auto state_ix = index_of(m.state_names);

    m.initial = state_ix.at(doc.initial);
    m.bits_per_agent = bits_for(std::max<size_t>(m.actions.size(), 2));

    m.labels.assign(m.n_states(), 0);
    for (const auto& s : doc.states) {
        uint64_t mask = 0;
        for (const auto& a : s.label) mask |= uint64_t{1} << atom_ix.at(a);
        m.labels[state_ix.at(s.id)] = mask;
    }

    m.protocol.assign(m.n_agents(), std::vector<uint32_t>(m.n_states(), 0));
    for (const auto& [agent, per_state] : doc.protocol) {
        AgentId i = agent_ix.at(agent);
        for (const auto& [state, acts] : per_state) {
            uint32_t mask = 0;
            for (const auto& a : acts) mask |= uint32_t{1} << action_ix.at(a);
            m.protocol[i][state_ix.at(state)] = mask;
        }
    }

    // blocks: declared blocks first, remaining states become singletons
    m.agent_block.assign(m.n_agents(), {});
    m.block_offset.assign(m.n_agents(), {});
    m.block_states.assign(m.n_agents(), {});
    for (AgentId i = 0; i < m.n_agents(); ++i) {
        std::vector<uint32_t>& block_of = m.agent_block[i];
        block_of.assign(m.n_states(), UINT32_MAX);
        std::vector<std::vector<StateId>> blocks;
        auto it = doc.indist.find(m.agents[i]);
        if (it != doc.indist.end()) {
            for (const auto& block : it->second) {
                std::vector<StateId> members;
                for (const auto& s : block) members.push_back(state_ix.at(s));
                std::sort(members.begin(), members.end());
                for (StateId s : members) block_of[s] = static_cast<uint32_t>(blocks.size());
                blocks.push_back(std::move(members));
            }
        }
        for (StateId s = 0; s < m.n_states(); ++s)
            if (block_of[s] == UINT32_MAX) {
                block_of[s] = static_cast<uint32_t>(blocks.size());
                blocks.push_back({s});
            }
        m.block_offset[i].push_back(0);
        for (auto& b : blocks) {
            for (StateId s : b) m.block_states[i].push_back(s);
            m.block_offset[i].push_back(static_cast<uint32_t>(m.block_states[i].size()));
        }
    }

    struct RawEdge {
        StateId from;
        JointAction joint;
        StateId to;
    };
    std::vector<RawEdge> raw;
    raw.reserve(doc.transitions.size());
    for (const auto& t : doc.transitions) {
        std::vector<ActionId> per_agent;
        for (const auto& a : t.joint) per_agent.push_back(action_ix.at(a));
        raw.push_back({state_ix.at(t.from), m.pack_joint(per_agent), state_ix.at(t.to)});
    }
    std::sort(raw.begin(), raw.end(), [](const RawEdge& a, const RawEdge& b) {
        return std::tie(a.from, a.joint, a.to) < std::tie(b.from, b.joint, b.to);
    });
    raw.erase(std::unique(raw.begin(), raw.end(),
                          [](const RawEdge& a, const RawEdge& b) {
                              return a.from == b.from && a.joint == b.joint && a.to == b.to;
                          }),
              raw.end());

    m.edge_offset.assign(m.n_states() + 1, 0);
    for (const auto& e : raw) ++m.edge_offset[e.from + 1];
    std::partial_sum(m.edge_offset.begin(), m.edge_offset.end(), m.edge_offset.begin());
    m.edges.resize(raw.size());
    {
        std::vector<uint64_t> cursor(m.edge_offset.begin(), m.edge_offset.end() - 1);
        for (const auto& e : raw) m.edges[cursor[e.from]++] = {e.joint, e.to};
    }
    return m;
}

ModelDoc to_doc(const Icgs& m) {
    ModelDoc doc;
    doc.agents = m.agents;
    doc.atoms = m.atoms;
    doc.actions = m.actions;
    doc.initial = m.state_names[m.initial];
    for (StateId s = 0; s < m.n_states(); ++s) {
        ModelDoc::StateDecl d;
        d.id = m.state_names[s];
        for (AtomId a = 0; a < m.n_atoms(); ++a)
            if (m.has_atom(s, a)) d.label.push_back(m.atoms[a]);
        doc.states.push_back(std::move(d));
    }
    for (AgentId i = 0; i < m.n_agents(); ++i) {
        auto& per_state = doc.protocol[m.agents[i]];
        for (StateId s = 0; s < m.n_states(); ++s) {
            std::vector<std::string> acts;
            for (ActionId a = 0; a < m.n_actions(); ++a)
                if ((m.protocol[i][s] >> a) & 1) acts.push_back(m.actions[a]);
            per_state[m.state_names[s]] = std::move(acts);
        }
    }
    for (StateId s = 0; s < m.n_states(); ++s)
        for (const auto& e : m.edges_of(s)) {
            ModelDoc::TransDecl t;
            t.from = m.state_names[s];
            t.to = m.state_names[e.to];
            for (AgentId i = 0; i < m.n_agents(); ++i)
                t.joint.push_back(m.actions[m.joint_component(e.joint, i)]);
            doc.transitions.push_back(std::move(t));
        }
    for (AgentId i = 0; i < m.n_agents(); ++i) {
        std::vector<std::vector<std::string>> blocks;
        for (uint32_t b = 0; b + 1 < m.block_offset[i].size(); ++b) {
            auto members = m.block_members(i, b);
            if (members.size() < 2) continue;  // singletons omitted
            std::vector<std::string> names;
            for (StateId s : members) names.push_back(m.state_names[s]);
            blocks.push_back(std::move(names));
        }
        if (!blocks.empty()) doc.indist[m.agents[i]] = std::move(blocks);
    }
    return doc;
}

ValidationReport validate(const Icgs& m) {
    return validate(to_doc(m));
}

void Icgs::assign_from(const Icgs& o) {
    agents = o.agents;
    atoms = o.atoms;
    actions = o.actions;
    state_names = o.state_names;
    initial = o.initial;
    labels = o.labels;
    protocol = o.protocol;
    agent_block = o.agent_block;
    block_offset = o.block_offset;
    block_states = o.block_states;
    edge_offset = o.edge_offset;
    edges = o.edges;
    bits_per_agent = o.bits_per_agent;
    ckn_cache_.clear();
    group_cache_.clear();
    reverse_.reset();
    name_index_.reset();
}

const Icgs::ReverseEdges& Icgs::reverse_edges() const {
    std::lock_guard<std::mutex> lock(ckn_mutex_);
    if (reverse_) return *reverse_;
    auto rev = std::make_unique<ReverseEdges>();
    rev->offset.assign(n_states() + 1, 0);
    for (const auto& e : edges) ++rev->offset[e.to + 1];
    std::partial_sum(rev->offset.begin(), rev->offset.end(), rev->offset.begin());
    rev->src.resize(edges.size());
    rev->edge_index_of.resize(edges.size());
    std::vector<uint64_t> cursor(rev->offset.begin(), rev->offset.end() - 1);
    for (StateId s = 0; s < n_states(); ++s)
        for (uint64_t e = edge_offset[s]; e < edge_offset[s + 1]; ++e) {
            uint64_t slot = cursor[edges[e].to]++;
            rev->src[slot] = s;
            rev->edge_index_of[slot] = static_cast<uint32_t>(e);
        }
    reverse_ = std::move(rev);
    return *reverse_;
}

const Icgs::CoalitionGroups& Icgs::coalition_groups(const Coalition& a) const {
    uint64_t key = coalition_mask(a);
    std::lock_guard<std::mutex> lock(ckn_mutex_);
    auto it = group_cache_.find(key);
    if (it != group_cache_.end()) return *it->second;

    uint64_t proj_mask = 0;
    for (AgentId i : a)
        proj_mask |= ((uint64_t{1} << bits_per_agent) - 1) << (bits_per_agent * i);

    auto g = std::make_unique<CoalitionGroups>();
    g->edge_group.resize(edges.size());
    g->state_groups.assign(n_states(), 0);
    std::vector<std::pair<uint64_t, uint32_t>> local;  // (projection, group id)
    for (StateId s = 0; s < n_states(); ++s) {
        local.clear();
        for (uint64_t e = edge_offset[s]; e < edge_offset[s + 1]; ++e) {
            uint64_t proj = edges[e].joint & proj_mask;
            auto lit = std::find_if(local.begin(), local.end(),
                                    [&](const auto& p) { return p.first == proj; });
            if (lit == local.end()) {
                uint32_t id = static_cast<uint32_t>(g->group_state.size());
                g->group_state.push_back(s);
                g->group_size.push_back(0);
                local.push_back({proj, id});
                lit = local.end() - 1;
            }
            g->edge_group[e] = lit->second;
            ++g->group_size[lit->second];
        }
        g->state_groups[s] = static_cast<uint32_t>(local.size());
    }
    auto& slot = group_cache_[key];
    slot = std::move(g);
    return *slot;
}

JointAction Icgs::pack_joint(std::span<const ActionId> per_agent) const {
    JointAction j = 0;
    for (size_t i = 0; i < per_agent.size(); ++i)
        j |= static_cast<uint64_t>(per_agent[i]) << (bits_per_agent * i);
    return j;
}

std::vector<JointAction> Icgs::enabled_joint_actions(StateId s) const {
    if (s >= n_states()) throw Error("unknown state index " + std::to_string(s));
    std::vector<std::vector<ActionId>> opts(n_agents());
    for (AgentId i = 0; i < n_agents(); ++i) {
        uint32_t mask = protocol[i][s];
        for (ActionId a = 0; a < n_actions(); ++a)
            if ((mask >> a) & 1) opts[i].push_back(a);
        if (opts[i].empty()) throw Error("empty protocol at state " + state_names[s]);
    }
    std::vector<JointAction> out;
    std::vector<size_t> cur(n_agents(), 0);
    while (true) {
        JointAction j = 0;
        for (AgentId i = 0; i < n_agents(); ++i)
            j |= static_cast<uint64_t>(opts[i][cur[i]]) << (bits_per_agent * i);
        out.push_back(j);
        size_t k = n_agents();
        while (k > 0) {
            if (++cur[k - 1] < opts[k - 1].size()) break;
            cur[k - 1] = 0;
            --k;
        }
        if (k == 0) break;
    }
    // agent-major lexicographic order (first agent most significant)
    std::sort(out.begin(), out.end(), [&](JointAction a, JointAction b) {
        for (AgentId i = 0; i < n_agents(); ++i) {
            ActionId ai = joint_component(a, i), bi = joint_component(b, i);
            if (ai != bi) return ai < bi;
        }
        return false;
    });
    return out;
}

bool Icgs::joint_enabled(StateId s, JointAction j) const {
    for (AgentId i = 0; i < n_agents(); ++i)
        if (!((protocol[i][s] >> joint_component(j, i)) & 1)) return false;
    return true;
}

std::vector<StateId> Icgs::successors(StateId s, JointAction j) const {
    if (s >= n_states()) throw Error("unknown state index " + std::to_string(s));
    if (!joint_enabled(s, j)) throw Error("joint action disabled at state " + state_names[s]);
    std::vector<StateId> out;
    auto es = edges_of(s);
    auto lo = std::lower_bound(es.begin(), es.end(), j,
                               [](const Edge& e, JointAction v) { return e.joint < v; });
    for (auto it = lo; it != es.end() && it->joint == j; ++it) out.push_back(it->to);
    return out;
}

std::vector<StateId> Icgs::ekn(const Coalition& a, StateId s) const {
    if (a.empty()) return {s};
    std::vector<StateId> out;
    for (AgentId i : a) {
        auto mem = block_members(i, block_of(i, s));
        out.insert(out.end(), mem.begin(), mem.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

struct UnionFind {
    std::vector<uint32_t> parent;
    explicit UnionFind(size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    uint32_t find(uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(uint32_t a, uint32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

const CknPartition& Icgs::ckn(const Coalition& a) const {
    uint64_t key = coalition_mask(a);
    std::lock_guard<std::mutex> lock(ckn_mutex_);
    auto it = ckn_cache_.find(key);
    if (it != ckn_cache_.end()) return *it->second;

    auto part = std::make_unique<CknPartition>();
    UnionFind uf(n_states());
    for (AgentId i : a) {
        for (uint32_t b = 0; b + 1 < block_offset[i].size(); ++b) {
            auto mem = block_members(i, b);
            for (size_t k = 1; k < mem.size(); ++k) uf.unite(mem[0], mem[k]);
        }
    }
    // classes numbered by lowest member
    std::unordered_map<uint32_t, uint32_t> class_id;
    part->class_of.resize(n_states());
    std::vector<std::vector<StateId>> groups;
    for (StateId s = 0; s < n_states(); ++s) {
        uint32_t root = uf.find(s);
        auto [cit, inserted] = class_id.emplace(root, static_cast<uint32_t>(groups.size()));
        if (inserted) groups.push_back({});
        part->class_of[s] = cit->second;
        groups[cit->second].push_back(s);
    }
    part->offset.push_back(0);
    for (auto& g : groups) {
        for (StateId s : g) part->members.push_back(s);
        part->offset.push_back(static_cast<uint32_t>(part->members.size()));
    }
    auto& slot = ckn_cache_[key];
    slot = std::move(part);
    return *slot;
}

std::vector<StateId> Icgs::ckn_members(const Coalition& a, StateId s) const {
    if (a.empty()) return {s};
    auto mem = ckn(a).members_of(s);
    return {mem.begin(), mem.end()};
}

StateSet Icgs::reachable() const {
    StateSet seen(static_cast<uint32_t>(n_states()));
    std::deque<StateId> open{initial};
    seen.set(initial);
    while (!open.empty()) {
        StateId s = open.front();
        open.pop_front();
        for (const auto& e : edges_of(s))
            if (!seen.test(e.to)) {
                seen.set(e.to);
                open.push_back(e.to);
            }
    }
    return seen;
}

std::optional<StateId> Icgs::find_state(const std::string& name) const {
    std::lock_guard<std::mutex> lock(ckn_mutex_);
    if (!name_index_) {
        name_index_ = std::make_unique<std::map<std::string, StateId>>();
        for (StateId s = 0; s < n_states(); ++s) name_index_->emplace(state_names[s], s);
    }
    auto it = name_index_->find(name);
    if (it == name_index_->end()) return std::nullopt;
    return it->second;
}

std::optional<AgentId> Icgs::find_agent(const std::string& name) const {
    for (AgentId i = 0; i < n_agents(); ++i)
        if (agents[i] == name) return i;
    return std::nullopt;
}

std::optional<AtomId> Icgs::find_atom(const std::string& name) const {
    for (AtomId i = 0; i < n_atoms(); ++i)
        if (atoms[i] == name) return i;
    return std::nullopt;
}

std::optional<ActionId> Icgs::find_action(const std::string& name) const {
    for (ActionId i = 0; i < n_actions(); ++i)
        if (actions[i] == name) return i;
    return std::nullopt;
}

StateId Icgs::state_or_throw(const std::string& name) const {
    auto s = find_state(name);
    if (!s) throw Error("unknown state '" + name + "'");
    return *s;
}

AgentId Icgs::agent_or_throw(const std::string& name) const {
    auto a = find_agent(name);
    if (!a) throw Error("unknown agent '" + name + "'");
    return *a;
}

Coalition Icgs::coalition_from_names(const std::vector<std::string>& names) const {
    Coalition a;
    for (const auto& n : names) a.push_back(agent_or_throw(n));
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

}  // namespace ibis
