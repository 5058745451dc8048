#include "ibis/mc.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <thread>
#include <unordered_map>

namespace ibis {

const char* semantics_name(Semantics s) {
    switch (s) {
        case Semantics::Subjective: return "subjective";
        case Semantics::Objective: return "objective";
        case Semantics::PerfectInfo: return "perfect";
    }
    return "?";
}

std::optional<Semantics> semantics_from_name(const std::string& s) {
    if (s == "subjective" || s == "subj") return Semantics::Subjective;
    if (s == "objective" || s == "obj") return Semantics::Objective;
    if (s == "perfect" || s == "perfect-info" || s == "ir") return Semantics::PerfectInfo;
    return std::nullopt;
}

namespace {

// Worklist fixpoints over the full transition relation (all enabled joint
// actions). Linear in the number of edges via the predecessor lists.

// A X t1
StateSet univ_next(const Icgs& m, const StateSet& t1) {
    StateSet r(static_cast<uint32_t>(m.n_states()));
    for (StateId s = 0; s < m.n_states(); ++s) {
        bool ok = true;
        for (const auto& e : m.edges_of(s))
            if (!t1.test(e.to)) {
                ok = false;
                break;
            }
        r.assign(s, ok);
    }
    return r;
}

// least fixpoint of Z = t2 | (t1 & AX Z)
StateSet univ_until(const Icgs& m, const StateSet& t1, const StateSet& t2) {
    uint32_t n = static_cast<uint32_t>(m.n_states());
    const auto& rev = m.reverse_edges();
    StateSet z(n);
    std::vector<uint32_t> remaining(n);
    for (StateId s = 0; s < n; ++s)
        remaining[s] = static_cast<uint32_t>(m.edge_offset[s + 1] - m.edge_offset[s]);
    std::vector<StateId> queue;
    t2.for_each([&](StateId s) {
        z.set(s);
        queue.push_back(s);
    });
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        StateId u = queue[qi];
        for (uint64_t e = rev.offset[u]; e < rev.offset[u + 1]; ++e) {
            StateId s = rev.src[e];
            if (--remaining[s] == 0 && !z.test(s) && t1.test(s)) {
                z.set(s);
                queue.push_back(s);
            }
        }
    }
    return z;
}

// greatest fixpoint of Z = t2 & (t1 | AX Z)
StateSet univ_release(const Icgs& m, const StateSet& t1, const StateSet& t2) {
    uint32_t n = static_cast<uint32_t>(m.n_states());
    const auto& rev = m.reverse_edges();
    StateSet z(n, true);
    std::vector<StateId> queue;
    auto remove = [&](StateId s) {
        z.reset(s);
        queue.push_back(s);
    };
    for (StateId s = 0; s < n; ++s)
        if (!t2.test(s)) remove(s);
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        StateId u = queue[qi];
        for (uint64_t e = rev.offset[u]; e < rev.offset[u + 1]; ++e) {
            StateId s = rev.src[e];
            if (z.test(s) && !t1.test(s)) remove(s);
        }
    }
    return z;
}

// one-step coalition force with perfect information: some joint coalition
// choice whose every completion stays in t1
StateSet coalition_next(const Icgs& m, const Coalition& a, const StateSet& t1) {
    const auto& groups = m.coalition_groups(a);
    std::vector<char> group_ok(groups.group_state.size(), 1);
    for (StateId s = 0; s < m.n_states(); ++s)
        for (uint64_t e = m.edge_offset[s]; e < m.edge_offset[s + 1]; ++e)
            if (!t1.test(m.edges[e].to)) group_ok[groups.edge_group[e]] = 0;
    StateSet r(static_cast<uint32_t>(m.n_states()));
    for (size_t g = 0; g < group_ok.size(); ++g)
        if (group_ok[g]) r.set(groups.group_state[g]);
    return r;
}

// least fixpoint of Z = t2 | (t1 & pre_A Z)
StateSet coalition_until(const Icgs& m, const Coalition& a, const StateSet& t1,
                         const StateSet& t2) {
    uint32_t n = static_cast<uint32_t>(m.n_states());
    const auto& rev = m.reverse_edges();
    const auto& groups = m.coalition_groups(a);
    StateSet z(n);
    std::vector<uint32_t> remaining(groups.group_size);
    std::vector<StateId> queue;
    t2.for_each([&](StateId s) {
        z.set(s);
        queue.push_back(s);
    });
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        StateId u = queue[qi];
        for (uint64_t e = rev.offset[u]; e < rev.offset[u + 1]; ++e) {
            uint32_t g = groups.edge_group[rev.edge_index_of[e]];
            if (--remaining[g] == 0) {
                StateId s = groups.group_state[g];
                if (!z.test(s) && t1.test(s)) {
                    z.set(s);
                    queue.push_back(s);
                }
            }
        }
    }
    return z;
}

// greatest fixpoint of Z = t2 & (t1 | pre_A Z)
StateSet coalition_release(const Icgs& m, const Coalition& a, const StateSet& t1,
                           const StateSet& t2) {
    uint32_t n = static_cast<uint32_t>(m.n_states());
    const auto& rev = m.reverse_edges();
    const auto& groups = m.coalition_groups(a);
    StateSet z(n, true);
    std::vector<uint32_t> group_bad(groups.group_state.size(), 0);
    std::vector<uint32_t> good(groups.state_groups);
    std::vector<StateId> queue;
    auto remove = [&](StateId s) {
        z.reset(s);
        queue.push_back(s);
    };
    for (StateId s = 0; s < n; ++s)
        if (!t2.test(s)) remove(s);
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        StateId u = queue[qi];
        for (uint64_t e = rev.offset[u]; e < rev.offset[u + 1]; ++e) {
            uint32_t g = groups.edge_group[rev.edge_index_of[e]];
            if (group_bad[g]++ == 0) {
                StateId s = groups.group_state[g];
                if (--good[s] == 0 && z.test(s) && !t1.test(s)) remove(s);
            }
        }
    }
    return z;
}

}  // namespace

Labeler::Labeler(const Icgs& m, Semantics sem, McOptions opt) : m_(m), sem_(sem), opt_(opt) {
    owned_.reserve(4);
    owned_.emplace_back(static_cast<uint32_t>(m.n_states()), true);   // full
    owned_.emplace_back(static_cast<uint32_t>(m.n_states()), false);  // empty
}

const StateSet& Labeler::label(const FormulaPtr& f) { return label_impl(f); }

TruthSet Labeler::truth_set(const FormulaPtr& f) { return {f, sem_, label_impl(f)}; }

bool Labeler::check(StateId s, const FormulaPtr& f) {
    if (s >= m_.n_states()) throw Error("unknown state index");
    return label_impl(f).test(s);
}

CheckResult Labeler::check_with_witness(StateId s, const FormulaPtr& f) {
    CheckResult r{check(s, f), std::nullopt};
    if (r.value && f->op == StateOp::Coalition && !f->agents.empty() &&
        sem_ != Semantics::PerfectInfo) {
        UniformStrategy w;
        eval_coalition(f, &w, s);
        r.witness = std::move(w);
    }
    return r;
}

const StateSet& Labeler::label_impl(const FormulaPtr& f) {
    if (!f) throw Error("null formula");
    auto it = memo_.find(f.get());
    if (it != memo_.end()) return it->second;

    uint32_t n = static_cast<uint32_t>(m_.n_states());
    StateSet r(n);
    switch (f->op) {
        case StateOp::Atom: {
            auto a = m_.find_atom(f->atom);
            if (!a) throw Error("unknown atom '" + f->atom + "'");
            for (StateId s = 0; s < n; ++s)
                if (m_.has_atom(s, *a)) r.set(s);
            break;
        }
        case StateOp::True: r.fill(); break;
        case StateOp::False: break;
        case StateOp::Not: r = label_impl(f->lhs).complement(); break;
        case StateOp::And: {
            r = label_impl(f->lhs);
            r &= label_impl(f->rhs);
            break;
        }
        case StateOp::Or: {
            r = label_impl(f->lhs);
            r |= label_impl(f->rhs);
            break;
        }
        case StateOp::Implies: {
            r = label_impl(f->lhs).complement();
            r |= label_impl(f->rhs);
            break;
        }
        case StateOp::K: {
            AgentId i = m_.agent_or_throw(f->agents[0]);
            const StateSet& t = label_impl(f->lhs);
            for (uint32_t b = 0; b + 1 < m_.block_offset[i].size(); ++b) {
                auto mem = m_.block_members(i, b);
                bool all = std::all_of(mem.begin(), mem.end(), [&](StateId s) { return t.test(s); });
                if (all)
                    for (StateId s : mem) r.set(s);
            }
            break;
        }
        case StateOp::E: {
            Coalition a = m_.coalition_from_names(f->agents);
            const StateSet& t = label_impl(f->lhs);
            if (a.empty()) {
                r = t;
                break;
            }
            r.fill();
            for (AgentId i : a) {
                StateSet agent_ok(n);
                for (uint32_t b = 0; b + 1 < m_.block_offset[i].size(); ++b) {
                    auto mem = m_.block_members(i, b);
                    bool all = std::all_of(mem.begin(), mem.end(), [&](StateId s) { return t.test(s); });
                    if (all)
                        for (StateId s : mem) agent_ok.set(s);
                }
                r &= agent_ok;
            }
            break;
        }
        case StateOp::C: {
            Coalition a = m_.coalition_from_names(f->agents);
            const StateSet& t = label_impl(f->lhs);
            if (a.empty()) {
                r = t;
                break;
            }
            const CknPartition& part = m_.ckn(a);
            for (uint32_t c = 0; c < part.n_classes(); ++c) {
                auto mem = part.members_of_class(c);
                bool all = std::all_of(mem.begin(), mem.end(), [&](StateId s) { return t.test(s); });
                if (all)
                    for (StateId s : mem) r.set(s);
            }
            break;
        }
        case StateOp::AG: {
            const StateSet& t = label_impl(f->lhs);
            PathCondition pc{PathOp::R, &owned_[1], &t};  // G t == false R t
            r = universal_set(pc);
            break;
        }
        case StateOp::Coalition: r = eval_coalition(f, nullptr, std::nullopt); break;
    }
    auto [mit, _] = memo_.emplace(f.get(), std::move(r));
    retained_.push_back(f);
    return mit->second;
}

Labeler::PathCondition Labeler::normalize_path(const FormulaPtr& f, const StateSet*& hold1,
                                               const StateSet*& hold2) {
    const StateSet& full = owned_[0];
    const StateSet& empty = owned_[1];
    switch (f->path) {
        case PathOp::X: hold1 = &label_impl(f->lhs); return {PathOp::X, hold1, nullptr};
        case PathOp::F: hold2 = &label_impl(f->lhs); return {PathOp::U, &full, hold2};
        case PathOp::G: hold2 = &label_impl(f->lhs); return {PathOp::R, &empty, hold2};
        case PathOp::U:
            hold1 = &label_impl(f->lhs);
            hold2 = &label_impl(f->rhs);
            return {PathOp::U, hold1, hold2};
        case PathOp::R:
            hold1 = &label_impl(f->lhs);
            hold2 = &label_impl(f->rhs);
            return {PathOp::R, hold1, hold2};
    }
    throw Error("unreachable");
}

StateSet Labeler::universal_set(const PathCondition& pc) const {
    switch (pc.op) {
        case PathOp::X: return univ_next(m_, *pc.t1);
        case PathOp::U: return univ_until(m_, *pc.t1, *pc.t2);
        case PathOp::R: return univ_release(m_, *pc.t1, *pc.t2);
        default: throw Error("unreachable");
    }
}

StateSet Labeler::perfect_info_set(const Coalition& a, const PathCondition& pc) const {
    switch (pc.op) {
        case PathOp::X: return coalition_next(m_, a, *pc.t1);
        case PathOp::U: return coalition_until(m_, a, *pc.t1, *pc.t2);
        case PathOp::R: return coalition_release(m_, a, *pc.t1, *pc.t2);
        default: throw Error("unreachable");
    }
}

namespace {

// Depth-first search over uniform action assignments, expanding only the
// blocks actually reachable from the start set. A candidate is accepted as
// soon as the universal path condition already holds on the relaxed graph
// (unassigned blocks allow every enabled action), which stays sound because
// extra transitions only make the universal condition harder.
struct UniformSearch {
    const Icgs& m;
    const Coalition& a;
    PathOp op;
    const StateSet* t1;
    const StateSet* t2;
    const std::vector<StateId>& start;

    std::map<std::pair<AgentId, uint32_t>, ActionId> assigned;

    bool run(UniformStrategy* witness_out) {
        bool ok = step(witness_out);
        return ok;
    }

private:
    bool edge_allowed(StateId s, const Icgs::Edge& e) const {
        for (AgentId i : a) {
            auto it = assigned.find({i, m.agent_block[i][s]});
            if (it != assigned.end() && m.joint_component(e.joint, i) != it->second) return false;
        }
        return true;
    }

    bool step(UniformStrategy* witness_out) {
        // cone of the current partial assignment
        std::vector<StateId> cone;
        std::unordered_map<StateId, uint32_t> local;
        auto touch = [&](StateId s) {
            auto [it, inserted] = local.emplace(s, static_cast<uint32_t>(cone.size()));
            if (inserted) cone.push_back(s);
        };
        for (StateId s : start) touch(s);
        for (size_t i = 0; i < cone.size(); ++i) {
            StateId s = cone[i];
            for (const auto& e : m.edges_of(s))
                if (edge_allowed(s, e)) touch(e.to);
        }

        // universal condition on the relaxed cone
        uint32_t cn = static_cast<uint32_t>(cone.size());
        StateSet z(cn), step_set(cn);
        auto local_t = [&](const StateSet* t, StateId s) { return t && t->test(s); };
        auto all_next_local = [&](const StateSet& zz, StateSet& out) {
            for (uint32_t i = 0; i < cn; ++i) {
                bool ok = true;
                for (const auto& e : m.edges_of(cone[i])) {
                    if (!edge_allowed(cone[i], e)) continue;
                    if (!zz.test(local.at(e.to))) {
                        ok = false;
                        break;
                    }
                }
                out.assign(i, ok);
            }
        };
        switch (op) {
            case PathOp::X: {
                StateSet t1_local(cn);
                for (uint32_t i = 0; i < cn; ++i) t1_local.assign(i, local_t(t1, cone[i]));
                all_next_local(t1_local, z);
                break;
            }
            case PathOp::U: {
                for (uint32_t i = 0; i < cn; ++i) z.assign(i, local_t(t2, cone[i]));
                bool changed = true;
                while (changed) {
                    changed = false;
                    all_next_local(z, step_set);
                    for (uint32_t i = 0; i < cn; ++i)
                        if (!z.test(i) && local_t(t1, cone[i]) && step_set.test(i)) {
                            z.set(i);
                            changed = true;
                        }
                }
                break;
            }
            case PathOp::R: {
                for (uint32_t i = 0; i < cn; ++i) z.assign(i, local_t(t2, cone[i]));
                bool changed = true;
                while (changed) {
                    changed = false;
                    all_next_local(z, step_set);
                    for (uint32_t i = 0; i < cn; ++i)
                        if (z.test(i) &&
                            !(local_t(t2, cone[i]) && (local_t(t1, cone[i]) || step_set.test(i)))) {
                            z.reset(i);
                            changed = true;
                        }
                }
                break;
            }
            default: throw Error("unreachable");
        }

        bool start_ok = std::all_of(start.begin(), start.end(),
                                    [&](StateId s) { return z.test(local.at(s)); });
        if (start_ok) {
            if (witness_out) {
                PartialStrategy p;
                p.coalition = a;
                for (const auto& [key, act] : assigned) p.pieces.push_back({key.first, key.second, act});
                *witness_out = complete_strategy(m, p);
            }
            return true;
        }

        // pick the lowest unassigned coalition block in the cone
        std::optional<std::pair<AgentId, uint32_t>> pick;
        for (AgentId i : a) {
            for (StateId s : cone) {
                uint32_t b = m.agent_block[i][s];
                std::pair<AgentId, uint32_t> key{i, b};
                if (assigned.count(key)) continue;
                // only branch when the block actually offers a choice
                uint32_t mask = m.protocol[i][s];
                if (__builtin_popcount(mask) < 2) continue;
                if (!pick || key < *pick) pick = key;
            }
        }
        if (!pick) return false;  // fully determined on the cone and still failing

        StateId rep = m.block_members(pick->first, pick->second).front();
        uint32_t mask = m.protocol[pick->first][rep];
        for (ActionId act = 0; act < m.n_actions(); ++act) {
            if (!((mask >> act) & 1)) continue;
            assigned[*pick] = act;
            if (step(witness_out)) return true;
            assigned.erase(*pick);
        }
        return false;
    }
};

}  // namespace

bool Labeler::search_uniform(const Coalition& a, const PathCondition& pc,
                             const std::vector<StateId>& start, UniformStrategy* witness_out) {
    UniformSearch s{m_, a, pc.op, pc.t1, pc.t2, start, {}};
    return s.run(witness_out);
}

StateSet Labeler::eval_coalition(const FormulaPtr& f, UniformStrategy* witness_out,
                                 std::optional<StateId> witness_state) {
    uint32_t n = static_cast<uint32_t>(m_.n_states());
    Coalition a = m_.coalition_from_names(f->agents);
    const StateSet *hold1 = nullptr, *hold2 = nullptr;
    PathCondition pc = normalize_path(f, hold1, hold2);

    if (a.empty()) {
        // no strategy constrains anything: universally quantify all paths
        StateSet r = universal_set(pc);
        return r;
    }
    if (sem_ == Semantics::PerfectInfo) return perfect_info_set(a, pc);

    StateSet lo = universal_set(pc);
    StateSet hi = perfect_info_set(a, pc);

    if (witness_out && witness_state) {
        std::vector<StateId> start = (sem_ == Semantics::Subjective)
                                         ? m_.ekn(a, *witness_state)
                                         : std::vector<StateId>{*witness_state};
        bool in_lo = std::all_of(start.begin(), start.end(), [&](StateId t) { return lo.test(t); });
        if (in_lo) {
            PartialStrategy p;
            p.coalition = a;
            *witness_out = complete_strategy(m_, p);
        } else {
            search_uniform(a, pc, start, witness_out);
        }
        return StateSet(n);  // caller only wants the witness
    }

    StateSet r(n);
    // one search task per distinct start set
    std::vector<std::vector<StateId>> tasks;
    std::vector<std::vector<StateId>> task_states;
    auto classify = [&](std::vector<StateId> start, std::vector<StateId> states) {
        bool in_lo = std::all_of(start.begin(), start.end(), [&](StateId t) { return lo.test(t); });
        if (in_lo) {
            for (StateId s : states) r.set(s);
            return;
        }
        bool in_hi = std::all_of(start.begin(), start.end(), [&](StateId t) { return hi.test(t); });
        if (!in_hi) return;
        tasks.push_back(std::move(start));
        task_states.push_back(std::move(states));
    };
    if (sem_ == Semantics::Subjective && a.size() == 1) {
        // the start set of every block member is the block itself
        AgentId i = a[0];
        for (uint32_t b = 0; b + 1 < m_.block_offset[i].size(); ++b) {
            auto mem = m_.block_members(i, b);
            std::vector<StateId> v(mem.begin(), mem.end());
            classify(v, v);
        }
    } else if (sem_ == Semantics::Objective) {
        for (StateId s = 0; s < n; ++s) {
            if (lo.test(s)) {
                r.set(s);
                continue;
            }
            if (hi.test(s)) {
                tasks.push_back({s});
                task_states.push_back({s});
            }
        }
    } else {
        std::map<std::vector<StateId>, std::vector<StateId>> grouped;
        for (StateId s = 0; s < n; ++s) grouped[m_.ekn(a, s)].push_back(s);
        for (auto& [start, states] : grouped) classify(start, std::move(states));
    }

    std::vector<char> verdicts(tasks.size(), 0);
    auto resolve = [&](size_t i) {
        verdicts[i] = search_uniform(a, pc, tasks[i], nullptr) ? 1 : 0;
    };
    if (opt_.jobs > 1 && tasks.size() > 1) {
        std::atomic<size_t> next{0};
        auto worker = [&] {
            for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) resolve(i);
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < std::min<size_t>(opt_.jobs, tasks.size()); ++t)
            pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    } else {
        for (size_t i = 0; i < tasks.size(); ++i) resolve(i);
    }
    for (size_t i = 0; i < tasks.size(); ++i)
        if (verdicts[i])
            for (StateId s : task_states[i]) r.set(s);
    return r;
}

StateSet label(const Icgs& m, const FormulaPtr& f, Semantics sem) {
    Labeler lab(m, sem);
    return lab.label(f);
}

bool check(const Icgs& m, StateId s, const FormulaPtr& f, Semantics sem) {
    Labeler lab(m, sem);
    return lab.check(s, f);
}

CheckResult check_with_witness(const Icgs& m, StateId s, const FormulaPtr& f, Semantics sem) {
    Labeler lab(m, sem);
    return lab.check_with_witness(s, f);
}

SoundnessReport check_reduction_soundness(const Icgs& m, const FormulaPtr& f) {
    if (!coalition_positive(f))
        throw Error("reduction soundness needs a coalition-positive formula");
    StateSet subj = label(m, f, Semantics::Subjective);
    StateSet obj = label(m, f, Semantics::Objective);
    StateSet perfect = label(m, f, Semantics::PerfectInfo);
    SoundnessReport rep;
    for (StateId s = 0; s < m.n_states(); ++s) {
        if (subj.test(s) && !obj.test(s)) {
            rep.ok = false;
            rep.violations.push_back({Semantics::Subjective, Semantics::Objective, s});
        }
        if (obj.test(s) && !perfect.test(s)) {
            rep.ok = false;
            rep.violations.push_back({Semantics::Objective, Semantics::PerfectInfo, s});
        }
    }
    return rep;
}

}  // namespace ibis
