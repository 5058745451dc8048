#include "ibis/bisim.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace ibis {

const char* bisim_cond_name(BisimCond c) {
    switch (c) {
        case BisimCond::None: return "none";
        case BisimCond::C1a: return "1a";
        case BisimCond::C1b: return "1b";
        case BisimCond::C1c: return "1c";
        case BisimCond::C2: return "2";
        case BisimCond::PreC: return "pre-c'";
    }
    return "?";
}

namespace {

using Pair = std::pair<StateId, StateId>;

struct RelIndex {
    std::vector<Pair> pairs;  // sorted, dedup
    std::vector<uint32_t> left_off, right_off;
    std::vector<StateId> left_part, right_part;  // partners, grouped and sorted

    bool contains(StateId a, StateId b) const {
        auto lo = left_part.begin() + left_off[a];
        auto hi = left_part.begin() + left_off[a + 1];
        return std::binary_search(lo, hi, b);
    }
    std::span<const StateId> partners_of_left(StateId a) const {
        return {left_part.data() + left_off[a], left_part.data() + left_off[a + 1]};
    }
    std::span<const StateId> partners_of_right(StateId b) const {
        return {right_part.data() + right_off[b], right_part.data() + right_off[b + 1]};
    }
};

RelIndex build_index(const Icgs& m, const Icgs& mp, std::vector<Pair> pairs) {
    for (const auto& [a, b] : pairs) {
        if (a >= m.n_states() || b >= mp.n_states()) throw Error("relation pair out of range");
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    RelIndex ix;
    ix.pairs = std::move(pairs);
    ix.left_off.assign(m.n_states() + 1, 0);
    ix.right_off.assign(mp.n_states() + 1, 0);
    for (const auto& [a, b] : ix.pairs) {
        ++ix.left_off[a + 1];
        ++ix.right_off[b + 1];
    }
    std::partial_sum(ix.left_off.begin(), ix.left_off.end(), ix.left_off.begin());
    std::partial_sum(ix.right_off.begin(), ix.right_off.end(), ix.right_off.begin());
    ix.left_part.resize(ix.pairs.size());
    ix.right_part.resize(ix.pairs.size());
    std::vector<uint32_t> lc(ix.left_off.begin(), ix.left_off.end() - 1);
    std::vector<uint32_t> rc(ix.right_off.begin(), ix.right_off.end() - 1);
    for (const auto& [a, b] : ix.pairs) {
        ix.left_part[lc[a]++] = b;
        ix.right_part[rc[b]++] = a;
    }
    for (StateId s = 0; s < m.n_states(); ++s)
        std::sort(ix.left_part.begin() + ix.left_off[s], ix.left_part.begin() + ix.left_off[s + 1]);
    for (StateId s = 0; s < mp.n_states(); ++s)
        std::sort(ix.right_part.begin() + ix.right_off[s], ix.right_part.begin() + ix.right_off[s + 1]);
    return ix;
}

enum class NbhMode { Ckn, Ekn };

// Budget hook shared by the decision search; nullptr disables accounting.
struct BudgetCounter {
    uint64_t left;
    bool spend(uint64_t units) {
        if (units > left) {
            left = 0;
            return false;
        }
        left -= units;
        return true;
    }
};

struct BudgetExhausted {};

void charge(BudgetCounter* budget, uint64_t units) {
    if (budget && !budget->spend(units)) throw BudgetExhausted{};
}

// Cached successor sets under a strategy.
struct SuccCache {
    const Icgs& m;
    const PartialStrategy& s;
    std::unordered_map<StateId, std::vector<StateId>> memo;
    const std::vector<StateId>& of(StateId q) {
        auto it = memo.find(q);
        if (it != memo.end()) return it->second;
        return memo.emplace(q, succ_under(m, q, s)).first->second;
    }
};

// Index of a strategy in the deterministic enumeration over the same domain
// (pieces aligned: both sorted by agent then block).
uint64_t enumeration_index(const Icgs& m, const PartialStrategy& s) {
    uint64_t index = 0;
    for (const auto& p : s.pieces) {
        uint32_t mask = m.protocol[p.agent][m.block_members(p.agent, p.block).front()];
        uint32_t n_opts = static_cast<uint32_t>(__builtin_popcount(mask));
        uint32_t pos = static_cast<uint32_t>(
            __builtin_popcount(mask & ((uint32_t{1} << p.action) - 1)));
        index = index * n_opts + pos;
    }
    return index;
}

// Image strategy guess: give every right block the action the source strategy
// plays on some related left state. Cheap first candidate; the exhaustive
// scan stays behind it.
std::optional<PartialStrategy> transplant(const Icgs& m, const Icgs& mp, const Coalition& a,
                                          const RelIndex& rel, const PartialStrategy& sigma,
                                          const std::vector<StateId>& domain_p) {
    PartialStrategy out;
    out.coalition = a;
    out.domain = domain_p;
    std::set<std::pair<AgentId, uint32_t>> done;
    for (AgentId i : a) {
        for (StateId rp : domain_p) {
            uint32_t bp = mp.block_of(i, rp);
            if (!done.insert({i, bp}).second) continue;
            std::optional<ActionId> act;
            for (StateId member : mp.block_members(i, bp)) {
                for (StateId r : rel.partners_of_right(member)) {
                    act = sigma.action_of(m, i, r);
                    if (act) break;
                }
                if (act) break;
            }
            if (!act) return std::nullopt;
            if (!((mp.protocol[i][mp.block_members(i, bp).front()] >> *act) & 1))
                return std::nullopt;  // action not available on the right
            out.pieces.push_back({i, bp, *act});
        }
    }
    std::sort(out.pieces.begin(), out.pieces.end(), [](const auto& x, const auto& y) {
        return std::tie(x.agent, x.block) < std::tie(y.agent, y.block);
    });
    return out;
}

enum class CheckDepth { CheapOnly, Full };

// One direction of the simulation conditions. `mode` selects the
// neighbourhood family for the strategy-transfer clause; the injectivity
// condition only applies to the Ckn mode.
Verdict verify_one_direction(const Icgs& m, const Icgs& mp, const Coalition& a,
                             const std::vector<Pair>& raw_pairs, NbhMode mode,
                             BudgetCounter* budget, bool want_simulator,
                             CheckDepth depth = CheckDepth::Full) {
    if (raw_pairs.empty()) throw Error("relation is empty");
    RelIndex rel = build_index(m, mp, raw_pairs);

    Verdict v;

    // label agreement
    for (const auto& [q, qp] : rel.pairs) {
        if (m.labels[q] != mp.labels[qp]) {
            v.pass = false;
            v.violated = BisimCond::C1a;
            v.witness = BisimWitness{.q = q, .qp = qp};
            return v;
        }
    }

    // epistemic back-simulation, memoized per (agent, block, block')
    {
        std::unordered_set<uint64_t> seen;
        for (const auto& [q, qp] : rel.pairs) {
            for (AgentId i : a) {
                uint32_t bl = m.block_of(i, q), br = mp.block_of(i, qp);
                uint64_t key = (static_cast<uint64_t>(i) << 56) ^
                               (static_cast<uint64_t>(bl) << 28) ^ br;
                if (!seen.insert(key).second) continue;
                for (StateId rp : mp.block_members(i, br)) {
                    bool found = false;
                    for (StateId r : rel.partners_of_right(rp))
                        if (m.block_of(i, r) == bl) {
                            found = true;
                            break;
                        }
                    if (!found) {
                        v.pass = false;
                        v.violated = BisimCond::C1b;
                        v.witness = BisimWitness{.q = q, .qp = qp, .agent = m.agents[i], .rp = rp};
                        return v;
                    }
                }
            }
        }
    }

    if (depth == CheckDepth::CheapOnly) {
        v.pass = true;
        return v;
    }

    // strategy transfer per linked neighbourhood pair
    struct Group {
        std::vector<StateId> q, qp;    // neighbourhood member lists
        std::vector<uint32_t> linked;  // indices into rel.pairs
    };
    std::vector<Group> groups;
    if (mode == NbhMode::Ckn) {
        const CknPartition& pl = m.ckn(a);
        const CknPartition& pr = mp.ckn(a);
        std::unordered_map<uint64_t, uint32_t> group_of;
        for (uint32_t pi = 0; pi < rel.pairs.size(); ++pi) {
            auto [q, qp] = rel.pairs[pi];
            uint64_t key = (static_cast<uint64_t>(pl.class_of[q]) << 32) | pr.class_of[qp];
            auto [it, inserted] = group_of.emplace(key, static_cast<uint32_t>(groups.size()));
            if (inserted) {
                Group g;
                auto ml = pl.members_of(q);
                auto mr = pr.members_of(qp);
                g.q.assign(ml.begin(), ml.end());
                g.qp.assign(mr.begin(), mr.end());
                groups.push_back(std::move(g));
            }
            groups[it->second].linked.push_back(pi);
        }
    } else {
        std::map<std::pair<std::vector<StateId>, std::vector<StateId>>, uint32_t> group_of;
        for (uint32_t pi = 0; pi < rel.pairs.size(); ++pi) {
            auto [q, qp] = rel.pairs[pi];
            auto key = std::make_pair(m.ekn(a, q), mp.ekn(a, qp));
            auto [it, inserted] = group_of.emplace(key, static_cast<uint32_t>(groups.size()));
            if (inserted) {
                Group g;
                g.q = it->first.first;
                g.qp = it->first.second;
                // all related pairs inside the neighbourhood rectangle
                std::unordered_set<StateId> in_qp(g.qp.begin(), g.qp.end());
                for (StateId r : g.q)
                    for (StateId rp : rel.partners_of_left(r))
                        if (in_qp.count(rp)) {
                            auto pit = std::lower_bound(rel.pairs.begin(), rel.pairs.end(), Pair{r, rp});
                            g.linked.push_back(static_cast<uint32_t>(pit - rel.pairs.begin()));
                        }
                std::sort(g.linked.begin(), g.linked.end());
                g.linked.erase(std::unique(g.linked.begin(), g.linked.end()), g.linked.end());
                groups.push_back(std::move(g));
            }
        }
    }

    if (want_simulator) v.simulator = SimulatorWitness{};
    for (const auto& g : groups) {
        StrategyEnumerator left_en(m, a, g.q);
        StrategyEnumerator right_en(mp, a, g.qp);
        std::vector<PartialStrategy> rights;
        while (auto rs = right_en.next()) rights.push_back(std::move(*rs));
        SimulatorWitness::Entry entry;
        if (want_simulator) {
            entry.domain = g.q;
            entry.domain_p = g.qp;
        }
        std::vector<SuccCache> right_succ;
        right_succ.reserve(rights.size());
        for (const auto& rs : rights) right_succ.emplace_back(SuccCache{mp, rs, {}});

        while (auto sigma = left_en.next()) {
            SuccCache left_succ{m, *sigma, {}};
            auto matches = [&](const PartialStrategy& sp_strat, SuccCache& sp_cache,
                               std::optional<std::tuple<StateId, StateId, StateId>>* fail_out) {
                for (uint32_t pi : g.linked) {
                    auto [r, rp] = rel.pairs[pi];
                    for (StateId sp : sp_cache.of(rp)) {
                        bool covered = false;
                        for (StateId s : left_succ.of(r))
                            if (rel.contains(s, sp)) {
                                covered = true;
                                break;
                            }
                        if (!covered) {
                            if (fail_out && !*fail_out) *fail_out = {r, rp, sp};
                            return false;
                        }
                    }
                }
                return true;
            };

            bool matched = false;
            uint32_t matched_index = 0;
            std::optional<std::tuple<StateId, StateId, StateId>> first_fail;

            // try the transplanted strategy before the exhaustive scan
            if (auto guess = transplant(m, mp, a, rel, *sigma, g.qp)) {
                charge(budget, 1);
                SuccCache guess_cache{mp, *guess, {}};
                if (matches(*guess, guess_cache, &first_fail)) {
                    matched = true;
                    matched_index = static_cast<uint32_t>(enumeration_index(mp, *guess));
                }
                first_fail.reset();
            }
            if (!matched) {
                for (uint32_t ri = 0; ri < rights.size(); ++ri) {
                    charge(budget, 1);
                    if (matches(rights[ri], right_succ[ri],
                                ri == 0 ? &first_fail : nullptr)) {
                        matched = true;
                        matched_index = ri;
                        break;
                    }
                }
            }
            if (!matched) {
                v.pass = false;
                v.violated = (mode == NbhMode::Ckn) ? BisimCond::C1c : BisimCond::PreC;
                auto [r, rp, sp] = first_fail.value_or(std::tuple<StateId, StateId, StateId>{
                    rel.pairs[g.linked.front()].first, rel.pairs[g.linked.front()].second, 0});
                v.witness = BisimWitness{.q = rel.pairs[g.linked.front()].first,
                                         .qp = rel.pairs[g.linked.front()].second,
                                         .r = r,
                                         .rp = rp,
                                         .sp = sp,
                                         .strategy = *sigma};
                return v;
            }
            if (want_simulator) entry.image.push_back(matched_index);
        }
        if (want_simulator) v.simulator->entries.push_back(std::move(entry));
    }

    // neighbourhood injectivity: left partners of one right state share a class
    if (mode == NbhMode::Ckn) {
        const CknPartition& pl = m.ckn(a);
        for (StateId rp = 0; rp < mp.n_states(); ++rp) {
            auto partners = rel.partners_of_right(rp);
            for (size_t k = 1; k < partners.size(); ++k)
                if (pl.class_of[partners[k]] != pl.class_of[partners[0]]) {
                    v.pass = false;
                    v.violated = BisimCond::C2;
                    v.witness = BisimWitness{.q = partners[0], .qp = rp, .rp = rp, .q2 = partners[k]};
                    if (v.simulator) v.simulator.reset();
                    return v;
                }
        }
    }

    v.pass = true;
    return v;
}

std::vector<Pair> swap_pairs(const std::vector<Pair>& pairs) {
    std::vector<Pair> out;
    out.reserve(pairs.size());
    for (const auto& [a, b] : pairs) out.emplace_back(b, a);
    return out;
}

Verdict verify_two_directions(const Icgs& m, const Icgs& mp, const Coalition& a,
                              const std::vector<Pair>& pairs, NbhMode mode,
                              BudgetCounter* budget, bool want_simulator) {
    Verdict fwd = verify_one_direction(m, mp, a, pairs, mode, budget, want_simulator);
    if (!fwd.pass) return fwd;
    Verdict bwd = verify_one_direction(mp, m, a, swap_pairs(pairs), mode, budget, false);
    if (!bwd.pass) {
        bwd.converse = true;
        return bwd;
    }
    return fwd;
}

}  // namespace

Verdict verify_simulation(const Icgs& m, const Icgs& mp, const Coalition& a,
                          const std::vector<Pair>& pairs) {
    return verify_one_direction(m, mp, a, pairs, NbhMode::Ckn, nullptr, true);
}

Verdict verify_bisimulation(const Icgs& m, const Icgs& mp, const Coalition& a,
                            const std::vector<Pair>& pairs) {
    return verify_two_directions(m, mp, a, pairs, NbhMode::Ckn, nullptr, true);
}

Verdict verify_pre_bisimulation(const Icgs& m, const Icgs& mp, const Coalition& a,
                                const std::vector<Pair>& pairs) {
    return verify_two_directions(m, mp, a, pairs, NbhMode::Ekn, nullptr, true);
}

// ---------------------------------------------------------------------------
// A-formula enumeration
// ---------------------------------------------------------------------------

std::vector<FormulaPtr> enumerate_a_formulas(const std::vector<std::string>& atoms,
                                             const std::vector<std::string>& coalition,
                                             size_t max_size, size_t limit) {
    std::vector<std::vector<FormulaPtr>> by_size(max_size + 1);
    std::set<std::string> seen;
    std::vector<FormulaPtr> all;
    auto emit = [&](size_t size, FormulaPtr f) {
        if (limit && all.size() >= limit) return;
        std::string key = print_formula(f);
        if (!seen.insert(std::move(key)).second) return;
        by_size[size].push_back(f);
        all.push_back(std::move(f));
    };

    std::vector<std::string> sorted_atoms = atoms;
    std::sort(sorted_atoms.begin(), sorted_atoms.end());
    for (const auto& p : sorted_atoms)
        if (1 <= max_size) emit(1, f_atom(p));

    std::vector<std::string> members = coalition;
    std::sort(members.begin(), members.end());

    for (size_t size = 2; size <= max_size; ++size) {
        if (limit && all.size() >= limit) break;
        // unary: Not (skipping double negation), K_i, group knowledge
        for (const auto& sub : by_size[size - 1]) {
            if (sub->op != StateOp::Not) emit(size, f_not(sub));
            for (const auto& i : members) emit(size, f_k(i, sub));
            if (!members.empty()) {
                emit(size, f_e(members, sub));
                emit(size, f_c(members, sub));
            }
        }
        // coalition with a unary path operator
        if (size >= 3)
            for (const auto& sub : by_size[size - 2]) {
                emit(size, f_coalition(coalition, PathOp::X, sub));
                emit(size, f_coalition(coalition, PathOp::F, sub));
                emit(size, f_coalition(coalition, PathOp::G, sub));
            }
        // binary boolean and path operators
        for (size_t ls = 1; ls + 1 < size; ++ls) {
            size_t rs = size - 1 - ls;
            if (rs < 1 || rs > max_size) continue;
            for (const auto& l : by_size[ls])
                for (const auto& r : by_size[rs]) {
                    std::string lk = print_formula(l), rk = print_formula(r);
                    if (lk < rk) {  // commutative, one order only
                        emit(size, f_and(l, r));
                        emit(size, f_or(l, r));
                    }
                    if (lk != rk) emit(size, f_implies(l, r));
                }
        }
        if (size >= 4)
            for (size_t ls = 1; ls + 2 < size; ++ls) {
                size_t rs = size - 2 - ls;
                if (rs < 1) continue;
                for (const auto& l : by_size[ls])
                    for (const auto& r : by_size[rs]) {
                        emit(size, f_coalition(coalition, PathOp::U, l, r));
                        emit(size, f_coalition(coalition, PathOp::R, l, r));
                    }
            }
    }
    return all;
}

// ---------------------------------------------------------------------------
// Distinguishing formula search
// ---------------------------------------------------------------------------

std::optional<FormulaPtr> find_distinguishing_formula(const Icgs& m, StateId q, const Icgs& mp,
                                                      StateId qp, const Coalition& a,
                                                      Semantics sem, size_t max_size) {
    if (max_size < 1) throw Error("max_size must be at least 1");
    std::vector<std::string> shared_atoms;
    for (const auto& p : m.atoms)
        if (mp.find_atom(p)) shared_atoms.push_back(p);
    std::sort(shared_atoms.begin(), shared_atoms.end());

    std::vector<std::string> coalition_names;
    for (AgentId i : a) coalition_names.push_back(m.agents[i]);

    Labeler lab_m(m, sem), lab_mp(mp, sem);

    // semantic signature: the two truth sets; operands semantically equal on
    // both models generate nothing new
    struct Sig {
        std::vector<uint64_t> words;
        bool operator<(const Sig& o) const { return words < o.words; }
    };
    auto signature = [&](const FormulaPtr& f) {
        const StateSet& sm = lab_m.label(f);
        const StateSet& sp = lab_mp.label(f);
        Sig sig;
        sm.for_each([&](uint32_t s) { sig.words.push_back(s); });
        sig.words.push_back(UINT64_MAX);
        sp.for_each([&](uint32_t s) { sig.words.push_back(s); });
        return sig;
    };

    std::set<Sig> seen;
    std::vector<std::vector<FormulaPtr>> by_size(max_size + 1);

    auto consider = [&](size_t size, FormulaPtr f) -> std::optional<FormulaPtr> {
        bool tm = lab_m.check(q, f);
        bool tp = lab_mp.check(qp, f);
        if (tm != tp) return f;
        Sig sig = signature(f);
        if (seen.insert(std::move(sig)).second) by_size[size].push_back(std::move(f));
        return std::nullopt;
    };

    for (const auto& p : shared_atoms)
        if (auto hit = consider(1, f_atom(p))) return hit;

    for (size_t size = 2; size <= max_size; ++size) {
        for (const auto& sub : by_size[size - 1]) {
            if (sub->op != StateOp::Not)
                if (auto hit = consider(size, f_not(sub))) return hit;
            for (AgentId i : a)
                if (auto hit = consider(size, f_k(m.agents[i], sub))) return hit;
        }
        if (size >= 3)
            for (const auto& sub : by_size[size - 2]) {
                for (PathOp op : {PathOp::X, PathOp::F, PathOp::G})
                    if (auto hit = consider(size, f_coalition(coalition_names, op, sub))) return hit;
            }
        for (size_t ls = 1; ls + 1 < size; ++ls) {
            size_t rs = size - 1 - ls;
            if (rs < 1) continue;
            for (const auto& l : by_size[ls])
                for (const auto& r : by_size[rs]) {
                    if (auto hit = consider(size, f_and(l, r))) return hit;
                    if (auto hit = consider(size, f_or(l, r))) return hit;
                    if (auto hit = consider(size, f_implies(l, r))) return hit;
                }
        }
        if (size >= 4)
            for (size_t ls = 1; ls + 2 < size; ++ls) {
                size_t rs = size - 2 - ls;
                if (rs < 1) continue;
                for (const auto& l : by_size[ls])
                    for (const auto& r : by_size[rs])
                        for (PathOp op : {PathOp::U, PathOp::R})
                            if (auto hit = consider(size, f_coalition(coalition_names, op, l, r)))
                                return hit;
            }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Bisimilarity decision
// ---------------------------------------------------------------------------

namespace {

// Per matched class pair, the candidate sub-relations in search order. Small
// rectangles are enumerated exhaustively (Gray-code order over pair masks);
// large ones get a bounded list of structured candidates and mark the search
// as truncated.
struct SubrelCandidates {
    std::vector<std::vector<Pair>> list;
    bool exhaustive = true;
};

constexpr size_t kExhaustiveBits = 16;

SubrelCandidates subrel_candidates(const Icgs& m, const Icgs& mp, const Coalition& a,
                                   std::span<const StateId> cl, std::span<const StateId> cr,
                                   std::optional<Pair> required) {
    SubrelCandidates out;
    size_t bits = cl.size() * cr.size();
    auto label_ok = [&](StateId x, StateId y) { return m.labels[x] == mp.labels[y]; };

    if (bits <= kExhaustiveBits) {
        // cell order: (left index major, right index minor)
        std::vector<Pair> cells;
        for (StateId x : cl)
            for (StateId y : cr) cells.emplace_back(x, y);
        uint32_t total = uint32_t{1} << bits;
        for (uint32_t k = 1; k < total; ++k) {
            uint32_t mask = k ^ (k >> 1);  // Gray code
            std::vector<Pair> rel;
            bool ok = true;
            for (size_t b = 0; b < bits && ok; ++b)
                if ((mask >> b) & 1) {
                    if (!label_ok(cells[b].first, cells[b].second)) ok = false;
                    rel.push_back(cells[b]);
                }
            if (!ok || rel.empty()) continue;
            if (required && !std::count(rel.begin(), rel.end(), *required)) continue;
            out.list.push_back(std::move(rel));
        }
        return out;
    }

    out.exhaustive = false;
    // name-aligned identity first
    std::optional<std::vector<Pair>> identity;
    {
        std::vector<Pair> rel;
        bool ok = true;
        for (StateId x : cl) {
            auto y = mp.find_state(m.state_names[x]);
            if (!y || !label_ok(x, *y) ||
                std::find(cr.begin(), cr.end(), *y) == cr.end()) {
                ok = false;
                break;
            }
            rel.emplace_back(x, *y);
        }
        if (ok && (!required || std::count(rel.begin(), rel.end(), *required))) {
            identity = rel;
            out.list.push_back(std::move(rel));
        }
    }
    // label- and block-consistent bijections
    if (cl.size() == cr.size()) {
        struct Backtrack {
            const Icgs& m;
            const Icgs& mp;
            const Coalition& a;
            std::span<const StateId> cl, cr;
            std::optional<Pair> required;
            std::vector<Pair> current;
            std::vector<char> used;
            std::map<std::pair<AgentId, uint32_t>, uint32_t> block_map, block_rmap;
            std::vector<std::vector<Pair>>& sink;
            size_t cap;

            void run(size_t i) {
                if (sink.size() >= cap) return;
                if (i == cl.size()) {
                    if (!required || std::count(current.begin(), current.end(), *required))
                        sink.push_back(current);
                    return;
                }
                StateId x = cl[i];
                for (size_t j = 0; j < cr.size(); ++j) {
                    if (used[j]) continue;
                    StateId y = cr[j];
                    if (m.labels[x] != mp.labels[y]) continue;
                    std::vector<std::pair<AgentId, uint32_t>> added, radded;
                    bool ok = true;
                    for (AgentId ag : a) {
                        uint32_t bx = m.block_of(ag, x), by = mp.block_of(ag, y);
                        auto it = block_map.find({ag, bx});
                        if (it != block_map.end()) {
                            if (it->second != by) {
                                ok = false;
                                break;
                            }
                        } else {
                            auto rit = block_rmap.find({ag, by});
                            if (rit != block_rmap.end()) {
                                ok = false;
                                break;
                            }
                            block_map[{ag, bx}] = by;
                            block_rmap[{ag, by}] = bx;
                            added.push_back({ag, bx});
                            radded.push_back({ag, by});
                        }
                    }
                    if (ok) {
                        used[j] = 1;
                        current.emplace_back(x, y);
                        run(i + 1);
                        current.pop_back();
                        used[j] = 0;
                    }
                    for (const auto& k : added) block_map.erase(k);
                    for (const auto& k : radded) block_rmap.erase(k);
                }
            }
        };
        std::vector<std::vector<Pair>> bijections;
        Backtrack bt{m, mp, a, cl, cr, required, {}, std::vector<char>(cr.size(), 0),
                     {}, {}, bijections, 4096};
        bt.run(0);
        std::sort(bijections.begin(), bijections.end());
        bijections.erase(std::unique(bijections.begin(), bijections.end()), bijections.end());
        for (auto& b : bijections) {
            std::vector<Pair> sorted_b = b;
            std::sort(sorted_b.begin(), sorted_b.end());
            if (identity) {
                std::vector<Pair> sorted_id = *identity;
                std::sort(sorted_id.begin(), sorted_id.end());
                if (sorted_b == sorted_id) continue;
            }
            out.list.push_back(std::move(b));
        }
    }
    // the full label-compatible rectangle
    {
        std::vector<Pair> rel;
        for (StateId x : cl)
            for (StateId y : cr)
                if (label_ok(x, y)) rel.emplace_back(x, y);
        if (!rel.empty() && (!required || std::count(rel.begin(), rel.end(), *required)))
            out.list.push_back(std::move(rel));
    }
    return out;
}

}  // namespace

DecideResult decide_bisimilarity(const Icgs& m, StateId q, const Icgs& mp, StateId qp,
                                 const Coalition& a, uint64_t budget) {
    DecideResult res{DecideResult::BudgetExceeded, std::nullopt, std::nullopt, 0};
    BudgetCounter counter{budget};

    // sound refutation first: a distinguishing A-formula rules bisimilarity out
    for (Semantics sem : {Semantics::Subjective, Semantics::Objective}) {
        if (auto f = find_distinguishing_formula(m, q, mp, qp, a, sem, 4)) {
            res.kind = DecideResult::NotBisimilar;
            res.refutation = f;
            res.budget_used = budget - counter.left;
            return res;
        }
    }

    const CknPartition& pl = m.ckn(a);
    const CknPartition& pr = mp.ckn(a);
    uint32_t seed_l = pl.class_of[q], seed_r = pr.class_of[qp];

    // injective class matchings, seed class fixed
    size_t ncl = pl.n_classes(), ncr = pr.n_classes();
    std::vector<int32_t> match(ncl, -1);  // class -> class or -1 (unmatched)
    std::vector<char> used(ncr, 0);
    bool truncated = false;
    bool found = false;
    std::vector<Pair> witness;

    // candidate sub-relations per (class, class'), lazily computed
    std::map<std::pair<uint32_t, uint32_t>, SubrelCandidates> cand_cache;
    auto candidates = [&](uint32_t cl, uint32_t cr) -> SubrelCandidates& {
        auto key = std::make_pair(cl, cr);
        auto it = cand_cache.find(key);
        if (it != cand_cache.end()) return it->second;
        std::optional<Pair> req;
        if (cl == seed_l && cr == seed_r) req = Pair{q, qp};
        auto c = subrel_candidates(m, mp, a, pl.members_of_class(cl), pr.members_of_class(cr), req);
        if (!c.exhaustive) truncated = true;
        return cand_cache.emplace(key, std::move(c)).first->second;
    };

    // assemble one relation per combination of per-class sub-relation choices
    std::vector<uint32_t> matched_classes;  // left classes, matched order
    std::function<void(std::vector<Pair>&)> try_subrels = [&](std::vector<Pair>& acc) {
        if (found) return;
        size_t depth = 0;
        // iterative odometer over choice lists
        std::vector<SubrelCandidates*> lists;
        std::vector<size_t> cursor;
        for (uint32_t cl : matched_classes) lists.push_back(&candidates(cl, match[cl]));
        for (auto* l : lists)
            if (l->list.empty()) return;
        cursor.assign(lists.size(), 0);
        (void)depth;
        while (!found) {
            std::vector<Pair> rel = acc;
            for (size_t i = 0; i < lists.size(); ++i) {
                const auto& sub = lists[i]->list[cursor[i]];
                rel.insert(rel.end(), sub.begin(), sub.end());
            }
            charge(&counter, 1);
            // cheap label/epistemic screening both ways before the strategy work
            bool plausible =
                verify_one_direction(m, mp, a, rel, NbhMode::Ckn, &counter, false,
                                     CheckDepth::CheapOnly)
                    .pass &&
                verify_one_direction(mp, m, a, swap_pairs(rel), NbhMode::Ckn, &counter, false,
                                     CheckDepth::CheapOnly)
                    .pass;
            if (plausible) {
                Verdict v = verify_two_directions(m, mp, a, rel, NbhMode::Ckn, &counter, false);
                if (v.pass) {
                    found = true;
                    witness = std::move(rel);
                    return;
                }
            }
            size_t k = lists.size();
            while (k > 0) {
                if (++cursor[k - 1] < lists[k - 1]->list.size()) break;
                cursor[k - 1] = 0;
                --k;
            }
            if (k == 0) break;
        }
    };

    // enumerate matchings: seed fixed, all other left classes optionally
    // matched to distinct label-plausible right classes
    std::function<void(uint32_t)> match_classes = [&](uint32_t cl) {
        if (found) return;
        if (cl == ncl) {
            std::vector<Pair> acc;
            try_subrels(acc);
            return;
        }
        if (cl == seed_l) {
            match_classes(cl + 1);
            return;
        }
        for (uint32_t cr = 0; cr < ncr && !found; ++cr) {
            if (used[cr] || cr == seed_r) continue;
            match[cl] = static_cast<int32_t>(cr);
            used[cr] = 1;
            matched_classes.push_back(cl);
            match_classes(cl + 1);
            matched_classes.pop_back();
            used[cr] = 0;
            match[cl] = -1;
        }
        // unmatched
        match_classes(cl + 1);
    };

    try {
        match[seed_l] = static_cast<int32_t>(seed_r);
        used[seed_r] = 1;
        matched_classes.push_back(seed_l);
        match_classes(0);
    } catch (const BudgetExhausted&) {
        res.kind = DecideResult::BudgetExceeded;
        res.budget_used = budget;
        return res;
    }

    res.budget_used = budget - counter.left;
    if (found) {
        res.kind = DecideResult::Bisimilar;
        res.relation = std::move(witness);
    } else if (!truncated) {
        res.kind = DecideResult::NotBisimilar;
    } else {
        res.kind = DecideResult::BudgetExceeded;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

bool run_bisimilarity(const Icgs& m, const LassoRun& run, const Icgs& mp, const LassoRun& runp,
                      const std::vector<Pair>& pairs) {
    if (run.states.empty() || runp.states.empty()) throw Error("empty run");
    if (run.cycle_start >= run.states.size() || runp.cycle_start >= runp.states.size())
        throw Error("lasso cycle start out of range");
    if (run.states.size() != runp.states.size() || run.cycle_start != runp.cycle_start)
        throw Error("lasso shapes differ");
    RelIndex rel = build_index(m, mp, pairs);
    for (size_t i = 0; i < run.states.size(); ++i)
        if (!rel.contains(run.states[i], runp.states[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// SAT reduction family
// ---------------------------------------------------------------------------

bool cnf_satisfiable(const Cnf& f) {
    if (f.n_vars > 24) throw Error("truth-table SAT is limited to 24 variables");
    for (const auto& cl : f.clauses)
        if (cl.empty()) throw Error("empty clause");
    for (uint32_t v = 0; v < (uint32_t{1} << f.n_vars); ++v) {
        bool all = true;
        for (const auto& cl : f.clauses) {
            bool sat = false;
            for (int lit : cl) {
                unsigned var = static_cast<unsigned>(std::abs(lit)) - 1;
                bool val = (v >> var) & 1;
                if ((lit > 0) == val) {
                    sat = true;
                    break;
                }
            }
            if (!sat) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

SatReductionModels sat_reduction_model(const Cnf& f) {
    if (f.clauses.empty()) throw Error("formula has no clauses");
    for (const auto& cl : f.clauses) {
        if (cl.empty()) throw Error("empty clause");
        for (int lit : cl)
            if (lit == 0 || static_cast<unsigned>(std::abs(lit)) > f.n_vars)
                throw Error("literal out of range");
    }

    auto lit_name = [](int lit) {
        return (lit > 0 ? "x" : "nx") + std::to_string(std::abs(lit));
    };

    ModelDoc doc;
    doc.agents = {"1", "2", "3"};
    doc.atoms = {"yes"};

    // actions: one pick per distinct literal, the two valuations, idle
    std::set<int> lits;
    for (const auto& cl : f.clauses)
        for (int lit : cl) lits.insert(lit);
    for (int lit : lits) doc.actions.push_back("pick_" + lit_name(lit));
    doc.actions.push_back("tt");
    doc.actions.push_back("ff");
    doc.actions.push_back("nop");

    struct LitState {
        std::string id;
        size_t clause;
        int lit;
    };
    std::vector<LitState> lit_states;
    for (size_t ci = 0; ci < f.clauses.size(); ++ci) {
        std::set<int> seen;
        for (int lit : f.clauses[ci])
            if (seen.insert(lit).second)
                lit_states.push_back({"c" + std::to_string(ci) + "_" + lit_name(lit), ci, lit});
    }
    for (const auto& ls : lit_states) doc.states.push_back({ls.id, {}});
    doc.states.push_back({"top", {"yes"}});
    doc.states.push_back({"bot", {}});
    doc.initial = lit_states.front().id;

    for (const auto& ls : lit_states) {
        std::vector<std::string> picks;
        std::set<int> seen;
        for (int lit : f.clauses[ls.clause])
            if (seen.insert(lit).second) picks.push_back("pick_" + lit_name(lit));
        doc.protocol["1"][ls.id] = picks;
        doc.protocol["2"][ls.id] = {"tt", "ff"};
        doc.protocol["3"][ls.id] = {"nop"};
    }
    for (const std::string& t : {std::string("top"), std::string("bot")}) {
        doc.protocol["1"][t] = {"nop"};
        doc.protocol["2"][t] = {"nop"};
        doc.protocol["3"][t] = {"nop"};
    }

    auto add_transitions = [&](ModelDoc& d, bool with_skip) {
        for (const auto& ls : lit_states) {
            std::set<int> seen;
            for (int picked : f.clauses[ls.clause]) {
                if (!seen.insert(picked).second) continue;
                for (const std::string& val : {std::string("tt"), std::string("ff")}) {
                    bool to_top;
                    if (picked != ls.lit) {
                        to_top = true;  // wrong literal indicated
                    } else {
                        bool truth = (val == "tt") == (ls.lit > 0);
                        to_top = truth;
                    }
                    d.transitions.push_back(
                        {ls.id, {"pick_" + lit_name(picked), val, "nop"}, to_top ? "top" : "bot"});
                }
            }
            if (with_skip)
                for (const std::string& val : {std::string("tt"), std::string("ff")})
                    d.transitions.push_back({ls.id, {"skip", val, "nop"}, "top"});
        }
        d.transitions.push_back({"top", {"nop", "nop", "nop"}, "top"});
        d.transitions.push_back({"bot", {"nop", "nop", "nop"}, "bot"});
    };

    // indistinguishability: clause blocks for 1, variable blocks for 2, all
    // literal states for 3
    {
        std::map<size_t, std::vector<std::string>> by_clause;
        std::map<unsigned, std::vector<std::string>> by_var;
        std::vector<std::string> all_lits;
        for (const auto& ls : lit_states) {
            by_clause[ls.clause].push_back(ls.id);
            by_var[static_cast<unsigned>(std::abs(ls.lit))].push_back(ls.id);
            all_lits.push_back(ls.id);
        }
        for (auto& [ci, block] : by_clause)
            if (block.size() > 1) doc.indist["1"].push_back(block);
        for (auto& [v, block] : by_var)
            if (block.size() > 1) doc.indist["2"].push_back(block);
        if (all_lits.size() > 1) doc.indist["3"].push_back(all_lits);
    }

    SatReductionModels out;
    {
        ModelDoc base = doc;
        add_transitions(base, false);
        out.g = compile(base);
    }
    {
        ModelDoc primed = doc;
        primed.actions.push_back("skip");
        for (const auto& ls : lit_states) primed.protocol["1"][ls.id].push_back("skip");
        add_transitions(primed, true);
        out.g_prime = compile(primed);
    }
    out.q0 = out.g.state_or_throw(lit_states.front().id);
    return out;
}

}  // namespace ibis
