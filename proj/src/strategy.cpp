#include "ibis/strategy.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace ibis {

bool PartialStrategy::in_domain(StateId s) const {
    return std::binary_search(domain.begin(), domain.end(), s);
}

std::optional<ActionId> PartialStrategy::action_of(const Icgs& m, AgentId agent, StateId s) const {
    uint32_t block = m.block_of(agent, s);
    auto it = std::lower_bound(pieces.begin(), pieces.end(), std::make_pair(agent, block),
                               [](const Piece& p, const std::pair<AgentId, uint32_t>& key) {
                                   return std::tie(p.agent, p.block) < std::tie(key.first, key.second);
                               });
    if (it != pieces.end() && it->agent == agent && it->block == block) return it->action;
    return std::nullopt;
}

bool PartialStrategy::compatible(const Icgs& m, StateId s, JointAction j) const {
    for (AgentId i : coalition) {
        auto a = action_of(m, i, s);
        if (a && m.joint_component(j, i) != *a) return false;
    }
    return true;
}

StrategyEnumerator::StrategyEnumerator(const Icgs& m, Coalition a, std::vector<StateId> domain)
    : m_(m), a_(std::move(a)), domain_(std::move(domain)) {
    std::sort(domain_.begin(), domain_.end());
    domain_.erase(std::unique(domain_.begin(), domain_.end()), domain_.end());
    for (StateId s : domain_)
        if (s >= m_.n_states()) throw Error("strategy domain state out of range");

    for (AgentId i : a_) {
        std::set<uint32_t> blocks;
        for (StateId s : domain_) blocks.insert(m_.block_of(i, s));
        for (uint32_t b : blocks) {
            PieceInfo pi;
            pi.agent = i;
            pi.block = b;
            StateId rep = m_.block_members(i, b).front();
            // protocol is uniform on the block, so the representative decides
            uint32_t mask = m_.protocol[i][rep];
            for (ActionId act = 0; act < m_.n_actions(); ++act)
                if ((mask >> act) & 1) pi.options.push_back(act);
            if (pi.options.empty()) throw Error("empty protocol in block");
            pieces_.push_back(std::move(pi));
        }
    }
    cursor_.assign(pieces_.size(), 0);
}

StrategyEnumerator StrategyEnumerator::all_states(const Icgs& m, Coalition a) {
    std::vector<StateId> all(m.n_states());
    std::iota(all.begin(), all.end(), 0);
    return StrategyEnumerator(m, std::move(a), std::move(all));
}

void StrategyEnumerator::rewind() {
    cursor_.assign(pieces_.size(), 0);
    done_ = false;
    fresh_ = true;
}

std::optional<PartialStrategy> StrategyEnumerator::next() {
    if (done_) return std::nullopt;
    if (!fresh_) {
        // advance odometer, last piece fastest
        size_t k = pieces_.size();
        while (k > 0) {
            if (++cursor_[k - 1] < pieces_[k - 1].options.size()) break;
            cursor_[k - 1] = 0;
            --k;
        }
        if (k == 0) {
            done_ = true;
            return std::nullopt;
        }
    }
    fresh_ = false;
    PartialStrategy s;
    s.coalition = a_;
    s.domain = domain_;
    for (size_t p = 0; p < pieces_.size(); ++p)
        s.pieces.push_back({pieces_[p].agent, pieces_[p].block, pieces_[p].options[cursor_[p]]});
    if (pieces_.empty()) done_ = true;  // single empty assignment
    return s;
}

uint64_t StrategyEnumerator::count() const {
    uint64_t n = 1;
    for (const auto& p : pieces_) {
        uint64_t opts = p.options.size();
        if (n > UINT64_MAX / opts) throw Error("strategy count overflows");
        n *= opts;
    }
    return n;
}

std::vector<PartialStrategy> partial_strategies(const Icgs& m, const Coalition& a,
                                                std::vector<StateId> domain) {
    StrategyEnumerator en(m, a, std::move(domain));
    std::vector<PartialStrategy> out;
    while (auto s = en.next()) out.push_back(std::move(*s));
    return out;
}

std::vector<StateId> succ_under(const Icgs& m, StateId q, const PartialStrategy& s) {
    if (!s.in_domain(q)) throw Error("state outside strategy domain");
    std::vector<StateId> out;
    for (const auto& e : m.edges_of(q))
        if (s.compatible(m, q, e.joint)) out.push_back(e.to);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<StateId> succ_set(const Icgs& m, const PartialStrategy& s) {
    std::vector<StateId> out;
    for (StateId q : s.domain) {
        auto v = succ_under(m, q, s);
        out.insert(out.end(), v.begin(), v.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Icgs materialize_pruned(const Icgs& m, const UniformStrategy& s) {
    if (!s.total(m)) throw Error("pruning needs a total strategy");
    Icgs out = m;
    out.edges.clear();
    out.edge_offset.assign(m.n_states() + 1, 0);
    for (StateId q = 0; q < m.n_states(); ++q) {
        for (const auto& e : m.edges_of(q))
            if (s.compatible(m, q, e.joint)) {
                out.edges.push_back(e);
                ++out.edge_offset[q + 1];
            }
    }
    std::partial_sum(out.edge_offset.begin(), out.edge_offset.end(), out.edge_offset.begin());
    return out;
}

std::vector<StateId> subjective_start_set(const Icgs& m, const Coalition& a, StateId s) {
    return m.ekn(a, s);
}

PartialStrategy restrict_strategy(const Icgs& m, const PartialStrategy& s,
                                  std::vector<StateId> domain) {
    std::sort(domain.begin(), domain.end());
    domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
    PartialStrategy out;
    out.coalition = s.coalition;
    out.domain = domain;
    std::set<std::pair<AgentId, uint32_t>> needed;
    for (AgentId i : s.coalition)
        for (StateId q : domain) needed.insert({i, m.block_of(i, q)});
    for (const auto& p : s.pieces)
        if (needed.count({p.agent, p.block})) out.pieces.push_back(p);
    return out;
}

UniformStrategy complete_strategy(const Icgs& m, const PartialStrategy& s) {
    UniformStrategy out;
    out.coalition = s.coalition;
    out.domain.resize(m.n_states());
    std::iota(out.domain.begin(), out.domain.end(), 0);
    for (AgentId i : s.coalition) {
        for (uint32_t b = 0; b + 1 < m.block_offset[i].size(); ++b) {
            ActionId act;
            auto assigned = std::find_if(s.pieces.begin(), s.pieces.end(), [&](const auto& p) {
                return p.agent == i && p.block == b;
            });
            if (assigned != s.pieces.end()) {
                act = assigned->action;
            } else {
                uint32_t mask = m.protocol[i][m.block_members(i, b).front()];
                act = static_cast<ActionId>(__builtin_ctz(mask));
            }
            out.pieces.push_back({i, b, act});
        }
    }
    std::sort(out.pieces.begin(), out.pieces.end(), [](const auto& a, const auto& b) {
        return std::tie(a.agent, a.block) < std::tie(b.agent, b.block);
    });
    return out;
}

}  // namespace ibis
