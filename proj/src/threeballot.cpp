#include "ibis/threeballot.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace ibis {

const char* tb_variant_name(TbVariant v) {
    switch (v) {
        case TbVariant::Tot: return "tot";
        case TbVariant::Lex: return "lex";
        case TbVariant::Count: return "count";
    }
    return "?";
}

std::optional<TbVariant> tb_variant_from_name(const std::string& s) {
    if (s == "tot") return TbVariant::Tot;
    if (s == "lex") return TbVariant::Lex;
    if (s == "count") return TbVariant::Count;
    return std::nullopt;
}

uint64_t default_state_cap() {
    if (const char* env = std::getenv("IBIS_STATE_CAP")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
        throw Error("IBIS_STATE_CAP must be a positive integer");
    }
    return 25'000'000;
}

std::vector<std::array<uint32_t, 3>> compatible_ballots(unsigned ch, unsigned candidates) {
    if (ch < 1 || ch > candidates) throw Error("candidate choice out of range");
    std::vector<std::array<uint32_t, 3>> out;
    // one mark position per candidate row; the chosen row carries the
    // complement pattern (two marks)
    std::vector<unsigned> pos(candidates, 0);
    while (true) {
        std::array<uint32_t, 3> strips{0, 0, 0};
        for (unsigned k = 0; k < candidates; ++k) {
            for (unsigned j = 0; j < 3; ++j) {
                bool mark = (k + 1 == ch) ? (j != pos[k]) : (j == pos[k]);
                if (mark) strips[j] |= uint32_t{1} << k;
            }
        }
        out.push_back(strips);
        unsigned k = candidates;
        while (k > 0) {
            if (++pos[k - 1] < 3) break;
            pos[k - 1] = 0;
            --k;
        }
        if (k == 0) break;
    }
    return out;
}

namespace {

unsigned bits_for_values(uint64_t n_values) {
    unsigned b = 1;
    while ((uint64_t{1} << b) < n_values) ++b;
    return b;
}

// Bit layout of a packed game state. The reserved all-ones word is the setup
// state that fans out to the initial configurations.
struct Layout {
    unsigned n, c;
    TbVariant variant;
    unsigned bits_ch, bits_strip, bits_count;
    uint32_t bot;  // strip value marking "copied"
    unsigned voter_bits, voters_off, board_off, total_bits;

    explicit Layout(const ThreeBallotConfig& cfg)
        : n(cfg.voters), c(cfg.candidates), variant(cfg.variant) {
        bits_ch = bits_for_values(c);
        bot = uint32_t{1} << c;
        bits_strip = bits_for_values(bot + 1);
        bits_count = bits_for_values(3 * n + 1);
        voter_bits = bits_ch + 1 + 3 * bits_strip;
        voters_off = 2;
        board_off = voters_off + n * voter_bits;
        total_bits = board_off +
                     (variant == TbVariant::Count ? c * bits_count : 3 * n * bits_strip);
        if (total_bits > 63) throw Error("state layout needs " + std::to_string(total_bits) +
                                         " bits; instance too large");
    }

    static constexpr uint64_t kSetup = ~uint64_t{0};

    uint64_t field(uint64_t w, unsigned off, unsigned bits) const {
        return (w >> off) & ((uint64_t{1} << bits) - 1);
    }
    uint64_t put(uint64_t w, unsigned off, unsigned bits, uint64_t v) const {
        uint64_t mask = ((uint64_t{1} << bits) - 1) << off;
        return (w & ~mask) | (v << off);
    }

    bool vopen(uint64_t w) const { return w & 1; }
    bool pub(uint64_t w) const { return (w >> 1) & 1; }
    uint64_t set_vopen(uint64_t w, bool v) const { return put(w, 0, 1, v); }
    uint64_t set_pub(uint64_t w, bool v) const { return put(w, 1, 1, v); }

    unsigned ch(uint64_t w, unsigned i) const {
        return static_cast<unsigned>(field(w, voters_off + i * voter_bits, bits_ch)) + 1;
    }
    uint64_t set_ch(uint64_t w, unsigned i, unsigned ch1) const {
        return put(w, voters_off + i * voter_bits, bits_ch, ch1 - 1);
    }
    bool voted(uint64_t w, unsigned i) const {
        return field(w, voters_off + i * voter_bits + bits_ch, 1);
    }
    uint64_t set_voted(uint64_t w, unsigned i, bool v) const {
        return put(w, voters_off + i * voter_bits + bits_ch, 1, v);
    }
    uint32_t strip(uint64_t w, unsigned i, unsigned j) const {
        return static_cast<uint32_t>(
            field(w, voters_off + i * voter_bits + bits_ch + 1 + j * bits_strip, bits_strip));
    }
    uint64_t set_strip(uint64_t w, unsigned i, unsigned j, uint32_t v) const {
        return put(w, voters_off + i * voter_bits + bits_ch + 1 + j * bits_strip, bits_strip, v);
    }
    uint32_t board(uint64_t w, unsigned l) const {
        return static_cast<uint32_t>(field(w, board_off + l * bits_strip, bits_strip));
    }
    uint64_t set_board(uint64_t w, unsigned l, uint32_t v) const {
        return put(w, board_off + l * bits_strip, bits_strip, v);
    }
    uint32_t counter(uint64_t w, unsigned k) const {
        return static_cast<uint32_t>(field(w, board_off + k * bits_count, bits_count));
    }
    uint64_t set_counter(uint64_t w, unsigned k, uint32_t v) const {
        return put(w, board_off + k * bits_count, bits_count, v);
    }

    bool collectible(uint64_t w) const {
        for (unsigned i = 0; i < n; ++i)
            if (voted(w, i))
                for (unsigned j = 0; j < 3; ++j)
                    if (strip(w, i, j) != bot) return true;
        return false;
    }
};

// Open-addressing map from packed states to dense indices.
class PackedIndex {
public:
    explicit PackedIndex(size_t expect) {
        size_t cap = 64;
        while (cap < expect * 2) cap <<= 1;
        keys_.assign(cap, 0);
        used_.assign(cap, 0);
        vals_.assign(cap, 0);
        mask_ = cap - 1;
    }

    // returns (index, inserted)
    std::pair<uint32_t, bool> insert(uint64_t key, uint32_t next_index) {
        if (2 * (count_ + 1) > keys_.size()) grow();
        size_t h = slot(key);
        while (used_[h]) {
            if (keys_[h] == key) return {vals_[h], false};
            h = (h + 1) & mask_;
        }
        used_[h] = 1;
        keys_[h] = key;
        vals_[h] = next_index;
        ++count_;
        return {next_index, true};
    }

    std::optional<uint32_t> find(uint64_t key) const {
        size_t h = slot(key);
        while (used_[h]) {
            if (keys_[h] == key) return vals_[h];
            h = (h + 1) & mask_;
        }
        return std::nullopt;
    }

private:
    size_t slot(uint64_t key) const {
        uint64_t x = key + 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return (x ^ (x >> 31)) & mask_;
    }
    void grow() {
        std::vector<uint64_t> ok = std::move(keys_);
        std::vector<uint8_t> ou = std::move(used_);
        std::vector<uint32_t> ov = std::move(vals_);
        size_t cap = ok.size() * 2;
        keys_.assign(cap, 0);
        used_.assign(cap, 0);
        vals_.assign(cap, 0);
        mask_ = cap - 1;
        count_ = 0;
        for (size_t i = 0; i < ok.size(); ++i)
            if (ou[i]) {
                size_t h = slot(ok[i]);
                while (used_[h]) h = (h + 1) & mask_;
                used_[h] = 1;
                keys_[h] = ok[i];
                vals_[h] = ov[i];
                ++count_;
            }
    }

    std::vector<uint64_t> keys_;
    std::vector<uint8_t> used_;
    std::vector<uint32_t> vals_;
    size_t mask_ = 0, count_ = 0;
};

std::vector<std::array<uint32_t, 3>> lex_ballots(unsigned ch, unsigned c) {
    auto all = compatible_ballots(ch, c);
    for (auto& t : all) std::sort(t.begin(), t.end(), std::greater<>());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

std::vector<uint64_t> initial_states(const Layout& lay) {
    // per-voter options: (choice, strip triple) in declaration order
    std::vector<std::pair<unsigned, std::array<uint32_t, 3>>> options;
    for (unsigned ch = 1; ch <= lay.c; ++ch) {
        auto ballots = (lay.variant == TbVariant::Tot) ? compatible_ballots(ch, lay.c)
                                                       : lex_ballots(ch, lay.c);
        for (const auto& b : ballots) options.emplace_back(ch, b);
    }

    std::vector<uint64_t> out;
    std::vector<size_t> cursor(lay.n, 0);
    while (true) {
        uint64_t w = 0;
        w = lay.set_vopen(w, true);
        for (unsigned i = 0; i < lay.n; ++i) {
            const auto& [ch, strips] = options[cursor[i]];
            w = lay.set_ch(w, i, ch);
            for (unsigned j = 0; j < 3; ++j) w = lay.set_strip(w, i, j, strips[j]);
        }
        if (lay.variant != TbVariant::Count)
            for (unsigned l = 0; l < 3 * lay.n; ++l) w = lay.set_board(w, l, lay.bot);
        out.push_back(w);
        unsigned k = lay.n;
        while (k > 0) {
            if (++cursor[k - 1] < options.size()) break;
            cursor[k - 1] = 0;
            --k;
        }
        if (k == 0) break;
    }
    return out;
}

// Successor states under one joint action, in deterministic order.
void successors_of(const Layout& lay, uint64_t w, bool env_stop, bool env_collect,
                   bool env_publish, uint64_t voter_votes /*bitmask*/,
                   std::vector<uint64_t>& out) {
    out.clear();
    if (lay.vopen(w)) {
        uint64_t next = lay.set_vopen(w, !env_stop);
        for (unsigned i = 0; i < lay.n; ++i)
            if ((voter_votes >> i) & 1) next = lay.set_voted(next, i, true);
        out.push_back(next);
        return;
    }
    if (env_collect) {
        for (unsigned i = 0; i < lay.n; ++i) {
            if (!lay.voted(w, i)) continue;
            for (unsigned j = 0; j < 3; ++j) {
                uint32_t v = lay.strip(w, i, j);
                if (v == lay.bot) continue;
                uint64_t base = lay.set_strip(w, i, j, lay.bot);
                if (lay.variant == TbVariant::Count) {
                    uint64_t next = base;
                    for (unsigned k = 0; k < lay.c; ++k)
                        if ((v >> k) & 1)
                            next = lay.set_counter(next, k, lay.counter(next, k) + 1);
                    out.push_back(next);
                } else {
                    for (unsigned l = 0; l < 3 * lay.n; ++l) {
                        if (lay.board(w, l) != lay.bot) continue;
                        out.push_back(lay.set_board(base, l, v));
                    }
                }
            }
        }
        return;
    }
    if (env_publish) {
        out.push_back(lay.set_pub(w, true));
        return;
    }
}

}  // namespace

TbModel build(const ThreeBallotConfig& config) {
    if (config.voters < 2) throw Error("need at least two voters (the last one is the attacker)");
    if (config.candidates < 2) throw Error("need at least two candidates");
    Layout lay(config);

    std::vector<uint64_t> inits = initial_states(lay);

    // coarse upper bound on the reachable count, before expansion
    {
        double arrangements = 1.0;
        if (config.variant == TbVariant::Count) {
            arrangements = std::pow(2.0, 3.0 * config.voters) * 2.0;
        } else {
            double sum = 0.0;
            unsigned slots = 3 * config.voters;
            double comb = 1.0;
            for (unsigned m = 0; m <= slots; ++m) {
                double perm = 1.0;
                for (unsigned t = 0; t < m; ++t) perm *= slots - t;
                sum += comb * perm;
                comb = comb * (slots - m) / (m + 1);
            }
            arrangements = sum;
        }
        double estimate = static_cast<double>(inits.size()) *
                          std::pow(2.0, config.voters) * arrangements;
        if (estimate > 4.0 * static_cast<double>(config.state_cap))
            throw Error("state-space estimate " + std::to_string(static_cast<uint64_t>(estimate)) +
                        " exceeds the cap " + std::to_string(config.state_cap));
    }

    // breadth-first expansion over packed states
    std::vector<uint64_t> packed;
    PackedIndex index(inits.size() * 8 + 1024);
    auto intern = [&](uint64_t w) {
        auto [idx, inserted] = index.insert(w, static_cast<uint32_t>(packed.size()));
        if (inserted) {
            packed.push_back(w);
            if (packed.size() > config.state_cap)
                throw Error("reachable state count exceeds the cap " +
                            std::to_string(config.state_cap));
        }
        return idx;
    };

    intern(Layout::kSetup);
    for (uint64_t w : inits) intern(w);

    std::vector<uint64_t> succ_buf;
    for (size_t head = 1; head < packed.size(); ++head) {
        uint64_t w = packed[head];
        if (lay.vopen(w)) {
            for (unsigned stop = 0; stop < 2; ++stop)
                for (uint64_t votes = 0; votes < (uint64_t{1} << lay.n); ++votes) {
                    successors_of(lay, w, stop, false, false, votes, succ_buf);
                    for (uint64_t t : succ_buf) intern(t);
                }
        } else if (lay.collectible(w)) {
            successors_of(lay, w, false, true, false, 0, succ_buf);
            for (uint64_t t : succ_buf) intern(t);
        } else {
            // publish guard: every voter either fully copied or did not vote
            for (unsigned i = 0; i < lay.n; ++i) {
                bool all_bot = lay.strip(w, i, 0) == lay.bot && lay.strip(w, i, 1) == lay.bot &&
                               lay.strip(w, i, 2) == lay.bot;
                if (!all_bot && lay.voted(w, i))
                    throw Error("publish guard violated during generation");
            }
            successors_of(lay, w, false, false, true, 0, succ_buf);
            for (uint64_t t : succ_buf) intern(t);
        }
    }

    TbModel tb;
    tb.config = config;
    unsigned att = config.voters - 1;  // 0-based

    // matching key: non-attacker strip triples in canonical (descending) order
    auto key_of = [&](uint64_t w) -> uint64_t {
        if (w == Layout::kSetup) return Layout::kSetup;
        uint64_t k = w;
        for (unsigned i = 0; i < lay.n; ++i) {
            if (i == att) continue;
            std::array<uint32_t, 3> t{lay.strip(w, i, 0), lay.strip(w, i, 1), lay.strip(w, i, 2)};
            std::sort(t.begin(), t.end(), std::greater<>());
            for (unsigned j = 0; j < 3; ++j) k = lay.set_strip(k, i, j, t[j]);
        }
        return k;
    };

    // canonical state order: setup first, then by (key, packed)
    {
        std::vector<uint32_t> order(packed.size());
        std::iota(order.begin(), order.end(), 0);
        std::vector<uint64_t> keys(packed.size());
        for (size_t i = 0; i < packed.size(); ++i)
            keys[i] = (config.variant == TbVariant::Count) ? packed[i] : key_of(packed[i]);
        std::sort(order.begin() + 1, order.end(), [&](uint32_t x, uint32_t y) {
            if (keys[x] != keys[y]) return keys[x] < keys[y];
            return packed[x] < packed[y];
        });
        std::vector<uint64_t> packed_sorted(packed.size()), keys_sorted(packed.size());
        for (size_t i = 0; i < order.size(); ++i) {
            packed_sorted[i] = packed[order[i]];
            keys_sorted[i] = keys[order[i]];
        }
        tb.packed = std::move(packed_sorted);
        tb.group_key = std::move(keys_sorted);
    }

    // rebuild the dense index on the final order
    PackedIndex final_index(tb.packed.size() * 2 + 16);
    for (uint32_t i = 0; i < tb.packed.size(); ++i) final_index.insert(tb.packed[i], i);

    Icgs& m = tb.model;
    size_t n_states = tb.packed.size();

    m.agents.push_back("env");
    for (unsigned i = 1; i <= config.voters; ++i) m.agents.push_back(std::to_string(i));
    tb.env = 0;
    tb.attacker = config.voters;  // agent index of voter n

    m.atoms.push_back("pub");
    for (unsigned i = 1; i <= config.voters; ++i) m.atoms.push_back("voted_" + std::to_string(i));
    for (unsigned i = 1; i <= config.voters; ++i)
        for (unsigned j = 1; j <= config.candidates; ++j)
            m.atoms.push_back("ch_" + std::to_string(i) + "_eq_" + std::to_string(j));

    m.actions = {"init", "nop", "vote", "stop", "collect", "publish"};
    const ActionId act_init = 0, act_nop = 1, act_vote = 2, act_stop = 3, act_collect = 4,
                   act_publish = 5;
    m.bits_per_agent = 3;

    m.state_names.resize(n_states);
    m.state_names[0] = "setup";
    {
        char buf[24];
        for (size_t i = 1; i < n_states; ++i) {
            std::snprintf(buf, sizeof buf, "x%llx", static_cast<unsigned long long>(tb.packed[i]));
            m.state_names[i] = buf;
        }
    }
    m.initial = 0;

    m.labels.assign(n_states, 0);
    for (size_t s = 1; s < n_states; ++s) {
        uint64_t w = tb.packed[s];
        uint64_t lab = 0;
        if (lay.pub(w)) lab |= 1;
        for (unsigned i = 0; i < config.voters; ++i)
            if (lay.voted(w, i)) lab |= uint64_t{1} << (1 + i);
        for (unsigned i = 0; i < config.voters; ++i) {
            unsigned ch = lay.ch(w, i);
            lab |= uint64_t{1} << (1 + config.voters + i * config.candidates + (ch - 1));
        }
        m.labels[s] = lab;
    }

    // protocols
    m.protocol.assign(m.n_agents(), std::vector<uint32_t>(n_states, 0));
    for (size_t s = 0; s < n_states; ++s) {
        if (s == 0) {
            for (AgentId i = 0; i < m.n_agents(); ++i) m.protocol[i][s] = 1u << act_init;
            continue;
        }
        uint64_t w = tb.packed[s];
        if (lay.vopen(w)) {
            m.protocol[0][s] = (1u << act_stop) | (1u << act_nop);
            for (unsigned i = 0; i < config.voters; ++i)
                m.protocol[1 + i][s] = (1u << act_vote) | (1u << act_nop);
        } else {
            m.protocol[0][s] = lay.collectible(w) ? (1u << act_collect) : (1u << act_publish);
            for (unsigned i = 0; i < config.voters; ++i) m.protocol[1 + i][s] = 1u << act_nop;
        }
    }

    // observation blocks
    {
        m.agent_block.assign(m.n_agents(), std::vector<uint32_t>(n_states, 0));
        m.block_offset.assign(m.n_agents(), {});
        m.block_states.assign(m.n_agents(), {});
        unsigned board_bits = static_cast<unsigned>(
            (config.variant == TbVariant::Count ? config.candidates * lay.bits_count
                                                : 3 * config.voters * lay.bits_strip));
        for (AgentId ag = 0; ag < m.n_agents(); ++ag) {
            // every observed component is a bit range of the packed word, so
            // masking out the unobserved fields is a faithful projection
            uint64_t mask = 3;  // vopen, pub
            mask |= (((uint64_t{1} << board_bits) - 1) << lay.board_off);
            for (unsigned i = 0; i < config.voters; ++i) {
                unsigned base = lay.voters_off + i * lay.voter_bits;
                if (ag == 0) {
                    // environment: voted flags and strips of everyone, no choices
                    mask |= uint64_t{1} << (base + lay.bits_ch);
                    mask |= ((uint64_t{1} << (3 * lay.bits_strip)) - 1)
                            << (base + lay.bits_ch + 1);
                } else if (i == ag - 1) {
                    // voter: own choice, flag and strips
                    mask |= ((uint64_t{1} << lay.voter_bits) - 1) << base;
                }
            }
            std::vector<std::pair<uint64_t, uint32_t>> proj(n_states);
            for (uint32_t s = 0; s < n_states; ++s)
                proj[s] = {tb.packed[s] == Layout::kSetup ? Layout::kSetup : (tb.packed[s] & mask),
                           s};
            std::sort(proj.begin(), proj.end());
            uint32_t block = 0;
            std::vector<uint32_t>& offs = m.block_offset[ag];
            std::vector<StateId>& members = m.block_states[ag];
            offs.push_back(0);
            for (size_t k = 0; k < proj.size(); ++k) {
                if (k > 0 && proj[k].first != proj[k - 1].first) {
                    ++block;
                    offs.push_back(static_cast<uint32_t>(members.size()));
                }
                m.agent_block[ag][proj[k].second] = block;
                members.push_back(proj[k].second);
            }
            offs.push_back(static_cast<uint32_t>(members.size()));
        }
    }

    // transitions
    {
        std::vector<Icgs::Edge> edges;
        m.edge_offset.assign(n_states + 1, 0);
        std::vector<ActionId> joint(m.n_agents());
        auto pack = [&](std::span<const ActionId> j) { return m.pack_joint(j); };
        std::vector<uint64_t> succ_buf2;
        std::vector<Icgs::Edge> local;
        for (uint32_t s = 0; s < n_states; ++s) {
            local.clear();
            if (s == 0) {
                std::fill(joint.begin(), joint.end(), act_init);
                JointAction j = pack(joint);
                for (uint64_t w : inits) {
                    auto idx = final_index.find(w);
                    local.push_back({j, *idx});
                }
            } else {
                uint64_t w = tb.packed[s];
                if (lay.vopen(w)) {
                    for (unsigned stop = 0; stop < 2; ++stop) {
                        joint[0] = stop ? act_stop : act_nop;
                        for (uint64_t votes = 0; votes < (uint64_t{1} << lay.n); ++votes) {
                            for (unsigned i = 0; i < lay.n; ++i)
                                joint[1 + i] = ((votes >> i) & 1) ? act_vote : act_nop;
                            successors_of(lay, w, stop, false, false, votes, succ_buf2);
                            JointAction j = pack(joint);
                            for (uint64_t t : succ_buf2) local.push_back({j, *final_index.find(t)});
                        }
                    }
                } else {
                    bool coll = lay.collectible(w);
                    joint[0] = coll ? act_collect : act_publish;
                    for (unsigned i = 0; i < lay.n; ++i) joint[1 + i] = act_nop;
                    successors_of(lay, w, false, coll, !coll, 0, succ_buf2);
                    JointAction j = pack(joint);
                    for (uint64_t t : succ_buf2) local.push_back({j, *final_index.find(t)});
                }
            }
            std::sort(local.begin(), local.end(), [](const Icgs::Edge& a, const Icgs::Edge& b) {
                return std::tie(a.joint, a.to) < std::tie(b.joint, b.to);
            });
            local.erase(std::unique(local.begin(), local.end(),
                                    [](const Icgs::Edge& a, const Icgs::Edge& b) {
                                        return a.joint == b.joint && a.to == b.to;
                                    }),
                        local.end());
            m.edge_offset[s + 1] = m.edge_offset[s] + local.size();
            edges.insert(edges.end(), local.begin(), local.end());
        }
        m.edges = std::move(edges);
    }

    return tb;
}

FormulaPtr coercion_formula(const ThreeBallotConfig& config, unsigned voter) {
    if (voter == config.voters) throw Error("the attacker is not a coercion target");
    if (voter < 1 || voter > config.voters) throw Error("voter out of range");
    std::string att = std::to_string(config.voters);
    std::string v = std::to_string(voter);
    FormulaPtr knows;
    for (unsigned j = 1; j <= config.candidates; ++j) {
        FormulaPtr k = f_k(att, f_atom("ch_" + v + "_eq_" + std::to_string(j)));
        knows = knows ? f_or(knows, k) : k;
    }
    FormulaPtr goal = f_implies(f_and(f_atom("pub"), f_atom("voted_" + v)), knows);
    return f_coalition({att}, PathOp::F, goal);
}

FormulaPtr anonymity_formula(const ThreeBallotConfig& config, unsigned voter) {
    if (voter == config.voters) throw Error("the attacker is not an anonymity target");
    if (voter < 1 || voter > config.voters) throw Error("voter out of range");
    std::string att = std::to_string(config.voters);
    std::string v = std::to_string(voter);
    FormulaPtr body;
    for (unsigned j = 1; j <= config.candidates; ++j) {
        FormulaPtr k = f_not(f_k(att, f_atom("ch_" + v + "_eq_" + std::to_string(j))));
        body = body ? f_and(body, k) : k;
    }
    return f_ag(body);
}

namespace {

void require_same_instance(const TbModel& a, const TbModel& b) {
    if (a.config.voters != b.config.voters || a.config.candidates != b.config.candidates)
        throw Error("models were built for different (voters, candidates) instances");
}

}  // namespace

BisimRelation relation_tot_lex(const TbModel& tot, const TbModel& lex) {
    require_same_instance(tot, lex);
    if (tot.config.variant != TbVariant::Tot || lex.config.variant != TbVariant::Lex)
        throw Error("relation_tot_lex expects a tot model and a lex model");
    BisimRelation rel;
    rel.coalition = {std::to_string(tot.config.voters)};
    // states are ordered by the shared matching key; merge equal-key runs
    size_t i = 1, j = 1;  // skip the setup states
    while (i < tot.packed.size() && j < lex.packed.size()) {
        uint64_t ki = tot.group_key[i], kj = lex.group_key[j];
        if (ki < kj) {
            ++i;
            continue;
        }
        if (kj < ki) {
            ++j;
            continue;
        }
        size_t ie = i, je = j;
        while (ie < tot.packed.size() && tot.group_key[ie] == ki) ++ie;
        while (je < lex.packed.size() && lex.group_key[je] == kj) ++je;
        for (size_t x = i; x < ie; ++x)
            for (size_t y = j; y < je; ++y)
                rel.pairs.emplace_back(static_cast<StateId>(x), static_cast<StateId>(y));
        i = ie;
        j = je;
    }
    return rel;
}

BisimRelation relation_lex_count(const TbModel& lex, const TbModel& count) {
    require_same_instance(lex, count);
    if (lex.config.variant != TbVariant::Lex || count.config.variant != TbVariant::Count)
        throw Error("relation_lex_count expects a lex model and a count model");
    Layout lay(lex.config);
    ThreeBallotConfig ccfg = count.config;
    Layout clay(ccfg);

    PackedIndex cindex(count.packed.size() * 2 + 16);
    for (uint32_t i = 0; i < count.packed.size(); ++i) cindex.insert(count.packed[i], i);

    BisimRelation rel;
    rel.coalition = {std::to_string(lex.config.voters)};
    for (uint32_t s = 1; s < lex.packed.size(); ++s) {
        uint64_t w = lex.packed[s];
        // counters are the per-candidate mark totals over copied ribbons
        uint64_t cw = 0;
        cw = clay.set_vopen(cw, lay.vopen(w));
        cw = clay.set_pub(cw, lay.pub(w));
        for (unsigned i = 0; i < lay.n; ++i) {
            cw = clay.set_ch(cw, i, lay.ch(w, i));
            cw = clay.set_voted(cw, i, lay.voted(w, i));
            for (unsigned j = 0; j < 3; ++j) cw = clay.set_strip(cw, i, j, lay.strip(w, i, j));
        }
        for (unsigned k = 0; k < lay.c; ++k) {
            uint32_t total = 0;
            for (unsigned l = 0; l < 3 * lay.n; ++l) {
                uint32_t v = lay.board(w, l);
                if (v != lay.bot && ((v >> k) & 1)) ++total;
            }
            cw = clay.set_counter(cw, k, total);
        }
        if (auto idx = cindex.find(cw))
            rel.pairs.emplace_back(static_cast<StateId>(s), static_cast<StateId>(*idx));
    }
    return rel;
}

}  // namespace ibis
