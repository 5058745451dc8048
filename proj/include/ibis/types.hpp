#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibis {

using StateId = uint32_t;
using AgentId = uint32_t;
using ActionId = uint32_t;
using AtomId = uint32_t;
using JointAction = uint64_t;  // packed per-agent action indices

// Coalition: sorted, duplicate-free agent indices. May be empty.
using Coalition = std::vector<AgentId>;

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Fixed-size bit set over state indices.
class StateSet {
public:
    StateSet() = default;
    explicit StateSet(uint32_t n, bool filled = false)
        : n_(n), w_((n + 63) / 64, filled ? ~uint64_t{0} : 0) {
        trim();
    }

    uint32_t size() const { return n_; }

    bool test(uint32_t i) const { return (w_[i >> 6] >> (i & 63)) & 1; }
    void set(uint32_t i) { w_[i >> 6] |= uint64_t{1} << (i & 63); }
    void reset(uint32_t i) { w_[i >> 6] &= ~(uint64_t{1} << (i & 63)); }
    void assign(uint32_t i, bool v) { v ? set(i) : reset(i); }

    void clear() { for (auto& w : w_) w = 0; }
    void fill() { for (auto& w : w_) w = ~uint64_t{0}; trim(); }

    uint32_t count() const {
        uint64_t c = 0;
        for (auto w : w_) c += __builtin_popcountll(w);
        return static_cast<uint32_t>(c);
    }
    bool any() const { for (auto w : w_) if (w) return true; return false; }
    bool none() const { return !any(); }
    bool all() const { return count() == n_; }

    StateSet& operator|=(const StateSet& o) { for (size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i]; return *this; }
    StateSet& operator&=(const StateSet& o) { for (size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i]; return *this; }
    StateSet& operator-=(const StateSet& o) { for (size_t i = 0; i < w_.size(); ++i) w_[i] &= ~o.w_[i]; return *this; }

    StateSet complement() const {
        StateSet r(*this);
        for (auto& w : r.w_) w = ~w;
        r.trim();
        return r;
    }

    bool subset_of(const StateSet& o) const {
        for (size_t i = 0; i < w_.size(); ++i)
            if (w_[i] & ~o.w_[i]) return false;
        return true;
    }

    bool operator==(const StateSet& o) const { return n_ == o.n_ && w_ == o.w_; }

    template <class Fn>
    void for_each(Fn fn) const {
        for (size_t wi = 0; wi < w_.size(); ++wi) {
            uint64_t w = w_[wi];
            while (w) {
                unsigned b = __builtin_ctzll(w);
                fn(static_cast<uint32_t>(wi * 64 + b));
                w &= w - 1;
            }
        }
    }

    std::vector<uint32_t> to_vector() const {
        std::vector<uint32_t> v;
        v.reserve(count());
        for_each([&](uint32_t i) { v.push_back(i); });
        return v;
    }

private:
    void trim() {
        if (n_ % 64 && !w_.empty())
            w_.back() &= (uint64_t{1} << (n_ % 64)) - 1;
    }

    uint32_t n_ = 0;
    std::vector<uint64_t> w_;
};

inline uint64_t coalition_mask(const Coalition& a) {
    uint64_t m = 0;
    for (AgentId i : a) m |= uint64_t{1} << i;
    return m;
}

}  // namespace ibis
