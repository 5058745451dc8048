#pragma once

#include <string>
#include <vector>

namespace ibis {

// One golden assertion: an expected value, the computed value, and timing.
struct ReproRow {
    std::string instance;
    std::string item;
    std::string semantics;
    std::string expected;
    std::string got;
    uint64_t reachable = 0;
    double ms = 0;
    bool ok = false;
};

struct ReproResult {
    std::vector<ReproRow> rows;
    bool all_ok() const {
        for (const auto& r : rows)
            if (!r.ok) return false;
        return true;
    }
};

ReproResult run_figures_suite();
ReproResult run_threeballot_suite(bool slow, unsigned jobs = 1);

std::string repro_table(const ReproResult& r);
std::string repro_csv(const ReproResult& r);  // time column excluded from comparisons

}  // namespace ibis
