#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace symexp {

struct SelftestOptions {
    std::size_t random_cases = 100;
    std::uint64_t seed = 7;
    std::size_t max_features = 10;
    std::size_t max_trees = 5;
    std::size_t max_depth = 5;
};

struct SelftestCase {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelftestResult {
    std::vector<SelftestCase> cases;
    bool passed() const;
    std::size_t failures() const;
};

/// Counterfactual/MCS and sufficient-reason/MUS equivalence on the AND/OR
/// gadgets and on random small forests, checked against brute force.
/// One line per gadget and per failing random case goes to `log` if given.
SelftestResult run_selftest(const SelftestOptions& options, std::ostream* log = nullptr);

}  // namespace symexp
