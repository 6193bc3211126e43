#pragma once

#include <cstdint>

#include "symexp/forest.hpp"
#include "symexp/model.hpp"
#include "symexp/rng.hpp"

namespace symexp {

// Random structures for property tests, the self-test and benchmarks.

/// Random decision tree over n features: each node below max_depth becomes a
/// leaf with probability leaf_probability (the root always splits when n > 0).
DecisionTree random_tree(std::size_t n, std::size_t max_depth, Rng& rng, double leaf_probability = 0.3);

/// m random trees with a threshold drawn uniformly from [1, m].
RandomForest random_forest(std::size_t n, std::size_t m, std::size_t max_depth, Rng& rng);

Instance random_instance(std::size_t n, Rng& rng);

/// Clauses of exactly `width` distinct variables (capped at vars) with random signs.
CnfFormula random_cnf(Var vars, std::size_t clauses, std::size_t width, Rng& rng);

/// AND / OR over features 0 and 1 of an n-feature space, as single-tree forests.
RandomForest and_forest(std::size_t n = 2);
RandomForest or_forest(std::size_t n = 2);

}  // namespace symexp
