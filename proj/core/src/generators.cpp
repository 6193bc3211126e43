#include "symexp/generators.hpp"

#include <algorithm>

namespace symexp {

namespace {

DecisionTree grow_random(std::vector<std::size_t>& untested, std::size_t depth, std::size_t max_depth, Rng& rng,
                         double leaf_probability) {
    const bool force_split = depth == 0;
    const double draw = static_cast<double>(rng.below(1'000'000)) / 1'000'000.0;
    if (untested.empty() || depth >= max_depth || (!force_split && draw < leaf_probability))
        return DecisionTree::leaf(label_from_bool(rng.below(2) == 1));
    const auto pick = static_cast<std::size_t>(rng.below(untested.size()));
    const auto feature = untested[pick];
    untested.erase(untested.begin() + static_cast<std::ptrdiff_t>(pick));
    auto lo = grow_random(untested, depth + 1, max_depth, rng, leaf_probability);
    auto hi = grow_random(untested, depth + 1, max_depth, rng, leaf_probability);
    untested.insert(std::upper_bound(untested.begin(), untested.end(), feature), feature);
    return DecisionTree::split(feature, lo, hi);
}

}  // namespace

DecisionTree random_tree(std::size_t n, std::size_t max_depth, Rng& rng, double leaf_probability) {
    std::vector<std::size_t> untested(n);
    for (std::size_t i = 0; i < n; ++i) untested[i] = i;
    return grow_random(untested, 0, max_depth, rng, leaf_probability);
}

RandomForest random_forest(std::size_t n, std::size_t m, std::size_t max_depth, Rng& rng) {
    std::vector<DecisionTree> trees;
    for (std::size_t i = 0; i < m; ++i) trees.push_back(random_tree(n, max_depth, rng));
    const auto t = static_cast<std::size_t>(rng.between(1, m));
    return RandomForest(std::move(trees), t, n);
}

Instance random_instance(std::size_t n, Rng& rng) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
    return Instance(std::move(bits));
}

CnfFormula random_cnf(Var vars, std::size_t clauses, std::size_t width, Rng& rng) {
    CnfFormula f(vars);
    const auto w = std::min<std::size_t>(width, static_cast<std::size_t>(vars));
    for (std::size_t c = 0; c < clauses; ++c) {
        std::vector<Literal> lits;
        for (auto v : rng.subset(static_cast<std::size_t>(vars), w))
            lits.emplace_back(static_cast<Var>(v + 1), rng.below(2) == 1);
        f.add(Clause(std::move(lits)));
    }
    return f;
}

RandomForest and_forest(std::size_t n) {
    using L = Label;
    auto t = DecisionTree::split(0, DecisionTree::leaf(L::Negative),
                                 DecisionTree::split(1, DecisionTree::leaf(L::Negative), DecisionTree::leaf(L::Positive)));
    return RandomForest({t}, 1, n);
}

RandomForest or_forest(std::size_t n) {
    using L = Label;
    auto t = DecisionTree::split(0, DecisionTree::split(1, DecisionTree::leaf(L::Negative), DecisionTree::leaf(L::Positive)),
                                 DecisionTree::leaf(L::Positive));
    return RandomForest({t}, 1, n);
}

}  // namespace symexp
