#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "symexp/model.hpp"
#include "symexp/rng.hpp"
#include "symexp/vicinity.hpp"

namespace symexp {

struct TreeNode {
    static constexpr std::int32_t kLeaf = -1;

    std::int32_t feature = kLeaf;        // tested feature, kLeaf for leaves
    Label label = Label::Negative;       // leaves only
    std::uint32_t on_false = 0;          // child indices, internal nodes only
    std::uint32_t on_true = 0;

    bool is_leaf() const noexcept { return feature == kLeaf; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// One root-to-leaf path: the (feature, value) tests taken and the leaf label.
struct TreePath {
    std::vector<std::pair<std::size_t, bool>> tests;
    Label label = Label::Negative;
};

/// Binary decision tree over binary features. Node 0 is the root.
class DecisionTree {
public:
    static DecisionTree leaf(Label label);
    static DecisionTree split(std::size_t feature, const DecisionTree& on_false, const DecisionTree& on_true);

    /// Takes a flat node array; throws Error if it is not a well-formed tree or
    /// a path tests the same feature twice.
    explicit DecisionTree(std::vector<TreeNode> nodes);

    std::span<const TreeNode> nodes() const noexcept { return nodes_; }
    Label predict(const Instance& x) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;
    std::size_t max_feature() const;  // 0 for single-leaf trees
    std::vector<TreePath> paths() const;

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    std::vector<TreeNode> nodes_;
};

/// Votes of m trees combined by "at least t trees say 1".
class RandomForest {
public:
    RandomForest(std::vector<DecisionTree> trees, std::size_t threshold, std::size_t n_features);

    std::span<const DecisionTree> trees() const noexcept { return trees_; }
    std::size_t threshold() const noexcept { return threshold_; }
    std::size_t n_features() const noexcept { return n_features_; }

    std::size_t votes(const Instance& x) const;
    Label predict(const Instance& x) const { return label_from_bool(votes(x) >= threshold_); }

    friend bool operator==(const RandomForest&, const RandomForest&) = default;

private:
    std::vector<DecisionTree> trees_;
    std::size_t threshold_;
    std::size_t n_features_;
};

/// Strict majority: floor(m/2) + 1.
constexpr std::size_t default_threshold(std::size_t m) { return m / 2 + 1; }

/// Greedy Gini splitting on the given rows (indices into data, repeats allowed).
/// Each split considers ceil(sqrt(n)) random untested features first and falls
/// back to the remaining ones when none of them improves impurity.
DecisionTree train_tree(const LabeledDataset& data, std::span<const std::size_t> rows, std::size_t max_depth,
                        Rng& rng);
DecisionTree train_tree(const LabeledDataset& data, std::size_t max_depth, Rng& rng);

/// m trees on bootstrap resamples, tree i seeded from split_seed(seed, i).
RandomForest train_forest(const LabeledDataset& data, std::size_t nb_trees, std::size_t max_depth, std::uint64_t seed,
                          std::optional<std::size_t> threshold = std::nullopt);

inline Label predict_tree(const DecisionTree& tree, const Instance& x) { return tree.predict(x); }
inline Label predict_forest(const RandomForest& forest, const Instance& x) { return forest.predict(x); }

/// Fraction of rows whose stored label the forest reproduces (1.0 for no rows).
double fidelity(const RandomForest& forest, const LabeledDataset& data);

nlohmann::json to_json(const DecisionTree& tree);
nlohmann::json to_json(const RandomForest& forest);
DecisionTree tree_from_json(const nlohmann::json& j);
RandomForest forest_from_json(const nlohmann::json& j);

}  // namespace symexp
