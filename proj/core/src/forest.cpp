#include "symexp/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace symexp {

// --- DecisionTree ------------------------------------------------------------

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw Error("decision tree needs at least one node");
    std::vector<std::uint8_t> visited(nodes_.size(), 0);
    // Iterative DFS carrying the features tested so far.
    struct Frame {
        std::uint32_t node;
        std::vector<std::size_t> tested;
    };
    std::vector<Frame> stack{{0, {}}};
    while (!stack.empty()) {
        auto [id, tested] = std::move(stack.back());
        stack.pop_back();
        if (visited[id]) throw Error("decision tree node " + std::to_string(id) + " reachable twice");
        visited[id] = 1;
        const auto& nd = nodes_[id];
        if (nd.is_leaf()) continue;
        if (nd.feature < 0) throw Error("decision tree: negative feature index");
        const auto f = static_cast<std::size_t>(nd.feature);
        if (std::find(tested.begin(), tested.end(), f) != tested.end())
            throw Error("decision tree: feature " + std::to_string(f) + " tested twice on one path");
        if (nd.on_false >= nodes_.size() || nd.on_true >= nodes_.size())
            throw Error("decision tree: child index out of range");
        tested.push_back(f);
        stack.push_back({nd.on_true, tested});
        stack.push_back({nd.on_false, std::move(tested)});
    }
    if (std::find(visited.begin(), visited.end(), 0) != visited.end())
        throw Error("decision tree has unreachable nodes");
}

DecisionTree DecisionTree::leaf(Label label) {
    TreeNode n;
    n.label = label;
    return DecisionTree(std::vector<TreeNode>{n});
}

DecisionTree DecisionTree::split(std::size_t feature, const DecisionTree& on_false, const DecisionTree& on_true) {
    std::vector<TreeNode> nodes;
    nodes.reserve(1 + on_false.nodes_.size() + on_true.nodes_.size());
    nodes.push_back({});
    auto append = [&](const DecisionTree& t) {
        const auto base = static_cast<std::uint32_t>(nodes.size());
        for (auto nd : t.nodes_) {
            if (!nd.is_leaf()) {
                nd.on_false += base;
                nd.on_true += base;
            }
            nodes.push_back(nd);
        }
        return base;
    };
    nodes[0].feature = static_cast<std::int32_t>(feature);
    nodes[0].on_false = append(on_false);
    nodes[0].on_true = append(on_true);
    return DecisionTree(std::move(nodes));
}

Label DecisionTree::predict(const Instance& x) const {
    std::uint32_t id = 0;
    while (!nodes_[id].is_leaf()) {
        const auto& nd = nodes_[id];
        id = x[static_cast<std::size_t>(nd.feature)] ? nd.on_true : nd.on_false;
    }
    return nodes_[id].label;
}

std::size_t DecisionTree::depth() const {
    std::size_t best = 0;
    for (const auto& p : paths()) best = std::max(best, p.tests.size());
    return best;
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::max_feature() const {
    std::size_t m = 0;
    for (const auto& n : nodes_)
        if (!n.is_leaf()) m = std::max(m, static_cast<std::size_t>(n.feature));
    return m;
}

std::vector<TreePath> DecisionTree::paths() const {
    std::vector<TreePath> out;
    TreePath cur;
    auto walk = [&](auto&& self, std::uint32_t id) -> void {
        const auto& nd = nodes_[id];
        if (nd.is_leaf()) {
            cur.label = nd.label;
            out.push_back(cur);
            return;
        }
        const auto f = static_cast<std::size_t>(nd.feature);
        cur.tests.emplace_back(f, false);
        self(self, nd.on_false);
        cur.tests.back().second = true;
        self(self, nd.on_true);
        cur.tests.pop_back();
    };
    walk(walk, 0);
    return out;
}

// --- RandomForest ------------------------------------------------------------

RandomForest::RandomForest(std::vector<DecisionTree> trees, std::size_t threshold, std::size_t n_features)
    : trees_(std::move(trees)), threshold_(threshold), n_features_(n_features) {
    if (trees_.empty()) throw Error("random forest needs at least one tree");
    if (threshold_ < 1 || threshold_ > trees_.size())
        throw Error("forest threshold must lie in [1, " + std::to_string(trees_.size()) + "]");
    for (const auto& t : trees_)
        if (t.nodes().size() > 1 && t.max_feature() >= n_features_)
            throw Error("forest tree tests a feature beyond n_features");
}

std::size_t RandomForest::votes(const Instance& x) const {
    if (x.size() != n_features_)
        throw Error("forest expects " + std::to_string(n_features_) + " features, got " + std::to_string(x.size()));
    std::size_t v = 0;
    for (const auto& t : trees_) v += t.predict(x) == Label::Positive;
    return v;
}

// --- training ----------------------------------------------------------------

namespace {

double gini(std::size_t pos, std::size_t total) {
    if (total == 0) return 0.0;
    const double p = static_cast<double>(pos) / static_cast<double>(total);
    return 2.0 * p * (1.0 - p);
}

struct SplitChoice {
    std::size_t feature = 0;
    double gain = 0.0;
    bool found = false;
};

class TreeBuilder {
public:
    TreeBuilder(const LabeledDataset& data, std::size_t max_depth, Rng& rng)
        : data_(data), max_depth_(max_depth), rng_(rng), n_(data.n_features),
          sample_k_(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(data.n_features))))) {}

    DecisionTree build(std::vector<std::size_t> rows) {
        std::vector<std::uint8_t> tested(n_, 0);
        grow(rows, 0, tested);
        return DecisionTree(std::move(nodes_));
    }

private:
    bool label_of(std::size_t r) const { return data_.rows[r].y == Label::Positive; }
    bool value_of(std::size_t r, std::size_t f) const { return data_.rows[r].x[f]; }

    double gain_of(const std::vector<std::size_t>& rows, std::size_t f, std::size_t pos, double parent) const {
        std::size_t n1 = 0, pos1 = 0;
        for (auto r : rows) {
            if (value_of(r, f)) {
                ++n1;
                pos1 += label_of(r);
            }
        }
        const std::size_t n0 = rows.size() - n1;
        if (n0 == 0 || n1 == 0) return 0.0;
        const double total = static_cast<double>(rows.size());
        const double child = (static_cast<double>(n0) * gini(pos - pos1, n0) + static_cast<double>(n1) * gini(pos1, n1)) / total;
        return parent - child;
    }

    SplitChoice best_of(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& features,
                        std::size_t pos) const {
        const double parent = gini(pos, rows.size());
        SplitChoice best;
        for (auto f : features) {
            const double g = gain_of(rows, f, pos, parent);
            if (g > 1e-12 && (!best.found || g > best.gain + 1e-12)) best = {f, g, true};
        }
        return best;
    }

    std::uint32_t grow(const std::vector<std::size_t>& rows, std::size_t depth, std::vector<std::uint8_t>& tested) {
        const auto id = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back({});
        std::size_t pos = 0;
        for (auto r : rows) pos += label_of(r);
        const Label majority = label_from_bool(2 * pos > rows.size());  // ties go to 0

        if (pos == 0 || pos == rows.size() || depth >= max_depth_) {
            nodes_[id].label = majority;
            return id;
        }

        std::vector<std::size_t> untested;
        for (std::size_t f = 0; f < n_; ++f)
            if (!tested[f]) untested.push_back(f);

        std::vector<std::size_t> candidates;
        for (auto i : rng_.subset(untested.size(), std::min(sample_k_, untested.size())))
            candidates.push_back(untested[i]);
        auto choice = best_of(rows, candidates, pos);
        if (!choice.found) {
            std::vector<std::size_t> rest;
            std::set_difference(untested.begin(), untested.end(), candidates.begin(), candidates.end(),
                                std::back_inserter(rest));
            choice = best_of(rows, rest, pos);
        }
        if (!choice.found) {
            nodes_[id].label = majority;
            return id;
        }

        std::vector<std::size_t> left, right;
        for (auto r : rows) (value_of(r, choice.feature) ? right : left).push_back(r);

        tested[choice.feature] = 1;
        const auto f_child = grow(left, depth + 1, tested);
        const auto t_child = grow(right, depth + 1, tested);
        tested[choice.feature] = 0;

        nodes_[id].feature = static_cast<std::int32_t>(choice.feature);
        nodes_[id].on_false = f_child;
        nodes_[id].on_true = t_child;
        return id;
    }

    const LabeledDataset& data_;
    std::size_t max_depth_;
    Rng& rng_;
    std::size_t n_;
    std::size_t sample_k_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree train_tree(const LabeledDataset& data, std::span<const std::size_t> rows, std::size_t max_depth,
                        Rng& rng) {
    if (rows.empty()) throw Error("train_tree: no training rows");
    if (max_depth < 1) throw Error("train_tree: max_depth must be at least 1");
    for (auto r : rows)
        if (r >= data.rows.size()) throw Error("train_tree: row index out of range");
    return TreeBuilder(data, max_depth, rng).build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

DecisionTree train_tree(const LabeledDataset& data, std::size_t max_depth, Rng& rng) {
    std::vector<std::size_t> rows(data.rows.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return train_tree(data, rows, max_depth, rng);
}

RandomForest train_forest(const LabeledDataset& data, std::size_t nb_trees, std::size_t max_depth, std::uint64_t seed,
                          std::optional<std::size_t> threshold) {
    if (nb_trees < 1) throw Error("train_forest: nb_trees must be at least 1");
    if (data.rows.empty()) throw Error("train_forest: empty dataset");
    std::vector<DecisionTree> trees;
    trees.reserve(nb_trees);
    const auto n_rows = data.rows.size();
    for (std::size_t i = 0; i < nb_trees; ++i) {
        Rng rng(split_seed(seed, i));
        std::vector<std::size_t> sample(n_rows);
        for (auto& r : sample) r = static_cast<std::size_t>(rng.below(n_rows));
        trees.push_back(train_tree(data, sample, max_depth, rng));
    }
    return RandomForest(std::move(trees), threshold.value_or(default_threshold(nb_trees)), data.n_features);
}

double fidelity(const RandomForest& forest, const LabeledDataset& data) {
    if (data.rows.empty()) return 1.0;
    std::size_t agree = 0;
    for (const auto& row : data.rows) agree += forest.predict(row.x) == row.y;
    return static_cast<double>(agree) / static_cast<double>(data.rows.size());
}

// --- JSON --------------------------------------------------------------------

namespace {

nlohmann::json node_json(std::span<const TreeNode> nodes, std::uint32_t id) {
    const auto& nd = nodes[id];
    if (nd.is_leaf()) return {{"leaf", to_int(nd.label)}};
    return {{"feature", nd.feature}, {"false", node_json(nodes, nd.on_false)}, {"true", node_json(nodes, nd.on_true)}};
}

std::uint32_t node_from_json(const nlohmann::json& j, std::vector<TreeNode>& out) {
    const auto id = static_cast<std::uint32_t>(out.size());
    out.push_back({});
    if (j.contains("leaf")) {
        out[id].label = label_from_int(j.at("leaf").get<int>());
        return id;
    }
    const auto f = j.at("feature").get<std::int32_t>();
    const auto a = node_from_json(j.at("false"), out);
    const auto b = node_from_json(j.at("true"), out);
    out[id].feature = f;
    out[id].on_false = a;
    out[id].on_true = b;
    return id;
}

}  // namespace

nlohmann::json to_json(const DecisionTree& tree) { return node_json(tree.nodes(), 0); }

nlohmann::json to_json(const RandomForest& forest) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : forest.trees()) trees.push_back(to_json(t));
    return {{"n_features", forest.n_features()}, {"threshold", forest.threshold()}, {"trees", std::move(trees)}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
    std::vector<TreeNode> nodes;
    try {
        node_from_json(j, nodes);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed tree JSON: ") + e.what());
    }
    return DecisionTree(std::move(nodes));
}

RandomForest forest_from_json(const nlohmann::json& j) {
    try {
        std::vector<DecisionTree> trees;
        for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t));
        return RandomForest(std::move(trees), j.at("threshold").get<std::size_t>(), j.at("n_features").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed forest JSON: ") + e.what());
    }
}

}  // namespace symexp
