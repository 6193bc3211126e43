#include <doctest.h>

#include <nlohmann/json.hpp>

#include "reference.hpp"
#include "symexp/forest.hpp"
#include "symexp/generators.hpp"

using namespace symexp;

namespace {

LabeledDataset exhaustive(std::size_t n, auto label) {
    LabeledDataset ds{n, {}, false};
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
        auto x = ref::from_mask(m, n);
        ds.rows.push_back({x, label_from_bool(label(x))});
    }
    return ds;
}

const auto kLeaf0 = DecisionTree::leaf(Label::Negative);
const auto kLeaf1 = DecisionTree::leaf(Label::Positive);

}  // namespace

TEST_CASE("tree construction and prediction") {
    CHECK(kLeaf0.predict(Instance{1, 1, 1}) == Label::Negative);
    auto t = DecisionTree::split(1, kLeaf0, kLeaf1);
    CHECK(t.predict(Instance{0, 1, 0}) == Label::Positive);
    CHECK(t.predict(Instance{1, 0, 1}) == Label::Negative);
    CHECK(t.depth() == 1);
    CHECK(t.leaf_count() == 2);
    CHECK(t.max_feature() == 1);
    auto paths = t.paths();
    REQUIRE(paths.size() == 2);
    CHECK(kLeaf1.depth() == 0);
}

TEST_CASE("malformed trees are rejected") {
    CHECK_THROWS_AS(DecisionTree(std::vector<TreeNode>{}), Error);
    // feature 0 tested twice on one path
    CHECK_THROWS_AS(DecisionTree::split(0, DecisionTree::split(0, kLeaf0, kLeaf1), kLeaf1), Error);
    std::vector<TreeNode> cyclic{{0, Label::Negative, 0, 0}};
    CHECK_THROWS_AS(DecisionTree{cyclic}, Error);
    std::vector<TreeNode> dangling{{0, Label::Negative, 1, 5}, {TreeNode::kLeaf, Label::Negative, 0, 0}};
    CHECK_THROWS_AS(DecisionTree{dangling}, Error);
    std::vector<TreeNode> orphan{{TreeNode::kLeaf, Label::Negative, 0, 0}, {TreeNode::kLeaf, Label::Positive, 0, 0}};
    CHECK_THROWS_AS(DecisionTree{orphan}, Error);
}

TEST_CASE("forest votes use the threshold") {
    auto x = Instance{0, 0};
    RandomForest f({kLeaf1, kLeaf1, kLeaf0}, 2, 2);
    CHECK(f.votes(x) == 2);
    CHECK(f.predict(x) == Label::Positive);
    RandomForest g({kLeaf1, kLeaf0, kLeaf0}, 2, 2);
    CHECK(g.predict(x) == Label::Negative);
    CHECK(default_threshold(3) == 2);
    CHECK(default_threshold(10) == 6);
    CHECK_THROWS_AS(RandomForest({kLeaf1}, 2, 2), Error);
    CHECK_THROWS_AS(RandomForest({kLeaf1}, 0, 2), Error);
    CHECK_THROWS_AS(RandomForest({}, 1, 2), Error);
    CHECK_THROWS_AS(RandomForest({DecisionTree::split(3, kLeaf0, kLeaf1)}, 1, 2), Error);
}

TEST_CASE("majority semantics on random forests") {
    Rng rng(4);
    for (int k = 0; k < 100; ++k) {
        const auto n = rng.between(1, 8);
        auto f = random_forest(n, rng.between(1, 7), 6, rng);
        for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
            auto x = ref::from_mask(m, n);
            CHECK(to_int(f.predict(x)) == ref::forest_label(f, x));
        }
    }
}

TEST_CASE("path semantics agree with prediction") {
    Rng rng(8);
    for (int k = 0; k < 100; ++k) {
        const auto n = rng.between(1, 10);
        auto t = random_tree(n, 7, rng);
        auto paths = t.paths();
        CHECK(paths.size() == t.leaf_count());
        for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
            auto x = ref::from_mask(m, n);
            int matching = 0;
            Label via_path = Label::Negative;
            for (const auto& p : paths) {
                bool all = true;
                for (auto [f, v] : p.tests) all = all && x[f] == v;
                if (all) {
                    ++matching;
                    via_path = p.label;
                }
            }
            CHECK(matching == 1);
            CHECK(via_path == t.predict(x));
        }
    }
}

TEST_CASE("learning a single feature") {
    auto ds = exhaustive(3, [](const Instance& x) { return x[0]; });
    Rng rng(1);
    auto t = train_tree(ds, 24, rng);
    for (const auto& r : ds.rows) CHECK(t.predict(r.x) == r.y);
    CHECK(t.depth() == 1);
}

TEST_CASE("pure data gives a single leaf") {
    auto ds = exhaustive(3, [](const Instance&) { return true; });
    Rng rng(1);
    auto t = train_tree(ds, 24, rng);
    CHECK(t.leaf_count() == 1);
    CHECK(t.predict(Instance{0, 0, 0}) == Label::Positive);
}

TEST_CASE("label ties go to 0") {
    LabeledDataset ds{2, {{Instance{0, 0}, Label::Positive}, {Instance{0, 0}, Label::Negative}}, false};
    Rng rng(1);
    auto t = train_tree(ds, 24, rng);
    CHECK(t.leaf_count() == 1);
    CHECK(t.predict(Instance{0, 0}) == Label::Negative);
}

TEST_CASE("depth limit holds on random datasets") {
    Rng rng(12);
    for (int k = 0; k < 100; ++k) {
        const auto n = rng.between(2, 12);
        LabeledDataset ds{n, {}, false};
        for (int i = 0; i < 60; ++i) ds.rows.push_back({random_instance(n, rng), label_from_bool(rng.below(2))});
        const auto depth = rng.between(1, 6);
        auto t = train_tree(ds, depth, rng);
        CHECK(t.depth() <= depth);
    }
}

TEST_CASE("single-tree forest equals its tree") {
    Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        const auto n = rng.between(2, 10);
        LabeledDataset ds{n, {}, false};
        for (int i = 0; i < 80; ++i) ds.rows.push_back({random_instance(n, rng), label_from_bool(rng.below(2))});
        auto f = train_forest(ds, 1, 24, rng.next());
        REQUIRE(f.trees().size() == 1);
        CHECK(f.threshold() == 1);
        for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
            auto x = ref::from_mask(m, n);
            CHECK(f.predict(x) == f.trees()[0].predict(x));
        }
    }
}

TEST_CASE("forest on AND reaches high training fidelity") {
    auto ds = exhaustive(6, [](const Instance& x) { return x[0] && x[1]; });
    auto f = train_forest(ds, 10, 24, 99);
    CHECK(f.trees().size() == 10);
    CHECK(f.threshold() == 6);
    CHECK(fidelity(f, ds) >= 0.9);
}

TEST_CASE("fidelity edge cases") {
    RandomForest zero({kLeaf0}, 1, 2);
    LabeledDataset neg{2, {{Instance{0, 1}, Label::Negative}, {Instance{1, 1}, Label::Negative}}, false};
    CHECK(fidelity(zero, neg) == 1.0);
    CHECK(fidelity(zero, LabeledDataset{2, {}, false}) == 1.0);
    neg.rows[0].y = Label::Positive;
    CHECK(fidelity(zero, neg) == 0.5);
}

TEST_CASE("training is deterministic per seed") {
    Rng rng(77);
    LabeledDataset ds{10, {}, false};
    for (int i = 0; i < 100; ++i) ds.rows.push_back({random_instance(10, rng), label_from_bool(rng.below(2))});
    auto a = train_forest(ds, 10, 24, 5);
    auto b = train_forest(ds, 10, 24, 5);
    auto c = train_forest(ds, 10, 24, 6);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    auto t = train_forest(ds, 4, 24, 5, 1);
    CHECK(t.threshold() == 1);
}

TEST_CASE("json round trip") {
    Rng rng(21);
    for (int k = 0; k < 50; ++k) {
        auto f = random_forest(rng.between(1, 12), rng.between(1, 5), 6, rng);
        auto j = to_json(f);
        CHECK(forest_from_json(nlohmann::json::parse(j.dump())) == f);
    }
    auto j = to_json(DecisionTree::split(1, kLeaf0, kLeaf1));
    CHECK(j == nlohmann::json::parse(R"({"feature":1,"false":{"leaf":0},"true":{"leaf":1}})"));
    CHECK_THROWS_AS(tree_from_json(nlohmann::json::parse(R"({"feature":1})")), Error);
    CHECK_THROWS_AS(forest_from_json(nlohmann::json::parse(R"({"n_features":2,"threshold":3,"trees":[{"leaf":1}]})")),
                    Error);
}
