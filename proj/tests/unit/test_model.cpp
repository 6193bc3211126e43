#include <doctest.h>

#include "symexp/encoder.hpp"
#include "symexp/generators.hpp"
#include "symexp/model.hpp"

using namespace symexp;

TEST_CASE("instance parsing and flipping") {
    auto x = Instance::from_string("0110");
    CHECK(x.size() == 4);
    CHECK_FALSE(x[0]);
    CHECK(x[1]);
    CHECK(x.to_string() == "0110");
    std::vector<std::size_t> f{0, 2};
    CHECK(x.flipped(f).to_string() == "1100");
    CHECK(x.to_string() == "0110");
    CHECK(hamming(x, x.flipped(f)) == 2);
    CHECK_THROWS_AS(Instance::from_string("01x"), Error);
    CHECK_THROWS_AS(hamming(x, Instance::from_string("01")), Error);
    CHECK(Instance{1, 0, 1} == Instance::from_string("101"));
}

TEST_CASE("labels") {
    CHECK(opposite(Label::Positive) == Label::Negative);
    CHECK(to_int(label_from_int(1)) == 1);
    CHECK_THROWS_AS(label_from_int(2), Error);
}

TEST_CASE("literals use dimacs codes") {
    auto l = Literal::from_dimacs(-3);
    CHECK(l.var() == 3);
    CHECK_FALSE(l.positive());
    CHECK((~l).dimacs() == 3);
    CHECK_THROWS_AS(Literal::from_dimacs(0), FormulaError);
}

TEST_CASE("clauses merge duplicates and reject tautologies") {
    auto c = Clause::of({2, -1, 2});
    CHECK(c.size() == 2);
    CHECK(c.literals()[0].dimacs() == -1);
    CHECK(c.max_var() == 2);
    CHECK_THROWS_AS(Clause::of({1, -1}), FormulaError);
    CHECK(Clause{}.empty());
}

TEST_CASE("formula evaluation") {
    CnfFormula f(2);
    f.add(Clause::of({1, -2}));
    f.add(Clause::of({2}));
    std::vector<std::uint8_t> a{0, 1, 1};
    CHECK(satisfied(f, a));
    a[1] = 0;
    CHECK_FALSE(satisfied(f, a));
    CHECK(f.new_var() == 3);
    f.reserve_vars(2);
    CHECK(f.var_count() == 3);
}

TEST_CASE("varmap audit catches reuse") {
    VarMap vm;
    vm.feature_to_var = {1, 2};
    vm.aux_vars = {3};
    vm.output_var = 4;
    CHECK_NOTHROW(vm.audit(2));
    CHECK(vm.feature_of(2) == std::optional<std::size_t>(1));
    CHECK_FALSE(vm.feature_of(3).has_value());
    vm.output_var = 3;
    CHECK_THROWS_AS(vm.audit(2), FormulaError);
    vm.output_var = 4;
    CHECK_THROWS_AS(vm.audit(3), FormulaError);
}

TEST_CASE("varmap stays injective and disjoint after random encodings") {
    Rng rng(11);
    for (int k = 0; k < 100; ++k) {
        const auto n = rng.between(1, 12);
        auto forest = random_forest(n, rng.between(1, 6), 5, rng);
        auto enc = encode_forest(forest, rng.below(2) ? PathMode::ZeroPaths : PathMode::OnePaths);
        CHECK_NOTHROW(enc.varmap.audit(n));
        auto x = random_instance(n, rng);
        auto p = build_problem(enc, x, opposite(forest.predict(x)));
        CHECK_NOTHROW(p.validate());
        for (std::size_t i = 0; i < n; ++i) {
            // soft literal i is positive iff x_i = 1
            CHECK(p.soft[i].literals()[0].positive() == x[i]);
            CHECK(p.soft[i].literals()[0].var() == p.varmap.feature_var(i));
        }
    }
}

TEST_CASE("problem validation rejects malformed soft sets") {
    auto enc = encode_forest(and_forest());
    auto p = build_problem(enc, Instance::from_string("00"), Label::Positive);
    auto bad = p;
    bad.soft[0] = Clause::of({p.varmap.feature_var(0)});
    CHECK_THROWS_AS(bad.validate(), FormulaError);
    bad = p;
    bad.selectors.pop_back();
    CHECK_THROWS_AS(bad.validate(), FormulaError);
    bad = p;
    bad.selectors[0] = 1;
    CHECK_THROWS_AS(bad.validate(), FormulaError);
}
