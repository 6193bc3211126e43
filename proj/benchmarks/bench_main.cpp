#include <benchmark/benchmark.h>

#include "symexp/encoder.hpp"
#include "symexp/enumerate.hpp"
#include "symexp/forest.hpp"
#include "symexp/generators.hpp"
#include "symexp/oracle.hpp"
#include "symexp/sat.hpp"
#include "symexp/vicinity.hpp"

using namespace symexp;

namespace {

// Random 3-SAT near the phase transition (ratio 4.26).
void BM_Sat3Random(benchmark::State& state) {
    const auto vars = static_cast<Var>(state.range(0));
    const auto clauses = static_cast<std::size_t>(vars * 4.26);
    Rng rng(42);
    std::vector<CnfFormula> formulas;
    for (int i = 0; i < 16; ++i) formulas.push_back(random_cnf(vars, clauses, 3, rng));
    std::size_t i = 0;
    for (auto _ : state) {
        sat::Solver s;
        s.add_formula(formulas[i++ % formulas.size()]);
        benchmark::DoNotOptimize(s.solve());
    }
}
BENCHMARK(BM_Sat3Random)->Arg(50)->Arg(100)->Arg(150)->Unit(benchmark::kMillisecond);

struct MnistLike {
    RandomForest forest;
    Instance x;
};

MnistLike trained_784() {
    std::vector<std::size_t> pixels(100);
    for (std::size_t r = 0; r < 10; ++r)
        for (std::size_t c = 0; c < 10; ++c) pixels[r * 10 + c] = (9 + r) * 28 + 9 + c;
    ThresholdOracle oracle(784, pixels, 50);
    Rng rng(7);
    auto x = random_instance(784, rng);
    auto ds = sample_vicinity(x, oracle, 250, 200, 1);
    return {train_forest(ds, 10, 24, 2), x};
}

void BM_Encode784(benchmark::State& state) {
    static const auto m = trained_784();
    for (auto _ : state) {
        auto enc = encode_forest(m.forest, static_cast<PathMode>(state.range(0)));
        benchmark::DoNotOptimize(enc.cnf.clause_count());
    }
}
BENCHMARK(BM_Encode784)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EnumerateSmall(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(11);
    std::vector<ExplanationProblem> problems;
    while (problems.size() < 8) {
        auto f = random_forest(n, 5, 8, rng);
        auto x = random_instance(n, rng);
        auto p = build_problem(encode_forest(f), x, opposite(f.predict(x)));
        try {
            enumerate_mcs(p, {std::size_t{1}, std::nullopt});
            problems.push_back(std::move(p));
        } catch (const TargetUnreachableError&) {
        }
    }
    std::size_t i = 0;
    for (auto _ : state) {
        auto mcs = enumerate_mcs(problems[i++ % problems.size()]);
        benchmark::DoNotOptimize(mcs.mcs_sets.size());
    }
}
BENCHMARK(BM_EnumerateSmall)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Dualize(benchmark::State& state) {
    Rng rng(5);
    std::vector<FeatureSet> family;
    for (int i = 0; i < state.range(0); ++i) {
        auto x = random_instance(20, rng);
        FeatureSet s;
        for (std::size_t j = 0; j < 20; ++j)
            if (x[j] && s.size() < 4) s.push_back(j);
        if (s.empty()) s.push_back(i % 20);
        family.push_back(s);
    }
    for (auto _ : state) benchmark::DoNotOptimize(minimal_hitting_sets(family).mus_sets.size());
}
BENCHMARK(BM_Dualize)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
