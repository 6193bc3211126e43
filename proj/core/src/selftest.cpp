#include "symexp/selftest.hpp"

#include <algorithm>
#include <sstream>

#include "symexp/encoder.hpp"
#include "symexp/enumerate.hpp"
#include "symexp/generators.hpp"

namespace symexp {

namespace {

std::string show(const std::vector<FeatureSet>& sets) {
    std::ostringstream out;
    out << '{';
    for (std::size_t k = 0; k < sets.size(); ++k) {
        out << (k ? ",{" : "{");
        for (std::size_t j = 0; j < sets[k].size(); ++j) out << (j ? "," : "") << sets[k][j];
        out << '}';
    }
    out << '}';
    return out.str();
}

// Runs the SAT route on (forest, x) and compares both families with `cf` and `sr`.
SelftestCase check_case(std::string name, const RandomForest& forest, const Instance& x,
                        std::vector<FeatureSet> cf, std::vector<FeatureSet> sr) {
    SelftestCase c{std::move(name), false, {}};
    const auto target = opposite(forest.predict(x));
    const auto problem = build_problem(encode_forest(forest), x, target);
    McsResult mcs;
    try {
        mcs = enumerate_mcs(problem);
    } catch (const TargetUnreachableError&) {
        // Constant surrogate: no counterfactual, the empty set is sufficient.
        c.passed = cf.empty() && sr == std::vector<FeatureSet>{FeatureSet{}};
        if (!c.passed) c.detail = "target unreachable but brute force found CF " + show(cf);
        return c;
    }
    auto mus = enumerate_mus_by_dualization(mcs);
    sort_feature_sets(cf);
    sort_feature_sets(sr);
    if (!mcs.complete || !mus.complete) {
        c.detail = "enumeration incomplete";
        return c;
    }
    if (mcs.mcs_sets != cf) {
        c.detail = "MCS " + show(mcs.mcs_sets) + " vs CF " + show(cf);
        return c;
    }
    if (mus.mus_sets != sr) {
        c.detail = "MUS " + show(mus.mus_sets) + " vs SR " + show(sr);
        return c;
    }
    for (const auto& s : mus.mus_sets) {
        auto chk = check_mus(problem, s);
        if (!chk.unsatisfiable || !chk.minimal) {
            c.detail = "direct MUS check failed for " + show({s});
            return c;
        }
    }
    c.passed = true;
    return c;
}

}  // namespace

bool SelftestResult::passed() const { return failures() == 0; }

std::size_t SelftestResult::failures() const {
    return static_cast<std::size_t>(std::count_if(cases.begin(), cases.end(), [](const auto& c) { return !c.passed; }));
}

SelftestResult run_selftest(const SelftestOptions& opt, std::ostream* log) {
    SelftestResult res;
    auto record = [&](SelftestCase c, bool always) {
        if (log && (always || !c.passed))
            *log << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
        res.cases.push_back(std::move(c));
    };

    const auto andf = and_forest();
    const auto orf = or_forest();
    const auto x00 = Instance::from_string("00");
    const auto x11 = Instance::from_string("11");
    record(check_case("AND gadget x=00", andf, x00, {{0, 1}}, {{0}, {1}}), true);
    record(check_case("AND gadget x=11", andf, x11, {{0}, {1}}, {{0, 1}}), true);
    record(check_case("OR gadget x=00", orf, x00, {{0}, {1}}, {{0, 1}}), true);
    record(check_case("OR gadget x=11", orf, x11, {{0, 1}}, {{0}, {1}}), true);

    Rng rng(opt.seed);
    std::size_t failed = 0;
    for (std::size_t k = 0; k < opt.random_cases; ++k) {
        const auto n = rng.between(1, opt.max_features);
        const auto m = rng.between(1, opt.max_trees);
        const auto forest = random_forest(n, m, opt.max_depth, rng);
        const auto x = random_instance(n, rng);
        auto bf = brute_force_explanations(forest, x, opposite(forest.predict(x)));
        auto c = check_case("random case " + std::to_string(k) + " (n=" + std::to_string(n) +
                                ", m=" + std::to_string(m) + ")",
                            forest, x, std::move(bf.counterfactuals), std::move(bf.sufficient_reasons));
        failed += !c.passed;
        record(std::move(c), false);
    }
    if (log)
        *log << (failed ? "FAIL " : "PASS ") << opt.random_cases << " random forests against brute force ("
             << failed << " failures)\n";
    return res;
}

}  // namespace symexp
