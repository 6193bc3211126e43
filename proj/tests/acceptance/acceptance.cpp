// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <bit>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "reference.hpp"
#include "symexp/encoder.hpp"
#include "symexp/enumerate.hpp"
#include "symexp/generators.hpp"
#include "symexp/pipeline.hpp"
#include "symexp/sat.hpp"

using namespace symexp;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool passed = true;
    std::ostringstream detail;

    void fail(const std::string& why) {
        if (!detail.str().empty()) detail << "; ";
        detail << why;
        passed = false;
    }
};

int failures = 0;

void criterion(const std::string& name, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!o.passed) ++failures;
    std::printf("%s  %-34s %s (%.1f s)\n", o.passed ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str(), secs);
    std::fflush(stdout);
}

struct RandomProblem {
    RandomForest forest;
    Instance x;
};

std::vector<RandomProblem> random_problems(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<RandomProblem> out;
    while (out.size() < count) {
        const auto n = rng.between(1, 12);
        const auto m = rng.between(1, 5);
        auto f = random_forest(n, m, 8, rng);
        out.push_back({std::move(f), random_instance(n, rng)});
    }
    return out;
}

int forced_output(const ForestEncoding& enc, const ref::RawCnf& raw, const Instance& x) {
    std::vector<int> units;
    for (std::size_t i = 0; i < x.size(); ++i)
        units.push_back(x[i] ? enc.varmap.feature_var(i) : -enc.varmap.feature_var(i));
    auto val = ref::propagate(raw, enc.cnf.var_count(), units);
    if (!val) return -1;
    const auto y = (*val)[static_cast<std::size_t>(enc.varmap.output_var)];
    return y == 2 ? -1 : y;
}

}  // namespace

int main() {
    std::printf("symexp acceptance suite\n");
    const auto problems = random_problems(250, 0xACCE55);

    criterion("counterfactuals = MCSes", [&](Outcome& o) {
        std::size_t sets = 0, unreachable = 0;
        const auto t0 = Clock::now();
        for (std::size_t k = 0; k < problems.size(); ++k) {
            const auto& [f, x] = problems[k];
            const auto target = opposite(f.predict(x));
            const auto bf = brute_force_explanations(f, x, target);
            const auto p = build_problem(encode_forest(f), x, target);
            std::vector<FeatureSet> got;
            try {
                auto mcs = enumerate_mcs(p);
                if (!mcs.complete) o.fail("enumeration incomplete on problem " + std::to_string(k));
                got = mcs.mcs_sets;
            } catch (const TargetUnreachableError&) {
                ++unreachable;
            }
            if (got != bf.counterfactuals) o.fail("mismatch on problem " + std::to_string(k));
            sets += got.size();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (secs >= 120) o.fail("took " + std::to_string(secs) + " s");
        if (o.passed)
            o.detail << problems.size() << " problems (n<=12, m<=5), " << sets << " sets equal, " << unreachable
                     << " target-unreachable";
    });

    criterion("sufficient reasons = MUSes", [&](Outcome& o) {
        std::size_t sets = 0, checks = 0;
        const auto t0 = Clock::now();
        for (std::size_t k = 0; k < problems.size(); ++k) {
            const auto& [f, x] = problems[k];
            const auto target = opposite(f.predict(x));
            const auto bf = brute_force_explanations(f, x, target);
            const auto p = build_problem(encode_forest(f), x, target);
            std::vector<FeatureSet> got;
            try {
                auto mus = enumerate_mus_by_dualization(enumerate_mcs(p));
                if (!mus.complete) o.fail("dualization incomplete on problem " + std::to_string(k));
                got = mus.mus_sets;
            } catch (const TargetUnreachableError&) {
                got = {FeatureSet{}};
            }
            if (got != bf.sufficient_reasons) o.fail("mismatch on problem " + std::to_string(k));
            for (const auto& s : got) {
                auto chk = check_mus(p, s);
                ++checks;
                if (!chk.unsatisfiable || !chk.minimal)
                    o.fail("direct MUS check failed on problem " + std::to_string(k));
            }
            sets += got.size();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (secs >= 120) o.fail("took " + std::to_string(secs) + " s");
        if (o.passed)
            o.detail << problems.size() << " problems, " << sets << " sets equal, " << checks
                     << " UNSAT+minimality checks";
    });

    criterion("encoder equivalence", [&](Outcome& o) {
        Rng rng(0xE4C0DE);
        std::size_t inputs = 0, mismatches = 0;
        for (int k = 0; k < 60; ++k) {
            const auto n = rng.between(1, 12);
            auto f = random_forest(n, rng.between(1, 7), 10, rng);
            for (auto mode : {PathMode::ZeroPaths, PathMode::OnePaths}) {
                const auto enc = encode_forest(f, mode);
                const auto raw = ref::raw(enc.cnf);
                for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
                    const auto x = ref::from_mask(m, n);
                    ++inputs;
                    if (forced_output(enc, raw, x) != ref::forest_label(f, x)) ++mismatches;
                }
            }
        }
        if (mismatches) o.fail(std::to_string(mismatches) + " mismatches");
        else o.detail << "60 forests x 2 path modes, " << inputs << " inputs, 0 mismatches";
    });

    criterion("cardinality soundness", [&](Outcome& o) {
        std::size_t cases = 0, mismatches = 0;
        for (std::size_t m = 1; m <= 7; ++m) {
            for (std::size_t t = 1; t <= m; ++t) {
                CnfFormula cnf;
                VarMap vm;
                cnf.reserve_vars(static_cast<Var>(m));
                std::vector<Literal> votes;
                for (std::size_t i = 0; i < m; ++i) votes.push_back(Literal::pos(static_cast<Var>(i + 1)));
                const auto y = encode_cardinality(votes, t, cnf, vm);
                const auto raw = ref::raw(cnf);
                for (std::uint32_t a = 0; a < (1u << m); ++a) {
                    std::vector<int> units;
                    for (std::size_t i = 0; i < m; ++i) units.push_back((a >> i) & 1u ? int(i + 1) : -int(i + 1));
                    auto val = ref::propagate(raw, cnf.var_count(), units);
                    ++cases;
                    const int want = static_cast<std::size_t>(std::popcount(a)) >= t;
                    if (!val || (*val)[static_cast<std::size_t>(y.var())] != want) ++mismatches;
                }
            }
        }
        if (mismatches) o.fail(std::to_string(mismatches) + " mismatches");
        else o.detail << "m<=7, 1<=t<=m, " << cases << " vote assignments, 0 mismatches";
    });

    criterion("SAT core vs truth table", [&](Outcome& o) {
        Rng rng(0x5A7);
        std::size_t sat = 0, bad = 0;
        for (int k = 0; k < 10000; ++k) {
            const auto vars = static_cast<Var>(rng.between(1, 12));
            const auto width = rng.between(1, 4);
            const auto ratio = rng.between(1, 8);
            const auto f = random_cnf(vars, static_cast<std::size_t>(vars) * ratio, width, rng);
            const auto raw = ref::raw(f);
            sat::Solver s;
            s.add_formula(f);
            const auto st = s.solve();
            const bool truth = ref::brute_force_sat(raw, vars).has_value();
            if (st == sat::Status::Unknown || (st == sat::Status::Sat) != truth) ++bad;
            if (st == sat::Status::Sat) {
                ++sat;
                if (!ref::formula_true(raw, s.model())) ++bad;
            }
        }
        if (bad) o.fail(std::to_string(bad) + " disagreements");
        else o.detail << "10000 formulas (" << sat << " SAT, models re-verified), 0 disagreements";
    });

    criterion("784-feature pipeline envelope", [&](Outcome& o) {
        // Threshold black box on a 10x10 central block of a 28x28 image.
        std::vector<std::size_t> pixels;
        for (std::size_t r = 9; r < 19; ++r)
            for (std::size_t c = 9; c < 19; ++c) pixels.push_back(r * 28 + c);
        Rng rng(784);
        auto x = random_instance(784, rng);
        for (std::size_t i = 0; i < pixels.size(); ++i) x.set(pixels[i], i % 20 < 9);  // 45 of 100 on
        RunConfig cfg;
        cfg.oracle = {OracleSpec::Kind::Threshold, 784, "", pixels, 50, "", {}};
        cfg.instance = x;
        auto oracle = make_oracle(cfg.oracle);
        auto r = run_explain(cfg, *oracle);
        const auto vars = static_cast<double>(r.cnf.vars), clauses = static_cast<double>(r.cnf.clauses);
        o.detail << "status " << to_string(r.status) << ", radius " << r.radius << ", " << r.cnf.vars << " vars / "
                 << r.cnf.clauses << " clauses, encode " << r.timings.encode << " s, " << r.counterfactuals.size()
                 << " CFs (complete=" << r.counterfactuals_complete << "), enumerate " << r.timings.enumerate_mcs
                 << " s";
        if (r.status == RunStatus::FidelityFailure) o.fail("surrogate never reproduced f(x)");
        if (r.radius != 250 || cfg.sample_count != 200 || cfg.nb_trees != 10 || cfg.max_depth != 24)
            o.fail("defaults differ");
        if (vars < 1979 / 10.0 || vars > 1979 * 10.0) o.fail("var count outside 10x envelope");
        if (clauses < 5540 / 10.0 || clauses > 5540 * 10.0) o.fail("clause count outside 10x envelope");
        if (r.timings.encode > 5.0) o.fail("encoding slower than 5 s");
        if (r.counterfactuals_complete) {
            if (r.status != RunStatus::Ok && r.status != RunStatus::BudgetTruncated) o.fail("unexpected status");
        } else if (r.status != RunStatus::BudgetTruncated || r.sufficient_reasons.has_value()) {
            o.fail("truncation not flagged");
        }
    });

    criterion("holdout fidelity on toy tasks", [&](Outcome& o) {
        auto table = [](std::size_t n, auto f) {
            std::string t;
            for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) t += f(m) ? '1' : '0';
            return t;
        };
        struct Task {
            std::string name;
            RunConfig cfg;
        };
        std::vector<Task> tasks;
        for (std::uint64_t seed : {1, 2, 3}) {
            RunConfig a;
            a.oracle = {OracleSpec::Kind::TruthTable, 10, table(10, [](auto m) { return (m & 3u) == 3u; }), {}, 0, "", {}};
            a.instance = Instance::zeros(10);
            a.radius = 10;
            a.seed = seed;
            tasks.push_back({"and2/n10", a});
            RunConfig b;
            b.oracle = {OracleSpec::Kind::TruthTable, 12, table(12, [](auto m) { return (m >> 5) & 1u; }), {}, 0, "", {}};
            b.instance = Instance::zeros(12);
            b.radius = 12;
            b.seed = seed;
            tasks.push_back({"x5/n12", b});
            RunConfig c;
            c.oracle = {OracleSpec::Kind::Threshold, 40, "", {0, 1, 2, 3, 4}, 3, "", {}};
            c.instance = Instance::from_string("1100000000000000000000000000000000000000");
            c.radius = 6;
            c.sample_count = 400;
            c.seed = seed;
            tasks.push_back({"thr3of5/n40", c});
        }
        double worst = 1.0;
        for (auto& t : tasks) {
            auto oracle = make_oracle(t.cfg.oracle);
            auto r = run_explain(t.cfg, *oracle);
            if (!r.fidelity_holdout) {
                o.fail(t.name + ": no holdout");
                continue;
            }
            worst = std::min(worst, *r.fidelity_holdout);
            if (*r.fidelity_holdout < 0.9) o.fail(t.name + ": holdout fidelity " + std::to_string(*r.fidelity_holdout));
        }
        if (o.passed) o.detail << tasks.size() << " runs, worst holdout fidelity " << worst;
    });

    criterion("locally constant vicinity", [&](Outcome& o) {
        RunConfig cfg;
        cfg.oracle = {OracleSpec::Kind::Threshold, 784, "", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 10, "", {}};
        cfg.instance = Instance::zeros(784);
        cfg.radius = 5;  // can never turn ten pixels on
        auto oracle = make_oracle(cfg.oracle);
        auto r = run_explain(cfg, *oracle);
        if (r.status != RunStatus::LocallyConstant) o.fail("status " + std::string(to_string(r.status)));
        if (exit_code(r.status) != 3) o.fail("exit code " + std::to_string(exit_code(r.status)));
        if (!r.counterfactuals.empty()) o.fail("fabricated counterfactuals");
#ifdef SYMEXP_CLI
        const std::string cmd = std::string(SYMEXP_CLI) +
                                " explain --oracle threshold --n-features 12 --pixels 0,1,2,3 --k 4"
                                " --instance 000000000000 --radius 3 >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        if (code != 3) o.fail("CLI exit code " + std::to_string(code));
#endif
        if (o.passed) o.detail << "status locally-constant, CF none, exit code 3";
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
