#include "symexp/enumerate.hpp"

#include <algorithm>
#include <numeric>

#include "symexp/encoder.hpp"
#include "symexp/sat.hpp"

namespace symexp {

namespace {

using Clock = std::chrono::steady_clock;

struct Deadline {
    std::optional<Clock::time_point> at;

    explicit Deadline(const std::optional<Seconds>& budget, Clock::time_point start) {
        if (budget) at = start + std::chrono::duration_cast<Clock::duration>(*budget);
    }
    sat::Budget budget() const { return at ? sat::Budget::until(*at) : sat::Budget::unlimited(); }
    bool passed() const { return at && Clock::now() >= *at; }
};

// Solver loaded with hard clauses and selector-guarded soft clauses (sel_i -> soft_i).
sat::Solver load_problem(const ExplanationProblem& p) {
    sat::Solver s;
    s.reserve_vars(p.total_vars());
    s.add_formula(p.hard);
    for (std::size_t i = 0; i < p.soft.size(); ++i) {
        std::vector<Literal> c{Literal::neg(p.selectors[i])};
        for (auto l : p.soft[i].literals()) c.push_back(l);
        s.add_clause(c);
    }
    return s;
}

Literal soft_literal(const ExplanationProblem& p, std::size_t i) { return p.soft[i].literals()[0]; }

std::vector<Literal> selector_assumptions(const ExplanationProblem& p, std::span<const std::size_t> idx) {
    std::vector<Literal> a;
    a.reserve(idx.size());
    for (auto i : idx) a.push_back(Literal::pos(p.selectors[i]));
    return a;
}

}  // namespace

void sort_feature_sets(std::vector<FeatureSet>& sets) {
    std::sort(sets.begin(), sets.end(), [](const FeatureSet& a, const FeatureSet& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
}

McsResult enumerate_mcs(const ExplanationProblem& problem, const EnumLimits& limits) {
    const auto start = Clock::now();
    const Deadline deadline(limits.budget, start);
    const auto n = problem.soft.size();
    McsResult res;

    auto solver = load_problem(problem);
    // Models that agree with x wherever possible keep the grow phase short.
    for (std::size_t i = 0; i < n; ++i) {
        auto l = soft_literal(problem, i);
        solver.set_phase(l.var(), l.positive());
    }
    auto finish = [&](bool complete) {
        res.complete = complete;
        std::vector<std::size_t> order(res.mcs_sets.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto& x = res.mcs_sets[a];
            const auto& y = res.mcs_sets[b];
            return x.size() != y.size() ? x.size() < y.size() : x < y;
        });
        McsResult sorted;
        for (auto k : order) {
            sorted.mcs_sets.push_back(std::move(res.mcs_sets[k]));
            sorted.witnesses.push_back(std::move(res.witnesses[k]));
        }
        res.mcs_sets = std::move(sorted.mcs_sets);
        res.witnesses = std::move(sorted.witnesses);
        res.elapsed = Clock::now() - start;
        return res;
    };
    auto solve = [&](std::span<const Literal> assumptions) {
        ++res.sat_calls;
        return solver.solve(assumptions, deadline.budget());
    };

    auto st = solve({});
    if (st == sat::Status::Unsat)
        throw TargetUnreachableError("no counterfactual exists locally: the surrogate never predicts class " +
                                     std::to_string(to_int(problem.target_class)));
    if (st == sat::Status::Unknown) return finish(false);

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    st = solve(selector_assumptions(problem, all));
    if (st == sat::Status::Sat) return finish(true);  // nothing to correct
    if (st == sat::Status::Unknown) return finish(false);

    std::vector<std::uint8_t> in_mss(n);
    for (;;) {
        if (limits.max_count && res.mcs_sets.size() >= *limits.max_count) return finish(false);
        if (deadline.passed()) return finish(false);
        st = solve({});
        if (st == sat::Status::Unsat) return finish(true);
        if (st == sat::Status::Unknown) return finish(false);

        auto model = solver.model();
        auto absorb = [&] {
            for (std::size_t i = 0; i < n; ++i)
                if (!in_mss[i] && solver.model_value(soft_literal(problem, i))) in_mss[i] = 1;
        };
        std::fill(in_mss.begin(), in_mss.end(), 0);
        absorb();

        for (std::size_t i = 0; i < n; ++i) {
            if (in_mss[i]) continue;
            if (deadline.passed()) return finish(false);
            std::vector<std::size_t> trial;
            for (std::size_t j = 0; j < n; ++j)
                if (in_mss[j] || j == i) trial.push_back(j);
            st = solve(selector_assumptions(problem, trial));
            if (st == sat::Status::Unknown) return finish(false);
            if (st == sat::Status::Sat) {
                model = solver.model();
                absorb();
            }
        }

        FeatureSet mcs;
        std::vector<Literal> block;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_mss[i]) {
                mcs.push_back(i);
                block.push_back(soft_literal(problem, i));
            }
        }
        std::vector<std::uint8_t> bits(n);
        for (std::size_t i = 0; i < n; ++i) bits[i] = model[static_cast<std::size_t>(problem.varmap.feature_var(i))];
        res.mcs_sets.push_back(std::move(mcs));
        res.witnesses.emplace_back(std::move(bits));
        solver.add_clause(block);
    }
}

MusResult minimal_hitting_sets(std::span<const FeatureSet> family, const EnumLimits& limits) {
    const auto start = Clock::now();
    const Deadline deadline(limits.budget, start);
    MusResult res;
    auto finish = [&](bool complete) {
        res.complete = complete;
        sort_feature_sets(res.mus_sets);
        res.elapsed = Clock::now() - start;
        return res;
    };
    if (family.empty()) return finish(true);

    std::vector<std::size_t> universe;
    for (const auto& s : family) universe.insert(universe.end(), s.begin(), s.end());
    std::sort(universe.begin(), universe.end());
    universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
    auto var_of = [&](std::size_t e) {
        return static_cast<Var>(std::lower_bound(universe.begin(), universe.end(), e) - universe.begin()) + 1;
    };

    // Edge membership per universe position.
    std::vector<std::vector<std::size_t>> edges_of(universe.size());
    sat::Solver solver;
    solver.reserve_vars(static_cast<Var>(universe.size()));
    for (std::size_t k = 0; k < family.size(); ++k) {
        if (family[k].empty()) return finish(true);  // an empty set cannot be hit
        std::vector<Literal> c;
        for (auto e : family[k]) {
            auto v = var_of(e);
            c.push_back(Literal::pos(v));
            edges_of[static_cast<std::size_t>(v - 1)].push_back(k);
        }
        solver.add_clause(c);
    }

    std::vector<std::size_t> hits(family.size());
    for (;;) {
        if (limits.max_count && res.mus_sets.size() >= *limits.max_count) return finish(false);
        auto st = solver.solve({}, deadline.budget());
        if (st == sat::Status::Unsat) return finish(true);
        if (st == sat::Status::Unknown) return finish(false);

        std::vector<std::size_t> chosen;
        for (std::size_t u = 0; u < universe.size(); ++u)
            if (solver.model_value(static_cast<Var>(u + 1))) chosen.push_back(u);
        std::fill(hits.begin(), hits.end(), 0);
        for (auto u : chosen)
            for (auto k : edges_of[u]) ++hits[k];

        // Drop elements whose every edge is hit elsewhere.
        std::vector<std::size_t> kept;
        for (auto u : chosen) {
            bool needed = std::any_of(edges_of[u].begin(), edges_of[u].end(), [&](std::size_t k) { return hits[k] == 1; });
            if (needed) {
                kept.push_back(u);
            } else {
                for (auto k : edges_of[u]) --hits[k];
            }
        }

        FeatureSet hs;
        std::vector<Literal> block;
        for (auto u : kept) {
            hs.push_back(universe[u]);
            block.push_back(Literal::neg(static_cast<Var>(u + 1)));
        }
        res.mus_sets.push_back(std::move(hs));
        solver.add_clause(block);
        if (deadline.passed()) return finish(false);
    }
}

MusResult enumerate_mus_by_dualization(const McsResult& mcs, const EnumLimits& limits) {
    if (!mcs.complete)
        throw DualityPreconditionError("sufficient reasons need the complete MCS family; enumeration was truncated");
    return minimal_hitting_sets(mcs.mcs_sets, limits);
}

bool verify_counterfactual(const RandomForest& forest, const Instance& x, std::span<const std::size_t> features,
                           Label target) {
    for (auto f : features)
        if (f >= x.size()) throw Error("feature index " + std::to_string(f) + " out of range");
    return forest.predict(x.flipped(features)) == target;
}

bool verify_sufficient_reason_exhaustive(const RandomForest& forest, const Instance& x,
                                         std::span<const std::size_t> features) {
    const auto n = x.size();
    std::vector<std::uint8_t> fixed(n, 0);
    for (auto f : features) {
        if (f >= n) throw Error("feature index " + std::to_string(f) + " out of range");
        fixed[f] = 1;
    }
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i)
        if (!fixed[i]) free.push_back(i);
    if (free.size() > 20) throw Error("exhaustive sufficient-reason check limited to 20 free features");

    const Label expected = forest.predict(x);
    Instance z = x;
    const std::uint64_t total = std::uint64_t{1} << free.size();
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        for (std::size_t k = 0; k < free.size(); ++k) z.set(free[k], ((mask >> k) & 1u) != 0);
        if (forest.predict(z) != expected) return false;
    }
    return true;
}

bool verify_sufficient_reason_sat(const ExplanationProblem& problem, std::span<const std::size_t> features) {
    auto solver = load_problem(problem);
    return solver.solve(selector_assumptions(problem, features)) == sat::Status::Unsat;
}

bool verify_sufficient_reason(const RandomForest& forest, const Instance& x, std::span<const std::size_t> features) {
    if (x.size() - std::min(x.size(), features.size()) <= 20)
        return verify_sufficient_reason_exhaustive(forest, x, features);
    const auto enc = encode_forest(forest);
    const auto problem = build_problem(enc, x, opposite(forest.predict(x)));
    return verify_sufficient_reason_sat(problem, features);
}

MusCheck check_mus(const ExplanationProblem& problem, std::span<const std::size_t> features) {
    auto solver = load_problem(problem);
    MusCheck out;
    out.unsatisfiable = solver.solve(selector_assumptions(problem, features)) == sat::Status::Unsat;
    out.minimal = true;
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < features.size() && out.minimal; ++k) {
        rest.clear();
        for (std::size_t j = 0; j < features.size(); ++j)
            if (j != k) rest.push_back(features[j]);
        out.minimal = solver.solve(selector_assumptions(problem, rest)) == sat::Status::Sat;
    }
    return out;
}

}  // namespace symexp
