#include <doctest.h>

#include <algorithm>

#include "reference.hpp"
#include "symexp/generators.hpp"
#include "symexp/sat.hpp"

using namespace symexp;
using sat::Status;

namespace {

CnfFormula pigeonhole(int holes) {
    const int pigeons = holes + 1;
    auto var = [&](int p, int h) { return static_cast<Var>(p * holes + h + 1); };
    CnfFormula f(static_cast<Var>(pigeons * holes));
    for (int p = 0; p < pigeons; ++p) {
        std::vector<Literal> c;
        for (int h = 0; h < holes; ++h) c.push_back(Literal::pos(var(p, h)));
        f.add(Clause(c));
    }
    for (int h = 0; h < holes; ++h)
        for (int p = 0; p < pigeons; ++p)
            for (int q = p + 1; q < pigeons; ++q) f.add({Literal::neg(var(p, h)), Literal::neg(var(q, h))});
    return f;
}

std::vector<int> raw_lits(std::span<const Literal> ls) {
    std::vector<int> out;
    for (auto l : ls) out.push_back(l.dimacs());
    return out;
}

}  // namespace

TEST_CASE("trivial instances") {
    sat::Solver s;
    s.add_clause(Clause::of({1}));
    CHECK(s.solve() == Status::Sat);
    CHECK(s.model_value(1));
    s.add_clause(Clause::of({-1}));
    CHECK(s.solve() == Status::Unsat);
    CHECK_FALSE(s.okay());
    CHECK(s.core().empty());
}

TEST_CASE("empty clause makes the solver unsat") {
    sat::Solver s;
    s.add_clause(Clause{});
    CHECK(s.solve() == Status::Unsat);
}

TEST_CASE("empty formula is sat") {
    sat::Solver s;
    CHECK(s.solve() == Status::Sat);
    s.reserve_vars(3);
    CHECK(s.solve() == Status::Sat);
    CHECK(s.model().size() == 4);
}

TEST_CASE("truth-table agreement with independently checked models") {
    Rng rng(17);
    for (int k = 0; k < 2000; ++k) {
        const auto vars = static_cast<Var>(rng.between(1, 10));
        const auto f = random_cnf(vars, rng.between(1, 50), rng.between(1, 4), rng);
        const auto rf = ref::raw(f);
        sat::Solver s;
        s.add_formula(f);
        const auto st = s.solve();
        const auto truth = ref::brute_force_sat(rf, vars);
        REQUIRE(st != Status::Unknown);
        CHECK((st == Status::Sat) == truth.has_value());
        if (st == Status::Sat) CHECK(ref::formula_true(rf, s.model()));
    }
}

TEST_CASE("assumptions, cores and incremental use") {
    Rng rng(23);
    for (int k = 0; k < 1000; ++k) {
        const auto vars = static_cast<Var>(rng.between(2, 10));
        const auto f = random_cnf(vars, rng.between(1, 30), 3, rng);
        const auto rf = ref::raw(f);
        sat::Solver s;
        s.add_formula(f);
        // several assumption sets against the same session
        for (int round = 0; round < 4; ++round) {
            std::vector<Literal> as;
            for (auto v : rng.subset(static_cast<std::size_t>(vars), rng.between(0, static_cast<std::size_t>(vars))))
                as.push_back(Literal(static_cast<Var>(v + 1), rng.below(2) == 1));
            const auto st = s.solve(as);
            const auto truth = ref::brute_force_sat(rf, vars, raw_lits(as));
            REQUIRE(st != Status::Unknown);
            CHECK((st == Status::Sat) == truth.has_value());
            if (st == Status::Sat) {
                CHECK(ref::formula_true(rf, s.model()));
                for (auto a : as) CHECK(s.model_value(a));
            } else {
                const auto core = s.core();
                for (auto c : core) CHECK(std::find(as.begin(), as.end(), c) != as.end());
                CHECK_FALSE(ref::brute_force_sat(rf, vars, raw_lits(core)).has_value());
                sat::Solver fresh;
                fresh.add_formula(f);
                CHECK(fresh.solve(core) == Status::Unsat);
            }
        }
    }
}

TEST_CASE("contradictory assumptions give a core") {
    sat::Solver s;
    s.reserve_vars(2);
    s.add_clause(Clause::of({1, 2}));
    CHECK(s.solve({Literal::pos(1), Literal::neg(1)}) == Status::Unsat);
    CHECK(s.okay());
    CHECK(s.solve({Literal::neg(1), Literal::neg(2)}) == Status::Unsat);
    auto core = s.core();
    CHECK(core.size() == 2);
    CHECK(s.solve({Literal::neg(1)}) == Status::Sat);
    CHECK(s.model_value(2));
}

TEST_CASE("pigeonhole is unsat and budgets return unknown") {
    sat::Solver s;
    s.add_formula(pigeonhole(7));
    CHECK(s.solve({}, sat::Budget::conflicts(10)) == Status::Unknown);
    sat::Solver t;
    t.add_formula(pigeonhole(5));
    CHECK(t.solve() == Status::Unsat);
    CHECK(t.stats().conflicts > 0);
    sat::Solver u;
    u.add_formula(pigeonhole(8));
    auto past = std::chrono::steady_clock::now() - std::chrono::seconds(1);
    CHECK(u.solve({}, sat::Budget::until(past)) == Status::Unknown);
}

TEST_CASE("phase hints steer the first model") {
    sat::Solver s;
    s.reserve_vars(5);
    for (Var v = 1; v <= 5; ++v) s.set_phase(v, v % 2 == 0);
    REQUIRE(s.solve() == Status::Sat);
    for (Var v = 1; v <= 5; ++v) CHECK(s.model_value(v) == (v % 2 == 0));
}

TEST_CASE("satisfiable structured instance") {
    // chain x1 -> x2 -> ... -> x200, x1 forced
    sat::Solver s;
    s.add_clause(Clause::of({1}));
    for (int v = 1; v < 200; ++v) s.add_clause(Clause::of({-v, v + 1}));
    REQUIRE(s.solve() == Status::Sat);
    CHECK(s.model_value(200));
}

TEST_CASE("random 3-SAT near the threshold agrees with brute force at 16 vars") {
    Rng rng(31);
    for (int k = 0; k < 40; ++k) {
        const auto f = random_cnf(16, 68, 3, rng);
        sat::Solver s;
        s.add_formula(f);
        const auto st = s.solve();
        CHECK((st == Status::Sat) == ref::brute_force_sat(ref::raw(f), 16).has_value());
        if (st == Status::Sat) CHECK(ref::formula_true(ref::raw(f), s.model()));
    }
}

TEST_CASE("external solver output parsing") {
    auto r = sat::parse_solver_output("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 3);
    CHECK(r.status == Status::Sat);
    CHECK(r.model == std::vector<std::uint8_t>{0, 1, 0, 1});
    CHECK(sat::parse_solver_output("s UNSATISFIABLE\n", 3).status == Status::Unsat);
    CHECK_THROWS_AS(sat::parse_solver_output("v 1 0\n", 1), Error);
    CHECK_THROWS_AS(sat::parse_solver_output("s MAYBE\n", 1), Error);
    CHECK_THROWS_AS(sat::parse_solver_output("s SATISFIABLE\nv 4 0\n", 3), Error);
}

TEST_CASE("external solver: trivial cases") {
    CnfFormula f(1);
    f.add(Clause::of({1}));
    auto r = sat::solve_external(f, SYMEXP_BF_SOLVER);
    CHECK(r.status == Status::Sat);
    CHECK(r.model[1] == 1);
    f.add(Clause::of({-1}));
    CHECK(sat::solve_external(f, SYMEXP_BF_SOLVER).status == Status::Unsat);
    CHECK_THROWS_AS(sat::solve_external(f, "/nonexistent/solver"), Error);
}

TEST_CASE("external solver: differential against the internal engine") {
    Rng rng(5);
    for (int k = 0; k < 500; ++k) {
        const auto vars = static_cast<Var>(rng.between(1, 10));
        const auto f = random_cnf(vars, rng.between(1, 45), rng.between(1, 3), rng);
        sat::Solver s;
        s.add_formula(f);
        const auto mine = s.solve();
        const auto theirs = sat::solve_external(f, SYMEXP_BF_SOLVER);
        CHECK(mine == theirs.status);
        if (theirs.status == Status::Sat) CHECK(ref::formula_true(ref::raw(f), theirs.model));
    }
}
