#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "symexp/model.hpp"

namespace symexp::sat {

enum class Status { Sat, Unsat, Unknown };

std::string_view to_string(Status s);

/// Per-call resource limits. Unknown is returned when either is exhausted.
struct Budget {
    std::optional<std::uint64_t> max_conflicts;
    std::optional<std::chrono::steady_clock::time_point> deadline;

    static Budget unlimited() { return {}; }
    static Budget until(std::chrono::steady_clock::time_point t) { return {std::nullopt, t}; }
    static Budget conflicts(std::uint64_t n) { return {n, std::nullopt}; }
};

struct Stats {
    std::uint64_t solves = 0;
    std::uint64_t conflicts = 0;
    std::uint64_t decisions = 0;
    std::uint64_t propagations = 0;
    std::uint64_t restarts = 0;
    std::uint64_t learned = 0;
};

/// Incremental CDCL solver: two-watched-literal propagation, first-UIP learning
/// with clause minimization, VSIDS, phase saving, Luby restarts and
/// assumption-based solving with final-conflict cores.
///
/// Clauses are only ever added. A session is single-owner.
class Solver {
public:
    Solver();
    ~Solver();
    Solver(Solver&&) noexcept;
    Solver& operator=(Solver&&) noexcept;
    Solver(const Solver&) = delete;
    Solver& operator=(const Solver&) = delete;

    void reserve_vars(Var n);
    Var var_count() const noexcept;

    void add_clause(const Clause& c);
    void add_clause(std::span<const Literal> lits);
    void add_formula(const CnfFormula& f);

    /// Preferred polarity for the first decision on v (later overridden by phase saving).
    void set_phase(Var v, bool positive);

    Status solve(std::span<const Literal> assumptions = {}, const Budget& budget = {});
    Status solve(std::initializer_list<Literal> assumptions, const Budget& budget = {}) {
        return solve(std::span<const Literal>(assumptions.begin(), assumptions.size()), budget);
    }

    /// Valid after Sat. Index by variable id; entry 0 unused.
    const std::vector<std::uint8_t>& model() const noexcept;
    bool model_value(Var v) const;
    bool model_value(Literal l) const { return model_value(l.var()) == l.positive(); }

    /// Valid after Unsat: a subset of the assumptions that is inconsistent with
    /// the clauses. Empty when the clauses alone are unsatisfiable.
    const std::vector<Literal>& core() const noexcept;

    /// False once the clause set is known to be unsatisfiable without assumptions.
    bool okay() const noexcept;

    const Stats& stats() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Outcome of running a DIMACS solver executable.
struct ExternalResult {
    Status status = Status::Unknown;
    std::vector<std::uint8_t> model;  // index by var, only meaningful when Sat
};

/// Writes cnf to a temporary DIMACS file, runs `command <file>` through the
/// shell and parses the "s" / "v" lines of its standard output.
/// Throws Error on launch or output-format failures.
ExternalResult solve_external(const CnfFormula& cnf, const std::string& command);

/// Parses a solver's competition-format output ("s ..." / "v ... 0").
ExternalResult parse_solver_output(std::string_view output, Var var_count);

}  // namespace symexp::sat
