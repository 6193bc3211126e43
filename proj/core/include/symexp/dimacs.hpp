#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "symexp/model.hpp"

namespace symexp {

/// Reads DIMACS CNF ("p cnf V C" header, 0-terminated clauses, "c" comments).
/// Throws ParseError carrying the offending line number.
CnfFormula parse_dimacs(std::istream& in);
CnfFormula parse_dimacs(std::string_view text);

std::string emit_dimacs(const CnfFormula& cnf);

/// Weighted CNF in the classic "p wcnf nvars nclauses top" dialect. Hard clauses
/// carry weight top = #soft + 1, soft clauses weight 1, hard clauses first.
std::string emit_wcnf(const ExplanationProblem& problem);

struct WcnfFormula {
    CnfFormula hard;
    std::vector<Clause> soft;
    std::vector<std::uint64_t> soft_weights;
    std::uint64_t top = 0;
    Var var_count = 0;
};

WcnfFormula parse_wcnf(std::istream& in);
WcnfFormula parse_wcnf(std::string_view text);

}  // namespace symexp
