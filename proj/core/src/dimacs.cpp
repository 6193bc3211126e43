#include "symexp/dimacs.hpp"

#include <charconv>
#include <sstream>

namespace symexp {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

template <class Int>
Int to_int(std::string_view tok, std::size_t line, const char* what) {
    Int v{};
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        throw ParseError(line, std::string("expected integer ") + what + ", got '" + std::string(tok) + "'");
    return v;
}

// Shared scanner for "p cnf" / "p wcnf" bodies.
struct Scanner {
    explicit Scanner(bool w) : weighted(w) {}

    bool weighted;
    std::int64_t declared_vars = -1;
    std::int64_t declared_clauses = -1;
    std::uint64_t top = 0;

    struct Entry {
        std::uint64_t weight;
        Clause clause;
    };
    std::vector<Entry> entries;

    void run(std::istream& in) {
        std::string raw;
        std::size_t line_no = 0;
        std::vector<Literal> pending;
        std::uint64_t pending_weight = 0;
        bool in_clause = false;
        std::size_t clause_line = 0;

        while (std::getline(in, raw)) {
            ++line_no;
            auto line = trim(raw);
            if (line.empty() || line.front() == 'c') continue;
            if (line.front() == 'p') {
                if (declared_vars >= 0) throw ParseError(line_no, "duplicate header");
                auto toks = split_ws(line);
                const char* fmt = weighted ? "wcnf" : "cnf";
                std::size_t expect = weighted ? 5 : 4;
                if (toks.size() != expect || toks[0] != "p" || toks[1] != fmt)
                    throw ParseError(line_no, std::string("malformed header, expected 'p ") + fmt + " ...'");
                declared_vars = to_int<std::int64_t>(toks[2], line_no, "variable count");
                declared_clauses = to_int<std::int64_t>(toks[3], line_no, "clause count");
                if (weighted) top = to_int<std::uint64_t>(toks[4], line_no, "top weight");
                if (declared_vars < 0 || declared_clauses < 0 || declared_vars > INT32_MAX)
                    throw ParseError(line_no, "malformed header counts");
                continue;
            }
            if (declared_vars < 0) throw ParseError(line_no, "clause before header");
            for (auto tok : split_ws(line)) {
                if (!in_clause) {
                    in_clause = true;
                    clause_line = line_no;
                    pending.clear();
                    if (weighted) {
                        pending_weight = to_int<std::uint64_t>(tok, line_no, "weight");
                        if (pending_weight == 0) throw ParseError(line_no, "zero weight");
                        continue;
                    }
                }
                auto v = to_int<std::int64_t>(tok, line_no, "literal");
                if (v == 0) {
                    if (static_cast<std::int64_t>(entries.size()) >= declared_clauses)
                        throw ParseError(line_no, "more clauses than declared");
                    try {
                        entries.push_back({pending_weight, Clause(pending)});
                    } catch (const FormulaError& e) {
                        throw ParseError(clause_line, e.what());
                    }
                    in_clause = false;
                    continue;
                }
                if ((v < 0 ? -v : v) > declared_vars)
                    throw ParseError(line_no, "literal " + std::to_string(v) + " exceeds declared variable count " +
                                                  std::to_string(declared_vars));
                pending.push_back(Literal::from_dimacs(v));
            }
        }
        if (declared_vars < 0) throw ParseError(line_no, "missing header");
        if (in_clause) throw ParseError(line_no, "missing clause terminator '0'");
        if (static_cast<std::int64_t>(entries.size()) != declared_clauses)
            throw ParseError(line_no, "expected " + std::to_string(declared_clauses) + " clauses, found " +
                                          std::to_string(entries.size()));
    }
};

void append_clause(std::string& out, const Clause& c) {
    for (auto l : c.literals()) {
        out += std::to_string(l.dimacs());
        out += ' ';
    }
    out += "0\n";
}

}  // namespace

CnfFormula parse_dimacs(std::istream& in) {
    Scanner sc(false);
    sc.run(in);
    CnfFormula f(static_cast<Var>(sc.declared_vars));
    for (auto& e : sc.entries) f.add(std::move(e.clause));
    return f;
}

CnfFormula parse_dimacs(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_dimacs(in);
}

std::string emit_dimacs(const CnfFormula& cnf) {
    std::string out = "p cnf " + std::to_string(cnf.var_count()) + " " + std::to_string(cnf.clause_count()) + "\n";
    for (const auto& c : cnf.clauses()) append_clause(out, c);
    return out;
}

std::string emit_wcnf(const ExplanationProblem& problem) {
    Var vars = problem.hard.var_count();
    for (const auto& c : problem.soft) vars = std::max(vars, c.max_var());
    const auto n_clauses = problem.hard.clause_count() + problem.soft.size();
    const auto top = problem.soft.size() + 1;
    const auto top_s = std::to_string(top);

    std::string out =
        "p wcnf " + std::to_string(vars) + " " + std::to_string(n_clauses) + " " + top_s + "\n";
    for (const auto& c : problem.hard.clauses()) {
        out += top_s;
        out += ' ';
        append_clause(out, c);
    }
    for (const auto& c : problem.soft) {
        out += "1 ";
        append_clause(out, c);
    }
    return out;
}

WcnfFormula parse_wcnf(std::istream& in) {
    Scanner sc(true);
    sc.run(in);
    WcnfFormula w;
    w.top = sc.top;
    w.var_count = static_cast<Var>(sc.declared_vars);
    w.hard = CnfFormula(w.var_count);
    for (auto& e : sc.entries) {
        if (e.weight >= sc.top) {
            w.hard.add(std::move(e.clause));
        } else {
            w.soft.push_back(std::move(e.clause));
            w.soft_weights.push_back(e.weight);
        }
    }
    return w;
}

WcnfFormula parse_wcnf(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_wcnf(in);
}

}  // namespace symexp
