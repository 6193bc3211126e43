#include "symexp/encoder.hpp"

#include <chrono>

#include <nlohmann/json.hpp>

#include "symexp/sat.hpp"

namespace symexp {

namespace {

// A literal or a Boolean constant; constants are folded away when clauses are emitted.
struct Term {
    enum Kind { False, True, Lit } kind = False;
    Literal lit{};

    static Term constant(bool v) { return {v ? True : False, {}}; }
    static Term of(Literal l) { return {Lit, l}; }
    Term operator~() const {
        if (kind == Lit) return of(~lit);
        return constant(kind == False);
    }
};

void emit(CnfFormula& cnf, std::initializer_list<Term> terms) {
    std::vector<Literal> lits;
    for (const auto& t : terms) {
        if (t.kind == Term::True) return;
        if (t.kind == Term::Lit) lits.push_back(t.lit);
    }
    cnf.add(Clause(std::move(lits)));
}

Var fresh_aux(CnfFormula& cnf, VarMap& vm) {
    auto v = cnf.new_var();
    vm.aux_vars.push_back(v);
    return v;
}

std::vector<Literal> path_literals(const TreePath& p, const VarMap& vm) {
    std::vector<Literal> lits;
    lits.reserve(p.tests.size());
    for (auto [f, value] : p.tests) lits.push_back(vm.feature_literal(f, value));
    return lits;
}

// g <-> AND(lits)
void define_and(CnfFormula& cnf, Literal g, const std::vector<Literal>& lits) {
    std::vector<Literal> back{g};
    for (auto l : lits) {
        cnf.add({~g, l});
        back.push_back(~l);
    }
    cnf.add(Clause(std::move(back)));
}

}  // namespace

VarMap bind_features(std::size_t n_features, CnfFormula& cnf) {
    VarMap vm;
    vm.feature_to_var.reserve(n_features);
    for (std::size_t i = 0; i < n_features; ++i) vm.feature_to_var.push_back(cnf.new_var());
    return vm;
}

Literal encode_tree(const DecisionTree& tree, CnfFormula& cnf, VarMap& varmap, PathMode mode) {
    const auto paths = tree.paths();
    const Label selected = mode == PathMode::ZeroPaths ? Label::Negative : Label::Positive;
    std::vector<const TreePath*> chosen;
    for (const auto& p : paths)
        if (p.label == selected) chosen.push_back(&p);

    const Literal y = Literal::pos(fresh_aux(cnf, varmap));
    if (chosen.empty()) {
        // No 0-leaf: constant 1. No 1-leaf: constant 0.
        cnf.add({mode == PathMode::ZeroPaths ? y : ~y});
        return y;
    }
    if (chosen.size() == paths.size()) {
        cnf.add({mode == PathMode::ZeroPaths ? ~y : y});
        return y;
    }

    std::vector<Literal> gates;
    gates.reserve(chosen.size());
    for (const auto* p : chosen) {
        const Literal g = Literal::pos(fresh_aux(cnf, varmap));
        define_and(cnf, g, path_literals(*p, varmap));
        gates.push_back(g);
    }

    std::vector<Literal> big{mode == PathMode::ZeroPaths ? y : ~y};
    for (auto g : gates) {
        if (mode == PathMode::ZeroPaths)
            cnf.add({~y, ~g});  // y -> no 0-path is taken
        else
            cnf.add({y, ~g});   // a 1-path is taken -> y
        big.push_back(g);
    }
    cnf.add(Clause(std::move(big)));
    return y;
}

Literal encode_cardinality(std::span<const Literal> votes, std::size_t t, CnfFormula& cnf, VarMap& varmap) {
    const std::size_t m = votes.size();
    if (t < 1 || t > m)
        throw Error("cardinality threshold must lie in [1, " + std::to_string(m) + "], got " + std::to_string(t));

    // reg[i][j] <-> at least j of votes[0..i) are true, for 1 <= j <= min(i, t).
    std::vector<std::vector<Term>> reg(m + 1);
    auto at = [&](std::size_t i, std::size_t j) -> Term {
        if (j == 0) return Term::constant(true);
        if (j > i || j > t) return Term::constant(false);
        return reg[i][j];
    };

    Var output = 0;
    for (std::size_t i = 1; i <= m; ++i) {
        const Term v = Term::of(votes[i - 1]);
        reg[i].assign(std::min(i, t) + 1, Term::constant(false));
        for (std::size_t j = 1; j <= std::min(i, t); ++j) {
            const bool is_output = i == m && j == t;
            const Var sv = is_output ? cnf.new_var() : fresh_aux(cnf, varmap);
            if (is_output) output = sv;
            const Term s = Term::of(Literal::pos(sv));
            reg[i][j] = s;
            const Term carry = at(i - 1, j);
            const Term below = at(i - 1, j - 1);
            emit(cnf, {~carry, s});
            emit(cnf, {~v, ~below, s});
            emit(cnf, {~s, carry, v});
            emit(cnf, {~s, carry, below});
        }
    }
    return Literal::pos(output);
}

ForestEncoding encode_forest(const RandomForest& forest, PathMode mode) {
    const auto start = std::chrono::steady_clock::now();
    ForestEncoding enc;
    enc.varmap = bind_features(forest.n_features(), enc.cnf);

    std::vector<Literal> votes;
    votes.reserve(forest.trees().size());
    for (const auto& tree : forest.trees()) votes.push_back(encode_tree(tree, enc.cnf, enc.varmap, mode));
    enc.varmap.output_var = encode_cardinality(votes, forest.threshold(), enc.cnf, enc.varmap).var();

    enc.stats.vars = enc.cnf.var_count();
    enc.stats.clauses = enc.cnf.clause_count();
    enc.stats.feature_vars = enc.varmap.feature_to_var.size();
    enc.stats.aux_vars = enc.varmap.aux_vars.size();
    enc.stats.encode_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return enc;
}

Label encoded_prediction(const ForestEncoding& enc, const Instance& x) {
    if (x.size() != enc.n_features()) throw Error("instance size differs from encoded feature count");
    sat::Solver solver;
    solver.add_formula(enc.cnf);
    std::vector<Literal> units;
    units.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) units.push_back(enc.varmap.feature_literal(i, x[i]));
    if (solver.solve(units) != sat::Status::Sat) throw FormulaError("forest circuit is inconsistent with instance");
    return label_from_bool(solver.model_value(enc.varmap.output_var));
}

ExplanationProblem build_problem(const ForestEncoding& enc, const Instance& x, Label target) {
    if (encoded_prediction(enc, x) == target)
        throw AlreadyClassifiedError("the surrogate already predicts class " + std::to_string(to_int(target)) +
                                     " for this instance");
    ExplanationProblem p;
    p.hard = enc.cnf;
    p.hard.add({Literal(enc.varmap.output_var, target == Label::Positive)});
    p.varmap = enc.varmap;
    p.instance = x;
    p.target_class = target;
    p.soft.reserve(x.size());
    p.selectors.reserve(x.size());
    Var next = p.hard.var_count();
    for (std::size_t i = 0; i < x.size(); ++i) {
        p.soft.push_back(Clause{enc.varmap.feature_literal(i, x[i])});
        p.selectors.push_back(++next);
    }
    return p;
}

nlohmann::json stats_json(const EncodingStats& s) {
    return {{"vars", s.vars},
            {"clauses", s.clauses},
            {"feature_vars", s.feature_vars},
            {"aux_vars", s.aux_vars},
            {"encode_seconds", s.encode_seconds}};
}

}  // namespace symexp
