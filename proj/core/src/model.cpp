#include "symexp/model.hpp"

#include <algorithm>
#include <unordered_set>

namespace symexp {

Instance::Instance(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_)
        if (b > 1) throw Error("instance values must be 0 or 1");
}

Instance::Instance(std::initializer_list<int> bits) {
    bits_.reserve(bits.size());
    for (int b : bits) {
        if (b != 0 && b != 1) throw Error("instance values must be 0 or 1");
        bits_.push_back(static_cast<std::uint8_t>(b));
    }
}

Instance Instance::from_string(std::string_view s) {
    std::vector<std::uint8_t> bits;
    bits.reserve(s.size());
    for (char c : s) {
        if (c == '0' || c == '1')
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        else
            throw Error(std::string("invalid instance character '") + c + "'");
    }
    return Instance(std::move(bits));
}

Instance Instance::flipped(std::span<const std::size_t> features) const {
    Instance out = *this;
    for (auto i : features) out.flip(i);
    return out;
}

std::string Instance::to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) s[i] = '1';
    return s;
}

std::size_t hamming(const Instance& a, const Instance& b) {
    if (a.size() != b.size()) throw Error("hamming: instance sizes differ");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

Literal Literal::from_dimacs(std::int64_t code) {
    if (code == 0 || code > INT32_MAX || code < -INT32_MAX)
        throw FormulaError("invalid literal " + std::to_string(code));
    return code > 0 ? pos(static_cast<Var>(code)) : neg(static_cast<Var>(-code));
}

Clause::Clause(std::vector<Literal> lits) : lits_(std::move(lits)) {
    for (auto l : lits_)
        if (l.var() < 1) throw FormulaError("literal variable must be >= 1");
    std::sort(lits_.begin(), lits_.end());
    lits_.erase(std::unique(lits_.begin(), lits_.end()), lits_.end());
    for (std::size_t i = 1; i < lits_.size(); ++i)
        if (lits_[i].var() == lits_[i - 1].var())
            throw FormulaError("tautological clause on variable " + std::to_string(lits_[i].var()));
}

Clause Clause::of(std::initializer_list<int> dimacs) {
    std::vector<Literal> lits;
    for (int d : dimacs) lits.push_back(Literal::from_dimacs(d));
    return Clause(std::move(lits));
}

Var Clause::max_var() const noexcept { return lits_.empty() ? 0 : lits_.back().var(); }

void CnfFormula::add(Clause c) {
    var_count_ = std::max(var_count_, c.max_var());
    clauses_.push_back(std::move(c));
}

void CnfFormula::reserve_vars(Var v) { var_count_ = std::max(var_count_, v); }

bool satisfied(const Clause& c, std::span<const std::uint8_t> assignment) {
    for (auto l : c.literals()) {
        auto v = static_cast<std::size_t>(l.var());
        if (v < assignment.size() && (assignment[v] != 0) == l.positive()) return true;
    }
    return false;
}

bool satisfied(const CnfFormula& f, std::span<const std::uint8_t> assignment) {
    return std::all_of(f.clauses().begin(), f.clauses().end(),
                       [&](const Clause& c) { return satisfied(c, assignment); });
}

std::optional<std::size_t> VarMap::feature_of(Var v) const {
    auto it = std::find(feature_to_var.begin(), feature_to_var.end(), v);
    if (it == feature_to_var.end()) return std::nullopt;
    return static_cast<std::size_t>(it - feature_to_var.begin());
}

void VarMap::audit(std::size_t n_features) const {
    if (feature_to_var.size() != n_features)
        throw FormulaError("varmap covers " + std::to_string(feature_to_var.size()) + " features, expected " +
                           std::to_string(n_features));
    std::unordered_set<Var> seen;
    auto claim = [&](Var v, const char* what) {
        if (v < 1) throw FormulaError(std::string("varmap: invalid ") + what + " variable");
        if (!seen.insert(v).second)
            throw FormulaError(std::string("varmap: ") + what + " variable " + std::to_string(v) + " reused");
    };
    for (auto v : feature_to_var) claim(v, "feature");
    for (auto v : aux_vars) claim(v, "auxiliary");
    claim(output_var, "output");
}

Var ExplanationProblem::total_vars() const noexcept {
    Var m = hard.var_count();
    for (auto s : selectors) m = std::max(m, s);
    for (const auto& c : soft) m = std::max(m, c.max_var());
    return m;
}

void ExplanationProblem::validate() const {
    const auto n = instance.size();
    if (soft.size() != n) throw FormulaError("soft clause count differs from feature count");
    if (selectors.size() != soft.size()) throw FormulaError("selector count differs from soft count");
    Var used = hard.var_count();
    for (const auto& c : soft) used = std::max(used, c.max_var());
    std::unordered_set<Var> sel_seen;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = soft[i];
        if (!c.is_unit()) throw FormulaError("soft clause " + std::to_string(i) + " is not a unit clause");
        auto lit = c.literals()[0];
        if (lit.var() != varmap.feature_var(i))
            throw FormulaError("soft clause " + std::to_string(i) + " does not mention feature variable");
        if (lit.positive() != instance[i])
            throw FormulaError("soft clause " + std::to_string(i) + " polarity disagrees with instance");
        if (selectors[i] <= used || !sel_seen.insert(selectors[i]).second)
            throw FormulaError("selector " + std::to_string(i) + " overlaps problem variables");
    }
}

}  // namespace symexp
