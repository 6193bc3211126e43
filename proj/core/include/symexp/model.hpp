#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace symexp {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class FormulaError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Features and labels
// ---------------------------------------------------------------------------

enum class Label : std::uint8_t { Negative = 0, Positive = 1 };

constexpr Label opposite(Label l) noexcept {
    return l == Label::Positive ? Label::Negative : Label::Positive;
}
constexpr int to_int(Label l) noexcept { return static_cast<int>(l); }
inline Label label_from_int(int v) {
    if (v != 0 && v != 1) throw Error("label must be 0 or 1, got " + std::to_string(v));
    return v == 1 ? Label::Positive : Label::Negative;
}
constexpr Label label_from_bool(bool b) noexcept { return b ? Label::Positive : Label::Negative; }

/// A complete assignment of n binary features.
class Instance {
public:
    Instance() = default;
    explicit Instance(std::vector<std::uint8_t> bits);
    Instance(std::initializer_list<int> bits);

    static Instance zeros(std::size_t n) { return Instance(std::vector<std::uint8_t>(n, 0)); }
    /// Parses a string of '0'/'1' characters.
    static Instance from_string(std::string_view s);

    std::size_t size() const noexcept { return bits_.size(); }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
    void flip(std::size_t i) { bits_[i] ^= 1; }

    /// Copy of this instance with the listed features inverted.
    Instance flipped(std::span<const std::size_t> features) const;

    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    std::string to_string() const;

    friend bool operator==(const Instance&, const Instance&) = default;
    friend auto operator<=>(const Instance&, const Instance&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

std::size_t hamming(const Instance& a, const Instance& b);

// ---------------------------------------------------------------------------
// Propositional machinery
// ---------------------------------------------------------------------------

using Var = std::int32_t;

/// A literal in DIMACS convention: variable id >= 1, sign carries polarity.
class Literal {
public:
    constexpr Literal() = default;
    constexpr Literal(Var var, bool positive) : code_(positive ? var : -var) {}

    static constexpr Literal pos(Var v) { return Literal(v, true); }
    static constexpr Literal neg(Var v) { return Literal(v, false); }
    static Literal from_dimacs(std::int64_t code);

    constexpr Var var() const noexcept { return code_ < 0 ? -code_ : code_; }
    constexpr bool positive() const noexcept { return code_ > 0; }
    constexpr std::int32_t dimacs() const noexcept { return code_; }
    constexpr Literal operator~() const noexcept { return Literal::raw(-code_); }

    friend constexpr bool operator==(Literal, Literal) = default;
    friend constexpr bool operator<(Literal a, Literal b) noexcept {
        return a.var() != b.var() ? a.var() < b.var() : a.code_ < b.code_;
    }

private:
    static constexpr Literal raw(std::int32_t c) {
        Literal l;
        l.code_ = c;
        return l;
    }
    std::int32_t code_ = 0;
};

/// Disjunction of literals. Duplicates are merged; tautologies are rejected.
class Clause {
public:
    Clause() = default;
    explicit Clause(std::vector<Literal> lits);
    Clause(std::initializer_list<Literal> lits) : Clause(std::vector<Literal>(lits)) {}
    /// Builds from DIMACS-signed integers, e.g. {1, -2}.
    static Clause of(std::initializer_list<int> dimacs);

    std::span<const Literal> literals() const noexcept { return lits_; }
    std::size_t size() const noexcept { return lits_.size(); }
    bool empty() const noexcept { return lits_.empty(); }
    bool is_unit() const noexcept { return lits_.size() == 1; }
    Var max_var() const noexcept;

    friend bool operator==(const Clause&, const Clause&) = default;
    friend bool operator<(const Clause& a, const Clause& b) { return a.lits_ < b.lits_; }

private:
    std::vector<Literal> lits_;  // sorted by (var, sign)
};

/// Conjunction of clauses with an explicit variable count.
class CnfFormula {
public:
    CnfFormula() = default;
    explicit CnfFormula(Var var_count) : var_count_(var_count) {}

    void add(Clause c);
    void add(std::initializer_list<Literal> lits) { add(Clause(lits)); }
    Var new_var() { return ++var_count_; }
    /// Raises var_count to at least v.
    void reserve_vars(Var v);

    Var var_count() const noexcept { return var_count_; }
    std::size_t clause_count() const noexcept { return clauses_.size(); }
    std::span<const Clause> clauses() const noexcept { return clauses_; }

    friend bool operator==(const CnfFormula&, const CnfFormula&) = default;

private:
    std::vector<Clause> clauses_;
    Var var_count_ = 0;
};

/// Evaluates a clause under a full assignment (index = variable id).
bool satisfied(const Clause& c, std::span<const std::uint8_t> assignment);
bool satisfied(const CnfFormula& f, std::span<const std::uint8_t> assignment);

/// Binding between feature indices (0-based) and propositional variables (1-based).
struct VarMap {
    std::vector<Var> feature_to_var;
    std::vector<Var> aux_vars;
    Var output_var = 0;

    Var feature_var(std::size_t i) const { return feature_to_var.at(i); }
    Literal feature_literal(std::size_t i, bool value) const { return Literal(feature_var(i), value); }
    /// Reverse lookup; nullopt if v is not a feature variable.
    std::optional<std::size_t> feature_of(Var v) const;

    /// Throws FormulaError if injectivity/disjointness does not hold.
    void audit(std::size_t n_features) const;
};

struct ExplanationProblem {
    CnfFormula hard;                 // classifier circuit plus asserted output
    std::vector<Clause> soft;        // one unit clause per feature
    std::vector<Var> selectors;      // selector variable of soft clause i
    Label target_class = Label::Positive;
    Instance instance;
    VarMap varmap;

    /// Largest variable id in use, selectors included.
    Var total_vars() const noexcept;
    /// Throws FormulaError on any violated invariant.
    void validate() const;
};

enum class ExplanationKind { SufficientReason, Counterfactual };

struct Explanation {
    ExplanationKind kind = ExplanationKind::Counterfactual;
    std::vector<std::size_t> features;  // sorted feature indices
    Instance source_instance;
    Label target_class = Label::Positive;
};

using FeatureSet = std::vector<std::size_t>;

}  // namespace symexp
