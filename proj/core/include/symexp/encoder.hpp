#pragma once

#include <span>

#include <nlohmann/json_fwd.hpp>

#include "symexp/forest.hpp"
#include "symexp/model.hpp"

namespace symexp {

class AlreadyClassifiedError : public Error {
public:
    using Error::Error;
};

/// Which leaves define a tree's output variable.
enum class PathMode {
    ZeroPaths,  // y_i <-> AND of negated 0-leaf paths
    OnePaths,   // y_i <-> OR of 1-leaf paths
};

struct EncodingStats {
    Var vars = 0;
    std::size_t clauses = 0;
    std::size_t feature_vars = 0;
    std::size_t aux_vars = 0;
    double encode_seconds = 0.0;
};

/// CNF circuit of a forest: for every complete feature assignment the
/// auxiliaries and the output variable are uniquely determined.
struct ForestEncoding {
    CnfFormula cnf;
    VarMap varmap;
    EncodingStats stats;
    std::size_t n_features() const noexcept { return varmap.feature_to_var.size(); }
};

/// Allocates variables 1..n for features 0..n-1.
VarMap bind_features(std::size_t n_features, CnfFormula& cnf);

/// Appends clauses defining a fresh variable equivalent to the tree's prediction
/// and returns its positive literal. New auxiliaries are recorded in varmap.
Literal encode_tree(const DecisionTree& tree, CnfFormula& cnf, VarMap& varmap,
                    PathMode mode = PathMode::ZeroPaths);

/// Sequential-counter definition of a fresh y with y <-> (sum of votes >= t).
/// Returns y; the counter registers (all but y) are recorded as auxiliaries.
Literal encode_cardinality(std::span<const Literal> votes, std::size_t t, CnfFormula& cnf, VarMap& varmap);

ForestEncoding encode_forest(const RandomForest& forest, PathMode mode = PathMode::ZeroPaths);

/// Prediction of the encoded circuit on x, obtained with the SAT engine.
Label encoded_prediction(const ForestEncoding& enc, const Instance& x);

/// Hard: circuit plus the unit asserting output = target. Soft: one unit per
/// feature matching x. Selectors are fresh variables after all others.
/// Throws AlreadyClassifiedError if the circuit already maps x to target.
ExplanationProblem build_problem(const ForestEncoding& enc, const Instance& x, Label target);

nlohmann::json stats_json(const EncodingStats& stats);

}  // namespace symexp
