#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <vector>

#include "symexp/forest.hpp"
#include "symexp/model.hpp"

namespace symexp {

/// The asserted target class is unreachable anywhere: hard clauses alone are UNSAT.
class TargetUnreachableError : public Error {
public:
    using Error::Error;
};

/// Hitting-set dualization was asked to work from a truncated MCS family.
class DualityPreconditionError : public Error {
public:
    using Error::Error;
};

using Seconds = std::chrono::duration<double>;

struct EnumLimits {
    std::optional<std::size_t> max_count;
    std::optional<Seconds> budget;
};

struct McsResult {
    std::vector<FeatureSet> mcs_sets;
    /// witnesses[k]: the model of hard + (soft minus mcs_sets[k]), restricted to features.
    std::vector<Instance> witnesses;
    bool complete = false;
    Seconds elapsed{0};
    std::size_t sat_calls = 0;
};

struct MusResult {
    std::vector<FeatureSet> mus_sets;
    bool complete = false;
    Seconds elapsed{0};
};

/// Orders sets by size, then lexicographically.
void sort_feature_sets(std::vector<FeatureSet>& sets);

/// All minimal correction subsets of the soft clauses (as feature indices).
///
/// Loop: take a model of hard + blockers, grow its satisfied soft subset to a
/// maximal one by trying each excluded soft clause once in ascending order,
/// emit the complement, and block it with the clause "some member holds".
///
/// Throws TargetUnreachableError if the hard clauses are unsatisfiable.
/// Returns complete = false when a limit stops the loop.
McsResult enumerate_mcs(const ExplanationProblem& problem, const EnumLimits& limits = {});

/// All minimal hitting sets of a complete MCS family, i.e. all MUSes.
/// Throws DualityPreconditionError when mcs.complete is false.
MusResult enumerate_mus_by_dualization(const McsResult& mcs, const EnumLimits& limits = {});
MusResult minimal_hitting_sets(std::span<const FeatureSet> family, const EnumLimits& limits = {});

/// Flipping exactly `features` in x makes the forest predict `target`.
bool verify_counterfactual(const RandomForest& forest, const Instance& x, std::span<const std::size_t> features,
                           Label target);

/// Every completion of x restricted to `features` keeps the forest's prediction.
/// Uses the exhaustive sweep when at most 20 features are free, else a SAT check.
bool verify_sufficient_reason(const RandomForest& forest, const Instance& x, std::span<const std::size_t> features);
bool verify_sufficient_reason_exhaustive(const RandomForest& forest, const Instance& x,
                                         std::span<const std::size_t> features);
/// hard + {soft_i : i in features} is UNSAT.
bool verify_sufficient_reason_sat(const ExplanationProblem& problem, std::span<const std::size_t> features);

struct MusCheck {
    bool unsatisfiable = false;  // hard + the subset is UNSAT
    bool minimal = false;        // every single-removal subset is SAT
};
MusCheck check_mus(const ExplanationProblem& problem, std::span<const std::size_t> features);

struct BruteForceExplanations {
    std::vector<FeatureSet> counterfactuals;
    std::vector<FeatureSet> sufficient_reasons;
};

inline constexpr std::size_t kBruteForceMaxFeatures = 15;

/// Reference enumeration by direct prediction sweeps over all 2^n instances,
/// without SAT machinery. Both families come back sorted. If the forest already
/// predicts `target` on x both families are empty. Throws Error for n > 15.
BruteForceExplanations brute_force_explanations(const RandomForest& forest, const Instance& x, Label target);

}  // namespace symexp
