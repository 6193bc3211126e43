#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "symexp/encoder.hpp"
#include "symexp/enumerate.hpp"
#include "symexp/forest.hpp"
#include "symexp/oracle.hpp"
#include "symexp/vicinity.hpp"

namespace symexp {

inline constexpr std::uint64_t kDefaultSeed = 20211;

/// Error raised by one pipeline stage ("oracle", "sample", "train", ...).
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct OracleSpec {
    enum class Kind { TruthTable, Threshold, External };
    Kind kind = Kind::Threshold;
    std::size_t n_features = 0;
    std::string truth_table;            // TruthTable: 2^n '0'/'1' characters
    std::vector<std::size_t> pixels;    // Threshold
    std::size_t k = 0;                  // Threshold
    std::string command;                // External
    std::chrono::milliseconds timeout = ExternalProcessOracle::kDefaultTimeout;
};

std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec);

struct RunConfig {
    OracleSpec oracle;
    Instance instance;
    std::optional<std::size_t> radius;          // default: default_radius(n)
    std::size_t sample_count = kDefaultSampleCount;
    std::optional<std::vector<Instance>> dataset;  // filter mode instead of sampling
    std::size_t nb_trees = 10;
    std::size_t max_depth = 24;
    std::optional<std::size_t> threshold;       // default: strict majority
    std::uint64_t seed = kDefaultSeed;
    std::optional<Label> target_class;          // default: opposite of f(x)
    std::optional<std::size_t> mcs_max_count;
    double budget_seconds = 600.0;
    double holdout_fraction = 0.25;
    bool check_mus = false;
    PathMode path_mode = PathMode::ZeroPaths;

    /// Throws Error on a violated field constraint.
    void validate() const;
    std::size_t effective_radius() const;
};

enum class RunStatus { Ok, AlreadyTarget, LocallyConstant, FidelityFailure, BudgetTruncated };

std::string_view to_string(RunStatus s);
/// 0 ok / already-target, 2 fidelity failure, 3 target unreachable, 4 budget truncation.
int exit_code(RunStatus s);

struct StageTimings {
    double sample = 0, train = 0, encode = 0, enumerate_mcs = 0, dualize = 0, verify = 0, total = 0;
};

struct ExplanationReport {
    Instance instance;
    Label prediction = Label::Negative;
    Label target_class = Label::Positive;
    double fidelity_train = 0.0;
    std::optional<double> fidelity_holdout;
    EncodingStats cnf;
    std::vector<FeatureSet> counterfactuals;
    std::vector<Instance> counterfactual_witnesses;
    bool counterfactuals_complete = false;
    std::optional<std::vector<FeatureSet>> sufficient_reasons;  // nullopt when suppressed
    bool sufficient_reasons_complete = false;
    std::string note;
    RunStatus status = RunStatus::Ok;
    StageTimings timings;
    std::size_t vicinity_size = 0;
    bool vicinity_truncated = false;
    std::size_t radius = 0;
    std::size_t training_attempts = 0;
    std::uint64_t seed = kDefaultSeed;
    std::optional<RandomForest> forest;
};

/// sample -> train -> encode -> build -> enumerate -> dualize -> verify.
/// Every emitted explanation has passed its verify_* check against the surrogate.
ExplanationReport run_explain(const RunConfig& config, Oracle& oracle);

/// Runs one pipeline per instance on `jobs` worker threads, each with its own
/// oracle from `make` and seed split_seed(config.seed, index).
std::vector<ExplanationReport> run_batch(const RunConfig& config, const std::vector<Instance>& instances,
                                         std::size_t jobs, const std::function<std::unique_ptr<Oracle>()>& make);

struct EncodeResult {
    RandomForest forest;
    ForestEncoding encoding;
    std::optional<ExplanationProblem> problem;  // absent if the surrogate already predicts the target
    Label prediction = Label::Negative;
    Label target_class = Label::Positive;
};

/// The sample/train/encode/build prefix of run_explain.
EncodeResult run_encode(const RunConfig& config, Oracle& oracle);

nlohmann::json to_json(const ExplanationReport& report);
nlohmann::json to_json(const RunConfig& config);
/// Reads kebab-case RunConfig fields from a JSON object over `base`.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});

}  // namespace symexp
