#include "symexp/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "symexp/rng.hpp"

namespace symexp {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

constexpr std::size_t kFidelityRetries = 3;
constexpr std::size_t kExhaustiveFreeLimit = 20;

struct Surrogate {
    std::optional<RandomForest> forest;
    double fidelity_train = 0.0;
    std::optional<double> fidelity_holdout;
    std::size_t vicinity_size = 0;
    bool vicinity_truncated = false;
    std::size_t attempts = 0;
    bool faithful = false;
};

void split_rows(const LabeledDataset& all, double holdout_fraction, std::uint64_t seed, LabeledDataset& train,
                LabeledDataset& holdout) {
    train = LabeledDataset{all.n_features, {}, all.truncated};
    holdout = LabeledDataset{all.n_features, {}, false};
    if (all.rows.empty()) return;
    std::vector<std::size_t> rest(all.rows.size() - 1);
    std::iota(rest.begin(), rest.end(), std::size_t{1});
    Rng rng(seed);
    rng.shuffle(rest);
    const auto n_hold = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(rest.size())));
    train.rows.push_back(all.rows[0]);
    for (std::size_t k = 0; k < rest.size(); ++k)
        (k < n_hold ? holdout : train).rows.push_back(all.rows[rest[k]]);
}

// Samples, trains and re-trains until the surrogate reproduces f(x).
Surrogate fit_surrogate(const RunConfig& cfg, Oracle& oracle, Label prediction, StageTimings& timings) {
    Surrogate out;
    const auto radius = cfg.effective_radius();
    for (std::size_t attempt = 0; attempt <= kFidelityRetries; ++attempt) {
        const auto seed = attempt == 0 ? cfg.seed : split_seed(cfg.seed, 1000 + attempt);
        auto t0 = Clock::now();
        LabeledDataset vicinity;
        try {
            if (cfg.dataset)
                vicinity = filter_dataset_vicinity(cfg.instance, *cfg.dataset, oracle, radius);
            else
                vicinity = sample_vicinity(cfg.instance, oracle, radius, cfg.sample_count << attempt,
                                           split_seed(seed, 1));
        } catch (const OracleError& e) {
            throw StageError("oracle", e.what());
        } catch (const Error& e) {
            throw StageError("sample", e.what());
        }
        timings.sample += since(t0);

        t0 = Clock::now();
        LabeledDataset train, holdout;
        split_rows(vicinity, cfg.holdout_fraction, split_seed(seed, 2), train, holdout);
        auto forest = train_forest(train, cfg.nb_trees, cfg.max_depth, split_seed(seed, 3), cfg.threshold);
        timings.train += since(t0);

        out.attempts = attempt + 1;
        out.vicinity_size = vicinity.size();
        out.vicinity_truncated = vicinity.truncated;
        out.fidelity_train = fidelity(forest, train);
        out.fidelity_holdout = holdout.empty() ? std::nullopt : std::optional<double>(fidelity(forest, holdout));
        out.faithful = forest.predict(cfg.instance) == prediction;
        out.forest = std::move(forest);
        if (out.faithful) break;
    }
    return out;
}

Label predict_black_box(Oracle& oracle, const Instance& x) {
    try {
        return oracle.predict(x);
    } catch (const OracleError& e) {
        throw StageError("oracle", e.what());
    }
}

}  // namespace

// --- configuration -------------------------------------------------------------

std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec) {
    switch (spec.kind) {
    case OracleSpec::Kind::TruthTable:
        return std::make_unique<TruthTableOracle>(TruthTableOracle::from_string(spec.n_features, spec.truth_table));
    case OracleSpec::Kind::Threshold:
        return std::make_unique<ThresholdOracle>(spec.n_features, spec.pixels, spec.k);
    case OracleSpec::Kind::External:
        return std::make_unique<ExternalProcessOracle>(spec.command, spec.n_features, spec.timeout);
    }
    throw Error("unknown oracle kind");
}

void RunConfig::validate() const {
    const auto n = instance.size();
    if (n == 0) throw Error("config: instance is empty");
    if (oracle.n_features != 0 && oracle.n_features != n)
        throw Error("config: instance has " + std::to_string(n) + " features, oracle expects " +
                    std::to_string(oracle.n_features));
    if (radius && (*radius < 1 || *radius > n))
        throw Error("config: radius must lie in [1, " + std::to_string(n) + "]");
    if (sample_count < 1) throw Error("config: sample-count must be positive");
    if (nb_trees < 1) throw Error("config: nb-trees must be positive");
    if (max_depth < 1) throw Error("config: max-depth must be positive");
    if (threshold && (*threshold < 1 || *threshold > nb_trees))
        throw Error("config: threshold must lie in [1, nb-trees]");
    if (mcs_max_count && *mcs_max_count < 1) throw Error("config: mcs-max-count must be positive");
    if (!(budget_seconds > 0)) throw Error("config: budget-seconds must be positive");
    if (holdout_fraction < 0 || holdout_fraction >= 1) throw Error("config: holdout-fraction must lie in [0, 1)");
}

std::size_t RunConfig::effective_radius() const { return radius.value_or(default_radius(instance.size())); }

std::string_view to_string(RunStatus s) {
    switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::AlreadyTarget: return "already-target";
    case RunStatus::LocallyConstant: return "locally-constant";
    case RunStatus::FidelityFailure: return "fidelity-failure";
    case RunStatus::BudgetTruncated: return "budget-truncated";
    }
    return "?";
}

int exit_code(RunStatus s) {
    switch (s) {
    case RunStatus::Ok:
    case RunStatus::AlreadyTarget: return 0;
    case RunStatus::FidelityFailure: return 2;
    case RunStatus::LocallyConstant: return 3;
    case RunStatus::BudgetTruncated: return 4;
    }
    return 1;
}

// --- pipeline ----------------------------------------------------------------

ExplanationReport run_explain(const RunConfig& cfg, Oracle& oracle) {
    cfg.validate();
    const auto start = Clock::now();
    const auto deadline = start + std::chrono::duration_cast<Clock::duration>(Seconds(cfg.budget_seconds));
    ExplanationReport rep;
    rep.instance = cfg.instance;
    rep.seed = cfg.seed;
    rep.radius = cfg.effective_radius();
    auto done = [&]() -> ExplanationReport& {
        rep.timings.total = since(start);
        return rep;
    };

    rep.prediction = predict_black_box(oracle, cfg.instance);
    rep.target_class = cfg.target_class.value_or(opposite(rep.prediction));
    if (rep.target_class == rep.prediction) {
        rep.status = RunStatus::AlreadyTarget;
        rep.counterfactuals_complete = true;
        rep.sufficient_reasons = std::vector<FeatureSet>{};
        rep.sufficient_reasons_complete = true;
        rep.note = "the black box already predicts the target class";
        return done();
    }

    auto surrogate = fit_surrogate(cfg, oracle, rep.prediction, rep.timings);
    rep.fidelity_train = surrogate.fidelity_train;
    rep.fidelity_holdout = surrogate.fidelity_holdout;
    rep.vicinity_size = surrogate.vicinity_size;
    rep.vicinity_truncated = surrogate.vicinity_truncated;
    rep.training_attempts = surrogate.attempts;
    rep.forest = surrogate.forest;
    if (!surrogate.faithful) {
        rep.status = RunStatus::FidelityFailure;
        rep.note = "surrogate disagrees with the black box on the explained instance after " +
                   std::to_string(surrogate.attempts) + " training attempts";
        return done();
    }
    const auto& forest = *surrogate.forest;

    auto t0 = Clock::now();
    const auto enc = encode_forest(forest, cfg.path_mode);
    const auto problem = build_problem(enc, cfg.instance, rep.target_class);
    rep.cnf = enc.stats;
    rep.timings.encode = since(t0);

    auto remaining = [&] { return std::max(Seconds(0.001), Seconds(deadline - Clock::now())); };

    t0 = Clock::now();
    McsResult mcs;
    try {
        mcs = enumerate_mcs(problem, {cfg.mcs_max_count, remaining()});
    } catch (const TargetUnreachableError&) {
        rep.timings.enumerate_mcs = since(t0);
        rep.status = RunStatus::LocallyConstant;
        rep.counterfactuals_complete = true;
        rep.sufficient_reasons = std::vector<FeatureSet>{FeatureSet{}};
        rep.sufficient_reasons_complete = true;
        rep.note = "surrogate is locally constant: no counterfactual exists, the prediction needs no fixed feature";
        t0 = Clock::now();
        if (!verify_sufficient_reason_sat(problem, {}))
            throw StageError("verify", "empty sufficient reason failed its check");
        rep.timings.verify = since(t0);
        return done();
    }
    rep.timings.enumerate_mcs = since(t0);
    rep.counterfactuals = mcs.mcs_sets;
    rep.counterfactual_witnesses = mcs.witnesses;
    rep.counterfactuals_complete = mcs.complete;

    t0 = Clock::now();
    if (mcs.complete) {
        auto mus = enumerate_mus_by_dualization(mcs, {std::nullopt, remaining()});
        rep.sufficient_reasons = mus.mus_sets;
        rep.sufficient_reasons_complete = mus.complete;
        if (!mus.complete) rep.note = "sufficient-reason enumeration stopped by the budget; listed sets are exact but not all";
    } else {
        rep.note = "counterfactual enumeration truncated by budget or count limit; sufficient reasons suppressed";
    }
    rep.timings.dualize = since(t0);

    t0 = Clock::now();
    for (const auto& cf : rep.counterfactuals)
        if (!verify_counterfactual(forest, cfg.instance, cf, rep.target_class))
            throw StageError("verify", "counterfactual failed its check");
    if (rep.sufficient_reasons) {
        const auto n = cfg.instance.size();
        for (const auto& sr : *rep.sufficient_reasons) {
            const bool ok = n - sr.size() <= kExhaustiveFreeLimit
                                ? verify_sufficient_reason_exhaustive(forest, cfg.instance, sr)
                                : verify_sufficient_reason_sat(problem, sr);
            if (!ok) throw StageError("verify", "sufficient reason failed its check");
            if (cfg.check_mus) {
                auto chk = check_mus(problem, sr);
                if (!chk.unsatisfiable || !chk.minimal)
                    throw StageError("verify", "sufficient reason is not a minimal unsatisfiable subset");
            }
        }
    }
    rep.timings.verify = since(t0);

    const bool truncated = !rep.counterfactuals_complete || !rep.sufficient_reasons_complete;
    rep.status = truncated ? RunStatus::BudgetTruncated : RunStatus::Ok;
    return done();
}

EncodeResult run_encode(const RunConfig& cfg, Oracle& oracle) {
    cfg.validate();
    StageTimings timings;
    const auto prediction = predict_black_box(oracle, cfg.instance);
    const auto target = cfg.target_class.value_or(opposite(prediction));
    auto surrogate = fit_surrogate(cfg, oracle, prediction, timings);
    if (!surrogate.faithful)
        throw StageError("train", "surrogate disagrees with the black box on the explained instance");
    auto enc = encode_forest(*surrogate.forest, cfg.path_mode);
    std::optional<ExplanationProblem> problem;
    if (target != prediction) problem = build_problem(enc, cfg.instance, target);
    return {std::move(*surrogate.forest), std::move(enc), std::move(problem), prediction, target};
}

std::vector<ExplanationReport> run_batch(const RunConfig& config, const std::vector<Instance>& instances,
                                         std::size_t jobs, const std::function<std::unique_ptr<Oracle>()>& make) {
    std::vector<std::optional<ExplanationReport>> slots(instances.size());
    std::vector<std::exception_ptr> errors(instances.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        std::unique_ptr<Oracle> oracle;
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= instances.size()) return;
            try {
                if (!oracle) oracle = make();
                RunConfig cfg = config;
                cfg.instance = instances[i];
                cfg.seed = split_seed(config.seed, i);
                slots[i] = run_explain(cfg, *oracle);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(instances.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::vector<ExplanationReport> out;
    out.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

// --- JSON --------------------------------------------------------------------

nlohmann::json to_json(const ExplanationReport& r) {
    using nlohmann::json;
    json sr = nullptr;
    if (r.sufficient_reasons) sr = *r.sufficient_reasons;
    json witnesses = json::array();
    for (const auto& w : r.counterfactual_witnesses) witnesses.push_back(w.to_string());
    json holdout = nullptr;
    if (r.fidelity_holdout) holdout = *r.fidelity_holdout;
    return {
        {"instance", r.instance.to_string()},
        {"n_features", r.instance.size()},
        {"prediction", to_int(r.prediction)},
        {"target_class", to_int(r.target_class)},
        {"fidelity", {{"train", r.fidelity_train}, {"holdout", holdout}}},
        {"cnf", stats_json(r.cnf)},
        {"counterfactuals", r.counterfactuals},
        {"counterfactual_witnesses", witnesses},
        {"sufficient_reasons", sr},
        {"complete", {{"counterfactuals", r.counterfactuals_complete}, {"sufficient_reasons", r.sufficient_reasons_complete}}},
        {"status", std::string(to_string(r.status))},
        {"note", r.note},
        {"vicinity", {{"size", r.vicinity_size}, {"truncated", r.vicinity_truncated}, {"radius", r.radius},
                      {"training_attempts", r.training_attempts}}},
        {"seed", r.seed},
        {"timings",
         {{"sample", r.timings.sample},
          {"train", r.timings.train},
          {"encode", r.timings.encode},
          {"enumerate_mcs", r.timings.enumerate_mcs},
          {"dualize", r.timings.dualize},
          {"verify", r.timings.verify},
          {"total", r.timings.total}}},
    };
}

nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    json j;
    switch (c.oracle.kind) {
    case OracleSpec::Kind::TruthTable:
        j["oracle"] = "truthtable";
        j["truth-table"] = c.oracle.truth_table;
        break;
    case OracleSpec::Kind::Threshold:
        j["oracle"] = "threshold";
        j["pixels"] = c.oracle.pixels;
        j["k"] = c.oracle.k;
        break;
    case OracleSpec::Kind::External:
        j["oracle"] = "external";
        j["oracle-cmd"] = c.oracle.command;
        j["oracle-timeout-ms"] = c.oracle.timeout.count();
        break;
    }
    j["n-features"] = c.oracle.n_features;
    j["instance"] = c.instance.to_string();
    j["radius"] = c.effective_radius();
    j["sample-count"] = c.sample_count;
    j["nb-trees"] = c.nb_trees;
    j["max-depth"] = c.max_depth;
    if (c.threshold) j["threshold"] = *c.threshold;
    j["seed"] = c.seed;
    if (c.target_class) j["target-class"] = to_int(*c.target_class);
    if (c.mcs_max_count) j["mcs-max-count"] = *c.mcs_max_count;
    j["budget-seconds"] = c.budget_seconds;
    j["holdout-fraction"] = c.holdout_fraction;
    j["check-mus"] = c.check_mus;
    j["path-mode"] = c.path_mode == PathMode::ZeroPaths ? "zero" : "one";
    return j;
}

RunConfig config_from_json(const nlohmann::json& j, RunConfig c) {
    try {
        if (!j.is_object()) throw Error("config must be a JSON object");
        static const std::vector<std::string> known = {
            "oracle",      "truth-table",  "pixels",        "k",          "oracle-cmd",     "oracle-timeout-ms",
            "n-features",  "instance",     "instance-file", "radius",     "sample-count",   "dataset",
            "nb-trees",    "max-depth",    "threshold",     "seed",       "target-class",   "mcs-max-count",
            "budget-seconds", "holdout-fraction", "check-mus", "path-mode"};
        for (const auto& [key, _] : j.items())
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw Error("config: unknown key '" + key + "'");

        if (j.contains("oracle")) {
            const auto kind = j["oracle"].get<std::string>();
            if (kind == "truthtable")
                c.oracle.kind = OracleSpec::Kind::TruthTable;
            else if (kind == "threshold")
                c.oracle.kind = OracleSpec::Kind::Threshold;
            else if (kind == "external")
                c.oracle.kind = OracleSpec::Kind::External;
            else
                throw Error("config: unknown oracle '" + kind + "'");
        }
        if (j.contains("truth-table")) c.oracle.truth_table = j["truth-table"].get<std::string>();
        if (j.contains("pixels")) c.oracle.pixels = j["pixels"].get<std::vector<std::size_t>>();
        if (j.contains("k")) c.oracle.k = j["k"].get<std::size_t>();
        if (j.contains("oracle-cmd")) c.oracle.command = j["oracle-cmd"].get<std::string>();
        if (j.contains("oracle-timeout-ms"))
            c.oracle.timeout = std::chrono::milliseconds(j["oracle-timeout-ms"].get<std::int64_t>());
        if (j.contains("n-features")) c.oracle.n_features = j["n-features"].get<std::size_t>();
        if (j.contains("instance")) c.instance = Instance::from_string(j["instance"].get<std::string>());
        if (j.contains("instance-file")) {
            auto xs = read_instances_file(j["instance-file"].get<std::string>());
            if (xs.empty()) throw Error("config: instance file is empty");
            c.instance = xs.front();
        }
        if (j.contains("radius")) c.radius = j["radius"].get<std::size_t>();
        if (j.contains("sample-count")) c.sample_count = j["sample-count"].get<std::size_t>();
        if (j.contains("dataset")) c.dataset = read_instances_file(j["dataset"].get<std::string>());
        if (j.contains("nb-trees")) c.nb_trees = j["nb-trees"].get<std::size_t>();
        if (j.contains("max-depth")) c.max_depth = j["max-depth"].get<std::size_t>();
        if (j.contains("threshold")) c.threshold = j["threshold"].get<std::size_t>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("target-class")) c.target_class = label_from_int(j["target-class"].get<int>());
        if (j.contains("mcs-max-count")) c.mcs_max_count = j["mcs-max-count"].get<std::size_t>();
        if (j.contains("budget-seconds")) c.budget_seconds = j["budget-seconds"].get<double>();
        if (j.contains("holdout-fraction")) c.holdout_fraction = j["holdout-fraction"].get<double>();
        if (j.contains("check-mus")) c.check_mus = j["check-mus"].get<bool>();
        if (j.contains("path-mode")) {
            const auto m = j["path-mode"].get<std::string>();
            if (m != "zero" && m != "one") throw Error("config: path-mode must be 'zero' or 'one'");
            c.path_mode = m == "zero" ? PathMode::ZeroPaths : PathMode::OnePaths;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    return c;
}

}  // namespace symexp
