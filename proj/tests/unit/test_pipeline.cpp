#include <doctest.h>

#include <nlohmann/json.hpp>

#include "symexp/pipeline.hpp"

using namespace symexp;

namespace {

RunConfig truth_table_config(std::size_t n, const std::string& table, const std::string& x) {
    RunConfig c;
    c.oracle.kind = OracleSpec::Kind::TruthTable;
    c.oracle.n_features = n;
    c.oracle.truth_table = table;
    c.instance = Instance::from_string(x);
    return c;
}

std::string table_of(std::size_t n, auto f) {
    std::string t;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) t += f(m) ? '1' : '0';
    return t;
}

}  // namespace

TEST_CASE("AND black box, exhaustive radius") {
    auto cfg = truth_table_config(2, "0001", "00");
    cfg.radius = 2;
    auto oracle = make_oracle(cfg.oracle);
    auto r = run_explain(cfg, *oracle);
    CHECK(r.status == RunStatus::Ok);
    CHECK(exit_code(r.status) == 0);
    CHECK(r.prediction == Label::Negative);
    CHECK(r.target_class == Label::Positive);
    CHECK(r.counterfactuals == std::vector<FeatureSet>{{0, 1}});
    REQUIRE(r.sufficient_reasons);
    CHECK(*r.sufficient_reasons == std::vector<FeatureSet>{{0}, {1}});
    CHECK(r.counterfactuals_complete);
    CHECK(r.sufficient_reasons_complete);
    CHECK(r.fidelity_train == 1.0);
    CHECK(r.cnf.vars > 0);
}

TEST_CASE("black box already predicts the target") {
    auto cfg = truth_table_config(2, "0001", "00");
    cfg.target_class = Label::Negative;
    auto oracle = make_oracle(cfg.oracle);
    auto r = run_explain(cfg, *oracle);
    CHECK(r.status == RunStatus::AlreadyTarget);
    CHECK(exit_code(r.status) == 0);
    CHECK(r.counterfactuals.empty());
    CHECK(to_json(r)["status"] == "already-target");
}

TEST_CASE("locally constant vicinity") {
    RunConfig cfg;
    cfg.oracle = {OracleSpec::Kind::Threshold, 30, "", {0, 1, 2}, 3, "", {}};
    cfg.instance = Instance::zeros(30);
    cfg.radius = 2;  // never reaches three pixels
    auto oracle = make_oracle(cfg.oracle);
    auto r = run_explain(cfg, *oracle);
    CHECK(r.status == RunStatus::LocallyConstant);
    CHECK(exit_code(r.status) == 3);
    CHECK(r.counterfactuals.empty());
    REQUIRE(r.sufficient_reasons);
    CHECK(*r.sufficient_reasons == std::vector<FeatureSet>{FeatureSet{}});
    auto j = to_json(r);
    CHECK(j["status"] == "locally-constant");
    CHECK(j["counterfactuals"].empty());
}

TEST_CASE("fidelity failure after retries") {
    // Only x is positive; depth-1 trees cannot isolate it.
    auto cfg = truth_table_config(3, "10000000", "000");
    cfg.radius = 3;
    cfg.max_depth = 1;
    auto oracle = make_oracle(cfg.oracle);
    auto r = run_explain(cfg, *oracle);
    CHECK(r.status == RunStatus::FidelityFailure);
    CHECK(exit_code(r.status) == 2);
    CHECK(r.training_attempts == 4);
    CHECK(r.counterfactuals.empty());
    CHECK_THROWS_AS(run_encode(cfg, *oracle), StageError);
}

TEST_CASE("count limit truncates and suppresses sufficient reasons") {
    auto cfg = truth_table_config(4, table_of(4, [](auto m) { return m != 0; }), "0000");
    cfg.radius = 4;
    cfg.mcs_max_count = 1;
    auto oracle = make_oracle(cfg.oracle);
    auto r = run_explain(cfg, *oracle);
    CHECK(r.status == RunStatus::BudgetTruncated);
    CHECK(exit_code(r.status) == 4);
    CHECK(r.counterfactuals.size() == 1);
    CHECK_FALSE(r.counterfactuals_complete);
    CHECK_FALSE(r.sufficient_reasons.has_value());
    CHECK(to_json(r)["sufficient_reasons"].is_null());
}

TEST_CASE("separable toy tasks reach holdout fidelity 0.9") {
    struct Task {
        const char* name;
        RunConfig cfg;
    };
    std::vector<Task> tasks;
    {
        auto c = truth_table_config(10, table_of(10, [](auto m) { return (m & 3u) == 3u; }), "0000000000");
        c.radius = 10;
        tasks.push_back({"AND of two features", c});
    }
    {
        auto c = truth_table_config(12, table_of(12, [](auto m) { return (m >> 5) & 1u; }), "000000000000");
        c.radius = 12;
        tasks.push_back({"single feature", c});
    }
    {
        RunConfig c;
        c.oracle = {OracleSpec::Kind::Threshold, 40, "", {0, 1, 2, 3, 4}, 3, "", {}};
        c.instance = Instance::zeros(40);
        c.instance.set(0, true);
        c.instance.set(1, true);
        c.radius = 6;
        c.sample_count = 400;
        tasks.push_back({"threshold 3 of 5", c});
    }
    for (auto& t : tasks) {
        CAPTURE(t.name);
        auto oracle = make_oracle(t.cfg.oracle);
        auto r = run_explain(t.cfg, *oracle);
        REQUIRE(r.fidelity_holdout.has_value());
        CHECK(*r.fidelity_holdout >= 0.9);
        CHECK(r.status == RunStatus::Ok);
    }
}

TEST_CASE("runs are reproducible and batch seeds derive from the master seed") {
    auto cfg = truth_table_config(6, table_of(6, [](auto m) { return __builtin_popcountll(m) >= 3; }), "000000");
    cfg.radius = 4;
    auto oracle = make_oracle(cfg.oracle);
    auto a = run_explain(cfg, *oracle);
    auto b = run_explain(cfg, *oracle);
    CHECK(a.counterfactuals == b.counterfactuals);
    CHECK(a.forest == b.forest);

    std::vector<Instance> xs{Instance::from_string("000000"), Instance::from_string("110000"),
                             Instance::from_string("111100")};
    auto batch = run_batch(cfg, xs, 2, [&] { return make_oracle(cfg.oracle); });
    REQUIRE(batch.size() == 3);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        auto one = cfg;
        one.instance = xs[i];
        one.seed = split_seed(cfg.seed, i);
        auto r = run_explain(one, *oracle);
        CHECK(batch[i].instance == xs[i]);
        CHECK(batch[i].counterfactuals == r.counterfactuals);
        CHECK(batch[i].forest == r.forest);
    }
}

TEST_CASE("external oracle drives the pipeline") {
    auto cfg = truth_table_config(2, "0001", "00");
    cfg.oracle.kind = OracleSpec::Kind::External;
    cfg.oracle.command = std::string(SYMEXP_FAKE_ORACLE) + " 0001";
    cfg.radius = 2;
    auto oracle = make_oracle(cfg.oracle);
    auto r = run_explain(cfg, *oracle);
    CHECK(r.counterfactuals == std::vector<FeatureSet>{{0, 1}});

    cfg.oracle.command = std::string(SYMEXP_FAKE_ORACLE) + " 0001 crash-after 1";
    auto broken = make_oracle(cfg.oracle);
    try {
        run_explain(cfg, *broken);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "oracle");
    }
}

TEST_CASE("encode prefix") {
    auto cfg = truth_table_config(2, "0001", "00");
    cfg.radius = 2;
    auto oracle = make_oracle(cfg.oracle);
    auto e = run_encode(cfg, *oracle);
    REQUIRE(e.problem);
    CHECK(e.encoding.stats.clauses == e.encoding.cnf.clause_count());
    CHECK(e.problem->soft.size() == 2);
    cfg.target_class = Label::Negative;
    CHECK_FALSE(run_encode(cfg, *oracle).problem.has_value());
}

TEST_CASE("config validation") {
    auto cfg = truth_table_config(2, "0001", "00");
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.radius = 3;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cfg;
    bad.nb_trees = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cfg;
    bad.threshold = 11;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cfg;
    bad.instance = Instance::from_string("000");
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cfg;
    bad.budget_seconds = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK(cfg.effective_radius() == 1);
}

TEST_CASE("config json") {
    auto cfg = truth_table_config(2, "0001", "01");
    cfg.nb_trees = 3;
    cfg.threshold = 2;
    cfg.target_class = Label::Negative;
    cfg.path_mode = PathMode::OnePaths;
    auto j = to_json(cfg);
    CHECK(j["nb-trees"] == 3);
    auto back = config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"nb_trees", 3}}), Error);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"oracle", "mystery"}}), Error);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"seed", "abc"}}), Error);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), Error);
}

TEST_CASE("report json carries the documented keys") {
    auto cfg = truth_table_config(2, "0001", "00");
    cfg.radius = 2;
    auto oracle = make_oracle(cfg.oracle);
    auto j = to_json(run_explain(cfg, *oracle));
    for (const char* key : {"instance", "prediction", "target_class", "fidelity", "cnf", "counterfactuals",
                            "sufficient_reasons", "status", "timings"})
        CHECK(j.contains(key));
    CHECK(j["fidelity"].contains("train"));
    CHECK(j["fidelity"].contains("holdout"));
    CHECK(j["cnf"].contains("vars"));
    CHECK(j["cnf"].contains("clauses"));
    CHECK(j["counterfactuals"] == nlohmann::json::parse("[[0,1]]"));
}
