// symexp: explain one prediction of a binary classifier with counterfactuals
// and sufficient reasons computed on a random-forest surrogate.

#include <bit>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "symexp/dimacs.hpp"
#include "symexp/pipeline.hpp"
#include "symexp/render.hpp"
#include "symexp/selftest.hpp"

namespace fs = std::filesystem;
using namespace symexp;

namespace {

constexpr int kExitError = 1;

// Raw flag values; only flags given on the command line override --config.
struct Flags {
    std::string config;
    std::string oracle;
    std::size_t n_features = 0;
    std::string truth_table;
    std::vector<std::size_t> pixels;
    std::size_t k = 0;
    std::string oracle_cmd;
    std::int64_t oracle_timeout_ms = 0;
    std::string instance;
    std::string instance_file;
    std::size_t radius = 0;
    std::size_t sample_count = 0;
    std::string dataset;
    std::size_t nb_trees = 0;
    std::size_t max_depth = 0;
    std::size_t threshold = 0;
    std::uint64_t seed = 0;
    bool random_seed = false;
    int target_class = 0;
    std::size_t mcs_max_count = 0;
    double budget_seconds = 0;
    double holdout_fraction = 0;
    bool check_mus = false;
    std::string path_mode;
    std::vector<CLI::Option*> given;

    void add_to(CLI::App& app) {
        auto opt = [&](CLI::Option* o) { given.push_back(o); return o; };
        app.add_option("--config", config, "JSON file with RunConfig fields (kebab-case keys)")->check(CLI::ExistingFile);
        opt(app.add_option("--oracle", oracle, "Black box: threshold | truthtable | external")
                ->check(CLI::IsMember({"threshold", "truthtable", "external"})));
        opt(app.add_option("--n-features", n_features, "Number of binary features"));
        opt(app.add_option("--truth-table", truth_table, "2^n labels as a 0/1 string, bit i of the index = feature i"));
        opt(app.add_option("--pixels", pixels, "Threshold oracle: feature indices counted")->delimiter(','));
        opt(app.add_option("--k", k, "Threshold oracle: positive iff at least k pixels are on"));
        opt(app.add_option("--oracle-cmd", oracle_cmd, "External oracle command line (run through /bin/sh)"));
        opt(app.add_option("--oracle-timeout-ms", oracle_timeout_ms, "Per-response timeout of the external oracle"));
        opt(app.add_option("--instance", instance, "Instance as a 0/1 string"));
        opt(app.add_option("--instance-file", instance_file, "File whose first instance line is explained")
                ->check(CLI::ExistingFile));
        opt(app.add_option("--radius", radius, "Vicinity radius (default round(250 n / 784))"));
        opt(app.add_option("--sample-count", sample_count, "Number of sampled neighbours"));
        opt(app.add_option("--dataset", dataset, "Label dataset rows near x instead of sampling")
                ->check(CLI::ExistingFile));
        opt(app.add_option("--nb-trees", nb_trees, "Trees in the surrogate forest"));
        opt(app.add_option("--max-depth", max_depth, "Maximum tree depth"));
        opt(app.add_option("--threshold", threshold, "Votes needed for class 1 (default strict majority)"));
        opt(app.add_option("--seed", seed, "Master seed"));
        opt(app.add_flag("--random-seed", random_seed, "Draw the master seed from the system entropy source"));
        opt(app.add_option("--target-class", target_class, "Class to reach (default: opposite of f(x))")
                ->check(CLI::IsMember({0, 1})));
        opt(app.add_option("--mcs-max-count", mcs_max_count, "Stop after this many counterfactuals"));
        opt(app.add_option("--budget-seconds", budget_seconds, "Wall-clock budget for enumeration"));
        opt(app.add_option("--holdout-fraction", holdout_fraction, "Share of the vicinity held out for fidelity"));
        opt(app.add_flag("--check-mus", check_mus, "Re-check every sufficient reason as a minimal unsatisfiable subset"));
        opt(app.add_option("--path-mode", path_mode, "Tree encoding: zero | one")
                ->check(CLI::IsMember({"zero", "one"})));
    }

    bool has(const std::string& name) const {
        for (auto* o : given)
            if (o->get_name() == name) return o->count() > 0;
        return false;
    }

    RunConfig build() const {
        RunConfig c;
        if (!config.empty()) {
            std::ifstream in(config);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw Error("config " + config + ": " + e.what());
            }
            c = config_from_json(j, c);
        }
        // Overrides go through the same parser so flags and file agree on meaning.
        nlohmann::json o = nlohmann::json::object();
        if (has("--oracle")) o["oracle"] = oracle;
        if (has("--n-features")) o["n-features"] = n_features;
        if (has("--truth-table")) o["truth-table"] = truth_table;
        if (has("--pixels")) o["pixels"] = pixels;
        if (has("--k")) o["k"] = k;
        if (has("--oracle-cmd")) o["oracle-cmd"] = oracle_cmd;
        if (has("--oracle-timeout-ms")) o["oracle-timeout-ms"] = oracle_timeout_ms;
        if (has("--instance")) o["instance"] = instance;
        if (has("--instance-file")) o["instance-file"] = instance_file;
        if (has("--radius")) o["radius"] = radius;
        if (has("--sample-count")) o["sample-count"] = sample_count;
        if (has("--dataset")) o["dataset"] = dataset;
        if (has("--nb-trees")) o["nb-trees"] = nb_trees;
        if (has("--max-depth")) o["max-depth"] = max_depth;
        if (has("--threshold")) o["threshold"] = threshold;
        if (has("--seed")) o["seed"] = seed;
        if (has("--target-class")) o["target-class"] = target_class;
        if (has("--mcs-max-count")) o["mcs-max-count"] = mcs_max_count;
        if (has("--budget-seconds")) o["budget-seconds"] = budget_seconds;
        if (has("--holdout-fraction")) o["holdout-fraction"] = holdout_fraction;
        if (has("--check-mus")) o["check-mus"] = check_mus;
        if (has("--path-mode")) o["path-mode"] = path_mode;
        c = config_from_json(o, c);
        if (random_seed) {
            std::random_device rd;
            c.seed = (std::uint64_t{rd()} << 32) ^ rd();
        }
        if (c.oracle.n_features == 0) c.oracle.n_features = c.instance.size();
        return c;
    }
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

int worst_exit(const std::vector<ExplanationReport>& reports) {
    int code = 0;
    for (const auto& r : reports) code = std::max(code, exit_code(r.status));
    return code;
}

// --- explain -------------------------------------------------------------------

struct ExplainArgs {
    std::string output;
    std::string forest_out;
    std::string batch;
    std::size_t jobs = 1;
};

int cmd_explain(const Flags& flags, const ExplainArgs& args) {
    auto cfg = flags.build();
    if (!args.batch.empty()) {
        auto instances = read_instances_file(args.batch);
        if (instances.empty()) throw Error("batch file " + args.batch + " holds no instances");
        if (cfg.instance.size() == 0) cfg.instance = instances.front();
        if (cfg.oracle.n_features == 0) cfg.oracle.n_features = cfg.instance.size();
        auto reports = run_batch(cfg, instances, args.jobs, [&] { return make_oracle(cfg.oracle); });
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : reports) arr.push_back(to_json(r));
        write_text(args.output, dump(arr));
        return worst_exit(reports);
    }
    auto oracle = make_oracle(cfg.oracle);
    auto report = run_explain(cfg, *oracle);
    write_text(args.output, dump(to_json(report)));
    if (!args.forest_out.empty() && report.forest) write_text(args.forest_out, dump(to_json(*report.forest)));
    if (!report.note.empty()) std::cerr << "symexp: " << to_string(report.status) << ": " << report.note << "\n";
    return exit_code(report.status);
}

// --- encode --------------------------------------------------------------------

struct EncodeArgs {
    std::string dimacs_out = "forest.cnf";
    std::string wcnf_out = "problem.wcnf";
    std::string stats_out;
    std::string forest_out;
};

int cmd_encode(const Flags& flags, const EncodeArgs& args) {
    auto cfg = flags.build();
    auto oracle = make_oracle(cfg.oracle);
    auto res = run_encode(cfg, *oracle);
    write_text(args.dimacs_out, emit_dimacs(res.encoding.cnf));
    if (res.problem)
        write_text(args.wcnf_out, emit_wcnf(*res.problem));
    else
        std::cerr << "symexp: surrogate already predicts the target class; no WCNF written\n";
    if (!args.forest_out.empty()) write_text(args.forest_out, dump(to_json(res.forest)));
    auto stats = stats_json(res.encoding.stats);
    stats["prediction"] = to_int(res.prediction);
    stats["target_class"] = to_int(res.target_class);
    if (res.problem) {
        stats["wcnf"] = {{"vars", res.problem->total_vars()},
                         {"hard", res.problem->hard.clause_count()},
                         {"soft", res.problem->soft.size()}};
    }
    write_text(args.stats_out, dump(stats));
    return 0;
}

// --- render-mask ---------------------------------------------------------------

struct RenderArgs {
    std::string report;
    std::size_t width = 0;
    std::size_t height = 0;
    std::string kind = "counterfactuals";
    std::vector<std::size_t> indices;
    std::size_t entry = 0;
    std::string out_dir = ".";
    std::string prefix = "mask";
};

int cmd_render(const RenderArgs& a) {
    nlohmann::json report;
    {
        std::ifstream in(a.report);
        try {
            in >> report;
        } catch (const nlohmann::json::exception& e) {
            throw Error("report " + a.report + ": " + e.what());
        }
    }
    if (report.is_array()) {
        if (a.entry >= report.size()) throw Error("report holds " + std::to_string(report.size()) + " entries");
        report = report[a.entry];
    }
    if (report.contains("n_features") && report["n_features"].get<std::size_t>() != a.width * a.height)
        throw RenderError("width x height = " + std::to_string(a.width * a.height) + " but the report has " +
                          std::to_string(report["n_features"].get<std::size_t>()) + " features");
    const auto sets = report_sets(report, a.kind);
    std::vector<std::size_t> pick = a.indices;
    if (pick.empty())
        for (std::size_t i = 0; i < sets.size(); ++i) pick.push_back(i);
    fs::create_directories(a.out_dir);
    const std::string tag = a.kind == "counterfactuals" ? "cf" : "sr";
    for (auto i : pick) {
        if (i >= sets.size()) throw Error("explanation index " + std::to_string(i) + " out of range");
        write_text((fs::path(a.out_dir) / (a.prefix + "-" + tag + "-" + std::to_string(i) + ".pgm")).string(),
                   render_mask_pgm(sets[i], a.width, a.height));
    }
    std::vector<FeatureSet> chosen;
    for (auto i : pick) chosen.push_back(sets[i]);
    const auto heat = (fs::path(a.out_dir) / (a.prefix + "-" + tag + "-heatmap.pgm")).string();
    write_text(heat, render_heatmap_pgm(chosen, a.width, a.height));
    std::cerr << "symexp: wrote " << pick.size() << " masks and " << heat << "\n";
    return 0;
}

// --- oracle conformance ----------------------------------------------------------

int cmd_oracle_vectors(const Flags& flags, const std::string& out, std::size_t samples) {
    auto cfg = flags.build();
    if (cfg.oracle.kind == OracleSpec::Kind::External)
        throw Error("conformance vectors come from a builtin reference oracle");
    if (cfg.oracle.n_features == 0 && cfg.oracle.kind == OracleSpec::Kind::TruthTable)
        cfg.oracle.n_features = static_cast<std::size_t>(std::bit_width(cfg.oracle.truth_table.size()) - 1);
    if (cfg.oracle.n_features == 0) throw Error("--n-features is required");
    auto oracle = make_oracle(cfg.oracle);
    const auto n = cfg.oracle.n_features;
    std::vector<Instance> inputs;
    if (n <= 10) {
        for (std::size_t m = 0; m < (std::size_t{1} << n); ++m) {
            auto x = Instance::zeros(n);
            for (std::size_t i = 0; i < n; ++i) x.set(i, (m >> i) & 1u);
            inputs.push_back(x);
        }
    } else {
        Rng rng(cfg.seed);
        for (std::size_t s = 0; s < samples; ++s) {
            auto x = Instance::zeros(n);
            for (std::size_t i = 0; i < n; ++i) x.set(i, rng.below(2) == 1);
            inputs.push_back(x);
        }
    }
    write_text(out, vectors_to_jsonl(conformance_vectors(*oracle, inputs)));
    return 0;
}

int cmd_check_oracle(const std::string& command, const std::string& vectors_path, std::int64_t timeout_ms) {
    std::ifstream in(vectors_path);
    auto vectors = vectors_from_jsonl(in);
    auto rep = check_conformance(command, vectors, std::chrono::milliseconds(timeout_ms));
    for (const auto& f : rep.failures) std::cout << "FAIL " << f << "\n";
    std::cout << (rep.passed() && rep.exchanges == vectors.size() ? "PASS " : "FAIL ") << rep.exchanges << "/"
              << vectors.size() << " exchanges\n";
    return rep.passed() && rep.exchanges == vectors.size() ? 0 : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual and sufficient-reason explanations via a random-forest surrogate"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "symexp 0.1.0");

    Flags explain_flags, encode_flags, vector_flags;
    ExplainArgs explain_args;
    EncodeArgs encode_args;
    RenderArgs render_args;

    auto* explain = app.add_subcommand("explain", "Run the full pipeline and write a JSON report");
    explain_flags.add_to(*explain);
    explain->add_option("-o,--output", explain_args.output, "Report path (default stdout)");
    explain->add_option("--forest-out", explain_args.forest_out, "Write the surrogate forest as JSON");
    explain->add_option("--batch", explain_args.batch, "Explain every instance of this file")
        ->check(CLI::ExistingFile);
    explain->add_option("--jobs", explain_args.jobs, "Worker threads for --batch")->check(CLI::PositiveNumber);

    auto* encode = app.add_subcommand("encode", "Train the surrogate and write DIMACS, WCNF and stats");
    encode_flags.add_to(*encode);
    encode->add_option("--dimacs-out", encode_args.dimacs_out, "Forest circuit in DIMACS CNF");
    encode->add_option("--wcnf-out", encode_args.wcnf_out, "Explanation problem in WCNF");
    encode->add_option("--stats-out", encode_args.stats_out, "Encoding stats JSON (default stdout)");
    encode->add_option("--forest-out", encode_args.forest_out, "Surrogate forest JSON");

    auto* render = app.add_subcommand("render-mask", "Render explanations of a report as PGM masks");
    render->add_option("--report", render_args.report, "Report JSON")->required()->check(CLI::ExistingFile);
    render->add_option("--width", render_args.width, "Image width")->required();
    render->add_option("--height", render_args.height, "Image height")->required();
    render->add_option("--kind", render_args.kind, "counterfactuals | sufficient_reasons")
        ->check(CLI::IsMember({"counterfactuals", "sufficient_reasons"}));
    render->add_option("--index", render_args.indices, "Explanations to render (default all)")->delimiter(',');
    render->add_option("--entry", render_args.entry, "Entry of a batch report");
    render->add_option("--out-dir", render_args.out_dir, "Output directory");
    render->add_option("--prefix", render_args.prefix, "File name prefix");

    SelftestOptions st;
    bool st_verbose = false;
    auto* selftest = app.add_subcommand("selftest", "Check enumeration against brute force on small problems");
    selftest->add_option("--cases", st.random_cases, "Random forests to check");
    selftest->add_option("--seed", st.seed, "Generator seed");
    selftest->add_flag("-v,--verbose", st_verbose, "One line per random case");

    std::string vectors_out;
    std::size_t vector_samples = 64;
    auto* vectors = app.add_subcommand("oracle-vectors", "Write protocol conformance vectors from a builtin oracle");
    vector_flags.add_to(*vectors);
    vectors->add_option("-o,--output", vectors_out, "JSON-lines output (default stdout)");
    vectors->add_option("--samples", vector_samples, "Random inputs when n > 10");

    std::string check_cmd, check_vectors;
    std::int64_t check_timeout = ExternalProcessOracle::kDefaultTimeout.count();
    auto* check = app.add_subcommand("check-oracle", "Replay conformance vectors against an external oracle");
    check->add_option("--oracle-cmd", check_cmd, "External oracle command")->required();
    check->add_option("--vectors", check_vectors, "Vectors file")->required()->check(CLI::ExistingFile);
    check->add_option("--oracle-timeout-ms", check_timeout, "Per-response timeout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*explain) return cmd_explain(explain_flags, explain_args);
        if (*encode) return cmd_encode(encode_flags, encode_args);
        if (*render) return cmd_render(render_args);
        if (*selftest) {
            auto res = run_selftest(st, &std::cout);
            if (st_verbose)
                for (const auto& c : res.cases) std::cout << (c.passed ? "  ok " : "  FAILED ") << c.name << "\n";
            std::cout << (res.passed() ? "selftest passed" : "selftest FAILED") << " (" << res.cases.size()
                      << " cases, " << res.failures() << " failures)\n";
            return res.passed() ? 0 : kExitError;
        }
        if (*vectors) return cmd_oracle_vectors(vector_flags, vectors_out, vector_samples);
        if (*check) return cmd_check_oracle(check_cmd, check_vectors, check_timeout);
    } catch (const StageError& e) {
        std::cerr << "symexp: error in stage " << e.stage() << ": " << e.what() << "\n";
        return e.stage() == "train" ? exit_code(RunStatus::FidelityFailure) : kExitError;
    } catch (const std::exception& e) {
        std::cerr << "symexp: error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
