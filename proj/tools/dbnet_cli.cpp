#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "dbnet/pipeline.hpp"
#include "dbnet/report.hpp"

namespace {

using namespace dbnet;
namespace fs = std::filesystem;

struct Options {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out = "run";
    unsigned threads = 0;
    bool first_slice_only = false;
    int horizon = 10;
    std::string model_path;
    std::string feature;
    std::string row;
};

PipelineConfig load_config(Options& opts) {
    if (opts.config_path.empty()) throw ConfigError("--config is required for this subcommand");
    auto cfg = PipelineConfig::from_toml_file(opts.config_path);
    if (opts.first_slice_only) cfg.first_slice_only = true;
    if (!opts.out.empty()) cfg.out_dir = opts.out;
    return cfg;
}

void write_json(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    return json::parse(in);
}

Cohort build_cohort(const PipelineConfig& cfg, std::uint64_t seed) {
    if (cfg.generator) return generate_synthetic(*cfg.generator, derive_seed(seed, "generate"));
    auto observations = ingest_csv(cfg.input->csv_path, cfg.input->schema);
    return resample(observations, cfg.input->schema, cfg.period_hours);
}

void save_cohort(const Options& opts, const Cohort& cohort) {
    write_json(fs::path(opts.out) / "cohort.json", cohort.to_json());
    std::cout << "wrote " << (fs::path(opts.out) / "cohort.json").string() << " ("
              << cohort.patients.size() << " patients)\n";
}

Cohort load_cohort(const Options& opts) {
    return Cohort::from_json(read_json(fs::path(opts.out) / "cohort.json"));
}

std::unique_ptr<Classifier> load_classifier(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "mlp") return std::make_unique<MlpModel>(MlpModel::from_json(j));
    if (kind == "hcsp") return std::make_unique<HcspTanModel>(HcspTanModel::from_json(j));
    throw DataError("unknown classifier kind '" + kind + "'");
}

int cmd_generate(Options& opts) {
    auto cfg = load_config(opts);
    if (!cfg.generator) throw ConfigError("generate requires a [generator] section");
    save_cohort(opts, build_cohort(cfg, opts.seed));
    return 0;
}

int cmd_preprocess(Options& opts) {
    auto cfg = load_config(opts);
    if (!cfg.input) throw ConfigError("preprocess requires an [input] section");
    save_cohort(opts, build_cohort(cfg, opts.seed));
    return 0;
}

int cmd_select(Options& opts) {
    auto cfg = load_config(opts);
    auto cohort = load_cohort(opts);
    auto [X, y] = cohort_design_matrix(cohort);
    auto importance = rf_importance(X, y, cohort.schema, cfg.select_n_trees, cfg.select_max_depth,
                                    0, derive_seed(opts.seed, "select"));
    write_json(fs::path(opts.out) / "importance.json", importance.to_json());
    auto selected = select_features(importance, cohort.schema, cfg.select_n_blood);
    save_cohort(opts, project_cohort(cohort, selected));
    for (const auto& f : selected.features()) std::cout << "kept " << f.name << '\n';
    return 0;
}

std::pair<Cohort, Cohort> prepared_split(const PipelineConfig& cfg, const Options& opts) {
    auto cohort = build_cohort(cfg, opts.seed);
    auto split = split_patients(cohort, cfg.train_fraction, derive_seed(opts.seed, "split"));
    if (cfg.select_enabled) {
        auto [X, y] = cohort_design_matrix(split.first);
        auto importance = rf_importance(X, y, split.first.schema, cfg.select_n_trees,
                                        cfg.select_max_depth, 0, derive_seed(opts.seed, "select"));
        auto selected = select_features(importance, split.first.schema, cfg.select_n_blood);
        split.first = project_cohort(split.first, selected);
        split.second = project_cohort(split.second, selected);
    }
    return split;
}

int cmd_train(Options& opts) {
    auto cfg = load_config(opts);
    auto [train, test] = prepared_split(cfg, opts);
    auto transitions = build_transitions(train);
    auto structure = learn_structure(transitions, cfg.dbn_max_parents, cfg.dbn_restarts,
                                     derive_seed(opts.seed, "dbn"));
    auto dbn = fit_parameters(structure, train.schema, transitions);
    write_json(fs::path(opts.out) / "dbn.json", dbn.to_json());

    auto [X, y] = cohort_design_matrix(train);
    if (cfg.smote_enabled) {
        SmoteConfig sc = cfg.smote;
        sc.seed = derive_seed(opts.seed, "smote");
        auto balanced = smote(X, y, sc);
        X = std::move(balanced.X);
        y = std::move(balanced.y);
    }
    auto clf = detail::train_configured_classifier(cfg, X, y, derive_seed(opts.seed, "train"),
                                                   train.schema.hash());
    write_json(fs::path(opts.out) / "classifier.json", clf->to_json());
    std::cout << "wrote dbn.json and classifier.json under " << opts.out << '\n';
    return 0;
}

int cmd_tune(Options& opts) {
    auto cfg = load_config(opts);
    cfg.tune_enabled = true;
    auto result = run_pipeline(cfg, opts.seed);
    // the pipeline already applied the tuned parameters before final training
    json tuned = result.classifier->to_json().at("hyperparameters");
    write_json(fs::path(opts.out) / "tune.json", tuned);
    std::cout << tuned.dump(2) << '\n';
    return 0;
}

int cmd_evaluate(Options& opts) {
    auto cfg = load_config(opts);
    auto [train, test] = prepared_split(cfg, opts);
    auto dbn = DbnModel::from_json(read_json(fs::path(opts.out) / "dbn.json"));
    auto clf = load_classifier(read_json(fs::path(opts.out) / "classifier.json"));
    if (clf->schema_hash() != test.schema.hash())
        throw DataError("classifier was trained against a different feature schema");
    EvaluationReport report;
    report.seed = opts.seed;
    report.config_snapshot = cfg.raw;
    report.dbn_graph = dbn.structure().to_arc_graph(test.schema);
    ClassifierReport cr;
    cr.name = clf->name();
    cr.horizons = horizon_eval(dbn, *clf, test, cfg.horizon, cfg.first_slice_only, cfg.period_hours);
    report.classifiers.push_back(std::move(cr));
    emit_report(report, cfg.out_dir);
    std::cout << "wrote report under " << cfg.out_dir << '\n';
    return 0;
}

int cmd_run(Options& opts) {
    auto cfg = load_config(opts);
    auto result = run_pipeline(cfg, opts.seed);
    emit_report(result.report, cfg.out_dir);
    write_json(fs::path(cfg.out_dir) / "dbn.json", result.dbn.to_json());
    write_json(fs::path(cfg.out_dir) / "classifier.json", result.classifier->to_json());
    const auto& horizons = result.report.classifiers.front().horizons;
    std::cout << "g-mean at 0 h: " << horizons.front().scores.g_mean << ", at "
              << horizons.back().horizon_hours << " h: " << horizons.back().scores.g_mean << '\n';
    std::cout << "wrote report under " << cfg.out_dir << '\n';
    return 0;
}

int cmd_forecast(Options& opts) {
    auto dbn = DbnModel::from_json(read_json(opts.model_path));
    std::string row = opts.row;
    if (fs::exists(row)) {
        std::ifstream in(row);
        std::getline(in, row);
    }
    std::vector<double> values;
    std::stringstream ss(row);
    std::string cell;
    while (std::getline(ss, cell, ',')) values.push_back(detail::parse_strict_double(cell, 1));
    const auto expected = dbn.schema().size();
    if (values.size() != expected)
        throw DataError("state row has " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(expected));
    Vec state = Eigen::Map<const Vec>(values.data(), static_cast<long>(values.size()));

    std::cout << "step";
    for (const auto& f : dbn.schema().features()) std::cout << ',' << f.name;
    std::cout << '\n' << 0;
    for (long i = 0; i < state.size(); ++i) std::cout << ',' << state[i];
    std::cout << '\n';
    int step = 0;
    for (const auto& s : dbn.forecast(state, opts.horizon)) {
        std::cout << ++step;
        for (long i = 0; i < s.size(); ++i) std::cout << ',' << s[i];
        std::cout << '\n';
    }
    return 0;
}

int cmd_explain(Options& opts) {
    auto dbn = DbnModel::from_json(read_json(opts.model_path));
    std::cout << export_dot(dbn.neighborhood(opts.feature));
    return 0;
}

int cmd_report(Options& opts) {
    auto report = EvaluationReport::from_json(read_json(fs::path(opts.out) / "report.json"));
    write_metrics_csv(report, fs::path(opts.out) / "metrics.csv");
    write_horizon_svg(report, fs::path(opts.out) / "horizon.svg");
    std::ofstream dot(fs::path(opts.out) / "graph.dot");
    dot << export_dot(report.dbn_graph);
    std::cout << "rebuilt metrics.csv, horizon.svg and graph.dot under " << opts.out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian dynamic Bayesian network forecasting with pluggable severity classifiers"};
    app.require_subcommand(1);

    Options opts;
    app.add_option("--seed", opts.seed, "master seed; every stage derives its own stream from it")
        ->capture_default_str();
    app.add_option("--threads", opts.threads, "cap on worker threads (default: hardware)");
    app.add_option("--out", opts.out, "artifact directory")->capture_default_str();
    app.add_flag("--first-slice-only", opts.first_slice_only,
                 "use only each patient's first slice as an evaluation start point");

    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "pipeline TOML configuration")->required();
    };

    std::map<std::string, std::function<int(Options&)>> handlers;
    auto* generate = app.add_subcommand("generate", "write a synthetic cohort to the artifact directory");
    add_config(generate);
    handlers["generate"] = cmd_generate;
    auto* preprocess = app.add_subcommand("preprocess", "ingest a CSV and resample it into slices");
    add_config(preprocess);
    handlers["preprocess"] = cmd_preprocess;
    auto* select = app.add_subcommand("select", "rank features and keep the top blood markers");
    add_config(select);
    handlers["select"] = cmd_select;
    auto* train = app.add_subcommand("train", "learn the network and train the classifier");
    add_config(train);
    handlers["train"] = cmd_train;
    auto* tune = app.add_subcommand("tune", "optimize classifier hyperparameters by g-mean");
    add_config(tune);
    handlers["tune"] = cmd_tune;
    auto* evaluate = app.add_subcommand("evaluate", "run the horizon experiment on saved models");
    add_config(evaluate);
    handlers["evaluate"] = cmd_evaluate;
    auto* run = app.add_subcommand("run", "execute the full pipeline and emit the report");
    add_config(run);
    handlers["run"] = cmd_run;

    auto* forecast = app.add_subcommand("forecast", "print the forward trajectory for one state row");
    forecast->add_option("model", opts.model_path, "saved network JSON")->required();
    forecast->add_option("row", opts.row, "comma-separated state values, or a file with one row")
        ->required();
    forecast->add_option("--horizon", opts.horizon, "number of steps")->capture_default_str();
    handlers["forecast"] = cmd_forecast;

    auto* explain = app.add_subcommand("explain", "print a variable's neighborhood as DOT");
    explain->add_option("feature", opts.feature, "feature name")->required();
    explain->add_option("--model", opts.model_path, "saved network JSON")->required();
    handlers["explain"] = cmd_explain;

    auto* report = app.add_subcommand("report", "rebuild report artifacts from report.json");
    handlers["report"] = cmd_report;
    (void)report;

    for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n' << app.help();
        return 1;
    }

    if (opts.threads > 0) dbnet::max_threads() = opts.threads;
    try {
        return handlers.at(app.get_subcommands().front()->get_name())(opts);
    } catch (const dbnet::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const dbnet::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const dbnet::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
