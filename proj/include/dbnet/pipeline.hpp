#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>

#include "dbnet/config.hpp"
#include "dbnet/csv.hpp"
#include "dbnet/evaluate.hpp"
#include "dbnet/hcsp.hpp"
#include "dbnet/mlp.hpp"
#include "dbnet/resample.hpp"
#include "dbnet/select.hpp"
#include "dbnet/smote.hpp"
#include "dbnet/synthetic.hpp"
#include "dbnet/tune.hpp"

namespace dbnet {

struct PipelineResult {
    EvaluationReport report;
    Cohort train;
    Cohort test;
    DbnModel dbn;
    std::unique_ptr<Classifier> classifier;
};

namespace detail {

class StageTimer {
public:
    explicit StageTimer(EvaluationReport& report) : report_(report) {}

    template <typename Fn>
    void run(const std::string& name, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        try {
            fn();
        } catch (const std::exception& e) {
            throw_with_stage(name, e);
        }
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        report_.stage_seconds.emplace_back(name, elapsed.count());
    }

private:
    EvaluationReport& report_;

    [[noreturn]] static void throw_with_stage(const std::string& name, const std::exception& e) {
        const std::string message = "stage '" + name + "' failed: " + e.what();
        if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(message);
        if (dynamic_cast<const NumericError*>(&e)) throw NumericError(message);
        throw DataError(message);
    }
};

inline std::unique_ptr<Classifier> train_configured_classifier(const PipelineConfig& cfg,
                                                               const Mat& X,
                                                               const std::vector<bool>& y,
                                                               std::uint64_t train_seed,
                                                               std::uint64_t schema_hash) {
    if (cfg.classifier_kind == "mlp") {
        TrainConfig tc = cfg.mlp;
        tc.seed = train_seed;
        return std::make_unique<MlpModel>(train_mlp(X, y, tc,
                                                    {kDefaultHiddenWidths.begin(),
                                                     kDefaultHiddenWidths.end()},
                                                    schema_hash));
    }
    auto model = train_hcsp(X, y, cfg.hcsp_bins, cfg.hcsp_folds, train_seed);
    model.set_schema_hash(schema_hash);
    return std::make_unique<HcspTanModel>(std::move(model));
}

}  // namespace detail

// Executes the full flow: data -> split -> select -> DBN -> (tune) -> train ->
// horizon evaluation, all stage seeds derived from the master seed.
inline PipelineResult run_pipeline(PipelineConfig cfg, std::uint64_t seed) {
    PipelineResult result;
    auto& report = result.report;
    report.seed = seed;
    report.config_snapshot = cfg.raw;
    detail::StageTimer timer(report);

    Cohort cohort;
    timer.run("data", [&] {
        if (cfg.generator) {
            cohort = generate_synthetic(*cfg.generator, derive_seed(seed, "generate"));
        } else {
            auto observations = ingest_csv(cfg.input->csv_path, cfg.input->schema);
            cohort = resample(observations, cfg.input->schema, cfg.period_hours);
        }
    });

    timer.run("split", [&] {
        std::tie(result.train, result.test) =
            split_patients(cohort, cfg.train_fraction, derive_seed(seed, "split"));
    });

    if (cfg.select_enabled)
        timer.run("select", [&] {
            auto [X, y] = cohort_design_matrix(result.train);
            auto importance = rf_importance(X, y, result.train.schema, cfg.select_n_trees,
                                            cfg.select_max_depth, 0, derive_seed(seed, "select"));
            auto selected = select_features(importance, result.train.schema, cfg.select_n_blood);
            result.train = project_cohort(result.train, selected);
            result.test = project_cohort(result.test, selected);
        });

    timer.run("dbn", [&] {
        auto transitions = build_transitions(result.train);
        auto structure = learn_structure(transitions, cfg.dbn_max_parents, cfg.dbn_restarts,
                                         derive_seed(seed, "dbn"));
        result.dbn = fit_parameters(structure, result.train.schema, transitions);
    });
    report.dbn_graph = result.dbn.structure().to_arc_graph(result.train.schema);
    report.dbn_model = result.dbn.to_json();

    if (cfg.tune_enabled)
        timer.run("tune", [&] {
            auto [fit_cohort, val_cohort] = split_patients(
                result.train, 1.0 - cfg.validation_fraction, derive_seed(seed, "tune_split"));
            auto [X_fit, y_fit] = cohort_design_matrix(fit_cohort);
            auto [X_val, y_val] = cohort_design_matrix(val_cohort);

            TrainerFn trainer = [&cfg, seed](const std::map<std::string, double>& params,
                                             const Mat& X, const std::vector<bool>& y) {
                PipelineConfig candidate = cfg;
                if (cfg.classifier_kind == "mlp") {
                    candidate.mlp.learning_rate = params.at("learning_rate");
                    candidate.mlp.batch_size = static_cast<int>(params.at("batch_size"));
                    candidate.mlp.epochs = static_cast<int>(params.at("epochs"));
                } else {
                    candidate.hcsp_bins = static_cast<int>(params.at("bins"));
                    candidate.hcsp_folds = static_cast<int>(params.at("folds"));
                }
                return detail::train_configured_classifier(candidate, X, y,
                                                           derive_seed(seed, "tune_train"), 0);
            };

            DeConfig de = cfg.de;
            de.seed = derive_seed(seed, "tune");
            std::optional<SmoteConfig> balance;
            if (cfg.smote_enabled) {
                balance = cfg.smote;
                balance->seed = derive_seed(seed, "tune_smote");
            }
            const ParamSpace space =
                cfg.classifier_kind == "mlp" ? default_mlp_space() : default_hcsp_space();
            auto tuned = tune_classifier(trainer, X_fit, y_fit, X_val, y_val, space, de, balance);
            if (cfg.classifier_kind == "mlp") {
                cfg.mlp.learning_rate = tuned.best_params.at("learning_rate");
                cfg.mlp.batch_size = static_cast<int>(tuned.best_params.at("batch_size"));
                cfg.mlp.epochs = static_cast<int>(tuned.best_params.at("epochs"));
            } else {
                cfg.hcsp_bins = static_cast<int>(tuned.best_params.at("bins"));
                cfg.hcsp_folds = static_cast<int>(tuned.best_params.at("folds"));
            }
        });

    timer.run("train", [&] {
        auto [X, y] = cohort_design_matrix(result.train);
        if (cfg.smote_enabled) {
            SmoteConfig sc = cfg.smote;
            sc.seed = derive_seed(seed, "smote");
            auto balanced = smote(X, y, sc);
            X = std::move(balanced.X);
            y = std::move(balanced.y);
        }
        result.classifier = detail::train_configured_classifier(
            cfg, X, y, derive_seed(seed, "train"), result.train.schema.hash());
    });

    ClassifierReport clf_report;
    clf_report.name = result.classifier->name();
    clf_report.train_seconds = report.stage_seconds.back().second;
    clf_report.model = result.classifier->to_json();

    timer.run("evaluate", [&] {
        clf_report.horizons = horizon_eval(result.dbn, *result.classifier, result.test, cfg.horizon,
                                           cfg.first_slice_only, cfg.period_hours);
    });

    timer.run("latency", [&] {
        double total = 0.0;
        long measured = 0;
        for (const auto& patient : result.test.patients) {
            if (measured == 100) break;
            if (patient.slices.empty()) continue;
            const auto start = std::chrono::steady_clock::now();
            try {
                Vec state = patient.slices.front();
                result.classifier->predict(state);
                for (const auto& step : result.dbn.forecast(state, cfg.horizon))
                    result.classifier->predict(step);
            } catch (const NumericError&) {
                continue;  // diverged patients are already reported by horizon_eval
            }
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            total += elapsed.count();
            ++measured;
        }
        if (measured > 0) clf_report.mean_inference_seconds = total / static_cast<double>(measured);
    });

    report.classifiers.push_back(std::move(clf_report));
    return result;
}

}  // namespace dbnet
