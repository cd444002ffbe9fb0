#pragma once

#include <string>
#include <vector>

#include "dbnet/classifier.hpp"
#include "dbnet/dbn.hpp"
#include "dbnet/metrics.hpp"
#include "dbnet/util.hpp"

namespace dbnet {

struct HorizonResult {
    int horizon_steps = 0;
    double horizon_hours = 0.0;
    ConfusionMatrix confusion;
    Metrics scores;
    long excluded = 0;  // start points whose forecast diverged before this horizon

    json to_json() const {
        return {{"horizon_steps", horizon_steps},
                {"horizon_hours", horizon_hours},
                {"confusion", confusion.to_json()},
                {"metrics", scores.to_json()},
                {"excluded", excluded}};
    }

    static HorizonResult from_json(const json& j) {
        HorizonResult r;
        r.horizon_steps = j.at("horizon_steps").get<int>();
        r.horizon_hours = j.at("horizon_hours").get<double>();
        const auto& cm = j.at("confusion");
        r.confusion = {cm.at("tp").get<long>(), cm.at("fp").get<long>(), cm.at("tn").get<long>(),
                       cm.at("fn").get<long>()};
        const auto& m = j.at("metrics");
        r.scores = {m.at("accuracy").get<double>(), m.at("recall").get<double>(),
                    m.at("specificity").get<double>(), m.at("g_mean").get<double>()};
        r.excluded = j.at("excluded").get<long>();
        return r;
    }
};

// Every slice of every test patient is a start point (or only the first slice
// when first_slice_only is set). Horizon 0 classifies the slice directly; at
// h >= 1 the h-th forecast from that slice is classified. The target at every
// horizon is the patient's outcome label.
inline std::vector<HorizonResult> horizon_eval(const DbnModel& dbn, const Classifier& clf,
                                               const Cohort& test, int horizon = 10,
                                               bool first_slice_only = false,
                                               double period_hours = 4.0) {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (test.patients.empty()) throw DataError("empty test cohort");

    struct StartPoint {
        const Vec* state;
        bool label;
    };
    std::vector<StartPoint> starts;
    for (const auto& p : test.patients) {
        if (p.slices.empty()) continue;
        const std::size_t n = first_slice_only ? 1 : p.slices.size();
        for (std::size_t s = 0; s < n; ++s) starts.push_back({&p.slices[s], p.label_critical});
    }
    if (starts.empty()) throw DataError("test cohort has no usable slices");

    // predictions[i][h]: -1 = excluded by divergence, else predicted label
    std::vector<std::vector<signed char>> predictions(
        starts.size(), std::vector<signed char>(static_cast<std::size_t>(horizon) + 1, -1));
    parallel_for(starts.size(), [&](std::size_t i) {
        Vec state = *starts[i].state;
        predictions[i][0] = clf.predict(state) ? 1 : 0;
        for (int h = 1; h <= horizon; ++h) {
            state = dbn.predict_step(state);
            if (!state.allFinite()) break;  // this and later horizons stay excluded
            predictions[i][static_cast<std::size_t>(h)] = clf.predict(state) ? 1 : 0;
        }
    });

    std::vector<HorizonResult> results(static_cast<std::size_t>(horizon) + 1);
    for (int h = 0; h <= horizon; ++h) {
        auto& r = results[static_cast<std::size_t>(h)];
        r.horizon_steps = h;
        r.horizon_hours = period_hours * h;
        for (std::size_t i = 0; i < starts.size(); ++i) {
            const signed char pred = predictions[i][static_cast<std::size_t>(h)];
            if (pred < 0)
                ++r.excluded;
            else
                r.confusion.add(pred == 1, starts[i].label);
        }
        if (r.confusion.total() == 0) throw NumericError("all forecasts diverged at horizon " +
                                                         std::to_string(h));
        r.scores = metrics(r.confusion);
    }
    return results;
}

struct ClassifierReport {
    std::string name;
    std::vector<HorizonResult> horizons;
    double train_seconds = 0.0;
    double mean_inference_seconds = 0.0;  // forecast(10) + classify all states, per patient
    json model;

    json to_json() const {
        json h = json::array();
        for (const auto& r : horizons) h.push_back(r.to_json());
        return {{"name", name},
                {"horizons", h},
                {"timings",
                 {{"train_seconds", train_seconds},
                  {"mean_inference_seconds", mean_inference_seconds}}}};
    }

    static ClassifierReport from_json(const json& j) {
        ClassifierReport c;
        c.name = j.at("name").get<std::string>();
        for (const auto& h : j.at("horizons")) c.horizons.push_back(HorizonResult::from_json(h));
        c.train_seconds = j.at("timings").at("train_seconds").get<double>();
        c.mean_inference_seconds = j.at("timings").at("mean_inference_seconds").get<double>();
        return c;
    }
};

struct EvaluationReport {
    std::uint64_t seed = 0;
    json config_snapshot = json::object();
    std::vector<std::pair<std::string, double>> stage_seconds;
    std::vector<ClassifierReport> classifiers;
    ArcGraph dbn_graph;
    json dbn_model = json::object();

    // published results on the original private clinical cohort; shown for
    // side-by-side context only and not reproducible from public data
    static json reference_block() {
        return {{"note", "published results on the original private clinical cohort; "
                         "not reproducible from synthetic or public data"},
                {"reproducible", false},
                {"models",
                 {{"nn", {{"accuracy", 0.771}, {"g_mean", 0.541}}},
                  {"hcsp", {{"accuracy", 0.736}, {"g_mean", 0.468}}},
                  {"svm", {{"accuracy", 0.735}, {"g_mean", 0.522}}},
                  {"xgboost", {{"accuracy", 0.698}, {"g_mean", 0.455}}}}}};
    }

    json to_json() const {
        json stages = json::object();
        for (const auto& [name, seconds] : stage_seconds) stages[name] = seconds;
        json clfs = json::array();
        for (const auto& c : classifiers) clfs.push_back(c.to_json());
        json arcs = json::array();
        for (const auto& [from, to] : dbn_graph.arcs) arcs.push_back({from, to});
        return {{"seed", seed},
                {"config", config_snapshot},
                {"timings", stages},
                {"classifiers", clfs},
                {"dbn", {{"nodes", dbn_graph.nodes}, {"arcs", arcs}}},
                {"reference", reference_block()}};
    }

    static EvaluationReport from_json(const json& j) {
        EvaluationReport r;
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config_snapshot = j.at("config");
        for (const auto& [name, seconds] : j.at("timings").items())
            r.stage_seconds.emplace_back(name, seconds.get<double>());
        for (const auto& c : j.at("classifiers")) r.classifiers.push_back(ClassifierReport::from_json(c));
        r.dbn_graph.nodes = j.at("dbn").at("nodes").get<std::vector<std::string>>();
        for (const auto& arc : j.at("dbn").at("arcs"))
            r.dbn_graph.arcs.emplace_back(arc.at(0).get<std::string>(), arc.at(1).get<std::string>());
        return r;
    }
};

}  // namespace dbnet
