#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dbnet/de.hpp"
#include "dbnet/metrics.hpp"
#include "dbnet/smote.hpp"

namespace dbnet {

// Builds a classifier from a decoded hyperparameter assignment and the
// (already balanced) training data.
using TrainerFn = std::function<std::unique_ptr<Classifier>(
    const std::map<std::string, double>&, const Mat&, const std::vector<bool>&)>;

struct TuneResult {
    std::map<std::string, double> best_params;
    double best_g_mean = 0.0;
    std::vector<DeTraceRow> trace;
};

inline ParamSpace default_mlp_space() {
    return {{{"learning_rate", 1e-5, 1e-1, ParamKind::LogReal},
             {"batch_size", 8, 128, ParamKind::Integer},
             {"epochs", 20, 200, ParamKind::Integer}}};
}

inline ParamSpace default_hcsp_space() {
    return {{{"bins", 2, 8, ParamKind::Integer}, {"folds", 2, 10, ParamKind::Integer}}};
}

// Maximizes validation g-mean over the hyperparameter space. Balancing runs
// inside the objective on the training portion only; the validation split is
// never resampled.
inline TuneResult tune_classifier(const TrainerFn& trainer, const Mat& X_train,
                                  const std::vector<bool>& y_train, const Mat& X_val,
                                  const std::vector<bool>& y_val, const ParamSpace& space,
                                  const DeConfig& de_cfg,
                                  const std::optional<SmoteConfig>& balance = std::nullopt) {
    if (static_cast<std::size_t>(X_val.rows()) != y_val.size()) throw DataError("X/y row mismatch");
    const auto val_pos = std::count(y_val.begin(), y_val.end(), true);
    if (val_pos == 0 || val_pos == static_cast<long>(y_val.size()))
        throw DataError("validation split must contain both classes");

    auto objective = [&](const std::map<std::string, double>& params) {
        Mat X = X_train;
        std::vector<bool> y = y_train;
        if (balance) {
            auto balanced = smote(X_train, y_train, *balance);
            X = std::move(balanced.X);
            y = std::move(balanced.y);
        }
        auto model = trainer(params, X, y);
        return metrics(evaluate_classifier(*model, X_val, y_val)).g_mean;
    };

    auto de = de_optimize(objective, space, de_cfg);
    return {de.best, de.best_value, de.trace};
}

}  // namespace dbnet
