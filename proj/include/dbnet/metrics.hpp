#pragma once

#include <cmath>

#include "dbnet/classifier.hpp"
#include "dbnet/core.hpp"

namespace dbnet {

struct ConfusionMatrix {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;

    long total() const { return tp + fp + tn + fn; }

    void add(bool predicted, bool actual) {
        if (actual)
            (predicted ? tp : fn) += 1;
        else
            (predicted ? fp : tn) += 1;
    }

    json to_json() const { return {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}}; }
};

struct Metrics {
    double accuracy = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    double g_mean = 0.0;

    json to_json() const {
        return {{"accuracy", accuracy},
                {"recall", recall},
                {"specificity", specificity},
                {"g_mean", g_mean}};
    }
};

// Degenerate denominators score 0 rather than erroring: a split a classifier
// renders undiagnosable should never look optimal.
inline Metrics metrics(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw DataError("confusion matrix is empty");
    if (cm.tp < 0 || cm.fp < 0 || cm.tn < 0 || cm.fn < 0)
        throw DataError("confusion matrix counts must be nonnegative");
    Metrics m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    m.recall = cm.tp + cm.fn > 0 ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn) : 0.0;
    m.specificity =
        cm.tn + cm.fp > 0 ? static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp) : 0.0;
    m.g_mean = std::sqrt(m.recall * m.specificity);
    return m;
}

inline ConfusionMatrix evaluate_classifier(const Classifier& model, const Mat& X,
                                           const std::vector<bool>& y) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw DataError("X/y row mismatch");
    ConfusionMatrix cm;
    for (long r = 0; r < X.rows(); ++r)
        cm.add(model.predict(X.row(r).transpose()), y[static_cast<std::size_t>(r)]);
    return cm;
}

}  // namespace dbnet
