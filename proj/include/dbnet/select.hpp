#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "dbnet/core.hpp"
#include "dbnet/util.hpp"

namespace dbnet {

inline double gini_impurity(std::int64_t c0, std::int64_t c1) {
    if (c0 < 0 || c1 < 0) throw DataError("negative class count");
    const std::int64_t total = c0 + c1;
    if (total == 0) throw DataError("gini impurity of an empty node");
    const double p0 = static_cast<double>(c0) / static_cast<double>(total);
    const double p1 = static_cast<double>(c1) / static_cast<double>(total);
    return 1.0 - p0 * p0 - p1 * p1;
}

struct TreeNode {
    int feature = -1;         // -1 marks a leaf
    double threshold = 0.0;   // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    double prob_positive = 0.0;
};

class DecisionTree {
public:
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const Vec& importance() const { return importance_; }

    double predict_proba(const Vec& x) const {
        int idx = 0;
        while (nodes_[static_cast<std::size_t>(idx)].feature >= 0) {
            const auto& nd = nodes_[static_cast<std::size_t>(idx)];
            idx = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes_[static_cast<std::size_t>(idx)].prob_positive;
    }

    bool predict(const Vec& x) const { return predict_proba(x) > 0.5; }

    static DecisionTree fit(const Mat& X, const std::vector<bool>& y, int max_depth, int mtry,
                            std::mt19937_64& rng) {
        if (X.rows() == 0) throw DataError("cannot fit a tree on an empty dataset");
        if (static_cast<std::size_t>(X.rows()) != y.size()) throw DataError("X/y row mismatch");
        if (mtry < 1 || mtry > X.cols()) throw DataError("mtry out of range");
        DecisionTree tree;
        tree.importance_ = Vec::Zero(X.cols());
        std::vector<long> rows(static_cast<std::size_t>(X.rows()));
        std::iota(rows.begin(), rows.end(), 0);
        tree.grow(X, y, rows, 0, max_depth, mtry, static_cast<double>(X.rows()), rng);
        return tree;
    }

private:
    std::vector<TreeNode> nodes_;
    Vec importance_;

    int grow(const Mat& X, const std::vector<bool>& y, const std::vector<long>& rows, int depth,
             int max_depth, int mtry, double n_total, std::mt19937_64& rng) {
        std::int64_t pos = 0;
        for (long r : rows) pos += y[static_cast<std::size_t>(r)];
        const std::int64_t neg = static_cast<std::int64_t>(rows.size()) - pos;
        const double node_impurity = gini_impurity(neg, pos);

        const int node_idx = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        nodes_.back().prob_positive = static_cast<double>(pos) / static_cast<double>(rows.size());

        if (node_impurity == 0.0 || depth >= max_depth || rows.size() < 2) return node_idx;

        // sample mtry candidate features without replacement
        std::vector<int> feats(static_cast<std::size_t>(X.cols()));
        std::iota(feats.begin(), feats.end(), 0);
        for (int k = 0; k < mtry; ++k) {
            std::uniform_int_distribution<int> pick(k, static_cast<int>(feats.size()) - 1);
            std::swap(feats[static_cast<std::size_t>(k)], feats[static_cast<std::size_t>(pick(rng))]);
        }

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_gain = 0.0;
        std::vector<std::pair<double, bool>> vals(rows.size());
        for (int k = 0; k < mtry; ++k) {
            const int f = feats[static_cast<std::size_t>(k)];
            for (std::size_t i = 0; i < rows.size(); ++i)
                vals[i] = {X(rows[i], f), y[static_cast<std::size_t>(rows[i])]};
            std::sort(vals.begin(), vals.end());
            std::int64_t lp = 0, ln = 0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                (vals[i].second ? lp : ln) += 1;
                if (vals[i].first == vals[i + 1].first) continue;
                const std::int64_t rp = pos - lp, rn = neg - ln;
                const double nl = static_cast<double>(lp + ln), nr = static_cast<double>(rp + rn);
                const double child =
                    (nl * gini_impurity(ln, lp) + nr * gini_impurity(rn, rp)) / static_cast<double>(rows.size());
                const double gain = node_impurity - child;
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                }
            }
        }

        if (best_feature < 0) return node_idx;

        std::vector<long> left_rows, right_rows;
        for (long r : rows)
            (X(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
        if (left_rows.empty() || right_rows.empty()) return node_idx;

        importance_[best_feature] += (static_cast<double>(rows.size()) / n_total) * best_gain;
        nodes_[static_cast<std::size_t>(node_idx)].feature = best_feature;
        nodes_[static_cast<std::size_t>(node_idx)].threshold = best_threshold;
        const int li = grow(X, y, left_rows, depth + 1, max_depth, mtry, n_total, rng);
        nodes_[static_cast<std::size_t>(node_idx)].left = li;
        const int ri = grow(X, y, right_rows, depth + 1, max_depth, mtry, n_total, rng);
        nodes_[static_cast<std::size_t>(node_idx)].right = ri;
        return node_idx;
    }
};

struct ImportanceReport {
    std::map<std::string, double> scores;
    int n_trees = 0;
    std::uint64_t seed = 0;

    json to_json() const { return {{"scores", scores}, {"n_trees", n_trees}, {"seed", seed}}; }

    static ImportanceReport from_json(const json& j) {
        ImportanceReport r;
        r.scores = j.at("scores").get<std::map<std::string, double>>();
        r.n_trees = j.at("n_trees").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        return r;
    }
};

// Mean decrease in Gini impurity over bootstrap-trained trees.
inline ImportanceReport rf_importance(const Mat& X, const std::vector<bool>& y,
                                      const FeatureSchema& schema, int n_trees = 100,
                                      int max_depth = 8, int mtry = 0, std::uint64_t seed = 0) {
    if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
    if (X.rows() == 0) throw DataError("cannot fit a forest on an empty dataset");
    if (static_cast<std::size_t>(X.cols()) != schema.size()) throw DataError("X/schema width mismatch");
    if (mtry == 0) mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(X.cols()))));

    std::vector<Vec> importances(static_cast<std::size_t>(n_trees));
    parallel_for(static_cast<std::size_t>(n_trees), [&](std::size_t t) {
        std::mt19937_64 rng(derive_seed(seed, "rf_tree", t));
        std::uniform_int_distribution<long> pick(0, X.rows() - 1);
        Mat Xb(X.rows(), X.cols());
        std::vector<bool> yb(static_cast<std::size_t>(X.rows()));
        for (long r = 0; r < X.rows(); ++r) {
            long src = pick(rng);
            Xb.row(r) = X.row(src);
            yb[static_cast<std::size_t>(r)] = y[static_cast<std::size_t>(src)];
        }
        importances[t] = DecisionTree::fit(Xb, yb, max_depth, mtry, rng).importance();
    });

    Vec total = Vec::Zero(X.cols());
    for (const auto& imp : importances) total += imp;
    total /= static_cast<double>(n_trees);

    ImportanceReport report;
    report.n_trees = n_trees;
    report.seed = seed;
    for (std::size_t f = 0; f < schema.size(); ++f)
        report.scores[schema.at(f).name] = total[static_cast<long>(f)];
    return report;
}

// Vitals and statics always survive; blood features compete for k_blood spots.
inline FeatureSchema select_features(const ImportanceReport& report, const FeatureSchema& schema,
                                     int k_blood) {
    std::vector<std::pair<double, std::string>> blood;
    for (const auto& f : schema.features())
        if (f.kind == FeatureKind::Blood) {
            auto it = report.scores.find(f.name);
            if (it == report.scores.end()) throw DataError("report lacks a score for " + f.name);
            blood.push_back({it->second, f.name});
        }
    if (k_blood < 0 || static_cast<std::size_t>(k_blood) > blood.size())
        throw ConfigError("k_blood out of range");

    std::stable_sort(blood.begin(), blood.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::set<std::string> keep;
    for (int i = 0; i < k_blood; ++i) keep.insert(blood[static_cast<std::size_t>(i)].second);

    std::vector<Feature> kept;
    for (const auto& f : schema.features())
        if (f.kind != FeatureKind::Blood || keep.count(f.name)) kept.push_back(f);
    return FeatureSchema(std::move(kept));
}

// Project a cohort onto a (sub)schema, preserving slice order.
inline Cohort project_cohort(const Cohort& cohort, const FeatureSchema& target) {
    std::vector<long> idx;
    for (const auto& f : target.features())
        idx.push_back(static_cast<long>(cohort.schema.index_of(f.name)));
    Cohort out;
    out.schema = target;
    out.provenance = cohort.provenance;
    for (const auto& p : cohort.patients) {
        PatientSeries ps;
        ps.patient_id = p.patient_id;
        ps.label_critical = p.label_critical;
        for (const auto& s : p.slices) {
            Vec v(static_cast<long>(idx.size()));
            for (std::size_t i = 0; i < idx.size(); ++i) v[static_cast<long>(i)] = s[idx[i]];
            ps.slices.push_back(std::move(v));
        }
        out.patients.push_back(std::move(ps));
    }
    return out;
}

// Slice-level design matrix with the patient label broadcast to every row.
inline std::pair<Mat, std::vector<bool>> cohort_design_matrix(const Cohort& cohort) {
    std::size_t n_rows = 0;
    for (const auto& p : cohort.patients) n_rows += p.slices.size();
    Mat X(static_cast<long>(n_rows), static_cast<long>(cohort.schema.size()));
    std::vector<bool> y(n_rows);
    long r = 0;
    for (const auto& p : cohort.patients)
        for (const auto& s : p.slices) {
            X.row(r) = s.transpose();
            y[static_cast<std::size_t>(r)] = p.label_critical;
            ++r;
        }
    return {std::move(X), std::move(y)};
}

}  // namespace dbnet
