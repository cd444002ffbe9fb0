#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "dbnet/classifier.hpp"
#include "dbnet/core.hpp"

namespace dbnet {

// Equal-frequency discretizer; one edge vector per feature. A constant
// feature yields no edges (a single degenerate bin) and is uninformative.
struct Discretizer {
    std::vector<std::vector<double>> edges;

    int n_bins(std::size_t feature) const { return static_cast<int>(edges[feature].size()) + 1; }

    int apply_one(std::size_t feature, double value) const {
        const auto& e = edges[feature];
        return static_cast<int>(std::upper_bound(e.begin(), e.end(), value) - e.begin());
    }

    std::vector<int> apply(const Vec& s) const {
        if (static_cast<std::size_t>(s.size()) != edges.size())
            throw DataError("state vector length mismatch in discretizer");
        std::vector<int> out(edges.size());
        for (std::size_t f = 0; f < edges.size(); ++f) out[f] = apply_one(f, s[static_cast<long>(f)]);
        return out;
    }
};

inline Discretizer discretize_fit(const Mat& X, int bins) {
    if (bins < 2) throw ConfigError("bins must be >= 2");
    if (X.rows() == 0) throw DataError("cannot fit a discretizer on empty data");
    Discretizer d;
    for (long f = 0; f < X.cols(); ++f) {
        std::vector<double> values(X.col(f).begin(), X.col(f).end());
        std::sort(values.begin(), values.end());
        std::vector<double> edges;
        for (int b = 1; b < bins; ++b) {
            const std::size_t cut = static_cast<std::size_t>(values.size()) * static_cast<std::size_t>(b) /
                                    static_cast<std::size_t>(bins);
            if (cut == 0 || cut >= values.size()) continue;
            if (values[cut] <= values[cut - 1]) continue;  // edge must split distinct values
            const double edge = 0.5 * (values[cut - 1] + values[cut]);
            if (edges.empty() || edge > edges.back()) edges.push_back(edge);
        }
        d.edges.push_back(std::move(edges));
    }
    return d;
}

// Tree-augmented naive Bayes with hill-climbing super-parent search. Each
// feature has at most one feature parent besides the class.
class HcspTanModel final : public Classifier {
public:
    HcspTanModel() = default;

    double predict_proba(const Vec& s) const override {
        return posterior(discretizer_.apply(s));
    }

    // posterior over {non-critical, critical} from already-discretized bins
    double posterior(const std::vector<int>& bins) const {
        double logp[2];
        for (int c = 0; c < 2; ++c) {
            logp[c] = std::log(prior_[static_cast<std::size_t>(c)]);
            for (std::size_t f = 0; f < bins.size(); ++f)
                logp[c] += std::log(cpt_value(f, c, bins));
        }
        const double m = std::max(logp[0], logp[1]);
        const double z0 = std::exp(logp[0] - m), z1 = std::exp(logp[1] - m);
        return z1 / (z0 + z1);
    }

    std::string name() const override { return "hcsp"; }
    std::uint64_t schema_hash() const override { return schema_hash_; }
    void set_schema_hash(std::uint64_t h) { schema_hash_ = h; }

    const std::vector<int>& super_parents() const { return super_parent_; }
    const Discretizer& discretizer() const { return discretizer_; }
    const std::array<double, 2>& prior() const { return prior_; }

    // P(bin_f | class, parent bin) rows; used by tests to check normalization
    const std::vector<std::vector<std::vector<double>>>& cpts() const { return cpt_; }

    json to_json() const override {
        return {{"kind", "hcsp"},
                {"hyperparameters", {{"folds", folds_}, {"seed", seed_}}},
                {"parameters",
                 {{"prior", prior_}, {"super_parents", super_parent_}, {"cpts", cpt_}}},
                {"standardization", {{"edges", discretizer_.edges}}},
                {"schema_hash", schema_hash_}};
    }

    static HcspTanModel from_json(const json& j) {
        if (j.at("kind") != "hcsp") throw DataError("not an hcsp model");
        HcspTanModel m;
        m.prior_ = j.at("parameters").at("prior").get<std::array<double, 2>>();
        m.super_parent_ = j.at("parameters").at("super_parents").get<std::vector<int>>();
        m.cpt_ = j.at("parameters").at("cpts").get<std::vector<std::vector<std::vector<double>>>>();
        m.discretizer_.edges = j.at("standardization").at("edges").get<std::vector<std::vector<double>>>();
        m.schema_hash_ = j.at("schema_hash").get<std::uint64_t>();
        m.folds_ = j.at("hyperparameters").at("folds").get<int>();
        m.seed_ = j.at("hyperparameters").at("seed").get<std::uint64_t>();
        return m;
    }

    friend HcspTanModel train_hcsp(const Mat&, const std::vector<bool>&, int, int, std::uint64_t);
    friend class HcspTrainer;

private:
    Discretizer discretizer_;
    std::array<double, 2> prior_{0.5, 0.5};
    std::vector<int> super_parent_;  // -1 = class only
    // cpt_[f][c * n_parent_bins + parent_bin][bin] = P(bin | c, parent_bin)
    std::vector<std::vector<std::vector<double>>> cpt_;
    std::uint64_t schema_hash_ = 0;
    int folds_ = 5;
    std::uint64_t seed_ = 0;

    double cpt_value(std::size_t f, int c, const std::vector<int>& bins) const {
        const int sp = super_parent_[f];
        const int row = sp < 0 ? c : c * discretizer_.n_bins(static_cast<std::size_t>(sp)) +
                                         bins[static_cast<std::size_t>(sp)];
        return cpt_[f][static_cast<std::size_t>(row)][static_cast<std::size_t>(bins[f])];
    }
};

// Training machinery shared between full fits and cross-validation folds.
class HcspTrainer {
public:
    HcspTrainer(std::vector<std::vector<int>> rows, std::vector<bool> y, Discretizer disc,
                int folds, std::uint64_t seed)
        : rows_(std::move(rows)), y_(std::move(y)), disc_(std::move(disc)), folds_(folds), seed_(seed) {
        const auto positives = static_cast<std::size_t>(std::count(y_.begin(), y_.end(), true));
        const std::size_t negatives = y_.size() - positives;
        const std::size_t smallest = std::min(positives, negatives);
        if (smallest == 0) throw DataError("training data must contain both classes");
        // re-stratify by shrinking the fold count when a class is tiny
        folds_ = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(folds_), smallest));
        if (folds_ < 2) throw DataError("cannot build stratified folds with both classes present");
        assign_folds();
    }

    HcspTanModel fit(const std::vector<int>& super_parent, int exclude_fold = -1) const {
        HcspTanModel m;
        m.discretizer_ = disc_;
        m.super_parent_ = super_parent;
        m.folds_ = folds_;
        m.seed_ = seed_;

        double counts[2] = {1.0, 1.0};  // Laplace
        for (std::size_t i = 0; i < y_.size(); ++i)
            if (fold_[i] != exclude_fold) counts[y_[i] ? 1 : 0] += 1.0;
        const double total = counts[0] + counts[1];
        m.prior_ = {counts[0] / total, counts[1] / total};

        const std::size_t n_features = disc_.edges.size();
        m.cpt_.resize(n_features);
        for (std::size_t f = 0; f < n_features; ++f) {
            const int bins = disc_.n_bins(f);
            const int sp = super_parent[f];
            const int parent_bins = sp < 0 ? 1 : disc_.n_bins(static_cast<std::size_t>(sp));
            m.cpt_[f].assign(static_cast<std::size_t>(2 * parent_bins),
                             std::vector<double>(static_cast<std::size_t>(bins), 1.0));  // +1 smoothing
            for (std::size_t i = 0; i < y_.size(); ++i) {
                if (fold_[i] == exclude_fold) continue;
                const int c = y_[i] ? 1 : 0;
                const int pb = sp < 0 ? 0 : rows_[i][static_cast<std::size_t>(sp)];
                m.cpt_[f][static_cast<std::size_t>(c * parent_bins + pb)]
                        [static_cast<std::size_t>(rows_[i][f])] += 1.0;
            }
            for (auto& row : m.cpt_[f]) {
                const double z = std::accumulate(row.begin(), row.end(), 0.0);
                for (double& v : row) v /= z;
            }
        }
        return m;
    }

    double cv_accuracy(const std::vector<int>& super_parent) const {
        std::size_t correct = 0;
        for (int fold = 0; fold < folds_; ++fold) {
            auto m = fit(super_parent, fold);
            for (std::size_t i = 0; i < y_.size(); ++i) {
                if (fold_[i] != fold) continue;
                if ((m.posterior(rows_[i]) > 0.5) == y_[i]) ++correct;
            }
        }
        return static_cast<double>(correct) / static_cast<double>(y_.size());
    }

    std::size_t n_features() const { return disc_.edges.size(); }

private:
    std::vector<std::vector<int>> rows_;
    std::vector<bool> y_;
    Discretizer disc_;
    int folds_;
    std::uint64_t seed_;
    std::vector<int> fold_;

    void assign_folds() {
        fold_.assign(y_.size(), 0);
        std::mt19937_64 rng(derive_seed(seed_, "hcsp_folds"));
        for (int label = 0; label < 2; ++label) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < y_.size(); ++i)
                if ((y_[i] ? 1 : 0) == label) idx.push_back(i);
            std::shuffle(idx.begin(), idx.end(), rng);
            for (std::size_t k = 0; k < idx.size(); ++k)
                fold_[idx[k]] = static_cast<int>(k % static_cast<std::size_t>(folds_));
        }
    }
};

// Start from naive Bayes; greedily promote one orphan feature at a time to
// super-parent of all remaining orphans, keeping the promotion only if
// cross-validated accuracy improves, then let each new child individually
// drop the parent when that scores at least as well.
inline HcspTanModel train_hcsp(const Mat& X, const std::vector<bool>& y, int bins = 3, int folds = 5,
                               std::uint64_t seed = 0) {
    Discretizer disc = discretize_fit(X, bins);
    std::vector<std::vector<int>> rows(static_cast<std::size_t>(X.rows()));
    for (long r = 0; r < X.rows(); ++r) rows[static_cast<std::size_t>(r)] = disc.apply(X.row(r).transpose());

    HcspTrainer trainer(std::move(rows), y, disc, folds, seed);
    const std::size_t n = trainer.n_features();
    std::vector<int> parents(n, -1);
    double best_acc = trainer.cv_accuracy(parents);

    for (;;) {
        int best_sp = -1;
        double best_sp_acc = best_acc;
        std::vector<int> best_assignment;
        for (std::size_t sp = 0; sp < n; ++sp) {
            if (parents[sp] >= 0) continue;  // only orphans may become super-parents
            std::vector<int> candidate = parents;
            bool changed = false;
            for (std::size_t f = 0; f < n; ++f)
                if (f != sp && candidate[f] < 0) {
                    candidate[f] = static_cast<int>(sp);
                    changed = true;
                }
            if (!changed) continue;
            const double acc = trainer.cv_accuracy(candidate);
            if (acc > best_sp_acc) {
                best_sp_acc = acc;
                best_sp = static_cast<int>(sp);
                best_assignment = candidate;
            }
        }
        if (best_sp < 0) break;

        // per-orphan keep-or-drop refinement
        for (std::size_t f = 0; f < n; ++f) {
            if (best_assignment[f] != best_sp || parents[f] >= 0) continue;
            std::vector<int> without = best_assignment;
            without[f] = -1;
            const double acc = trainer.cv_accuracy(without);
            if (acc >= best_sp_acc) {
                best_assignment = without;
                best_sp_acc = acc;
            }
        }
        if (best_assignment == parents) break;
        parents = best_assignment;
        best_acc = best_sp_acc;
    }

    return trainer.fit(parents);
}

}  // namespace dbnet
