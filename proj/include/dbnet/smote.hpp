#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>
#include <vector>

#include "dbnet/core.hpp"

namespace dbnet {

// perc_over/perc_under follow the conventional SMOTE parameterization:
// per 100 of perc_over, one synthetic row per original minority row; the kept
// majority sample is perc_under/100 times the number of synthetic rows.
struct SmoteConfig {
    int k_neighbors = 5;
    double perc_over = 200.0;
    double perc_under = 200.0;
    std::uint64_t seed = 0;
};

struct SmoteResult {
    Mat X;
    std::vector<bool> y;
    std::vector<bool> synthetic;                          // per output row
    std::vector<std::tuple<long, long, double>> lineage;  // (base, neighbor, lambda) per synthetic
                                                          // row, indices into the input X
};

namespace detail {

inline Vec smote_interpolate(const Vec& base, const Vec& neighbor, double lambda,
                             const std::vector<bool>& binary_column) {
    Vec out = base + lambda * (neighbor - base);
    for (long f = 0; f < out.size(); ++f)
        if (binary_column[static_cast<std::size_t>(f)]) out[f] = std::round(out[f]);
    return out;
}

inline std::vector<bool> detect_binary_columns(const Mat& X) {
    std::vector<bool> binary(static_cast<std::size_t>(X.cols()), true);
    for (long f = 0; f < X.cols(); ++f)
        for (long r = 0; r < X.rows(); ++r)
            if (X(r, f) != 0.0 && X(r, f) != 1.0) {
                binary[static_cast<std::size_t>(f)] = false;
                break;
            }
    return binary;
}

}  // namespace detail

inline SmoteResult smote(const Mat& X, const std::vector<bool>& y, const SmoteConfig& cfg) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw DataError("X/y row mismatch");
    if (cfg.k_neighbors < 1) throw ConfigError("k_neighbors must be >= 1");
    if (cfg.perc_over < 0 || cfg.perc_under < 0) throw ConfigError("percentages must be >= 0");

    std::vector<long> minority, majority;
    std::int64_t positives = std::count(y.begin(), y.end(), true);
    const bool minority_label = positives * 2 <= static_cast<std::int64_t>(y.size());
    for (long r = 0; r < X.rows(); ++r)
        (y[static_cast<std::size_t>(r)] == minority_label ? minority : majority).push_back(r);

    if (minority.size() < 2) throw DataError("minority class needs at least 2 rows");
    if (static_cast<std::size_t>(cfg.k_neighbors) >= minority.size())
        throw DataError("k_neighbors >= minority count; lower k_neighbors");

    // standardized distances so large-magnitude features do not dominate
    Vec mean = X.colwise().mean();
    Vec stddev(X.cols());
    for (long f = 0; f < X.cols(); ++f) {
        double var = (X.col(f).array() - mean[f]).square().sum() / static_cast<double>(X.rows());
        stddev[f] = std::max(std::sqrt(var), 1e-12);
    }
    Mat Z(static_cast<long>(minority.size()), X.cols());
    for (std::size_t i = 0; i < minority.size(); ++i)
        Z.row(static_cast<long>(i)) =
            ((X.row(minority[i]).transpose() - mean).array() / stddev.array()).transpose();

    // k nearest minority neighbors per minority row
    std::vector<std::vector<long>> neighbors(minority.size());
    for (std::size_t i = 0; i < minority.size(); ++i) {
        std::vector<std::pair<double, long>> dist;
        for (std::size_t j = 0; j < minority.size(); ++j) {
            if (i == j) continue;
            dist.push_back({(Z.row(static_cast<long>(i)) - Z.row(static_cast<long>(j))).squaredNorm(),
                            static_cast<long>(j)});
        }
        std::partial_sort(dist.begin(), dist.begin() + cfg.k_neighbors, dist.end());
        for (int k = 0; k < cfg.k_neighbors; ++k) neighbors[i].push_back(dist[static_cast<std::size_t>(k)].second);
    }

    const auto binary = detail::detect_binary_columns(X);
    std::mt19937_64 rng(derive_seed(cfg.seed, "smote"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> pick_neighbor(0, cfg.k_neighbors - 1);

    SmoteResult result;
    std::vector<Vec> rows;
    auto push = [&](const Vec& v, bool label, bool synth) {
        rows.push_back(v);
        result.y.push_back(label);
        result.synthetic.push_back(synth);
    };

    for (long r : minority) push(X.row(r).transpose(), minority_label, false);

    // exact synthetic count: floor(minority * perc_over / 100), spread so each
    // base row differs by at most one synthetic sample
    const double per_base = cfg.perc_over / 100.0;
    std::size_t n_synth = 0;
    for (std::size_t i = 0; i < minority.size(); ++i) {
        const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(i + 1) * per_base) -
                                                    std::floor(static_cast<double>(i) * per_base));
        for (std::size_t c = 0; c < count; ++c) {
            const long base = minority[i];
            const long neighbor = minority[static_cast<std::size_t>(
                neighbors[i][static_cast<std::size_t>(pick_neighbor(rng))])];
            const double lambda = unif(rng);
            push(detail::smote_interpolate(X.row(base).transpose(), X.row(neighbor).transpose(),
                                           lambda, binary),
                 minority_label, true);
            result.lineage.emplace_back(base, neighbor, lambda);
            ++n_synth;
        }
    }

    const auto n_majority = static_cast<std::size_t>(
        std::llround(static_cast<double>(n_synth) * cfg.perc_under / 100.0));
    if (n_majority > 0 && majority.empty()) throw DataError("no majority rows to sample");
    std::uniform_int_distribution<std::size_t> pick_major(0, majority.empty() ? 0 : majority.size() - 1);
    for (std::size_t k = 0; k < n_majority; ++k)
        push(X.row(majority[pick_major(rng)]).transpose(), !minority_label, false);

    result.X.resize(static_cast<long>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) result.X.row(static_cast<long>(i)) = rows[i].transpose();
    return result;
}

}  // namespace dbnet
