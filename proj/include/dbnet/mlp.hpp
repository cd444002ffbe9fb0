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

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double beta1 = 0.9;  // Adam moment decays
    double beta2 = 0.999;

    void validate() const {
        if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    }
};

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

constexpr std::array<int, 5> kDefaultHiddenWidths{64, 32, 16, 16, 8};

// Dense rectifier network with a sigmoid output neuron. Inputs are
// standardized with training-split statistics stored in the model.
class MlpModel final : public Classifier {
public:
    MlpModel() = default;

    static MlpModel init(int n_inputs, std::uint64_t seed,
                         std::vector<int> hidden = {kDefaultHiddenWidths.begin(), kDefaultHiddenWidths.end()},
                         double noise_scale = 1e-3) {
        if (n_inputs < 1) throw ConfigError("n_inputs must be >= 1");
        MlpModel m;
        m.hidden_ = std::move(hidden);
        std::vector<int> widths{n_inputs};
        widths.insert(widths.end(), m.hidden_.begin(), m.hidden_.end());
        widths.push_back(1);

        std::mt19937_64 rng(derive_seed(seed, "mlp_init"));
        std::normal_distribution<double> noise(0.0, 1.0);
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const int rows = widths[l + 1], cols = widths[l];
            // rectangular identity plus seeded noise to break symmetry
            Mat W = Mat::Identity(rows, cols);
            if (noise_scale > 0)
                for (long r = 0; r < W.rows(); ++r)
                    for (long c = 0; c < W.cols(); ++c) W(r, c) += noise_scale * noise(rng);
            m.weights_.push_back(std::move(W));
            m.biases_.push_back(Vec::Zero(rows));
        }
        m.input_mean_ = Vec::Zero(n_inputs);
        m.input_scale_ = Vec::Ones(n_inputs);
        return m;
    }

    int n_inputs() const { return static_cast<int>(weights_.front().cols()); }
    std::size_t n_layers() const { return weights_.size(); }
    const std::vector<Mat>& weights() const { return weights_; }
    const std::vector<Vec>& biases() const { return biases_; }
    std::vector<Mat>& weights() { return weights_; }
    std::vector<Vec>& biases() { return biases_; }
    const std::vector<double>& loss_history() const { return loss_history_; }

    void set_standardization(Vec mean, Vec scale) {
        input_mean_ = std::move(mean);
        input_scale_ = std::move(scale);
    }
    void set_schema_hash(std::uint64_t h) { schema_hash_ = h; }
    void set_train_config(const TrainConfig& cfg) { train_config_ = cfg; }

    double predict_proba(const Vec& s) const override {
        if (s.size() != input_mean_.size())
            throw DataError("state vector length mismatch: expected " +
                            std::to_string(input_mean_.size()) + ", got " + std::to_string(s.size()));
        Vec a = (s - input_mean_).cwiseQuotient(input_scale_);
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            a = weights_[l] * a + biases_[l];
            if (l + 1 < weights_.size()) a = a.cwiseMax(0.0);
        }
        return sigmoid(a[0]);
    }

    std::string name() const override { return "mlp"; }
    std::uint64_t schema_hash() const override { return schema_hash_; }

    json to_json() const override {
        json layers = json::array();
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            std::vector<std::vector<double>> w(static_cast<std::size_t>(weights_[l].rows()));
            for (long r = 0; r < weights_[l].rows(); ++r)
                w[static_cast<std::size_t>(r)] = {weights_[l].row(r).begin(), weights_[l].row(r).end()};
            layers.push_back({{"weights", w},
                              {"bias", std::vector<double>(biases_[l].begin(), biases_[l].end())}});
        }
        return {{"kind", "mlp"},
                {"hyperparameters",
                 {{"hidden", hidden_},
                  {"learning_rate", train_config_.learning_rate},
                  {"epochs", train_config_.epochs},
                  {"batch_size", train_config_.batch_size},
                  {"seed", train_config_.seed}}},
                {"parameters", layers},
                {"standardization",
                 {{"mean", std::vector<double>(input_mean_.begin(), input_mean_.end())},
                  {"scale", std::vector<double>(input_scale_.begin(), input_scale_.end())}}},
                {"schema_hash", schema_hash_}};
    }

    static MlpModel from_json(const json& j) {
        if (j.at("kind") != "mlp") throw DataError("not an mlp model");
        MlpModel m;
        m.hidden_ = j.at("hyperparameters").at("hidden").get<std::vector<int>>();
        for (const auto& layer : j.at("parameters")) {
            auto w = layer.at("weights").get<std::vector<std::vector<double>>>();
            Mat W(static_cast<long>(w.size()), static_cast<long>(w.front().size()));
            for (std::size_t r = 0; r < w.size(); ++r)
                W.row(static_cast<long>(r)) =
                    Eigen::Map<const Vec>(w[r].data(), static_cast<long>(w[r].size())).transpose();
            m.weights_.push_back(std::move(W));
            auto b = layer.at("bias").get<std::vector<double>>();
            m.biases_.push_back(Eigen::Map<const Vec>(b.data(), static_cast<long>(b.size())));
        }
        auto mean = j.at("standardization").at("mean").get<std::vector<double>>();
        auto scale = j.at("standardization").at("scale").get<std::vector<double>>();
        m.input_mean_ = Eigen::Map<const Vec>(mean.data(), static_cast<long>(mean.size()));
        m.input_scale_ = Eigen::Map<const Vec>(scale.data(), static_cast<long>(scale.size()));
        m.schema_hash_ = j.at("schema_hash").get<std::uint64_t>();
        return m;
    }

    const Vec& input_mean() const { return input_mean_; }
    const Vec& input_scale() const { return input_scale_; }
    void record_loss(double loss) { loss_history_.push_back(loss); }

private:
    std::vector<int> hidden_;
    std::vector<Mat> weights_;
    std::vector<Vec> biases_;
    Vec input_mean_;
    Vec input_scale_;
    std::uint64_t schema_hash_ = 0;
    TrainConfig train_config_;
    std::vector<double> loss_history_;
};

struct MlpGradient {
    std::vector<Mat> d_weights;
    std::vector<Vec> d_biases;
    double loss = 0.0;
};

// Exact gradient of mean binary cross-entropy over the batch. Inputs must
// already be standardized the way the model standardizes them; rows of X are
// examples. The rectifier subgradient at 0 is taken as 0.
inline MlpGradient mlp_gradient(const MlpModel& model, const Mat& X_std, const std::vector<bool>& y) {
    if (X_std.rows() == 0) throw DataError("empty batch");
    if (static_cast<std::size_t>(X_std.rows()) != y.size()) throw DataError("X/y row mismatch");
    const long B = X_std.rows();
    const auto& W = model.weights();
    const auto& b = model.biases();
    const std::size_t L = W.size();

    // forward, keeping activations; columns are examples
    std::vector<Mat> acts(L + 1);
    acts[0] = X_std.transpose();
    for (std::size_t l = 0; l < L; ++l) {
        acts[l + 1] = (W[l] * acts[l]).colwise() + b[l];
        if (l + 1 < L) acts[l + 1] = acts[l + 1].cwiseMax(0.0);
    }

    Vec p(B), target(B);
    for (long i = 0; i < B; ++i) {
        p[i] = sigmoid(acts[L](0, i));
        target[i] = y[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    }

    MlpGradient grad;
    grad.d_weights.resize(L);
    grad.d_biases.resize(L);
    double loss = 0.0;
    for (long i = 0; i < B; ++i) {
        const double pc = std::clamp(p[i], 1e-12, 1.0 - 1e-12);
        loss -= target[i] * std::log(pc) + (1.0 - target[i]) * std::log(1.0 - pc);
    }
    grad.loss = loss / static_cast<double>(B);

    // delta at the output: (p - y) / B, then backprop through the rectifiers
    Mat delta = (p - target).transpose() / static_cast<double>(B);
    for (std::size_t l = L; l-- > 0;) {
        grad.d_weights[l] = delta * acts[l].transpose();
        grad.d_biases[l] = delta.rowwise().sum();
        if (l > 0) {
            Mat mask = (acts[l].array() > 0.0).cast<double>();
            delta = (W[l].transpose() * delta).cwiseProduct(mask);
        }
    }
    return grad;
}

// Mini-batch Adam on binary cross-entropy; deterministic given the seed.
inline MlpModel train_mlp(const Mat& X, const std::vector<bool>& y, const TrainConfig& cfg,
                          std::vector<int> hidden = {kDefaultHiddenWidths.begin(), kDefaultHiddenWidths.end()},
                          std::uint64_t schema_hash = 0) {
    cfg.validate();
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw DataError("X/y row mismatch");
    const auto positives = std::count(y.begin(), y.end(), true);
    if (positives == 0 || positives == static_cast<long>(y.size()))
        throw DataError("training data must contain both classes");

    MlpModel model = MlpModel::init(static_cast<int>(X.cols()), cfg.seed, hidden);
    model.set_schema_hash(schema_hash);
    model.set_train_config(cfg);

    Vec mean = X.colwise().mean();
    Vec scale(X.cols());
    for (long f = 0; f < X.cols(); ++f) {
        double var = (X.col(f).array() - mean[f]).square().sum() / static_cast<double>(X.rows());
        scale[f] = std::max(std::sqrt(var), 1e-12);
    }
    model.set_standardization(mean, scale);
    Mat Z = (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();

    const std::size_t L = model.n_layers();
    std::vector<Mat> mW(L), vW(L);
    std::vector<Vec> mB(L), vB(L);
    for (std::size_t l = 0; l < L; ++l) {
        mW[l] = Mat::Zero(model.weights()[l].rows(), model.weights()[l].cols());
        vW[l] = mW[l];
        mB[l] = Vec::Zero(model.biases()[l].size());
        vB[l] = mB[l];
    }

    std::mt19937_64 rng(derive_seed(cfg.seed, "mlp_train"));
    std::vector<long> order(static_cast<std::size_t>(X.rows()));
    std::iota(order.begin(), order.end(), 0);
    const double eps = 1e-8;
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            Mat Xb(static_cast<long>(stop - start), X.cols());
            std::vector<bool> yb(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                Xb.row(static_cast<long>(i - start)) = Z.row(order[i]);
                yb[i - start] = y[static_cast<std::size_t>(order[i])];
            }
            auto grad = mlp_gradient(model, Xb, yb);
            epoch_loss += grad.loss;
            ++n_batches;
            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (std::size_t l = 0; l < L; ++l) {
                mW[l] = cfg.beta1 * mW[l] + (1.0 - cfg.beta1) * grad.d_weights[l];
                vW[l] = cfg.beta2 * vW[l] +
                        (1.0 - cfg.beta2) * grad.d_weights[l].cwiseProduct(grad.d_weights[l]);
                model.weights()[l] -=
                    cfg.learning_rate *
                    (mW[l] / bc1).cwiseQuotient(((vW[l] / bc2).cwiseSqrt().array() + eps).matrix());
                mB[l] = cfg.beta1 * mB[l] + (1.0 - cfg.beta1) * grad.d_biases[l];
                vB[l] = cfg.beta2 * vB[l] + (1.0 - cfg.beta2) * grad.d_biases[l].cwiseProduct(grad.d_biases[l]);
                model.biases()[l] -=
                    cfg.learning_rate *
                    (mB[l] / bc1).cwiseQuotient(((vB[l] / bc2).cwiseSqrt().array() + eps).matrix());
            }
        }
        model.record_loss(epoch_loss / static_cast<double>(n_batches));
    }

    for (const auto& W : model.weights())
        if (!W.allFinite()) throw NumericError("mlp training produced non-finite weights");
    return model;
}

}  // namespace dbnet
