#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dbnet/mlp.hpp"
#include "dbnet/tune.hpp"

using namespace dbnet;

TEST_CASE("perfect classifier scores 1.0 on every metric") {
    auto m = metrics({10, 0, 10, 0});
    CHECK(m.accuracy == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.specificity == 1.0);
    CHECK(m.g_mean == 1.0);
}

TEST_CASE("missing every positive zeroes recall and the geometric mean") {
    auto m = metrics({0, 0, 50, 5});
    CHECK(m.recall == 0.0);
    CHECK(m.g_mean == 0.0);
    CHECK(m.specificity == 1.0);
}

TEST_CASE("hand-computed confusion matrix") {
    auto m = metrics({8, 20, 70, 2});
    CHECK(m.recall == doctest::Approx(0.8));
    CHECK(m.specificity == doctest::Approx(0.7778).epsilon(1e-4));
    CHECK(m.g_mean == doctest::Approx(0.7888).epsilon(1e-4));
    CHECK(m.accuracy == doctest::Approx(0.78));
}

TEST_CASE("degenerate denominators score zero instead of erroring") {
    CHECK(metrics({5, 0, 0, 0}).specificity == 0.0);  // no negatives present
    CHECK(metrics({5, 0, 0, 0}).g_mean == 0.0);
    CHECK(metrics({0, 3, 7, 0}).recall == 0.0);  // no positives present
}

TEST_CASE("empty confusion matrix is rejected") {
    CHECK_THROWS_AS(metrics({0, 0, 0, 0}), DataError);
}

TEST_CASE("geometric mean obeys AM-GM and its zero/one characterizations") {
    for (long tp = 0; tp <= 5; ++tp)
        for (long fp = 0; fp <= 5; ++fp)
            for (long tn = 0; tn <= 5; ++tn)
                for (long fn = 0; fn <= 5; ++fn) {
                    if (tp + fp + tn + fn == 0) continue;
                    auto m = metrics({tp, fp, tn, fn});
                    CHECK(m.g_mean >= 0.0);
                    CHECK(m.g_mean <= 1.0);
                    CHECK(m.g_mean <= 0.5 * (m.recall + m.specificity) + 1e-15);
                    CHECK((m.g_mean == 0.0) == (m.recall * m.specificity == 0.0));
                    CHECK((m.g_mean == 1.0) == (m.recall == 1.0 && m.specificity == 1.0));
                }
}

TEST_CASE("confusion matrix accumulates by predicted/actual quadrant") {
    ConfusionMatrix cm;
    cm.add(true, true);
    cm.add(true, false);
    cm.add(false, false);
    cm.add(false, true);
    cm.add(false, false);
    CHECK(cm.tp == 1);
    CHECK(cm.fp == 1);
    CHECK(cm.tn == 2);
    CHECK(cm.fn == 1);
    CHECK(cm.total() == 5);
}

namespace {

ParamSpace box3() {
    return {{{"x0", -5, 5, ParamKind::Real},
             {"x1", -5, 5, ParamKind::Real},
             {"x2", -5, 5, ParamKind::Real}}};
}

double neg_sphere(const std::map<std::string, double>& p) {
    double s = 0.0;
    for (const auto& [_, v] : p) s += v * v;
    return -s;
}

}  // namespace

TEST_CASE("differential evolution reaches the sphere optimum") {
    DeConfig cfg;
    cfg.population_size = 20;
    cfg.weight = 0.8;
    cfg.crossover = 0.9;
    cfg.max_generations = 200;
    cfg.seed = 1;
    auto result = de_optimize(neg_sphere, box3(), cfg);
    CHECK(result.best_value > -1e-6);
    for (const auto& [_, v] : result.best) CHECK(std::abs(v) < 1e-3);
}

TEST_CASE("integer coordinates land exactly on the analytic optimum") {
    ParamSpace space{{{"x", 0, 10, ParamKind::Integer}}};
    DeConfig cfg;
    cfg.population_size = 12;
    cfg.max_generations = 60;
    cfg.seed = 2;
    auto result = de_optimize(
        [](const std::map<std::string, double>& p) {
            const double x = p.at("x");
            CHECK(x == std::round(x));  // rounded at evaluation
            return -(x - 3) * (x - 3);
        },
        space, cfg);
    CHECK(result.best.at("x") == 3.0);
    CHECK(result.best_value == 0.0);
}

TEST_CASE("log-scaled coordinates concentrate around the optimum across decades") {
    ParamSpace space{{{"x", 1e-6, 1e6, ParamKind::LogReal}}};
    DeConfig cfg;
    cfg.population_size = 15;
    cfg.max_generations = 120;
    cfg.seed = 3;
    auto result = de_optimize(
        [](const std::map<std::string, double>& p) {
            const double l = std::log(p.at("x"));
            return -l * l;
        },
        space, cfg);
    CHECK(std::abs(std::log(result.best.at("x"))) < 1e-3);
}

TEST_CASE("best-so-far trace is monotone nondecreasing") {
    DeConfig cfg;
    cfg.population_size = 10;
    cfg.max_generations = 50;
    cfg.seed = 4;
    auto result = de_optimize(neg_sphere, box3(), cfg);
    REQUIRE(result.trace.size() == 51);
    for (std::size_t g = 1; g < result.trace.size(); ++g) {
        CHECK(result.trace[g].best_fitness >= result.trace[g - 1].best_fitness);
        CHECK(result.trace[g].generation == static_cast<int>(g));
        CHECK(result.trace[g].mean_fitness <= result.trace[g].best_fitness);
    }
}

TEST_CASE("every evaluated point stays inside the box after reflection") {
    ParamSpace space{{{"a", -1, 2, ParamKind::Real}, {"b", 1, 9, ParamKind::Integer}}};
    DeConfig cfg;
    cfg.population_size = 8;
    cfg.weight = 1.9;  // large steps to force reflections
    cfg.max_generations = 40;
    cfg.seed = 5;
    de_optimize(
        [](const std::map<std::string, double>& p) {
            CHECK(p.at("a") >= -1.0);
            CHECK(p.at("a") <= 2.0);
            CHECK(p.at("b") >= 1.0);
            CHECK(p.at("b") <= 9.0);
            return p.at("a") + p.at("b");
        },
        space, cfg);
}

TEST_CASE("optimization is deterministic given the seed") {
    DeConfig cfg;
    cfg.population_size = 12;
    cfg.max_generations = 30;
    cfg.seed = 6;
    auto a = de_optimize(neg_sphere, box3(), cfg);
    auto b = de_optimize(neg_sphere, box3(), cfg);
    CHECK(a.best_value == b.best_value);
    CHECK(a.best == b.best);
    for (std::size_t g = 0; g < a.trace.size(); ++g) {
        CHECK(a.trace[g].best_fitness == b.trace[g].best_fitness);
        CHECK(a.trace[g].mean_fitness == b.trace[g].mean_fitness);
    }
}

TEST_CASE("throwing objectives count as minus-infinity fitness, not a crash") {
    ParamSpace space{{{"x", 0, 1, ParamKind::Real}}};
    DeConfig cfg;
    cfg.population_size = 6;
    cfg.max_generations = 20;
    cfg.seed = 7;
    auto result = de_optimize(
        [](const std::map<std::string, double>& p) {
            if (p.at("x") < 0.5) throw DataError("left half is poisoned");
            return p.at("x");
        },
        space, cfg);
    CHECK(result.best.at("x") >= 0.5);
    CHECK(result.best_value >= 0.5);
}

TEST_CASE("undersized populations are rejected") {
    DeConfig cfg;
    cfg.population_size = 3;
    CHECK_THROWS_AS(de_optimize(neg_sphere, box3(), cfg), ConfigError);
}

namespace {

// imbalanced separable blobs split into train and validation halves
struct BlobsTask {
    Mat X_train, X_val;
    std::vector<bool> y_train, y_val;

    explicit BlobsTask(std::uint64_t seed = 8) {
        std::mt19937_64 gen(seed);
        std::normal_distribution<double> g;
        auto fill = [&](Mat& X, std::vector<bool>& y, long n, long n_pos) {
            X.resize(n, 2);
            y.resize(static_cast<std::size_t>(n));
            for (long r = 0; r < n; ++r) {
                bool pos = r < n_pos;
                X(r, 0) = (pos ? 4.0 : 0.0) + g(gen);
                X(r, 1) = (pos ? 4.0 : 0.0) + g(gen);
                y[static_cast<std::size_t>(r)] = pos;
            }
        };
        fill(X_train, y_train, 120, 24);
        fill(X_val, y_val, 60, 12);
    }
};

}  // namespace

TEST_CASE("a parameter-blind objective still returns in-bounds parameters") {
    BlobsTask task;
    ParamSpace space{{{"whatever", 2, 7, ParamKind::Real}}};
    DeConfig cfg;
    cfg.population_size = 6;
    cfg.max_generations = 3;
    auto trainer = [](const std::map<std::string, double>&, const Mat& X,
                      const std::vector<bool>& y) -> std::unique_ptr<Classifier> {
        TrainConfig tc;
        tc.epochs = 5;
        return std::make_unique<MlpModel>(train_mlp(X, y, tc, {4}));
    };
    auto result = tune_classifier(trainer, task.X_train, task.y_train, task.X_val, task.y_val,
                                  space, cfg);
    CHECK(result.best_params.at("whatever") >= 2.0);
    CHECK(result.best_params.at("whatever") <= 7.0);
    for (const auto& row : result.trace) CHECK(row.best_fitness == result.best_g_mean);
}

TEST_CASE("tuning the learning rate on separable blobs finds a strong configuration") {
    BlobsTask task;
    ParamSpace space{{{"learning_rate", 1e-6, 1.0, ParamKind::LogReal}}};
    DeConfig cfg;
    cfg.population_size = 8;
    cfg.max_generations = 6;
    cfg.seed = 9;
    auto trainer = [](const std::map<std::string, double>& p, const Mat& X,
                      const std::vector<bool>& y) -> std::unique_ptr<Classifier> {
        TrainConfig tc;
        tc.learning_rate = p.at("learning_rate");
        tc.epochs = 30;
        tc.seed = 1;
        return std::make_unique<MlpModel>(train_mlp(X, y, tc, {8, 4}));
    };
    SmoteConfig balance;
    balance.seed = 2;
    auto result = tune_classifier(trainer, task.X_train, task.y_train, task.X_val, task.y_val,
                                  space, cfg, balance);
    CHECK(result.best_g_mean >= 0.95);
}

TEST_CASE("single-class validation split is rejected up front") {
    BlobsTask task;
    auto trainer = [](const std::map<std::string, double>&, const Mat&,
                      const std::vector<bool>&) -> std::unique_ptr<Classifier> {
        throw DataError("should never be reached");
    };
    DeConfig cfg;
    cfg.population_size = 6;
    CHECK_THROWS_AS(tune_classifier(trainer, task.X_train, task.y_train, task.X_val,
                                    std::vector<bool>(task.y_val.size(), false),
                                    default_mlp_space(), cfg),
                    DataError);
}
