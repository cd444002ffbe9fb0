#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dbnet/smote.hpp"

using namespace dbnet;

namespace {

// imbalanced 2-D blobs: 12 minority at (5,5), 48 majority at (0,0)
std::pair<Mat, std::vector<bool>> blobs(std::uint64_t seed = 1) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g;
    Mat X(60, 2);
    std::vector<bool> y(60);
    for (long r = 0; r < 60; ++r) {
        bool minority = r < 12;
        X(r, 0) = (minority ? 5.0 : 0.0) + g(gen);
        X(r, 1) = (minority ? 5.0 : 0.0) + g(gen);
        y[static_cast<std::size_t>(r)] = minority;
    }
    return {X, y};
}

}  // namespace

TEST_CASE("interpolation at lambda 0.5 is the midpoint") {
    Vec a(2), b(2);
    a << 0.0, 0.0;
    b << 1.0, 1.0;
    Vec mid = detail::smote_interpolate(a, b, 0.5, {false, false});
    CHECK(mid[0] == doctest::Approx(0.5));
    CHECK(mid[1] == doctest::Approx(0.5));
}

TEST_CASE("binary-like columns are rounded after interpolation") {
    Vec a(2), b(2);
    a << 0.0, 2.0;
    b << 1.0, 4.0;
    Vec v = detail::smote_interpolate(a, b, 0.3, {true, false});
    CHECK(v[0] == 0.0);  // 0.3 rounds down
    CHECK(v[1] == doctest::Approx(2.6));
}

TEST_CASE("perc_over 0 yields no synthetic rows") {
    auto [X, y] = blobs();
    SmoteConfig cfg;
    cfg.perc_over = 0.0;
    auto result = smote(X, y, cfg);
    for (bool s : result.synthetic) CHECK(!s);
    CHECK(result.lineage.empty());
}

TEST_CASE("every synthetic point lies on the segment between its generating pair") {
    auto [X, y] = blobs();
    SmoteConfig cfg;
    cfg.k_neighbors = 5;
    cfg.perc_over = 90000.0;  // ~10800 synthetic points from 12 bases
    cfg.perc_under = 10.0;
    cfg.seed = 3;
    auto result = smote(X, y, cfg);
    REQUIRE(result.lineage.size() >= 10000);
    std::size_t row = 12;  // synthetic rows follow the originals
    for (const auto& [base, neighbor, lambda] : result.lineage) {
        CHECK(lambda >= 0.0);
        CHECK(lambda <= 1.0);
        for (long f = 0; f < X.cols(); ++f) {
            double lo = std::min(X(base, f), X(neighbor, f));
            double hi = std::max(X(base, f), X(neighbor, f));
            double v = result.X(static_cast<long>(row), f);
            CHECK(v >= lo - 1e-12);
            CHECK(v <= hi + 1e-12);
        }
        ++row;
    }
}

TEST_CASE("class counts follow the closed form of perc_over / perc_under") {
    auto [X, y] = blobs();
    SmoteConfig cfg;
    cfg.perc_over = 250.0;
    cfg.perc_under = 150.0;
    auto result = smote(X, y, cfg);
    const std::size_t n_synth = 12 * 250 / 100;
    const std::size_t n_major = static_cast<std::size_t>(std::llround(n_synth * 1.5));
    std::size_t minority_rows = 0, majority_rows = 0;
    for (bool label : result.y) (label ? minority_rows : majority_rows) += 1;
    CHECK(minority_rows == 12 + n_synth);
    CHECK(majority_rows == n_major);
}

TEST_CASE("synthetic minority stays inside the minority bounding box") {
    auto [X, y] = blobs(9);
    SmoteConfig cfg;
    cfg.perc_over = 500.0;
    auto result = smote(X, y, cfg);
    Vec lo = Vec::Constant(2, 1e300), hi = Vec::Constant(2, -1e300);
    for (long r = 0; r < 12; ++r)
        for (long f = 0; f < 2; ++f) {
            lo[f] = std::min(lo[f], X(r, f));
            hi[f] = std::max(hi[f], X(r, f));
        }
    for (std::size_t r = 0; r < result.y.size(); ++r)
        if (result.synthetic[r])
            for (long f = 0; f < 2; ++f) {
                CHECK(result.X(static_cast<long>(r), f) >= lo[f] - 1e-12);
                CHECK(result.X(static_cast<long>(r), f) <= hi[f] + 1e-12);
            }
}

TEST_CASE("smote is deterministic given the seed") {
    auto [X, y] = blobs();
    SmoteConfig cfg;
    cfg.seed = 77;
    auto a = smote(X, y, cfg);
    auto b = smote(X, y, cfg);
    CHECK(a.X == b.X);
    CHECK(a.y == b.y);
}

TEST_CASE("k_neighbors >= minority count is rejected with advice") {
    auto [X, y] = blobs();
    SmoteConfig cfg;
    cfg.k_neighbors = 12;
    CHECK_THROWS_WITH_AS(smote(X, y, cfg), doctest::Contains("lower k"), DataError);
}
