#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cctype>
#include <random>

#include "dbnet/dbn.hpp"

using namespace dbnet;

namespace {

FeatureSchema vars(std::initializer_list<std::string> names) {
    std::vector<Feature> feats;
    for (const auto& n : names) feats.push_back({n, FeatureKind::Vital, ""});
    return FeatureSchema(std::move(feats));
}

TransitionDataset dataset(const Mat& rows) {
    TransitionDataset td;
    td.rows = rows;
    return td;
}

// model with hand-picked CPDs; parents must already be in canonical order
DbnModel make_model(const FeatureSchema& schema, DbnStructure structure,
                    std::vector<LinearGaussianCpd> cpds) {
    return DbnModel(schema, std::move(structure), std::move(cpds));
}

DbnModel scalar_model(double coeff, double intercept, double variance = 1.0) {
    auto schema = vars({"x"});
    DbnStructure st(1);
    st.add_arc({0, 0}, 0);
    LinearGaussianCpd cpd;
    cpd.child = 0;
    cpd.parents = {{0, 0}};
    cpd.intercept = intercept;
    cpd.coefficients = Vec::Constant(1, coeff);
    cpd.residual_variance = variance;
    return make_model(schema, std::move(st), {cpd});
}

}  // namespace

TEST_CASE("bic penalty rejects an irrelevant parent on near-constant data") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> g(0.0, 1e-3);
    Mat rows(100, 4);
    for (long r = 0; r < 100; ++r) {
        rows(r, 0) = g(gen) * 1000;  // irrelevant candidate parent
        rows(r, 1) = 0.0;
        rows(r, 2) = 5.0 + g(gen);  // child: constant with tiny jitter
        rows(r, 3) = 0.0;
    }
    auto td = dataset(rows);
    double no_parent = bic_score(0, {}, td);
    double with_parent = bic_score(0, {{0, 0}}, td);
    CHECK(no_parent > with_parent);
}

TEST_CASE("bic rejects duplicate parents") {
    Mat rows = Mat::Random(20, 4);
    auto td = dataset(rows);
    CHECK_THROWS_AS(bic_score(0, {{0, 0}, {0, 0}}, td), DataError);
}

TEST_CASE("bic strongly prefers the true parent for y = 2x + eps") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> x_dist(0.0, 1.0), eps(0.0, 0.1);
    const long N = 200;
    Mat rows(N, 2);
    for (long r = 0; r < N; ++r) {
        double x = x_dist(gen);
        rows(r, 0) = x;
        rows(r, 1) = 2.0 * x + eps(gen);
    }
    auto td = dataset(rows);
    double with_x = bic_score(0, {{0, 0}}, td);
    double without = bic_score(0, {}, td);
    CHECK(with_x - without > 10.0 * std::log(static_cast<double>(N)));

    // independent closed-form simple-regression oracle
    double mx = rows.col(0).mean(), my = rows.col(1).mean();
    double sxx = (rows.col(0).array() - mx).square().sum();
    double sxy = ((rows.col(0).array() - mx) * (rows.col(1).array() - my)).sum();
    double beta = sxy / sxx;
    double alpha = my - beta * mx;
    double rss = (rows.col(1).array() - alpha - beta * rows.col(0).array()).square().sum();
    double sigma2 = rss / static_cast<double>(N);
    double loglik = -0.5 * N * (std::log(2.0 * M_PI * sigma2) + 1.0);
    double oracle = loglik - 0.5 * 3.0 * std::log(static_cast<double>(N));
    CHECK(with_x == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("hill climbing on independent noise keeps the graph nearly empty") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> g;
    const int n = 4;
    Mat rows(2000, 2 * n);
    for (long r = 0; r < rows.rows(); ++r)
        for (long c = 0; c < rows.cols(); ++c) rows(r, c) = g(gen);
    auto result = learn_structure_traced(dataset(rows), 5, 1, 0);
    // possible arcs: n children x (2n - 1) candidate parents
    const double possible = n * (2 * n - 1);
    CHECK(static_cast<double>(result.structure.n_arcs()) <= 0.05 * possible);
}

TEST_CASE("hill climbing recovers the known two-variable VAR structure") {
    std::mt19937_64 gen(42);
    std::normal_distribution<double> g, eps(0.0, 0.1);
    const long N = 10000;
    Mat rows(N, 4);
    for (long r = 0; r < N; ++r) {
        double x1 = g(gen), x2 = g(gen);
        rows(r, 0) = x1;
        rows(r, 1) = x2;
        rows(r, 2) = 0.9 * x1 + eps(gen);
        rows(r, 3) = 0.8 * x2 + 0.7 * x1 + eps(gen);
    }
    auto result = learn_structure_traced(dataset(rows), 5, 1, 7);
    const auto& st = result.structure;
    CHECK(st.has_arc({0, 0}, 0));
    CHECK(st.has_arc({1, 0}, 1));
    CHECK(st.has_arc({0, 0}, 1));
    // no spurious inter-slice arcs
    CHECK(!st.has_arc({1, 0}, 0));
    int inter = 0;
    for (int c = 0; c < 2; ++c)
        for (const auto& p : st.parents_of(c)) inter += (p.slice == 0);
    CHECK(inter == 3);
}

TEST_CASE("hill climbing traces are monotone nondecreasing") {
    std::mt19937_64 gen(19);
    std::normal_distribution<double> g, eps(0.0, 0.3);
    Mat rows(500, 6);
    for (long r = 0; r < 500; ++r) {
        double a = g(gen), b = g(gen), c = g(gen);
        rows(r, 0) = a;
        rows(r, 1) = b;
        rows(r, 2) = c;
        rows(r, 3) = 0.5 * a + eps(gen);
        rows(r, 4) = 0.4 * b - 0.6 * a + eps(gen);
        rows(r, 5) = 0.3 * c + eps(gen);
    }
    auto result = learn_structure_traced(dataset(rows), 4, 3, 123);
    REQUIRE(result.traces.size() == 3);
    for (const auto& trace : result.traces)
        for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1]);
}

TEST_CASE("learn_structure is deterministic given the seed") {
    std::mt19937_64 gen(77);
    std::normal_distribution<double> g;
    Mat rows(300, 4);
    for (long r = 0; r < 300; ++r)
        for (long c = 0; c < 4; ++c) rows(r, c) = g(gen);
    auto a = learn_structure_traced(dataset(rows), 3, 4, 9);
    auto b = learn_structure_traced(dataset(rows), 3, 4, 9);
    CHECK(a.score == b.score);
    CHECK(a.structure.to_arc_graph(vars({"u", "v"})).arcs ==
          b.structure.to_arc_graph(vars({"u", "v"})).arcs);
}

TEST_CASE("fit_parameters on a constant child hits the variance floor") {
    Mat rows(50, 2);
    rows.col(0).setRandom();
    rows.col(1).setConstant(3.0);
    auto model = fit_parameters(DbnStructure(1), vars({"x"}), dataset(rows));
    CHECK(model.cpd(0).intercept == doctest::Approx(3.0));
    CHECK(model.cpd(0).residual_variance == doctest::Approx(kVarianceFloor));
}

TEST_CASE("fit_parameters recovers y = 2x + 1 exactly") {
    Mat rows(50, 2);
    for (long r = 0; r < 50; ++r) {
        rows(r, 0) = 0.1 * static_cast<double>(r);
        rows(r, 1) = 2.0 * rows(r, 0) + 1.0;
    }
    DbnStructure st(1);
    st.add_arc({0, 0}, 0);
    auto model = fit_parameters(st, vars({"x"}), dataset(rows));
    CHECK(model.cpd(0).coefficients[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(model.cpd(0).intercept == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(model.cpd(0).residual_variance == doctest::Approx(kVarianceFloor));
}

TEST_CASE("fit_parameters matches an independent QR least-squares solve") {
    std::mt19937_64 gen(31);
    std::normal_distribution<double> g;
    const int n = 5;
    Mat rows(400, 2 * n);
    for (long r = 0; r < 400; ++r)
        for (long c = 0; c < 2 * n; ++c) rows(r, c) = g(gen);
    DbnStructure st(n);
    for (int p = 0; p < n; ++p) st.add_arc({p, 0}, 2);  // child 2 gets all t0 parents
    auto model = fit_parameters(st, vars({"a", "b", "c", "d", "e"}), dataset(rows));

    Mat design(400, n + 1);
    design.col(0).setOnes();
    for (int p = 0; p < n; ++p) design.col(p + 1) = rows.col(p);
    Vec beta = design.colPivHouseholderQr().solve(rows.col(n + 2));
    CHECK(model.cpd(2).intercept == doctest::Approx(beta[0]).epsilon(1e-8));
    for (int p = 0; p < n; ++p)
        CHECK(model.cpd(2).coefficients[p] == doctest::Approx(beta[p + 1]).epsilon(1e-8));
}

TEST_CASE("identity model maps a state to itself and forecasts a constant sequence") {
    auto schema = vars({"u", "v"});
    DbnStructure st(2);
    st.add_arc({0, 0}, 0);
    st.add_arc({1, 0}, 1);
    std::vector<LinearGaussianCpd> cpds(2);
    for (int c = 0; c < 2; ++c) {
        cpds[c].child = c;
        cpds[c].parents = {{c, 0}};
        cpds[c].coefficients = Vec::Constant(1, 1.0);
        cpds[c].residual_variance = 1.0;
    }
    auto model = make_model(schema, std::move(st), std::move(cpds));
    Vec s0(2);
    s0 << 3.5, -2.0;
    CHECK(model.predict_step(s0) == s0);
    auto path = model.forecast(s0, 7);
    REQUIRE(path.size() == 7);
    for (const auto& s : path) CHECK(s == s0);
}

TEST_CASE("x' = 0.5 x + 1 has fixed point 2") {
    auto model = scalar_model(0.5, 1.0);
    Vec s0(1);
    s0 << 2.0;
    CHECK(model.predict_step(s0)[0] == doctest::Approx(2.0));
}

TEST_CASE("predict_step obeys the affine superposition identity") {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> g;
    auto model = scalar_model(0.73, -0.4);
    for (int trial = 0; trial < 20; ++trial) {
        Vec u(1), v(1), zero = Vec::Zero(1);
        u << g(gen);
        v << g(gen);
        double a = g(gen), b = g(gen);
        Vec lhs = model.predict_step(a * u + b * v);
        Vec rhs = a * model.predict_step(u) + b * model.predict_step(v) -
                  (a + b - 1.0) * model.predict_step(zero);
        CHECK(lhs[0] == doctest::Approx(rhs[0]).epsilon(1e-12));
    }
}

TEST_CASE("scalar halving model forecasts 8 -> 4, 2, 1") {
    auto model = scalar_model(0.5, 0.0);
    Vec s0(1);
    s0 << 8.0;
    auto path = model.forecast(s0, 3);
    CHECK(path[0][0] == doctest::Approx(4.0));
    CHECK(path[1][0] == doctest::Approx(2.0));
    CHECK(path[2][0] == doctest::Approx(1.0));
}

TEST_CASE("contractive model with zero intercept decays geometrically") {
    auto model = scalar_model(0.8, 0.0);
    Vec s0(1);
    s0 << 10.0;
    auto path = model.forecast(s0, 20);
    for (std::size_t i = 1; i < path.size(); ++i)
        CHECK(std::abs(path[i][0]) == doctest::Approx(0.8 * std::abs(path[i - 1][0])));
    CHECK(std::abs(path.back()[0]) < 0.2);
}

TEST_CASE("divergent model raises a numeric error") {
    auto model = scalar_model(1e200, 0.0);
    Vec s0(1);
    s0 << 1.0;
    CHECK_THROWS_AS(model.forecast(s0, 5), NumericError);
}

TEST_CASE("joint_log_density of a standard normal at its mode") {
    auto schema = vars({"x"});
    LinearGaussianCpd cpd;
    cpd.child = 0;
    cpd.coefficients = Vec(0);
    cpd.residual_variance = 1.0;
    auto model = make_model(schema, DbnStructure(1), {cpd});
    Vec s0 = Vec::Zero(1), s1 = Vec::Zero(1);
    CHECK(model.joint_log_density(s0, s1) == doctest::Approx(-0.5 * std::log(2.0 * M_PI)));
}

TEST_CASE("1-D density integrates to 1 over +-8 sigma") {
    auto model = scalar_model(0.6, 0.5, 1.7);
    Vec s0(1);
    s0 << 2.0;
    const double mu = 0.6 * 2.0 + 0.5;
    const double sigma = std::sqrt(1.7);
    const int steps = 20000;
    const double lo = mu - 8 * sigma, hi = mu + 8 * sigma;
    const double h = (hi - lo) / steps;
    double integral = 0.0;
    for (int i = 0; i <= steps; ++i) {
        Vec s1(1);
        s1 << lo + i * h;
        double w = (i == 0 || i == steps) ? 0.5 : 1.0;
        integral += w * std::exp(model.joint_log_density(s0, s1));
    }
    integral *= h;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("2-variable density matches the assembled bivariate Gaussian") {
    // x1' ~ N(a1 + b1 s0, v1); x2' | x1' ~ N(a2 + c x1', v2)
    auto schema = vars({"x1", "x2"});
    DbnStructure st(2);
    st.add_arc({0, 0}, 0);
    st.add_arc({0, 1}, 1);
    std::vector<LinearGaussianCpd> cpds(2);
    cpds[0].child = 0;
    cpds[0].parents = {{0, 0}};
    cpds[0].intercept = 0.3;
    cpds[0].coefficients = Vec::Constant(1, 0.7);
    cpds[0].residual_variance = 0.9;
    cpds[1].child = 1;
    cpds[1].parents = {{0, 1}};
    cpds[1].intercept = -0.2;
    cpds[1].coefficients = Vec::Constant(1, 1.4);
    cpds[1].residual_variance = 0.5;
    auto model = make_model(schema, std::move(st), std::move(cpds));

    Vec s0(2);
    s0 << 1.1, -0.4;
    const double m1 = 0.3 + 0.7 * 1.1;
    const double m2 = -0.2 + 1.4 * m1;
    Mat cov(2, 2);
    cov << 0.9, 1.4 * 0.9, 1.4 * 0.9, 0.5 + 1.4 * 1.4 * 0.9;
    Mat prec = cov.inverse();
    const double logdet = std::log(cov.determinant());

    std::mt19937_64 gen(4);
    std::normal_distribution<double> g;
    for (int i = 0; i < 100; ++i) {
        Vec s1(2);
        s1 << m1 + g(gen), m2 + g(gen);
        Vec d(2);
        d << s1[0] - m1, s1[1] - m2;
        double expected = -std::log(2.0 * M_PI) - 0.5 * logdet - 0.5 * d.dot(prec * d);
        CHECK(model.joint_log_density(s0, s1) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("neighborhood of an isolated node is a single node") {
    auto schema = vars({"x", "y"});
    DbnStructure st(2);
    st.add_arc({1, 0}, 1);
    std::vector<LinearGaussianCpd> cpds(2);
    cpds[0].child = 0;
    cpds[0].coefficients = Vec(0);
    cpds[0].residual_variance = 1.0;
    cpds[1].child = 1;
    cpds[1].parents = {{1, 0}};
    cpds[1].coefficients = Vec::Constant(1, 0.5);
    cpds[1].residual_variance = 1.0;
    auto model = make_model(schema, std::move(st), std::move(cpds));
    auto g = model.neighborhood("x");
    CHECK(g.nodes == std::vector<std::string>{"x_t1"});
    CHECK(g.arcs.empty());
    CHECK_THROWS_AS(model.neighborhood("bogus"), DataError);
}

TEST_CASE("neighborhood of the middle of a chain a->b->c") {
    auto schema = vars({"a", "b", "c"});
    DbnStructure st(3);
    st.add_arc({0, 1}, 1);  // a_t1 -> b_t1
    st.add_arc({1, 1}, 2);  // b_t1 -> c_t1
    std::vector<LinearGaussianCpd> cpds(3);
    for (int i = 0; i < 3; ++i) {
        cpds[i].child = i;
        cpds[i].parents = st.parents_of(i);
        cpds[i].coefficients = Vec::Constant(static_cast<long>(cpds[i].parents.size()), 0.5);
        cpds[i].residual_variance = 1.0;
    }
    auto model = make_model(schema, std::move(st), std::move(cpds));
    auto g = model.neighborhood("b");
    CHECK(g.nodes == std::vector<std::string>{"a_t1", "b_t1", "c_t1"});
    REQUIRE(g.arcs.size() == 2);
    CHECK(g.arcs[0] == std::pair<std::string, std::string>{"a_t1", "b_t1"});
    CHECK(g.arcs[1] == std::pair<std::string, std::string>{"b_t1", "c_t1"});
}

TEST_CASE("dot export lists isolated nodes and arcs deterministically") {
    auto schema = vars({"a", "b"});
    DbnStructure st(2);
    CHECK(export_dot(st, schema).find("a_t0;") != std::string::npos);

    st.add_arc({0, 0}, 1);
    auto dot = export_dot(st, schema);
    CHECK(dot.find("a_t0 -> b_t1;") != std::string::npos);
    CHECK(dot == export_dot(st, schema));
}

TEST_CASE("model json round trip preserves predictions") {
    std::mt19937_64 gen(55);
    std::normal_distribution<double> g, eps(0.0, 0.2);
    Mat rows(400, 4);
    for (long r = 0; r < 400; ++r) {
        double a = g(gen), b = g(gen);
        rows(r, 0) = a;
        rows(r, 1) = b;
        rows(r, 2) = 0.6 * a + eps(gen);
        rows(r, 3) = 0.5 * b - 0.3 * a + eps(gen);
    }
    auto schema = vars({"u", "v"});
    auto structure = learn_structure(dataset(rows), 3, 1, 1);
    auto model = fit_parameters(structure, schema, dataset(rows));
    auto back = DbnModel::from_json(model.to_json());
    Vec s0(2);
    s0 << 0.4, -1.2;
    CHECK(back.predict_step(s0) == model.predict_step(s0));
    CHECK(back.joint_log_density(s0, s0) == model.joint_log_density(s0, s0));
}
