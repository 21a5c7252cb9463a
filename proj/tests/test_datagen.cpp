#include <cmath>
#include <numeric>

#include <catch2/catch_amalgamated.hpp>
#include <clusterpower/datagen.hpp>

using namespace clusterpower;
using Catch::Approx;

TEST_CASE("rng streams are reproducible and split independently", "[datagen]") {
    RngStream a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
    RngStream root(7);
    auto s1 = root.split(1), s1b = root.split(1), s2 = root.split(2);
    CHECK(s1() == s1b());
    CHECK(s1() != s2());
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
}

TEST_CASE("drawn effects follow the exponential mean", "[datagen]") {
    RngStream rng(1);
    const auto v = draw_effect_vector(1'000'000, 1.5, rng);
    const double mean = std::accumulate(v.values().begin(), v.values().end(), 0.0) / v.size();
    CHECK(mean == Approx(2.0 / 3.0).margin(0.003));

    RngStream small(3);
    const auto four = draw_effect_vector(4, 0.75, small);
    REQUIRE(four.size() == 4);
    for (double d : four.values()) CHECK(d >= 0.0);

    RngStream x(9), y(9);
    const auto vx = draw_effect_vector(20, 3.0, x);
    const auto vy = draw_effect_vector(20, 3.0, y);
    CHECK(std::equal(vx.values().begin(), vx.values().end(), vy.values().begin()));
    CHECK_THROWS(draw_effect_vector(0, 1.0, x));
    CHECK_THROWS(draw_effect_vector(3, 0.0, x));
}

TEST_CASE("dataset shape and labels", "[datagen]") {
    DatasetSpec spec;
    spec.n_per_group = {30, 30};
    spec.p = 36;
    spec.effects = 1.5;
    spec.seed = 5;
    const auto ds = generate(spec);
    CHECK(ds.data.rows() == 60);
    CHECK(ds.data.cols() == 36);
    CHECK(std::count(ds.labels.begin(), ds.labels.end(), 0) == 30);
    CHECK(std::count(ds.labels.begin(), ds.labels.end(), 1) == 30);
    CHECK(ds.realized_delta == Approx(centroid_distance(ds.effect_vector)));
}

TEST_CASE("identical spec and seed give bit-identical data", "[datagen]") {
    DatasetSpec spec;
    spec.p = 8;
    spec.effects = 1.0;
    spec.correlation = RandomCorrelation{0.4};
    spec.seed = 11;
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK(a.data == b.data);
    CHECK(a.labels == b.labels);
    spec.seed = 12;
    CHECK(generate(spec).data != a.data);
}

TEST_CASE("invalid specs are rejected", "[datagen]") {
    DatasetSpec spec;
    spec.p = 0;
    CHECK_THROWS(generate(spec));
    spec.p = 3;
    spec.n_per_group = {};
    CHECK_THROWS(generate(spec));
    spec.n_per_group = {5, 0};
    CHECK_THROWS(generate(spec));
    spec.n_per_group = {5, 5};
    spec.effects = EffectVector({1.0, 2.0});
    CHECK_THROWS(generate(spec));
    spec.effects = -1.0;
    CHECK_THROWS(generate(spec));
    spec.effects = 1.0;
    spec.feature_kind = FeatureKind::Binary;
    spec.correlation = RandomCorrelation{0.3};
    CHECK_THROWS(generate(spec));
}

TEST_CASE("sample centroid distance converges to the effect distance", "[datagen]") {
    DatasetSpec spec;
    spec.n_per_group = {10000, 10000};
    spec.p = 2;
    spec.effects = EffectVector({3.0, 4.0});
    spec.seed = 2;
    const auto ds = generate(spec);
    const double d = sample_centroid_distance(ds.data, ds.labels);
    CHECK(d == Approx(5.0).margin(0.1));
    // Standard error of each coordinate difference is sqrt(2 / 10000).
    CHECK(std::abs(d - 5.0) < 3.0 * std::sqrt(2.0 / 10000));
}

TEST_CASE("null effects give matching group means", "[datagen]") {
    DatasetSpec spec;
    spec.p = 3;
    spec.effects = EffectVector::zeros(3);
    double previous = INFINITY;
    for (int n : {100, 10000, 200000}) {
        spec.n_per_group = {n, n};
        spec.seed = 4;
        const auto ds = generate(spec);
        const double d = sample_centroid_distance(ds.data, ds.labels);
        CHECK(d < 5.0 * std::sqrt(2.0 * 3 / n));
        previous = std::min(previous, d);
    }
    CHECK(previous < 0.02);
}

TEST_CASE("random correlation matrices", "[datagen]") {
    RngStream rng(3);
    CHECK(random_correlation(5, 0.0, rng) == Matrix::Identity(5, 5));
    for (double s : {0.1, 0.5, 0.9}) {
        const Matrix c = random_correlation(20, s, rng);
        CHECK((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0);
        for (int i = 0; i < 20; ++i) CHECK(c(i, i) == 1.0);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
    CHECK_THROWS(random_correlation(3, 1.0, rng));
    CHECK_THROWS(random_correlation(3, -0.1, rng));
}

namespace {
double mean_abs_off_diagonal(int p, double strength, int draws) {
    RngStream rng(17);
    double total = 0.0;
    for (int r = 0; r < draws; ++r) {
        const Matrix c = random_correlation(p, strength, rng);
        total += (c.cwiseAbs().sum() - p) / (p * (p - 1.0));
    }
    return total / draws;
}
}  // namespace

TEST_CASE("correlation grows with strength", "[datagen]") {
    const double mid = mean_abs_off_diagonal(3, 0.5, 400);
    CHECK(mid > 0.2);
    CHECK(mid < 0.8);
    double previous = 0.0;
    for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double m = mean_abs_off_diagonal(30, s, 20);
        CHECK(m > previous);
        previous = m;
    }
}

TEST_CASE("correlated noise keeps per-feature effects", "[datagen]") {
    DatasetSpec spec;
    spec.n_per_group = {20000, 20000};
    spec.p = 3;
    spec.effects = EffectVector({1.0, 0.5, 0.0});
    spec.correlation = RandomCorrelation{0.6};
    spec.seed = 8;
    const auto ds = generate(spec);
    for (int j = 0; j < 3; ++j) {
        double m0 = 0.0, m1 = 0.0;
        for (Eigen::Index i = 0; i < ds.data.rows(); ++i) (ds.labels[i] == 0 ? m0 : m1) += ds.data(i, j);
        CHECK((m1 - m0) / 20000 == Approx(ds.effect_vector[j]).margin(0.05));
    }
}

TEST_CASE("binary features use the probit mapping", "[datagen]") {
    CHECK(standard_normal_cdf(-0.5) == Approx(0.3085).margin(1e-4));
    CHECK(standard_normal_cdf(0.5) == Approx(0.6915).margin(1e-4));
    CHECK(standard_normal_cdf(0.0) == 0.5);

    DatasetSpec spec;
    spec.n_per_group = {40000, 40000};
    spec.p = 2;
    spec.effects = EffectVector({1.0, 0.0});
    spec.feature_kind = FeatureKind::Binary;
    spec.seed = 6;
    const auto ds = generate(spec);
    CHECK(ds.data.unaryExpr([](double v) { return (v == 0.0 || v == 1.0) ? 0.0 : 1.0; }).sum() == 0.0);
    Eigen::Matrix2d freq = Eigen::Matrix2d::Zero();
    for (Eigen::Index i = 0; i < ds.data.rows(); ++i)
        for (int j = 0; j < 2; ++j) freq(ds.labels[i], j) += ds.data(i, j) / 40000;
    const double se = std::sqrt(0.25 / 40000);
    CHECK(std::abs(freq(0, 0) - standard_normal_cdf(-0.5)) < 4 * se);
    CHECK(std::abs(freq(1, 0) - standard_normal_cdf(0.5)) < 4 * se);
    CHECK(std::abs(freq(0, 1) - 0.5) < 4 * se);
    CHECK(std::abs(freq(1, 1) - 0.5) < 4 * se);
}

TEST_CASE("three groups sit one effect apart", "[datagen]") {
    DatasetSpec spec;
    spec.n_per_group = {20000, 20000, 20000};
    spec.p = 1;
    spec.effects = EffectVector({2.0});
    spec.seed = 1;
    const auto ds = generate(spec);
    CHECK(ds.groups() == 3);
    CHECK(sample_centroid_distance(ds.data, ds.labels, 0, 1) == Approx(2.0).margin(0.05));
    CHECK(sample_centroid_distance(ds.data, ds.labels, 0, 2) == Approx(4.0).margin(0.05));
}
