#include <cmath>
#include <numeric>

#include <catch2/catch_amalgamated.hpp>
#include <clusterpower/datagen.hpp>
#include <clusterpower/reduce.hpp>

#include "oracles.hpp"

using namespace clusterpower;
using Catch::Approx;

namespace {
Matrix random_matrix(int n, int p, std::uint64_t seed) {
    RngStream rng(seed);
    Matrix m(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) m(i, j) = rng.normal() * (1.0 + j);
    return m;
}
}  // namespace

TEST_CASE("standardize", "[reduce]") {
    Matrix x(3, 2);
    x << 1, 5, 2, 5, 3, 5;
    Warnings w;
    const Matrix z = standardize(x, &w);
    CHECK(z.col(0).mean() == Approx(0.0).margin(1e-15));
    CHECK(std::sqrt(z.col(0).squaredNorm() / 2.0) == Approx(1.0));
    CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(w.size() == 1);

    const Matrix y = standardize(random_matrix(30, 4, 1));
    CHECK((standardize(y) - y).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("pca on collinear data", "[reduce]") {
    Matrix x(5, 2);
    for (int i = 0; i < 5; ++i) x.row(i) << i, 2.0 * i + 1.0;
    const auto e = pca(x, 1);
    REQUIRE(e.explained.size() == 2);
    CHECK(e.explained[0] == Approx(1.0));
    CHECK(e.explained[1] == Approx(0.0).margin(1e-12));
    CHECK_THROWS_AS(pca(x, 3), std::domain_error);
}

TEST_CASE("full-rank pca is a rigid rotation", "[reduce]") {
    const Matrix x = random_matrix(12, 4, 2);
    const auto e = pca(x, 4);
    CHECK((oracle::distance_matrix(e.coords) - oracle::distance_matrix(x)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("pca keeps total variance and contracts distances", "[reduce]") {
    for (auto [n, p] : {std::pair{40, 6}, std::pair{5, 9}}) {
        const Matrix x = random_matrix(n, p, 3 + n);
        const auto e = pca(x, 2);
        const Matrix centered = x.rowwise() - x.colwise().mean();
        const double trace = centered.squaredNorm() / (n - 1);
        CHECK(std::accumulate(e.eigenvalues.begin(), e.eigenvalues.end(), 0.0) == Approx(trace).epsilon(1e-9));
        const Matrix dx = oracle::distance_matrix(x), de = oracle::distance_matrix(e.coords);
        CHECK((de.array() <= dx.array() + 1e-12).all());
    }
}

TEST_CASE("pca signs are deterministic", "[reduce]") {
    const Matrix x = random_matrix(25, 5, 4);
    const auto a = pca(x, 2), b = pca(x, 2);
    CHECK(a.coords == b.coords);
    // Flipping the data keeps the same sign convention on loadings, so the
    // scores flip with it.
    const auto c = pca(-x, 2);
    CHECK((c.coords + a.coords).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("classical mds matches pca distances", "[reduce]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix x = random_matrix(15 + static_cast<int>(seed), 6, seed);
        for (int d : {1, 2, 3}) {
            const Matrix dp = oracle::distance_matrix(pca(x, d).coords);
            const Matrix dm = oracle::distance_matrix(mds(x, d).coords);
            CHECK((dp - dm).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("classical mds of an equilateral triangle", "[reduce]") {
    Matrix x(3, 2);
    x << 0, 0, 1, 0, 0.5, std::sqrt(3.0) / 2;
    const Matrix d = oracle::distance_matrix(mds(x, 2).coords);
    CHECK(d(0, 1) == Approx(1.0));
    CHECK(d(0, 2) == Approx(1.0));
    CHECK(d(1, 2) == Approx(1.0));
}

TEST_CASE("classical mds beyond the rank zero-fills", "[reduce]") {
    Matrix x(4, 1);
    x << 0, 1, 2, 4;
    const auto e = mds(x, 2);
    CHECK(e.coords.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK_FALSE(e.warnings.empty());
    CHECK_THROWS(mds(x, 4));
}

TEST_CASE("smacof preserves well-separated structure", "[reduce]") {
    DatasetSpec spec;
    spec.n_per_group = {40, 40};
    spec.p = 5;
    spec.effects = EffectVector({4, 4, 4, 4, 4});
    spec.seed = 1;
    const auto ds = generate(spec);
    RngStream rng(2);
    const auto e = smacof_mds(ds.data, 2, rng);
    CHECK(e.coords.rows() == 80);
    const double before = sample_centroid_distance(ds.data, ds.labels);
    const double after = sample_centroid_distance(e.coords, ds.labels);
    CHECK(after == Approx(before).epsilon(0.15));
    // Same stream, same embedding.
    RngStream again(2);
    CHECK(smacof_mds(ds.data, 2, again).coords == e.coords);
}

TEST_CASE("pca centroid distance of separated spherical groups", "[reduce]") {
    DatasetSpec spec;
    spec.n_per_group = {500, 500};
    spec.p = 10;
    spec.effects = EffectVector({3, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    spec.seed = 3;
    const auto ds = generate(spec);
    const double before = sample_centroid_distance(ds.data, ds.labels);
    const double after = sample_centroid_distance(pca(ds.data, 2).coords, ds.labels);
    CHECK(after == Approx(before).epsilon(0.05));
}

TEST_CASE("reduce dispatches on the reducer", "[reduce]") {
    const Matrix x = random_matrix(20, 4, 5);
    RngStream rng(1);
    CHECK(reduce(x, Reducer::None, 2, rng).coords == x);
    CHECK(reduce(x, Reducer::PCA, 2, rng).coords == pca(x, 2).coords);
    CHECK(reduce(x, Reducer::ClassicalMDS, 2, rng).coords == mds(x, 2).coords);
    CHECK(reduce(x, Reducer::MDS, 2, rng).method == Reducer::MDS);
}
