#pragma once

// Standardization and low-dimensional embeddings.
//
// pca          projection onto the top principal axes of the sample covariance
// mds          classical (Torgerson) metric MDS; for Euclidean input this is
//              the same configuration as pca up to sign
// smacof_mds   metric MDS by stress majorization, which preserves pairwise
//              distances rather than variance and therefore reacts
//              differently to correlated features

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rng.hpp"
#include "types.hpp"

namespace clusterpower {

enum class Reducer { None, PCA, MDS, ClassicalMDS };

inline constexpr std::string_view reducer_name(Reducer r) {
    switch (r) {
        case Reducer::None: return "none";
        case Reducer::PCA: return "pca";
        case Reducer::MDS: return "mds";
        case Reducer::ClassicalMDS: return "cmds";
    }
    return "none";
}

struct Embedding {
    Matrix coords;
    Reducer method = Reducer::None;
    // Share of total variance per eigenvalue (PCA only), non-increasing.
    std::vector<double> explained;
    std::vector<double> eigenvalues;
    Warnings warnings;
};

inline constexpr double kEigenRelativeTolerance = 1e-10;

// Column-wise z-scores with the (N-1) sample SD.  Constant columns are
// centred to zero and reported.
inline Matrix standardize(const Matrix& data, Warnings* warnings = nullptr) {
    if (data.rows() < 2) throw std::invalid_argument("standardize needs at least two observations");
    Matrix out = data.rowwise() - data.colwise().mean();
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double sd = std::sqrt(out.col(j).squaredNorm() / static_cast<double>(out.rows() - 1));
        const double scale = data.col(j).cwiseAbs().maxCoeff();
        if (sd <= 1e-12 * std::max(1.0, scale)) {
            out.col(j).setZero();
            warn(warnings, "column " + std::to_string(j) + " is constant; left at zero");
        } else {
            out.col(j) /= sd;
        }
    }
    return out;
}

namespace detail {

// Flip so the largest-magnitude entry of `axis` is positive (first one wins).
inline double sign_of_largest(const Vector& axis) {
    Eigen::Index idx = 0;
    axis.cwiseAbs().maxCoeff(&idx);
    return axis(idx) < 0.0 ? -1.0 : 1.0;
}

struct SymmetricEigen {
    Vector values;   // descending, tiny values zeroed
    Matrix vectors;  // matching columns
};

inline SymmetricEigen descending_eigen(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigen-decomposition failed");
    SymmetricEigen out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    const double largest = out.values.size() > 0 ? std::max(out.values(0), 0.0) : 0.0;
    for (Eigen::Index i = 0; i < out.values.size(); ++i)
        if (out.values(i) < kEigenRelativeTolerance * largest) out.values(i) = 0.0;
    return out;
}

inline Matrix squared_distances(const Matrix& data) {
    const Vector norms = data.rowwise().squaredNorm();
    Matrix d2 = -2.0 * data * data.transpose();
    d2.colwise() += norms;
    d2.rowwise() += norms.transpose();
    d2 = d2.cwiseMax(0.0);
    d2.diagonal().setZero();
    return d2;
}

}  // namespace detail

inline Embedding pca(const Matrix& data, int d) {
    const auto n = data.rows();
    const auto p = data.cols();
    if (d < 1 || d > std::min(n, p)) throw std::domain_error("pca target dimension must be in [1, min(N, p)]");
    if (n < 2) throw std::domain_error("pca needs at least two observations");

    const Matrix centered = data.rowwise() - data.colwise().mean();
    const double denom = static_cast<double>(n - 1);

    // Decompose whichever of the covariance (p x p) and Gram (N x N)
    // matrices is smaller; they share their non-zero spectrum.
    Matrix loadings(p, d);
    Vector values;
    if (p <= n) {
        auto eig = detail::descending_eigen(centered.transpose() * centered / denom);
        values = eig.values;
        loadings = eig.vectors.leftCols(d);
    } else {
        auto eig = detail::descending_eigen(centered * centered.transpose() / denom);
        values = eig.values.head(std::min(n, p));
        for (int c = 0; c < d; ++c) {
            Vector axis = centered.transpose() * eig.vectors.col(c);
            const double norm = axis.norm();
            if (norm > 0.0) axis /= norm;
            loadings.col(c) = axis;
        }
    }
    for (int c = 0; c < d; ++c) loadings.col(c) *= detail::sign_of_largest(loadings.col(c));

    Embedding out;
    out.method = Reducer::PCA;
    out.coords = centered * loadings;
    const double total = values.sum();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        out.eigenvalues.push_back(values(i));
        out.explained.push_back(total > 0.0 ? values(i) / total : 0.0);
    }
    return out;
}

// Classical (Torgerson) MDS on Euclidean distances.
inline Embedding mds(const Matrix& data, int d) {
    const auto n = data.rows();
    if (d < 1 || d > n - 1) throw std::domain_error("mds target dimension must be in [1, N-1]");

    // Double-centred squared distances: B = -1/2 J D2 J.
    Matrix b = -0.5 * detail::squared_distances(data);
    const Vector row_mean = b.rowwise().mean();
    const double grand = row_mean.mean();
    b.colwise() -= row_mean;
    b.rowwise() -= row_mean.transpose();
    b.array() += grand;

    auto eig = detail::descending_eigen(b);
    Embedding out;
    out.method = Reducer::ClassicalMDS;
    out.coords = Matrix::Zero(n, d);
    int zero_filled = 0;
    for (int c = 0; c < d; ++c) {
        if (eig.values(c) <= 0.0) {
            ++zero_filled;
            continue;
        }
        Vector coord = eig.vectors.col(c) * std::sqrt(eig.values(c));
        coord *= detail::sign_of_largest(coord);
        out.coords.col(c) = coord;
    }
    if (zero_filled > 0)
        warn(&out.warnings, std::to_string(zero_filled) + " MDS coordinate(s) beyond the data rank set to zero");
    return out;
}

struct SmacofOptions {
    int max_iter = 300;
    double tol = 1e-5;  // relative stress decrease
};

// Metric MDS by SMACOF (Guttman transform iterations) from a random start.
inline Embedding smacof_mds(const Matrix& data, int d, RngStream& rng, SmacofOptions options = {}) {
    const auto n = data.rows();
    if (d < 1 || d > n - 1) throw std::domain_error("mds target dimension must be in [1, N-1]");

    const Matrix target = detail::squared_distances(data).cwiseSqrt();
    Matrix x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) x(i, c) = rng.uniform();

    auto stress_of = [&](const Matrix& dist) { return 0.5 * (dist - target).squaredNorm(); };

    Matrix dist = detail::squared_distances(x).cwiseSqrt();
    double stress = stress_of(dist);
    Embedding out;
    out.method = Reducer::MDS;
    for (int iter = 0; iter < options.max_iter; ++iter) {
        Matrix bmat(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < n; ++i)
                bmat(i, j) = (i != j && dist(i, j) > 0.0) ? -target(i, j) / dist(i, j) : 0.0;
        }
        bmat.diagonal() = -bmat.rowwise().sum();
        x = bmat * x / static_cast<double>(n);
        dist = detail::squared_distances(x).cwiseSqrt();
        const double next = stress_of(dist);
        const bool done = stress - next < options.tol * stress;
        stress = next;
        if (done) break;
    }

    x = x.rowwise() - x.colwise().mean();
    for (int c = 0; c < d; ++c) x.col(c) *= detail::sign_of_largest(x.col(c));
    out.coords = std::move(x);
    return out;
}

// Dispatches to the configured reducer; None returns the data unchanged.
inline Embedding reduce(const Matrix& data, Reducer reducer, int d, RngStream& rng) {
    switch (reducer) {
        case Reducer::PCA: return pca(data, d);
        case Reducer::MDS: return smacof_mds(data, d, rng);
        case Reducer::ClassicalMDS: return mds(data, d);
        case Reducer::None: break;
    }
    Embedding out;
    out.coords = data;
    out.method = Reducer::None;
    return out;
}

}  // namespace clusterpower
