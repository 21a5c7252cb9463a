#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "../types.hpp"

namespace clusterpower {

struct FitConfig {
    int k = 2;
    int max_iter = 300;
    double tol = 1e-6;  // relative objective change
    int restarts = 10;
    double fuzzifier_m = 2.0;
    double covariance_floor = 1e-6;
    std::uint64_t seed = 0;

    void validate() const {
        if (k < 1) throw std::invalid_argument("k must be at least 1");
        if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
        if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
        if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
        if (!(fuzzifier_m > 1.0)) throw std::invalid_argument("fuzzifier m must exceed 1");
        if (!(covariance_floor > 0.0)) throw std::invalid_argument("covariance floor must be positive");
    }
};

// Method-specific parameters.  `centers` holds centroids, component means,
// or (for latent class analysis) per-class item probabilities, one row per
// cluster.
struct ClusterParameters {
    Matrix centers;
    std::vector<Matrix> covariances;
    Vector weights;
};

struct ClusterSolution {
    Labels hard_labels;
    std::optional<Matrix> soft_memberships;  // N x k, rows sum to 1
    int k = 0;
    ClusterParameters params;
    // WCSS for k-means and Ward, the fuzzy objective for c-means, the
    // log-likelihood for mixture models.
    double objective = 0.0;
    std::optional<double> log_likelihood;
    int n_params = 0;
    bool converged = false;
    int iterations = 0;
    // Objective after every iteration of the selected run.
    std::vector<double> objective_trace;
    Warnings warnings;

    int non_empty_clusters() const {
        std::vector<bool> seen(static_cast<std::size_t>(k), false);
        for (int l : hard_labels) seen[static_cast<std::size_t>(l)] = true;
        int count = 0;
        for (bool s : seen) count += s ? 1 : 0;
        return count;
    }
};

// Row-wise argmax; ties go to the lowest column.
inline Labels harden(const Matrix& memberships) {
    Labels labels(static_cast<std::size_t>(memberships.rows()));
    for (Eigen::Index i = 0; i < memberships.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < memberships.cols(); ++c)
            if (memberships(i, c) > memberships(i, best)) best = c;
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

// Within-cluster sum of squared distances to the cluster means.
inline double within_cluster_ss(const Matrix& data, const Labels& labels, int k) {
    Matrix sums = Matrix::Zero(k, data.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        sums.row(labels[i]) += data.row(i);
        ++counts[static_cast<std::size_t>(labels[i])];
    }
    double wcss = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const int c = labels[i];
        wcss += (data.row(i) - sums.row(c) / counts[static_cast<std::size_t>(c)]).squaredNorm();
    }
    return wcss;
}

inline Matrix cluster_means(const Matrix& data, const Labels& labels, int k) {
    Matrix sums = Matrix::Zero(k, data.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        sums.row(labels[i]) += data.row(i);
        ++counts[static_cast<std::size_t>(labels[i])];
    }
    for (int c = 0; c < k; ++c)
        if (counts[static_cast<std::size_t>(c)] > 0) sums.row(c) /= counts[static_cast<std::size_t>(c)];
    return sums;
}

namespace detail {

inline void require_enough_points(const Matrix& data, int k) {
    if (data.rows() < k) throw std::invalid_argument("more clusters than points");
    if (data.cols() < 1) throw std::invalid_argument("data has no features");
}

// Squared Euclidean distances from every row of `data` to every row of `centers`.
inline Matrix squared_distances_to(const Matrix& data, const Matrix& centers) {
    Matrix d2 = -2.0 * data * centers.transpose();
    d2.colwise() += data.rowwise().squaredNorm();
    d2.rowwise() += centers.rowwise().squaredNorm().transpose();
    return d2.cwiseMax(0.0);
}

inline bool relative_change_below(double previous, double current, double tol) {
    return std::abs(current - previous) <= tol * std::max(std::abs(previous), 1e-300);
}

}  // namespace detail

}  // namespace clusterpower
