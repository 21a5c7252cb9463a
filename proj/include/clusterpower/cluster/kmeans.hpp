#pragma once

// Lloyd's k-means from k-means++ seeds, best of several restarts by WCSS.

#include <limits>
#include <vector>

#include "../rng.hpp"
#include "solution.hpp"

namespace clusterpower {

namespace detail {

inline Matrix kmeans_plus_plus(const Matrix& data, int k, RngStream& rng) {
    const auto n = data.rows();
    Matrix centers(k, data.cols());
    centers.row(0) = data.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
    Vector closest = (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = closest.sum();
        Eigen::Index pick = 0;
        if (total <= 0.0) {
            pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        } else {
            double target = rng.uniform() * total;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                target -= closest(i);
                if (target < 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centers.row(c) = data.row(pick);
        closest = closest.cwiseMin((data.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    return centers;
}

// Nearest center per row (ties to the lowest index); returns the WCSS.
inline double assign_nearest(const Matrix& data, const Matrix& centers, Labels& labels) {
    const Matrix d2 = squared_distances_to(data, centers);
    double wcss = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < centers.rows(); ++c)
            if (d2(i, c) < d2(i, best)) best = c;
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        wcss += d2(i, best);
    }
    return wcss;
}

struct LloydRun {
    Labels labels;
    Matrix centers;
    double wcss = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> trace;
};

inline LloydRun lloyd(const Matrix& data, Matrix centers, const FitConfig& cfg) {
    const auto n = data.rows();
    const int k = static_cast<int>(centers.rows());
    LloydRun run;
    run.labels.assign(static_cast<std::size_t>(n), 0);
    Labels previous;
    double prev_wcss = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        assign_nearest(data, centers, run.labels);

        // Reseed empty clusters with the point farthest from its own center.
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int l : run.labels) ++counts[static_cast<std::size_t>(l)];
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            Eigen::Index far = -1;
            double far_d2 = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int own = run.labels[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(own)] <= 1) continue;
                const double d2 = (data.row(i) - centers.row(own)).squaredNorm();
                if (d2 > far_d2) {
                    far_d2 = d2;
                    far = i;
                }
            }
            if (far < 0) break;
            --counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(far)])];
            run.labels[static_cast<std::size_t>(far)] = c;
            counts[static_cast<std::size_t>(c)] = 1;
        }

        centers = cluster_means(data, run.labels, k);
        run.wcss = within_cluster_ss(data, run.labels, k);
        run.trace.push_back(run.wcss);
        run.iterations = iter + 1;

        if (run.labels == previous || relative_change_below(prev_wcss, run.wcss, cfg.tol)) {
            run.converged = true;
            break;
        }
        previous = run.labels;
        prev_wcss = run.wcss;
    }
    run.centers = std::move(centers);
    return run;
}

}  // namespace detail

inline ClusterSolution kmeans(const Matrix& data, const FitConfig& cfg) {
    cfg.validate();
    detail::require_enough_points(data, cfg.k);

    RngStream rng(cfg.seed);
    detail::LloydRun best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
        RngStream stream = rng.split(static_cast<std::uint64_t>(r));
        auto run = detail::lloyd(data, detail::kmeans_plus_plus(data, cfg.k, stream), cfg);
        if (run.wcss < best.wcss) best = std::move(run);
    }

    ClusterSolution sol;
    sol.k = cfg.k;
    sol.hard_labels = std::move(best.labels);
    sol.params.centers = std::move(best.centers);
    sol.objective = best.wcss;
    sol.converged = best.converged;
    sol.iterations = best.iterations;
    sol.objective_trace = std::move(best.trace);
    return sol;
}

}  // namespace clusterpower
