#pragma once

// Fuzzy c-means (Bezdek): alternately
//   u_ic = 1 / sum_l (d_ic / d_il)^(2 / (m - 1))
//   v_c  = sum_i u_ic^m x_i / sum_i u_ic^m
// minimizing J = sum_i sum_c u_ic^m d_ic^2.

#include <cmath>
#include <limits>
#include <vector>

#include "../rng.hpp"
#include "kmeans.hpp"
#include "solution.hpp"

namespace clusterpower {

// Membership matrix for fixed centers.  A point coinciding with a center
// belongs to it entirely (the first such center if several coincide).
inline Matrix fuzzy_memberships(const Matrix& data, const Matrix& centers, double m) {
    if (!(m > 1.0)) throw std::invalid_argument("fuzzifier m must exceed 1");
    const Matrix d2 = detail::squared_distances_to(data, centers);
    const double exponent = 1.0 / (m - 1.0);
    const auto k = centers.rows();
    Matrix u(data.rows(), k);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        Eigen::Index coincident = -1;
        for (Eigen::Index c = 0; c < k; ++c) {
            if (d2(i, c) <= 1e-300) {
                coincident = c;
                break;
            }
        }
        if (coincident >= 0) {
            u.row(i).setZero();
            u(i, coincident) = 1.0;
            continue;
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            double denom = 0.0;
            for (Eigen::Index l = 0; l < k; ++l) denom += std::pow(d2(i, c) / d2(i, l), exponent);
            u(i, c) = 1.0 / denom;
        }
        u.row(i) /= u.row(i).sum();
    }
    return u;
}

inline double fuzzy_objective(const Matrix& data, const Matrix& centers, const Matrix& u, double m) {
    const Matrix d2 = detail::squared_distances_to(data, centers);
    return (u.array().pow(m) * d2.array()).sum();
}

namespace detail {

struct FuzzyRun {
    Matrix u;
    Matrix centers;
    double objective = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    std::vector<double> trace;
};

inline FuzzyRun cmeans_run(const Matrix& data, Matrix centers, const FitConfig& cfg) {
    FuzzyRun run;
    const double m = cfg.fuzzifier_m;
    double prev = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        run.u = fuzzy_memberships(data, centers, m);
        const Matrix w = run.u.array().pow(m);
        const Vector mass = w.colwise().sum().transpose();
        Matrix next = w.transpose() * data;
        for (Eigen::Index c = 0; c < next.rows(); ++c)
            if (mass(c) > 0.0) next.row(c) /= mass(c);
            else next.row(c) = centers.row(c);
        centers = std::move(next);
        run.objective = fuzzy_objective(data, centers, run.u, m);
        run.trace.push_back(run.objective);
        run.iterations = iter + 1;
        if (relative_change_below(prev, run.objective, cfg.tol)) {
            run.converged = true;
            break;
        }
        prev = run.objective;
    }
    // Memberships consistent with the final centers.
    run.u = fuzzy_memberships(data, centers, m);
    run.objective = fuzzy_objective(data, centers, run.u, m);
    run.centers = std::move(centers);
    return run;
}

}  // namespace detail

inline ClusterSolution cmeans(const Matrix& data, const FitConfig& cfg) {
    cfg.validate();
    detail::require_enough_points(data, cfg.k);

    RngStream rng(cfg.seed);
    detail::FuzzyRun best;
    for (int r = 0; r < cfg.restarts; ++r) {
        RngStream stream = rng.split(static_cast<std::uint64_t>(r));
        auto run = detail::cmeans_run(data, detail::kmeans_plus_plus(data, cfg.k, stream), cfg);
        if (run.objective < best.objective) best = std::move(run);
    }

    ClusterSolution sol;
    sol.k = cfg.k;
    sol.hard_labels = harden(best.u);
    sol.soft_memberships = std::move(best.u);
    sol.params.centers = std::move(best.centers);
    sol.objective = best.objective;
    sol.converged = best.converged;
    sol.iterations = best.iterations;
    sol.objective_trace = std::move(best.trace);
    return sol;
}

}  // namespace clusterpower
