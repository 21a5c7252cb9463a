#pragma once

// Latent class analysis: EM for a mixture of independent Bernoulli items,
// started from random responsibilities; best of cfg.restarts by
// log-likelihood.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "../rng.hpp"
#include "mixture.hpp"
#include "solution.hpp"

namespace clusterpower {

inline constexpr double kItemProbabilityClamp = 1e-6;

inline int lca_parameter_count(int k, int p) { return k * p + (k - 1); }

namespace detail {

struct BernoulliParams {
    Matrix items;  // k x p success probabilities
    Vector weights;
};

inline BernoulliParams bernoulli_m_step(const Matrix& data, const Matrix& resp) {
    BernoulliParams out;
    const Vector mass = resp.colwise().sum().transpose();
    out.items = resp.transpose() * data;
    for (Eigen::Index c = 0; c < resp.cols(); ++c) {
        if (mass(c) > 0.0) out.items.row(c) /= mass(c);
        else out.items.row(c).setConstant(0.5);
    }
    out.items = out.items.cwiseMax(kItemProbabilityClamp).cwiseMin(1.0 - kItemProbabilityClamp);
    out.weights = (mass / static_cast<double>(data.rows())).cwiseMax(1e-300);
    out.weights /= out.weights.sum();
    return out;
}

inline double bernoulli_e_step(const Matrix& data, const BernoulliParams& params, Matrix& resp) {
    const Matrix log_p = params.items.array().log();
    const Matrix log_q = (1.0 - params.items.array()).log();
    Matrix log_joint = data * log_p.transpose() + (1.0 - data.array()).matrix() * log_q.transpose();
    log_joint.rowwise() += params.weights.array().log().matrix().transpose();
    const Vector norm = log_sum_exp_rows(log_joint);
    resp = (log_joint.colwise() - norm).array().exp();
    return norm.sum();
}

struct LcaRun {
    Matrix resp;
    BernoulliParams params;
    double ll = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    std::vector<double> trace;
};

inline LcaRun lca_run(const Matrix& data, Matrix resp, const FitConfig& cfg) {
    LcaRun run;
    double previous = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        run.params = bernoulli_m_step(data, resp);
        run.ll = bernoulli_e_step(data, run.params, resp);
        run.trace.push_back(run.ll);
        run.iterations = iter + 1;
        if (std::isfinite(previous) && relative_change_below(previous, run.ll, cfg.tol)) {
            run.converged = true;
            break;
        }
        previous = run.ll;
    }
    run.resp = std::move(resp);
    return run;
}

}  // namespace detail

inline ClusterSolution lca(const Matrix& data, const FitConfig& cfg) {
    cfg.validate();
    detail::require_enough_points(data, cfg.k);
    if (!((data.array() == 0.0) || (data.array() == 1.0)).all())
        throw std::invalid_argument("latent class analysis needs 0/1 data");

    const auto n = data.rows();
    const int k = cfg.k;
    RngStream rng(cfg.seed);
    detail::LcaRun best;
    // One class has a closed-form optimum; a single pass is exact.
    const int restarts = k == 1 ? 1 : cfg.restarts;
    for (int r = 0; r < restarts; ++r) {
        RngStream stream = rng.split(static_cast<std::uint64_t>(r));
        Matrix resp(n, k);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int c = 0; c < k; ++c) resp(i, c) = stream.uniform() + 1e-12;
            resp.row(i) /= resp.row(i).sum();
        }
        auto run = detail::lca_run(data, std::move(resp), cfg);
        if (run.ll > best.ll) best = std::move(run);
    }

    ClusterSolution sol;
    sol.k = k;
    sol.hard_labels = harden(best.resp);
    sol.soft_memberships = std::move(best.resp);
    sol.params.centers = best.params.items;
    sol.params.weights = best.params.weights;
    sol.log_likelihood = best.ll;
    sol.objective = best.ll;
    sol.n_params = lca_parameter_count(k, static_cast<int>(data.cols()));
    sol.converged = best.converged;
    sol.iterations = best.iterations;
    sol.objective_trace = std::move(best.trace);
    if (!sol.converged) warn(&sol.warnings, "EM did not converge within max_iter");
    return sol;
}

}  // namespace clusterpower
