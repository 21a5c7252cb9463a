#pragma once

// Gaussian mixture models fitted by EM.
//
//   gmm  full per-component covariance
//   lpa  latent profile analysis: diagonal per-component covariance
//
// Both start from the k-means partition and floor covariance eigenvalues
// (variances, for lpa) at cfg.covariance_floor.

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "kmeans.hpp"
#include "solution.hpp"

namespace clusterpower {

enum class CovarianceType { Full, Diagonal };

inline int mixture_parameter_count(int k, int d, CovarianceType type) {
    const int cov = type == CovarianceType::Full ? d * (d + 1) / 2 : d;
    return k * d + k * cov + (k - 1);
}

namespace detail {

// Row-wise log-sum-exp.
inline Vector log_sum_exp_rows(const Matrix& m) {
    Vector out(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double peak = m.row(i).maxCoeff();
        if (!std::isfinite(peak)) {
            out(i) = peak;
            continue;
        }
        out(i) = peak + std::log((m.row(i).array() - peak).exp().sum());
    }
    return out;
}

inline Matrix floor_covariance(const Matrix& cov, double floor, CovarianceType type) {
    if (type == CovarianceType::Diagonal) {
        Matrix out = Matrix::Zero(cov.rows(), cov.cols());
        for (Eigen::Index j = 0; j < cov.rows(); ++j) out(j, j) = std::max(cov(j, j), floor);
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector values = eig.eigenvalues().cwiseMax(floor);
    Matrix out = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

// log N(x | mean, cov) for every row of data.
inline Vector gaussian_log_density(const Matrix& data, const Vector& mean, const Matrix& cov) {
    const auto d = static_cast<double>(data.cols());
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw std::runtime_error("covariance is not positive-definite");
    const Matrix lower = llt.matrixL();
    const double log_det = 2.0 * lower.diagonal().array().log().sum();
    const Matrix centered = (data.rowwise() - mean.transpose()).transpose();
    const Matrix whitened = lower.triangularView<Eigen::Lower>().solve(centered);
    const Vector maha = whitened.colwise().squaredNorm().transpose();
    const double constant = -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
    return (constant - 0.5 * maha.array()).matrix();
}

struct GaussianParams {
    Matrix means;  // k x d
    std::vector<Matrix> covariances;
    Vector weights;
};

inline GaussianParams m_step(const Matrix& data, const Matrix& resp, double floor, CovarianceType type,
                             const GaussianParams* previous) {
    const auto n = data.rows();
    const auto d = data.cols();
    const auto k = resp.cols();
    GaussianParams out;
    out.means.resize(k, d);
    out.covariances.resize(static_cast<std::size_t>(k));
    out.weights.resize(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const double mass = resp.col(c).sum();
        if (mass <= 1e-10 * static_cast<double>(n)) {
            // Collapsed component: keep what it had, with negligible weight.
            out.weights(c) = 1e-10;
            if (previous) out.means.row(c) = previous->means.row(c);
            else out.means.row(c) = data.colwise().mean();
            out.covariances[static_cast<std::size_t>(c)] =
                previous ? previous->covariances[static_cast<std::size_t>(c)] : Matrix(Matrix::Identity(d, d));
            continue;
        }
        out.weights(c) = mass / static_cast<double>(n);
        const Vector mean = (resp.col(c).transpose() * data).transpose() / mass;
        out.means.row(c) = mean.transpose();
        const Matrix centered = data.rowwise() - mean.transpose();
        const Matrix cov = centered.transpose() * resp.col(c).asDiagonal() * centered / mass;
        out.covariances[static_cast<std::size_t>(c)] = floor_covariance(cov, floor, type);
    }
    out.weights /= out.weights.sum();
    return out;
}

// Log-likelihood and responsibilities under params.
inline double e_step(const Matrix& data, const GaussianParams& params, Matrix& resp) {
    const auto k = params.means.rows();
    Matrix log_joint(data.rows(), k);
    for (Eigen::Index c = 0; c < k; ++c) {
        log_joint.col(c) = gaussian_log_density(data, params.means.row(c).transpose(),
                                                params.covariances[static_cast<std::size_t>(c)]);
        log_joint.col(c).array() += std::log(params.weights(c));
    }
    const Vector norm = log_sum_exp_rows(log_joint);
    resp = (log_joint.colwise() - norm).array().exp();
    return norm.sum();
}

}  // namespace detail

inline ClusterSolution gaussian_mixture(const Matrix& data, const FitConfig& cfg, CovarianceType type) {
    cfg.validate();
    detail::require_enough_points(data, cfg.k);
    const auto n = data.rows();
    const int k = cfg.k;

    const ClusterSolution init = kmeans(data, cfg);
    Matrix resp = Matrix::Zero(n, k);
    for (Eigen::Index i = 0; i < n; ++i) resp(i, init.hard_labels[static_cast<std::size_t>(i)]) = 1.0;

    detail::GaussianParams params = detail::m_step(data, resp, cfg.covariance_floor, type, nullptr);

    ClusterSolution sol;
    sol.k = k;
    double previous = -std::numeric_limits<double>::infinity();
    double ll = previous;
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        ll = detail::e_step(data, params, resp);
        sol.objective_trace.push_back(ll);
        sol.iterations = iter + 1;
        if (std::isfinite(previous) && detail::relative_change_below(previous, ll, cfg.tol)) {
            sol.converged = true;
            break;
        }
        previous = ll;
        if (iter + 1 == cfg.max_iter) break;
        params = detail::m_step(data, resp, cfg.covariance_floor, type, &params);
    }

    sol.hard_labels = harden(resp);
    sol.soft_memberships = std::move(resp);
    sol.params.centers = params.means;
    sol.params.covariances = params.covariances;
    sol.params.weights = params.weights;
    sol.log_likelihood = ll;
    sol.objective = ll;
    sol.n_params = mixture_parameter_count(k, static_cast<int>(data.cols()), type);
    if (!sol.converged) warn(&sol.warnings, "EM did not converge within max_iter");
    return sol;
}

inline ClusterSolution gmm(const Matrix& data, const FitConfig& cfg) {
    return gaussian_mixture(data, cfg, CovarianceType::Full);
}

inline ClusterSolution lpa(const Matrix& data, const FitConfig& cfg) {
    return gaussian_mixture(data, cfg, CovarianceType::Diagonal);
}

}  // namespace clusterpower
