#pragma once

// Synthetic subgroup datasets.
//
// Each feature i carries a standardized difference delta_i between adjacent
// groups.  Continuous data are multivariate normal with unit within-group
// variances; correlation, when requested, is imposed on the noise only so
// the marginal per-feature differences stay at delta_i.  Binary data map the
// same group offsets through the standard normal CDF.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <variant>
#include <vector>

#include "effect_size.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace clusterpower {

enum class FeatureKind { Continuous, Binary };

struct Independent {};
struct RandomCorrelation {
    double strength = 0.5;  // in [0, 1)
};
using Correlation = std::variant<Independent, RandomCorrelation>;

struct DatasetSpec {
    std::vector<int> n_per_group{30, 30};
    int p = 2;
    // Either an exponential rate to draw effects from, or fixed effects.
    std::variant<double, EffectVector> effects = 1.5;
    FeatureKind feature_kind = FeatureKind::Continuous;
    Correlation correlation = Independent{};
    std::uint64_t seed = 0;

    int total() const { return std::accumulate(n_per_group.begin(), n_per_group.end(), 0); }
    int groups() const { return static_cast<int>(n_per_group.size()); }
};

struct LabeledDataset {
    Matrix data;
    Labels labels;
    EffectVector effect_vector;
    double realized_delta = 0.0;
    FeatureKind feature_kind = FeatureKind::Continuous;

    int groups() const { return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1; }
};

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline EffectVector draw_effect_vector(int p, double lambda, RngStream& rng) {
    if (p < 1) throw std::domain_error("number of features must be at least 1");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::domain_error("lambda must be positive");
    std::vector<double> deltas(static_cast<std::size_t>(p));
    for (double& d : deltas) d = rng.exponential(lambda);
    return EffectVector(std::move(deltas));
}

// Random correlation matrix from a Gaussian factor model,
//   C = D (A A^T + eps I) D,   A ~ N(0,1)^{p x k},
// with k = max(1, ceil(strength * p)) and eps = k (1 - strength) / strength,
// so off-diagonal magnitudes grow with strength and eps > 0 keeps C
// positive-definite.
inline Matrix random_correlation(int p, double strength, RngStream& rng) {
    if (p < 1) throw std::domain_error("correlation matrix needs at least one feature");
    if (!(strength >= 0.0 && strength < 1.0)) throw std::domain_error("correlation strength must be in [0, 1)");
    if (strength == 0.0 || p == 1) return Matrix::Identity(p, p);

    const int k = std::max(1, static_cast<int>(std::ceil(strength * p)));
    const double eps = k * (1.0 - strength) / strength;
    Matrix factors(p, k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < p; ++i) factors(i, j) = rng.normal();

    Matrix cov = factors * factors.transpose();
    cov.diagonal().array() += eps;
    const Vector inv_sd = cov.diagonal().array().rsqrt();
    Matrix corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
    corr = (0.5 * (corr + corr.transpose())).eval();
    corr.diagonal().setOnes();
    return corr;
}

namespace detail {

inline void validate_spec(const DatasetSpec& spec) {
    if (spec.n_per_group.empty()) throw std::invalid_argument("dataset needs at least one group");
    for (int n : spec.n_per_group)
        if (n < 1) throw std::invalid_argument("every group needs at least one observation");
    if (spec.total() < 2) throw std::invalid_argument("dataset needs at least two observations");
    if (spec.p < 1) throw std::domain_error("number of features must be at least 1");
    if (spec.feature_kind == FeatureKind::Binary && !std::holds_alternative<Independent>(spec.correlation))
        throw std::invalid_argument("binary features cannot be correlated");
    if (const auto* fixed = std::get_if<EffectVector>(&spec.effects)) {
        if (fixed->size() != static_cast<std::size_t>(spec.p))
            throw std::invalid_argument("fixed effect vector length differs from p");
    }
}

inline EffectVector resolve_effects(const DatasetSpec& spec, RngStream& rng) {
    if (const auto* fixed = std::get_if<EffectVector>(&spec.effects)) return *fixed;
    return draw_effect_vector(spec.p, std::get<double>(spec.effects), rng);
}

// Offset of group g in units of delta: adjacent groups differ by exactly one
// delta, and the offsets are symmetric around zero (-1/2, +1/2 for two groups).
inline double group_offset(int g, int groups) { return g - 0.5 * (groups - 1); }

inline Labels make_labels(const DatasetSpec& spec) {
    Labels labels;
    labels.reserve(static_cast<std::size_t>(spec.total()));
    for (int g = 0; g < spec.groups(); ++g) labels.insert(labels.end(), spec.n_per_group[g], g);
    return labels;
}

}  // namespace detail

inline LabeledDataset generate_continuous(const DatasetSpec& spec, RngStream& rng) {
    detail::validate_spec(spec);
    if (spec.feature_kind != FeatureKind::Continuous)
        throw std::invalid_argument("generate_continuous needs a continuous spec");

    LabeledDataset out;
    out.feature_kind = FeatureKind::Continuous;
    out.effect_vector = detail::resolve_effects(spec, rng);
    out.realized_delta = centroid_distance(out.effect_vector);
    out.labels = detail::make_labels(spec);

    const int n = spec.total();
    const int p = spec.p;

    Matrix noise(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) noise(i, j) = rng.normal();

    if (const auto* corr = std::get_if<RandomCorrelation>(&spec.correlation)) {
        const Matrix c = random_correlation(p, corr->strength, rng);
        Eigen::LLT<Matrix> llt(c);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("correlation matrix is not positive-definite");
        // Rows z -> L z, i.e. noise * L^T.
        noise = noise * llt.matrixL().transpose();
    }

    out.data = std::move(noise);
    for (int i = 0; i < n; ++i) {
        const double offset = detail::group_offset(out.labels[i], spec.groups());
        for (int j = 0; j < p; ++j) out.data(i, j) += offset * out.effect_vector[j];
    }
    return out;
}

inline LabeledDataset generate_categorical(const DatasetSpec& spec, RngStream& rng) {
    detail::validate_spec(spec);
    if (spec.feature_kind != FeatureKind::Binary)
        throw std::invalid_argument("generate_categorical needs a binary spec");

    LabeledDataset out;
    out.feature_kind = FeatureKind::Binary;
    out.effect_vector = detail::resolve_effects(spec, rng);
    out.realized_delta = centroid_distance(out.effect_vector);
    out.labels = detail::make_labels(spec);

    const int n = spec.total();
    const int p = spec.p;
    Matrix probs(spec.groups(), p);
    for (int g = 0; g < spec.groups(); ++g)
        for (int j = 0; j < p; ++j)
            probs(g, j) = standard_normal_cdf(detail::group_offset(g, spec.groups()) * out.effect_vector[j]);

    out.data.resize(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) out.data(i, j) = rng.bernoulli(probs(out.labels[i], j)) ? 1.0 : 0.0;
    return out;
}

inline LabeledDataset generate(const DatasetSpec& spec, RngStream& rng) {
    return spec.feature_kind == FeatureKind::Binary ? generate_categorical(spec, rng)
                                                    : generate_continuous(spec, rng);
}

inline LabeledDataset generate(const DatasetSpec& spec) {
    RngStream rng(spec.seed);
    return generate(spec, rng);
}

// Sample centroid distance between two labelled groups.
inline double sample_centroid_distance(const Matrix& data, const Labels& labels, int a = 0, int b = 1) {
    Vector sum_a = Vector::Zero(data.cols());
    Vector sum_b = Vector::Zero(data.cols());
    int n_a = 0;
    int n_b = 0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        if (labels[i] == a) {
            sum_a += data.row(i).transpose();
            ++n_a;
        } else if (labels[i] == b) {
            sum_b += data.row(i).transpose();
            ++n_b;
        }
    }
    if (n_a == 0 || n_b == 0) throw std::invalid_argument("both groups must be non-empty");
    return (sum_a / n_a - sum_b / n_b).norm();
}

}  // namespace clusterpower
