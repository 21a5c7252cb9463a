#pragma once

// Cluster-solution evaluation and the single-group null decision.
//
// Continuous pipelines reject the null when the (fuzzy) silhouette of the
// two-cluster solution is 0.5 or higher.  Latent class analysis compares
// one- and two-class fits through BIC and rejects when the approximate
// Bayes factor exp((BIC_null - BIC_alt) / 2) is strictly above 3.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "cluster/solution.hpp"
#include "types.hpp"

namespace clusterpower {

inline constexpr double kSilhouetteThreshold = 0.5;
inline constexpr double kBayesFactorThreshold = 3.0;

enum class DecisionRule { SilhouetteThreshold, BayesFactorThreshold };

inline constexpr std::string_view rule_name(DecisionRule rule) {
    return rule == DecisionRule::SilhouetteThreshold ? "silhouette>=0.5" : "bayes_factor>3";
}

struct EvaluationResult {
    std::optional<double> silhouette;
    std::optional<double> fuzzy_silhouette;
    std::optional<double> bic_null;
    std::optional<double> bic_alt;
    std::optional<double> bayes_factor;
    bool rejected_null = false;
    DecisionRule rule = DecisionRule::SilhouetteThreshold;
    // Set when a fit failed to converge or degenerated; such replicates are
    // never counted as rejections.
    bool flagged = false;
    Warnings warnings;
};

// Per-point silhouette widths (Euclidean).  Points in singleton clusters get 0.
inline std::vector<double> silhouette_samples(const Matrix& data, const Labels& labels) {
    const auto n = data.rows();
    if (static_cast<std::size_t>(n) != labels.size()) throw std::invalid_argument("labels do not match data");
    if (n == 0) throw std::invalid_argument("silhouette needs data");
    const int k = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("labels must be non-negative");
        ++counts[static_cast<std::size_t>(l)];
    }
    const auto non_empty = std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; });
    if (non_empty < 2) throw std::invalid_argument("silhouette undefined for k=1");

    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    std::vector<double> sums(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int own = labels[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(own)] == 1) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += (data.row(i) - data.row(j)).norm();
        }
        const double a = sums[static_cast<std::size_t>(own)] / (counts[static_cast<std::size_t>(own)] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || counts[static_cast<std::size_t>(c)] == 0) continue;
            b = std::min(b, sums[static_cast<std::size_t>(c)] / counts[static_cast<std::size_t>(c)]);
        }
        const double denom = std::max(a, b);
        out[static_cast<std::size_t>(i)] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return out;
}

inline double silhouette(const Matrix& data, const Labels& labels) {
    const auto samples = silhouette_samples(data, labels);
    double sum = 0.0;
    for (double s : samples) sum += s;
    return sum / static_cast<double>(samples.size());
}

// Campello-Hruschka fuzzy silhouette: crisp silhouettes of the argmax
// partition, weighted by (largest - second largest membership)^alpha.
inline double fuzzy_silhouette(const Matrix& data, const Matrix& memberships, double alpha = 1.0,
                               Warnings* warnings = nullptr) {
    if (memberships.rows() != data.rows()) throw std::invalid_argument("memberships do not match data");
    if (memberships.cols() < 2) throw std::invalid_argument("fuzzy silhouette needs at least two clusters");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");

    Vector weights(memberships.rows());
    for (Eigen::Index i = 0; i < memberships.rows(); ++i) {
        double first = -std::numeric_limits<double>::infinity();
        double second = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < memberships.cols(); ++c) {
            const double u = memberships(i, c);
            if (u > first) {
                second = first;
                first = u;
            } else if (u > second) {
                second = u;
            }
        }
        weights(i) = std::pow(first - second, alpha);
    }
    const double total = weights.sum();
    if (total <= 0.0) {
        warn(warnings, "all fuzzy silhouette weights are zero (uniform memberships)");
        return 0.0;
    }
    const auto samples = silhouette_samples(data, harden(memberships));
    double weighted = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) weighted += weights(i) * samples[static_cast<std::size_t>(i)];
    return weighted / total;
}

inline double bic(double log_likelihood, int n_params, long long n_obs) {
    if (n_obs < 1) throw std::invalid_argument("BIC needs at least one observation");
    return -2.0 * log_likelihood + n_params * std::log(static_cast<double>(n_obs));
}

struct BayesFactor {
    double value = 1.0;
    bool clamped = false;  // exp overflowed and was clamped to the largest double
};

// Evidence for the alternative over the null from their BICs.
inline BayesFactor bayes_factor(double bic_null, double bic_alt) {
    if (!std::isfinite(bic_null) || !std::isfinite(bic_alt)) throw std::invalid_argument("BIC values must be finite");
    const double exponent = 0.5 * (bic_null - bic_alt);
    const double value = std::exp(exponent);
    if (!std::isfinite(value)) return {std::numeric_limits<double>::max(), true};
    if (value == 0.0) return {std::numeric_limits<double>::denorm_min(), true};
    return {value, false};
}

// Applies the rule to the stored metrics.  The silhouette rule uses the fuzzy
// silhouette when present and the crisp one otherwise.
inline EvaluationResult decide(EvaluationResult result, DecisionRule rule) {
    result.rule = rule;
    if (rule == DecisionRule::SilhouetteThreshold) {
        const auto& score = result.fuzzy_silhouette ? result.fuzzy_silhouette : result.silhouette;
        if (!score) throw std::invalid_argument("silhouette rule needs a silhouette score");
        result.rejected_null = !result.flagged && *score >= kSilhouetteThreshold;
    } else {
        if (!result.bayes_factor) {
            if (!result.bic_null || !result.bic_alt) throw std::invalid_argument("Bayes factor rule needs BICs");
            result.bayes_factor = bayes_factor(*result.bic_null, *result.bic_alt).value;
        }
        result.rejected_null = !result.flagged && *result.bayes_factor > kBayesFactorThreshold;
    }
    return result;
}

}  // namespace clusterpower
