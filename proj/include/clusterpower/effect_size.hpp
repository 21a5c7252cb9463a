#pragma once

// Closed-form subgroup effect-size arithmetic.
//
// The per-feature standardized mean differences (Cohen's d) of a two-group
// problem accumulate into a centroid distance
//
//     Delta = sqrt(sum_i delta_i^2)
//
// and when the delta_i are modelled as draws from Exp(lambda), the planning
// estimate of that distance for p features is sqrt(p) / lambda.  Inverting it
// gives the number of features needed for a target distance.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace clusterpower {

// ---------------------------------------------------------------------------
// EffectContext: the exponential rate and its named interpretation
// ---------------------------------------------------------------------------
enum class ContextLabel {
    WildlyOptimistic,     // 0.75
    PublishedPsychology,  // 1.5
    UpToVeryLarge,        // 3.0
    UpToLarge,            // 6.0
    UpToMedium,           // 12.0
    Custom,
};

inline constexpr double context_lambda(ContextLabel label) {
    switch (label) {
        case ContextLabel::WildlyOptimistic: return 0.75;
        case ContextLabel::PublishedPsychology: return 1.5;
        case ContextLabel::UpToVeryLarge: return 3.0;
        case ContextLabel::UpToLarge: return 6.0;
        case ContextLabel::UpToMedium: return 12.0;
        case ContextLabel::Custom: break;
    }
    return 0.0;
}

inline constexpr std::string_view context_name(ContextLabel label) {
    switch (label) {
        case ContextLabel::WildlyOptimistic: return "wildly optimistic";
        case ContextLabel::PublishedPsychology: return "published in psychology";
        case ContextLabel::UpToVeryLarge: return "no to very large effects";
        case ContextLabel::UpToLarge: return "no to large effects";
        case ContextLabel::UpToMedium: return "no to medium effects";
        case ContextLabel::Custom: return "custom";
    }
    return "custom";
}

class EffectContext {
public:
    explicit EffectContext(ContextLabel label) : label_(label), lambda_(context_lambda(label)) {
        if (label == ContextLabel::Custom)
            throw std::invalid_argument("custom effect context needs an explicit lambda");
    }

    static EffectContext custom(double lambda) {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw std::domain_error("lambda must be positive and finite");
        EffectContext ctx(ContextLabel::WildlyOptimistic);
        ctx.label_ = ContextLabel::Custom;
        ctx.lambda_ = lambda;
        return ctx;
    }

    // Named context whose rate equals lambda exactly, else Custom.
    static EffectContext from_lambda(double lambda) {
        for (auto label : named()) {
            if (context_lambda(label) == lambda) return EffectContext(label);
        }
        return custom(lambda);
    }

    static constexpr std::array<ContextLabel, 5> named() {
        return {ContextLabel::WildlyOptimistic, ContextLabel::PublishedPsychology,
                ContextLabel::UpToVeryLarge, ContextLabel::UpToLarge, ContextLabel::UpToMedium};
    }

    double lambda() const { return lambda_; }
    ContextLabel label() const { return label_; }
    std::string_view name() const { return context_name(label_); }

private:
    ContextLabel label_;
    double lambda_;
};

// ---------------------------------------------------------------------------
// EffectVector: per-feature effect magnitudes
// ---------------------------------------------------------------------------
class EffectVector {
public:
    EffectVector() = default;

    explicit EffectVector(std::vector<double> deltas) : deltas_(std::move(deltas)) {
        for (double& d : deltas_) {
            if (!std::isfinite(d)) throw std::domain_error("effect sizes must be finite");
            d = std::abs(d);
        }
    }

    static EffectVector zeros(std::size_t p) { return EffectVector(std::vector<double>(p, 0.0)); }

    std::span<const double> values() const { return deltas_; }
    std::size_t size() const { return deltas_.size(); }
    bool empty() const { return deltas_.empty(); }
    double operator[](std::size_t i) const { return deltas_[i]; }

private:
    std::vector<double> deltas_;
};

struct EffectSizeEstimate {
    double delta_hat = 0.0;
    int p = 0;
    double lambda = 0.0;
};

namespace detail {
inline void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw std::domain_error(std::string(what) + " must be positive and finite");
}
}  // namespace detail

// Euclidean distance between subgroup centroids in standardized space.
inline double centroid_distance(std::span<const double> deltas) {
    if (deltas.empty()) throw std::invalid_argument("no features");
    // Scaled accumulation avoids overflow for very large magnitudes.
    double scale = 0.0;
    for (double d : deltas) scale = std::max(scale, std::abs(d));
    if (scale == 0.0) return 0.0;
    double sum = 0.0;
    for (double d : deltas) {
        const double r = d / scale;
        sum += r * r;
    }
    return scale * std::sqrt(sum);
}

inline double centroid_distance(const EffectVector& deltas) { return centroid_distance(deltas.values()); }

inline double mean_effect(double lambda) {
    detail::require_positive(lambda, "lambda");
    return 1.0 / lambda;
}

inline double lambda_from_mean(double mean_delta) {
    detail::require_positive(mean_delta, "mean effect size");
    return 1.0 / mean_delta;
}

// Exponential density of per-feature effect sizes.
inline double effect_density(double delta, double lambda) {
    detail::require_positive(lambda, "lambda");
    if (!(delta >= 0.0)) throw std::domain_error("effect size must be non-negative");
    return lambda * std::exp(-lambda * delta);
}

// Planning estimate of the centroid distance for p features.
inline double expected_delta(int p, double lambda) {
    if (p < 1) throw std::domain_error("number of features must be at least 1");
    detail::require_positive(lambda, "lambda");
    return std::sqrt(static_cast<double>(p)) / lambda;
}

inline EffectSizeEstimate estimate_effect(int p, double lambda) {
    return {expected_delta(p, lambda), p, lambda};
}

enum class Rounding { Nearest, Ceil };

// Features needed to reach delta_target: delta^2 * lambda^2, rounded.
inline int min_features(double delta_target, double lambda, Rounding rounding = Rounding::Nearest) {
    detail::require_positive(delta_target, "target centroid distance");
    detail::require_positive(lambda, "lambda");
    const double exact = delta_target * delta_target * lambda * lambda;
    // Absorb representation error so exact integers are not bumped by Ceil.
    const double snapped = std::abs(exact - std::round(exact)) < 1e-9 * std::max(1.0, exact)
                               ? std::round(exact)
                               : exact;
    const double rounded = rounding == Rounding::Ceil ? std::ceil(snapped) : std::round(snapped);
    if (rounded > static_cast<double>(std::numeric_limits<int>::max()))
        throw std::overflow_error("required feature count does not fit in an int");
    return std::max(1, static_cast<int>(rounded));
}

// Sawilowsky's labels for a single standardized difference; half-open bins.
inline std::string_view interpret_delta(double delta) {
    struct Band {
        double threshold;
        std::string_view label;
    };
    static constexpr std::array<Band, 6> bands{{{2.0, "huge"},
                                                {1.2, "very large"},
                                                {0.8, "large"},
                                                {0.5, "medium"},
                                                {0.2, "small"},
                                                {0.01, "very small"}}};
    for (const auto& band : bands) {
        if (delta >= band.threshold) return band.label;
    }
    return "negligible";
}

// ---------------------------------------------------------------------------
// Sample-size arithmetic
// ---------------------------------------------------------------------------
using BigInt = boost::multiprecision::cpp_int;

struct LegacySampleRules {
    long long dolnicar = 0;  // 70 observations per feature
    BigInt formann;          // 2^p observations
};

inline LegacySampleRules legacy_sample_rules(int p) {
    if (p < 1) throw std::domain_error("number of features must be at least 1");
    LegacySampleRules rules;
    rules.dolnicar = 70LL * p;
    rules.formann = BigInt(1) << p;
    return rules;
}

// Total sample so that the smallest hypothesised subgroup still reaches
// n_per_group observations.
inline long long total_sample(int n_per_group, std::span<const double> proportions) {
    if (n_per_group < 1) throw std::domain_error("per-group sample size must be positive");
    if (proportions.empty()) throw std::invalid_argument("no subgroup proportions given");
    double sum = 0.0;
    double smallest = 1.0;
    for (double share : proportions) {
        if (!(share > 0.0) || !std::isfinite(share))
            throw std::invalid_argument("subgroup proportions must be positive");
        sum += share;
        smallest = std::min(smallest, share);
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("subgroup proportions must sum to 1");
    const double exact = n_per_group / smallest;
    // 30 / (1/3) lands a few ulps above 90.
    const double nearest = std::round(exact);
    if (std::abs(exact - nearest) < 1e-9 * exact) return static_cast<long long>(nearest);
    return static_cast<long long>(std::ceil(exact));
}

}  // namespace clusterpower
