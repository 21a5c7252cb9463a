#pragma once

// Method registry shared by the power simulations and the CLI.

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cluster.hpp"
#include "evaluate.hpp"

namespace clusterpower {

enum class Method { KMeans, Ward, CMeans, LCA, LPA, GMM };

inline constexpr std::array<Method, 6> kAllMethods{Method::KMeans, Method::Ward, Method::CMeans,
                                                    Method::LCA,    Method::LPA,  Method::GMM};

inline constexpr std::string_view method_name(Method m) {
    switch (m) {
        case Method::KMeans: return "kmeans";
        case Method::Ward: return "ward";
        case Method::CMeans: return "cmeans";
        case Method::LCA: return "lca";
        case Method::LPA: return "lpa";
        case Method::GMM: return "gmm";
    }
    return "kmeans";
}

inline std::optional<Method> parse_method(std::string_view name) {
    for (Method m : kAllMethods)
        if (method_name(m) == name) return m;
    return std::nullopt;
}

// Methods evaluated with the fuzzy silhouette of their soft memberships.
inline constexpr bool is_fuzzy(Method m) { return m == Method::CMeans || m == Method::LPA || m == Method::GMM; }

inline ClusterSolution fit(Method method, const Matrix& data, const FitConfig& cfg) {
    switch (method) {
        case Method::KMeans: return kmeans(data, cfg);
        case Method::Ward: return ward(data, cfg.k);
        case Method::CMeans: return cmeans(data, cfg);
        case Method::LCA: return lca(data, cfg);
        case Method::LPA: return lpa(data, cfg);
        case Method::GMM: return gmm(data, cfg);
    }
    throw std::invalid_argument("unknown method");
}

// Silhouette-style score of a fitted solution: fuzzy for soft methods.
inline double solution_score(Method method, const Matrix& data, const ClusterSolution& sol) {
    if (is_fuzzy(method) && sol.soft_memberships) return fuzzy_silhouette(data, *sol.soft_memberships);
    return silhouette(data, sol.hard_labels);
}

struct KSelection {
    int best_k = 0;
    double best_score = 0.0;
    std::vector<std::pair<int, double>> scores;
};

// Picks the candidate k (>= 2) with the highest silhouette.  Not used by the
// power simulations, which always fit the two-group alternative.
inline KSelection select_k(Method method, const Matrix& data, int k_min, int k_max, FitConfig cfg = {}) {
    if (k_min < 2 || k_max < k_min) throw std::invalid_argument("k range must satisfy 2 <= k_min <= k_max");
    KSelection out;
    out.best_score = -std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max && k <= data.rows(); ++k) {
        cfg.k = k;
        const auto sol = fit(method, data, cfg);
        if (sol.non_empty_clusters() < 2) continue;
        const double score = solution_score(method, data, sol);
        out.scores.emplace_back(k, score);
        if (score > out.best_score) {
            out.best_score = score;
            out.best_k = k;
        }
    }
    return out;
}

}  // namespace clusterpower
