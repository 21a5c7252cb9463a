#pragma once

// Agglomerative clustering with Ward linkage.
//
// Cluster dissimilarities are kept as squared Ward distances and updated with
// the Lance-Williams recurrence
//
//   d2(k, i+j) = ((n_i + n_k) d2(k,i) + (n_j + n_k) d2(k,j) - n_k d2(i,j))
//                / (n_i + n_j + n_k)
//
// which for singletons starts at the squared Euclidean distance, so the merge
// height sqrt(d2) equals sqrt(2 * increase in within-cluster sum of squares).
// Each active cluster caches its nearest neighbour; Ward's reducibility means
// only rows that pointed at the merged pair need a rescan.

#include <limits>
#include <stdexcept>
#include <vector>

#include "solution.hpp"

namespace clusterpower {

struct WardMerge {
    int a = 0;  // surviving cluster id (the smaller one)
    int b = 0;  // absorbed cluster id
    double height = 0.0;
    int size = 0;
};

namespace detail {

class CondensedMatrix {
public:
    explicit CondensedMatrix(Eigen::Index n)
        : n_(static_cast<std::size_t>(n)), values_(n_ * (n_ > 0 ? n_ - 1 : 0) / 2) {}

    double& at(std::size_t i, std::size_t j) { return values_[index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }

private:
    std::size_t index(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        return i * n_ - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t n_;
    std::vector<double> values_;
};

struct WardState {
    Labels owner;                 // cluster id of every point
    std::vector<WardMerge> merges;
};

// Merges until `stop_at` clusters remain.  Ties in the merge criterion go to
// the lexicographically smallest (lower id, higher id) pair.
inline WardState ward_agglomerate(const Matrix& data, int stop_at) {
    const auto n = data.rows();
    const auto un = static_cast<std::size_t>(n);
    WardState state;
    state.owner.resize(un);
    for (std::size_t i = 0; i < un; ++i) state.owner[i] = static_cast<int>(i);
    if (n <= stop_at) return state;

    CondensedMatrix d2(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            d2.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = (data.row(i) - data.row(j)).squaredNorm();

    std::vector<int> size(un, 1);
    std::vector<bool> active(un, true);
    std::vector<std::size_t> nn(un, 0);
    std::vector<double> nn_d2(un, std::numeric_limits<double>::infinity());

    auto rescan = [&](std::size_t i) {
        nn_d2[i] = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < un; ++j) {
            if (j == i || !active[j]) continue;
            const double v = d2.at(i, j);
            if (v < nn_d2[i]) {
                nn_d2[i] = v;
                nn[i] = j;
            }
        }
    };
    for (std::size_t i = 0; i < un; ++i) rescan(i);

    std::vector<std::size_t> members_of_b;
    for (Eigen::Index remaining = n; remaining > stop_at; --remaining) {
        std::size_t best_a = un;
        std::size_t best_b = un;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < un; ++i) {
            if (!active[i]) continue;
            const std::size_t lo = std::min(i, nn[i]);
            const std::size_t hi = std::max(i, nn[i]);
            if (nn_d2[i] < best || (nn_d2[i] == best && (lo < best_a || (lo == best_a && hi < best_b)))) {
                best = nn_d2[i];
                best_a = lo;
                best_b = hi;
            }
        }

        const std::size_t a = best_a;
        const std::size_t b = best_b;
        const double na = size[a];
        const double nb = size[b];
        for (std::size_t k = 0; k < un; ++k) {
            if (!active[k] || k == a || k == b) continue;
            const double nk = size[k];
            const double updated =
                ((na + nk) * d2.at(k, a) + (nb + nk) * d2.at(k, b) - nk * best) / (na + nb + nk);
            d2.at(k, a) = std::max(updated, 0.0);
        }
        active[b] = false;
        size[a] += size[b];
        state.merges.push_back({static_cast<int>(a), static_cast<int>(b), std::sqrt(best), size[a]});
        for (auto& o : state.owner)
            if (o == static_cast<int>(b)) o = static_cast<int>(a);

        rescan(a);
        for (std::size_t k = 0; k < un; ++k) {
            if (!active[k] || k == a) continue;
            if (nn[k] == a || nn[k] == b) {
                rescan(k);
            } else {
                const double v = d2.at(k, a);
                if (v < nn_d2[k] || (v == nn_d2[k] && a < nn[k])) {
                    nn_d2[k] = v;
                    nn[k] = a;
                }
            }
        }
    }
    return state;
}

}  // namespace detail

// Full merge sequence (N - 1 merges).
inline std::vector<WardMerge> ward_linkage(const Matrix& data) {
    if (data.rows() < 1) throw std::invalid_argument("ward needs at least one observation");
    return detail::ward_agglomerate(data, 1).merges;
}

inline ClusterSolution ward(const Matrix& data, int k) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    detail::require_enough_points(data, k);

    auto state = detail::ward_agglomerate(data, k);
    // Cluster ids are the smallest member index, so numbering clusters by id
    // numbers them in order of first appearance.
    std::vector<int> relabel(static_cast<std::size_t>(data.rows()), -1);
    int next = 0;
    ClusterSolution sol;
    sol.k = k;
    sol.hard_labels.resize(state.owner.size());
    for (std::size_t i = 0; i < state.owner.size(); ++i) {
        int& slot = relabel[static_cast<std::size_t>(state.owner[i])];
        if (slot < 0) slot = next++;
        sol.hard_labels[i] = slot;
    }
    sol.params.centers = cluster_means(data, sol.hard_labels, k);
    sol.objective = within_cluster_ss(data, sol.hard_labels, k);
    sol.converged = true;
    sol.iterations = static_cast<int>(state.merges.size());
    return sol;
}

}  // namespace clusterpower
