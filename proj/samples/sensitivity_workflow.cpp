// Planning walk-through: how many features and observations a two-subgroup
// study needs, then a quick simulation check of one design.
#include <iostream>

#include <clusterpower/clusterpower.hpp>

namespace cp = clusterpower;

int main() {
    const double lambda = 1.5;  // "medium" per-feature effects
    for (int p : {9, 16, 36})
        std::cout << "p=" << p << "  delta_hat=" << cp::format_g6(cp::expected_delta(p, lambda)) << '\n';

    std::cout << "features for delta=4: " << cp::min_features(4.0, lambda) << '\n';

    const auto report = cp::sensitivity(16, lambda);
    std::cout << "16 features: " << report.verdict << '\n';

    cp::PowerCell cell;
    cell.method = cp::Method::KMeans;
    cell.n_per_group = 30;
    cell.p = 36;
    cell.lambda = lambda;
    cell.reps = 20;
    const auto est = cp::estimate_power(cell, cp::default_workers());
    std::cout << "k-means power at n=30, p=36: " << cp::format_g6(est.power) << " [" << cp::format_g6(est.ci_low)
              << ", " << cp::format_g6(est.ci_high) << "]\n";
}
