// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <clusterpower/clusterpower.hpp>

#include "oracles.hpp"

using namespace clusterpower;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s (%.1fs)%s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), secs,
                o.detail.str().c_str());
    std::fflush(stdout);
}

PowerCell cell(Method m, int n, int p, double lambda, int reps = 50) {
    PowerCell c;
    c.method = m;
    c.n_per_group = n;
    c.p = p;
    c.lambda = lambda;
    c.reps = reps;
    return c;
}

std::string name(Method m) { return std::string(method_name(m)); }

Matrix random_points(int n, int p, RngStream& rng) {
    Matrix m(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) m(i, j) = rng.normal();
    return m;
}

void equation_suite(Outcome& o) {
    const auto start = std::chrono::steady_clock::now();
    const std::set<int> reference{9, 14, 20, 36, 56, 81, 144, 225, 324, 576, 900, 1296, 2304};
    std::set<int> computed;
    for (double lambda : {0.75, 1.5, 3.0, 6.0, 12.0})
        for (double delta : {3.0, 4.0, 5.0}) {
            const int p = min_features(delta, lambda, Rounding::Nearest);
            computed.insert(p);
            const double exact = delta * delta * lambda * lambda;
            if (std::abs(exact - std::round(exact)) < 1e-12)
                o.expect(std::abs(expected_delta(p, lambda) - delta) < 1e-9, "round trip");
        }
    for (int p : reference) o.expect(computed.count(p) == 1, "missing p=" + std::to_string(p));
    const double lambda = lambda_from_mean(0.683);
    o.expect(std::abs(lambda - 1.464) <= 0.001, "lambda_from_mean(0.683)");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.expect(secs < 1.0, "runtime under 1s");
    o.detail << " reference p values reproduced: " << reference.size() << "/13; lambda_from_mean(0.683)="
             << format_g6(lambda);
}

void powered_cells(Outcome& o) {
    const std::vector<PowerCell> cells{cell(Method::KMeans, 30, 36, 1.5), cell(Method::GMM, 30, 36, 1.5),
                                       cell(Method::Ward, 30, 36, 1.5),   cell(Method::CMeans, 100, 20, 1.5),
                                       cell(Method::LPA, 30, 36, 1.5),    cell(Method::KMeans, 75, 9, 0.75),
                                       cell(Method::LCA, 50, 9, 0.75)};
    for (const auto& c : cells) {
        const auto est = estimate_power(c, default_workers());
        o.detail << ' ' << name(c.method) << "(n=" << c.n_per_group << ",p=" << c.p << ",lambda=" << c.lambda
                 << ")=" << format_g6(est.power);
        o.expect(est.power >= 0.80, name(c.method) + " power below 0.80");
    }
}

void underpowered_cells(Outcome& o) {
    const auto km = estimate_power(cell(Method::KMeans, 30, 9, 12.0), default_workers());
    o.detail << " kmeans(n=30,p=9,lambda=12)=" << format_g6(km.power);
    o.expect(km.power <= 0.2, "kmeans power above 0.2");
    for (int n : {30, 100}) {
        const auto lca_est = estimate_power(cell(Method::LCA, n, 81, 3.0), default_workers());
        o.detail << " lca(n=" << n << ",p=81,lambda=3)=" << format_g6(lca_est.power);
        o.expect(lca_est.power < 0.9, "lca reached 0.9 at n=" + std::to_string(n));
    }
}

void null_calibration(Outcome& o) {
    for (Method m : kAllMethods) {
        auto c = cell(m, 100, 20, 1.0, 100);
        c.fixed_effects = EffectVector::zeros(20);
        const auto est = estimate_power(c, default_workers());
        const double limit = m == Method::LCA ? 0.10 : 0.05;
        o.detail << ' ' << name(m) << '=' << format_g6(est.power);
        o.expect(est.power <= limit, name(m) + " false-positive rate");
    }
}

void reducer_ordering(Outcome& o) {
    CentroidShiftOptions opts;
    opts.lambdas = {12.0};
    opts.p_values = {100};
    opts.reducers = {Reducer::PCA, Reducer::MDS};
    opts.reps = 10;
    opts.n_per_group = 200;
    opts.workers = default_workers();

    opts.correlation = RandomCorrelation{0.5};
    const auto corr = centroid_shift_experiment(opts);
    o.detail << " correlated: pca=" << format_g6(corr[0].mean_delta) << " mds=" << format_g6(corr[1].mean_delta);
    o.expect(corr[0].mean_delta < corr[1].mean_delta, "correlated pca mean not below mds mean");

    opts.correlation = Independent{};
    const auto ind = centroid_shift_experiment(opts);
    const double gap = std::abs(ind[0].mean_delta - ind[1].mean_delta);
    const double sd = std::max(*ind[0].sd_delta, *ind[1].sd_delta);
    o.detail << " independent: pca=" << format_g6(ind[0].mean_delta) << "+-" << format_g6(*ind[0].sd_delta)
             << " mds=" << format_g6(ind[1].mean_delta) << "+-" << format_g6(*ind[1].sd_delta);
    o.expect(gap <= sd, "independent means differ by more than 1 SD");
}

void oracle_equivalence(Outcome& o) {
    RngStream rng(2024);
    double worst_sil = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int n = 3 + static_cast<int>(rng.index(48));
        const int k = 2 + static_cast<int>(rng.index(3));
        const Matrix x = random_points(n, 1 + static_cast<int>(rng.index(3)), rng);
        Labels labels(n);
        for (int i = 0; i < n; ++i) labels[i] = i < k ? i : static_cast<int>(rng.index(k));
        worst_sil = std::max(worst_sil, std::abs(silhouette(x, labels) - oracle::silhouette(x, labels)));
    }
    o.expect(worst_sil <= 1e-12, "silhouette oracle");

    int kmeans_ok = 0;
    for (int t = 0; t < 30; ++t) {
        const Matrix x = random_points(5 + t % 4, 2, rng);
        FitConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(t);
        const double fitted = kmeans(x, cfg).objective;
        kmeans_ok += std::abs(fitted - oracle::best_two_cluster_wcss(x)) <= 1e-9 * std::max(1.0, fitted);
    }
    o.expect(kmeans_ok == 30, "kmeans exhaustive optimum");

    int ward_ok = 0;
    for (int t = 0; t < 30; ++t) {
        const Matrix x = random_points(12, 3, rng);
        const Matrix d = oracle::distance_matrix(x);
        int bi = 0, bj = 1;
        for (int i = 0; i < 12; ++i)
            for (int j = i + 1; j < 12; ++j)
                if (d(i, j) < d(bi, bj)) {
                    bi = i;
                    bj = j;
                }
        const auto first = ward_linkage(x).front();
        ward_ok += first.a == bi && first.b == bj;
    }
    o.expect(ward_ok == 30, "ward first merge");

    int em_ok = 0;
    auto monotone = [](const std::vector<double>& trace) {
        for (std::size_t i = 1; i < trace.size(); ++i)
            if (trace[i] < trace[i - 1] - 1e-9 * std::max(1.0, std::abs(trace[i - 1]))) return false;
        return true;
    };
    for (int t = 0; t < 100; ++t) {
        DatasetSpec spec;
        spec.n_per_group = {30, 30};
        spec.p = 2;
        spec.effects = 0.5 + 0.03 * t;
        spec.seed = static_cast<std::uint64_t>(t);
        const auto ds = generate(spec);
        FitConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(t);
        em_ok += monotone(gmm(ds.data, cfg).objective_trace) && monotone(lpa(ds.data, cfg).objective_trace);
    }
    o.expect(em_ok == 100, "EM monotonicity");

    double worst_mds = 0.0;
    for (int t = 0; t < 20; ++t) {
        const Matrix x = random_points(10 + t, 5, rng);
        const Matrix dp = oracle::distance_matrix(pca(x, 2).coords);
        const Matrix dm = oracle::distance_matrix(mds(x, 2).coords);
        worst_mds = std::max(worst_mds, (dp - dm).cwiseAbs().maxCoeff());
    }
    o.expect(worst_mds <= 1e-6, "classical MDS vs PCA distances");
    o.detail << " silhouette max diff=" << worst_sil << " kmeans " << kmeans_ok << "/30 ward " << ward_ok
             << "/30 EM " << em_ok << "/100 mds-pca max diff=" << worst_mds;
}

void determinism(Outcome& o) {
    for (Method m : kAllMethods) {
        auto c = cell(m, 30, 12, 1.0, 20);
        c.master_seed = 7;
        const auto one = estimate_power(c, 1);
        const auto four = estimate_power(c, 4);
        const std::string a = std::string(kPowerCsvHeader) + '\n' + power_csv_row(one, false) + '\n';
        const std::string b = std::string(kPowerCsvHeader) + '\n' + power_csv_row(four, false) + '\n';
        o.expect(a == b, name(m) + " differs between 1 and 4 workers");
    }
    o.detail << " all six methods identical at workers 1 and 4";
}

}  // namespace

int main() {
    report(1, "equation suite", equation_suite);
    report(2, "adequately powered reference cells reach 0.80", powered_cells);
    report(3, "underpowered cells stay below target", underpowered_cells);
    report(4, "null calibration", null_calibration);
    report(5, "PCA vs MDS centroid distance ordering", reducer_ordering);
    report(6, "oracle equivalence", oracle_equivalence);
    report(7, "determinism across worker counts", determinism);
    std::printf("%d of 7 criteria passed\n", 7 - failures);
    return failures == 0 ? 0 : 1;
}
