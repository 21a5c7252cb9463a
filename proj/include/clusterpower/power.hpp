#pragma once

// Monte-Carlo power estimation for subgroup analyses.
//
// A replicate draws per-feature effects from Exp(lambda), simulates two
// equally sized groups, reduces continuous data to two dimensions, fits the
// two-cluster alternative and applies the decision rule.  Power is the share
// of replicates that reject the single-group null.  Every replicate owns a
// stream derived from (master seed, data cell, replicate index), so results
// do not depend on the number of workers or the execution order.

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "datagen.hpp"
#include "effect_size.hpp"
#include "evaluate.hpp"
#include "pipeline.hpp"
#include "reduce.hpp"

namespace clusterpower {

inline constexpr double kDefaultTargetPower = 0.9;

inline const std::vector<int>& default_n_grid() {
    static const std::vector<int> grid{30, 50, 75, 100, 150, 200, 500, 750, 1000, 1500, 2000, 5000};
    return grid;
}

struct PowerCell {
    Method method = Method::KMeans;
    int n_per_group = 30;
    int p = 36;
    double lambda = 1.5;
    int reps = 50;
    Reducer reducer = Reducer::PCA;
    int dims = 2;
    std::uint64_t master_seed = 0;
    // Replaces the Exp(lambda) draw, e.g. all zeros for null calibration.
    std::optional<EffectVector> fixed_effects;
    Correlation correlation = Independent{};
    // k is forced to 2; seed is derived per replicate.
    FitConfig fit;

    FeatureKind feature_kind() const { return method == Method::LCA ? FeatureKind::Binary : FeatureKind::Continuous; }
    Reducer effective_reducer() const { return method == Method::LCA ? Reducer::None : reducer; }

    void validate() const {
        if (n_per_group < 1) throw std::invalid_argument("n per group must be positive");
        if (p < 1) throw std::invalid_argument("p must be positive");
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be positive");
        if (reps < 1) throw std::invalid_argument("reps must be at least 1");
        if (fixed_effects && fixed_effects->size() != static_cast<std::size_t>(p))
            throw std::invalid_argument("fixed effect vector length differs from p");
        if (method == Method::LCA && !std::holds_alternative<Independent>(correlation))
            throw std::invalid_argument("latent class cells use independent binary features");
        if (effective_reducer() != Reducer::None && (dims < 1 || dims > p))
            throw std::invalid_argument("embedding dimension must be in [1, p]");
        FitConfig probe = fit;
        probe.k = 2;
        probe.validate();
    }
};

struct ReplicateResult {
    int index = 0;
    double realized_delta = 0.0;
    EvaluationResult evaluation;
};

struct PowerEstimate {
    PowerCell cell;
    int rejections = 0;
    int flagged = 0;
    double power = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    // Mean silhouette (continuous methods) or mean log10 Bayes factor (LCA).
    double mean_score = 0.0;
    double runtime_seconds = 0.0;
    std::vector<ReplicateResult> replicates;
};

struct WilsonInterval {
    double low = 0.0;
    double high = 1.0;
};

// 95% Wilson score interval for successes out of trials.
inline WilsonInterval wilson_interval(int successes, int trials) {
    if (trials < 1) throw std::invalid_argument("Wilson interval needs at least one trial");
    constexpr double z = 1.959963984540054;
    const double n = trials;
    const double phat = successes / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    WilsonInterval ci{std::clamp(center - half, 0.0, 1.0), std::clamp(center + half, 0.0, 1.0)};
    if (successes == 0) ci.low = 0.0;
    if (successes == trials) ci.high = 1.0;
    ci.low = std::min(ci.low, phat);
    ci.high = std::max(ci.high, phat);
    return ci;
}

namespace detail {

// Key of the simulated data, shared by all methods of the same feature kind
// so that methods are compared on identical datasets.
inline std::uint64_t data_key(const PowerCell& cell) {
    std::uint64_t effects_key = std::bit_cast<std::uint64_t>(cell.lambda);
    if (cell.fixed_effects) {
        effects_key = 0x66697865640aULL;
        for (double d : cell.fixed_effects->values()) effects_key = splitmix64(effects_key ^ std::bit_cast<std::uint64_t>(d));
    }
    std::uint64_t corr_key = 0;
    if (const auto* c = std::get_if<RandomCorrelation>(&cell.correlation))
        corr_key = 1 + std::bit_cast<std::uint64_t>(c->strength);
    return derive_seed(0x706f776572ULL, {static_cast<std::uint64_t>(cell.n_per_group), static_cast<std::uint64_t>(cell.p),
                                          effects_key, static_cast<std::uint64_t>(cell.feature_kind()), corr_key});
}

enum StreamRole : std::uint64_t { kDataStream = 1, kReduceStream = 2, kFitStream = 3 };

}  // namespace detail

inline ReplicateResult run_replicate(const PowerCell& cell, int replicate_index) {
    cell.validate();
    const RngStream root(derive_seed(cell.master_seed, {detail::data_key(cell), static_cast<std::uint64_t>(replicate_index)}));

    DatasetSpec spec;
    spec.n_per_group = {cell.n_per_group, cell.n_per_group};
    spec.p = cell.p;
    spec.feature_kind = cell.feature_kind();
    spec.correlation = cell.correlation;
    if (cell.fixed_effects) spec.effects = *cell.fixed_effects;
    else spec.effects = cell.lambda;

    RngStream data_rng = root.split(detail::kDataStream);
    const LabeledDataset dataset = generate(spec, data_rng);

    ReplicateResult out;
    out.index = replicate_index;
    out.realized_delta = dataset.realized_delta;

    FitConfig cfg = cell.fit;
    cfg.k = 2;
    cfg.seed = root.split(detail::kFitStream).seed();
    EvaluationResult& eval = out.evaluation;

    if (cell.method == Method::LCA) {
        eval.rule = DecisionRule::BayesFactorThreshold;
        FitConfig null_cfg = cfg;
        null_cfg.k = 1;
        const auto null_fit = lca(dataset.data, null_cfg);
        const auto alt_fit = lca(dataset.data, cfg);
        const auto n_obs = static_cast<long long>(dataset.data.rows());
        eval.bic_null = bic(*null_fit.log_likelihood, null_fit.n_params, n_obs);
        eval.bic_alt = bic(*alt_fit.log_likelihood, alt_fit.n_params, n_obs);
        const auto bf = bayes_factor(*eval.bic_null, *eval.bic_alt);
        eval.bayes_factor = bf.value;
        if (bf.clamped) warn(&eval.warnings, "Bayes factor clamped");
        if (!alt_fit.converged) {
            eval.flagged = true;
            warn(&eval.warnings, "two-class fit did not converge");
        }
        eval = decide(std::move(eval), DecisionRule::BayesFactorThreshold);
        return out;
    }

    RngStream reduce_rng = root.split(detail::kReduceStream);
    const Embedding embedding = reduce(dataset.data, cell.effective_reducer(), cell.dims, reduce_rng);
    const ClusterSolution sol = fit(cell.method, embedding.coords, cfg);

    eval.rule = DecisionRule::SilhouetteThreshold;
    if (sol.non_empty_clusters() < 2) {
        eval.flagged = true;
        eval.rejected_null = false;
        warn(&eval.warnings, "fit collapsed to a single cluster");
        return out;
    }
    eval.silhouette = silhouette(embedding.coords, sol.hard_labels);
    if (is_fuzzy(cell.method) && sol.soft_memberships)
        eval.fuzzy_silhouette = fuzzy_silhouette(embedding.coords, *sol.soft_memberships, 1.0, &eval.warnings);
    if (!sol.converged) {
        eval.flagged = true;
        warn(&eval.warnings, "fit did not converge");
    }
    eval = decide(std::move(eval), DecisionRule::SilhouetteThreshold);
    return out;
}

// Statistic summarised in PowerEstimate::mean_score.
inline double replicate_score(const ReplicateResult& r) {
    const auto& e = r.evaluation;
    if (e.rule == DecisionRule::BayesFactorThreshold) return e.bayes_factor ? std::log10(*e.bayes_factor) : 0.0;
    if (e.fuzzy_silhouette) return *e.fuzzy_silhouette;
    return e.silhouette.value_or(0.0);
}

inline int default_workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// Runs body(i) for i in [0, count) on up to `workers` threads.
inline void parallel_for(int count, int workers, const std::function<void(int)>& body) {
    workers = std::clamp(workers, 1, std::max(1, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count && !failed; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline PowerEstimate estimate_power(const PowerCell& cell, int workers = 1) {
    cell.validate();
    const auto start = std::chrono::steady_clock::now();
    PowerEstimate est;
    est.cell = cell;
    est.replicates.resize(static_cast<std::size_t>(cell.reps));
    parallel_for(cell.reps, workers, [&](int i) { est.replicates[static_cast<std::size_t>(i)] = run_replicate(cell, i); });

    double score_sum = 0.0;
    for (const auto& r : est.replicates) {
        est.rejections += r.evaluation.rejected_null ? 1 : 0;
        est.flagged += r.evaluation.flagged ? 1 : 0;
        score_sum += replicate_score(r);
    }
    est.power = static_cast<double>(est.rejections) / cell.reps;
    const auto ci = wilson_interval(est.rejections, cell.reps);
    est.ci_low = ci.low;
    est.ci_high = ci.high;
    est.mean_score = score_sum / cell.reps;
    est.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return est;
}

// ---------------------------------------------------------------------------
// Minimal sample-size search
// ---------------------------------------------------------------------------
struct SearchResult {
    std::optional<int> n;  // absent: no grid point reached the target
    std::vector<PowerEstimate> evaluated;
    bool budget_exhausted = false;
};

struct SearchOptions {
    double target_power = kDefaultTargetPower;
    std::vector<int> n_grid = default_n_grid();
    int workers = 1;
    // Replicates this search may still spend; nullopt means unlimited.
    std::optional<long long> replicate_budget;
    std::function<void(const PowerEstimate&)> on_estimate;
};

// Scans the grid upwards from the smallest n.  `base` supplies everything but
// n_per_group.
inline SearchResult min_sample_search(PowerCell base, const SearchOptions& options = {}) {
    if (options.n_grid.empty()) throw std::invalid_argument("sample-size grid is empty");
    if (!std::is_sorted(options.n_grid.begin(), options.n_grid.end()) ||
        std::adjacent_find(options.n_grid.begin(), options.n_grid.end()) != options.n_grid.end())
        throw std::invalid_argument("sample-size grid must be strictly ascending");
    if (!(options.target_power >= 0.0 && options.target_power <= 1.0))
        throw std::invalid_argument("target power must be in [0, 1]");

    SearchResult out;
    long long spent = 0;
    for (int n : options.n_grid) {
        if (options.replicate_budget && spent + base.reps > *options.replicate_budget) {
            out.budget_exhausted = true;
            break;
        }
        base.n_per_group = n;
        auto est = estimate_power(base, options.workers);
        spent += base.reps;
        if (options.on_estimate) options.on_estimate(est);
        const bool reached = est.power >= options.target_power;
        out.evaluated.push_back(std::move(est));
        if (reached) {
            out.n = n;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reference table
// ---------------------------------------------------------------------------
enum class TableStatus { Detected, NoDetection, Skipped };

inline constexpr std::string_view table_status_name(TableStatus s) {
    switch (s) {
        case TableStatus::Detected: return "detected";
        case TableStatus::NoDetection: return "no detection";
        case TableStatus::Skipped: return "skipped";
    }
    return "skipped";
}

struct TableRow {
    Method method = Method::KMeans;
    double lambda = 0.0;
    double delta_target = 0.0;
    int p = 0;
    std::optional<int> n;
    double power = 0.0;  // at n, or at the largest n evaluated
    double ci_low = 0.0;
    double ci_high = 0.0;
    TableStatus status = TableStatus::Skipped;
    bool fewer_features = false;      // detected option with the fewest features
    bool fewer_observations = false;  // detected option with the fewest observations
};

struct TableOptions {
    std::vector<double> delta_targets{3.0, 4.0, 5.0};
    Rounding rounding = Rounding::Nearest;
    long long budget = 20000;  // total replicates across the table
    PowerCell base;            // reps, reducer, seed and fit settings
    SearchOptions search;
    std::function<void(const TableRow&)> on_row;
};

inline std::vector<TableRow> build_reference_table(const std::vector<Method>& methods, const std::vector<double>& lambdas,
                                                   TableOptions options) {
    std::vector<TableRow> rows;
    long long remaining = options.budget;
    for (Method method : methods) {
        for (double lambda : lambdas) {
            const std::size_t family_begin = rows.size();
            for (double delta : options.delta_targets) {
                TableRow row;
                row.method = method;
                row.lambda = lambda;
                row.delta_target = delta;
                row.p = min_features(delta, lambda, options.rounding);

                PowerCell cell = options.base;
                cell.method = method;
                cell.lambda = lambda;
                cell.p = row.p;
                SearchOptions search = options.search;
                search.replicate_budget = remaining;
                auto result = min_sample_search(cell, search);
                remaining -= static_cast<long long>(result.evaluated.size()) * cell.reps;

                if (result.n) {
                    row.status = TableStatus::Detected;
                    row.n = result.n;
                } else {
                    row.status = result.budget_exhausted ? TableStatus::Skipped : TableStatus::NoDetection;
                }
                if (!result.evaluated.empty()) {
                    const auto& last = result.evaluated.back();
                    row.power = last.power;
                    row.ci_low = last.ci_low;
                    row.ci_high = last.ci_high;
                }
                rows.push_back(row);
            }

            // Label the two options of this family.
            TableRow* fewest_p = nullptr;
            TableRow* fewest_n = nullptr;
            for (std::size_t i = family_begin; i < rows.size(); ++i) {
                TableRow& r = rows[i];
                if (r.status != TableStatus::Detected) continue;
                if (!fewest_p || r.p < fewest_p->p || (r.p == fewest_p->p && *r.n < *fewest_p->n)) fewest_p = &r;
                if (!fewest_n || *r.n < *fewest_n->n || (*r.n == *fewest_n->n && r.p < fewest_n->p)) fewest_n = &r;
            }
            if (fewest_p) fewest_p->fewer_features = true;
            if (fewest_n) fewest_n->fewer_observations = true;
            if (options.on_row)
                for (std::size_t i = family_begin; i < rows.size(); ++i) options.on_row(rows[i]);
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Sensitivity analysis for an existing dataset
// ---------------------------------------------------------------------------
inline constexpr double kKMeansDeltaGuideline = 4.0;
inline constexpr double kFuzzyDeltaGuideline = 3.0;

struct SensitivityReport {
    int p_available = 0;
    double lambda = 0.0;
    double delta_hat = 0.0;
    bool kmeans_pass = false;  // delta_hat > 4
    bool kmeans_borderline = false;
    bool cmeans_gmm_pass = false;  // delta_hat > 3
    bool cmeans_gmm_borderline = false;
    int features_for_kmeans = 0;
    int features_for_cmeans_gmm = 0;
    std::string verdict;
};

inline SensitivityReport sensitivity(int p_available, double lambda) {
    SensitivityReport r;
    r.p_available = p_available;
    r.lambda = lambda;
    r.delta_hat = expected_delta(p_available, lambda);
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9 * b; };
    r.kmeans_borderline = near(r.delta_hat, kKMeansDeltaGuideline);
    r.cmeans_gmm_borderline = near(r.delta_hat, kFuzzyDeltaGuideline);
    r.kmeans_pass = r.delta_hat > kKMeansDeltaGuideline && !r.kmeans_borderline;
    r.cmeans_gmm_pass = r.delta_hat > kFuzzyDeltaGuideline && !r.cmeans_gmm_borderline;
    r.features_for_kmeans = min_features(kKMeansDeltaGuideline, lambda, Rounding::Ceil);
    r.features_for_cmeans_gmm = min_features(kFuzzyDeltaGuideline, lambda, Rounding::Ceil);
    if (r.kmeans_pass) {
        r.verdict = "sufficient separation expected for k-means, c-means and Gaussian mixture modelling";
    } else if (r.cmeans_gmm_pass) {
        r.verdict = "sufficient separation expected for c-means and Gaussian mixture modelling, not for k-means";
    } else {
        r.verdict = "subgroup analysis might not be a suitable approach";
    }
    return r;
}

// ---------------------------------------------------------------------------
// Centroid distance before and after dimensionality reduction
// ---------------------------------------------------------------------------
struct CentroidShiftOptions {
    std::vector<double> lambdas{0.75, 1.5, 3.0, 6.0, 12.0};
    std::vector<int> p_values{2, 10, 50, 100};
    Correlation correlation = Independent{};
    std::vector<Reducer> reducers{Reducer::None, Reducer::MDS, Reducer::PCA};
    int reps = 10;
    int n_per_group = 200;
    int dims = 2;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct CentroidShiftRow {
    double lambda = 0.0;
    int p = 0;
    bool correlated = false;
    Reducer reducer = Reducer::None;
    double expected_delta = 0.0;  // planning estimate sqrt(p) / lambda
    double mean_delta = 0.0;
    std::optional<double> sd_delta;  // absent for a single replicate
    int reps = 0;
    std::vector<double> samples;
};

inline std::vector<CentroidShiftRow> centroid_shift_experiment(const CentroidShiftOptions& options) {
    if (options.reps < 1) throw std::invalid_argument("reps must be at least 1");
    if (options.lambdas.empty() || options.p_values.empty() || options.reducers.empty())
        throw std::invalid_argument("centroid shift experiment needs lambdas, p values and reducers");
    const bool correlated = std::holds_alternative<RandomCorrelation>(options.correlation);

    struct Job {
        double lambda;
        int p;
    };
    std::vector<Job> jobs;
    for (double lambda : options.lambdas)
        for (int p : options.p_values) jobs.push_back({lambda, p});

    // samples[job][reducer][rep]
    std::vector<std::vector<std::vector<double>>> samples(
        jobs.size(), std::vector<std::vector<double>>(options.reducers.size(), std::vector<double>(options.reps)));

    const int total = static_cast<int>(jobs.size()) * options.reps;
    parallel_for(total, options.workers, [&](int task) {
        const auto j = static_cast<std::size_t>(task / options.reps);
        const int rep = task % options.reps;
        const Job& job = jobs[j];
        // Every reducer sees the same dataset.
        const RngStream root(derive_seed(options.seed, {std::bit_cast<std::uint64_t>(job.lambda),
                                                        static_cast<std::uint64_t>(job.p), correlated ? 1ULL : 0ULL,
                                                        static_cast<std::uint64_t>(rep)}));
        DatasetSpec spec;
        spec.n_per_group = {options.n_per_group, options.n_per_group};
        spec.p = job.p;
        spec.effects = job.lambda;
        spec.correlation = options.correlation;
        RngStream data_rng = root.split(detail::kDataStream);
        const auto dataset = generate_continuous(spec, data_rng);
        for (std::size_t r = 0; r < options.reducers.size(); ++r) {
            const Reducer reducer = options.reducers[r];
            const int dims = std::min(options.dims, job.p);
            RngStream reduce_rng = root.split(detail::kReduceStream);
            const Matrix coords = reducer == Reducer::None
                                      ? dataset.data
                                      : reduce(dataset.data, reducer, dims, reduce_rng).coords;
            samples[j][r][static_cast<std::size_t>(rep)] = sample_centroid_distance(coords, dataset.labels);
        }
    });

    std::vector<CentroidShiftRow> rows;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        for (std::size_t r = 0; r < options.reducers.size(); ++r) {
            CentroidShiftRow row;
            row.lambda = jobs[j].lambda;
            row.p = jobs[j].p;
            row.correlated = correlated;
            row.reducer = options.reducers[r];
            row.expected_delta = expected_delta(jobs[j].p, jobs[j].lambda);
            row.reps = options.reps;
            row.samples = samples[j][r];
            double sum = 0.0;
            for (double v : row.samples) sum += v;
            row.mean_delta = sum / options.reps;
            if (options.reps > 1) {
                double ss = 0.0;
                for (double v : row.samples) ss += (v - row.mean_delta) * (v - row.mean_delta);
                row.sd_delta = std::sqrt(ss / (options.reps - 1));
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace clusterpower
