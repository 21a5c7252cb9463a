// clusterpower: sample-size and power planning for subgroup analyses.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <clusterpower/clusterpower.hpp>

namespace cp = clusterpower;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parsed flags of every subcommand; unused fields keep their defaults.
struct RunConfig {
    std::string config_path;
    std::string format = "csv";
    std::string out;
    std::optional<std::uint64_t> seed;
    int workers = cp::default_workers();
    bool timing = false;

    int features = 0;
    double lambda = 0.0;
    double delta = 0.0;
    bool ceil = false;

    std::string method = "kmeans";
    std::vector<std::string> methods;
    std::vector<double> lambdas;
    std::vector<double> deltas{3.0, 4.0, 5.0};
    int n = 0;
    int p = 0;
    int reps = 50;
    std::string reducer = "pca";
    int restarts = 10;
    bool null_effects = false;
    double correlation = 0.0;
    double target_power = cp::kDefaultTargetPower;
    std::vector<int> grid = cp::default_n_grid();
    long long budget = 20000;

    std::string which;
    int p_max = 10000;
    std::vector<int> p_values{2, 10, 50, 100};
    std::vector<std::string> reducers{"none", "mds", "pca"};

    std::vector<double> proportions{0.5, 0.5};
    std::vector<int> group_sizes{30, 30};
    std::vector<double> effects;
    bool binary = false;
    std::string data_path;
    int k = 2;
};

const std::map<std::string, cp::Reducer> kReducers{{"none", cp::Reducer::None},
                                                   {"pca", cp::Reducer::PCA},
                                                   {"mds", cp::Reducer::MDS},
                                                   {"cmds", cp::Reducer::ClassicalMDS}};

std::vector<std::string> method_names() {
    std::vector<std::string> names;
    for (auto m : cp::kAllMethods) names.emplace_back(cp::method_name(m));
    return names;
}

cp::Method to_method(const std::string& name) {
    if (auto m = cp::parse_method(name)) return *m;
    throw UsageError("unknown method: " + name);
}

std::uint64_t resolve_seed(RunConfig& cfg) {
    if (!cfg.seed) {
        std::random_device rd;
        cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        std::cerr << "seed=" << *cfg.seed << '\n';
    }
    return *cfg.seed;
}

void require(bool condition, const std::string& message) {
    if (!condition) throw UsageError(message);
}

std::string g6(double v) { return cp::format_g6(v); }

cp::json config_json(const RunConfig& cfg, const std::string& command) {
    return cp::json{{"command", command},   {"seed", cfg.seed.value_or(0)}, {"reps", cfg.reps},
                    {"reducer", cfg.reducer}, {"restarts", cfg.restarts},   {"target_power", cfg.target_power}};
}

cp::PowerCell base_cell(RunConfig& cfg) {
    cp::PowerCell cell;
    cell.method = to_method(cfg.method);
    cell.n_per_group = cfg.n;
    cell.p = cfg.p;
    cell.lambda = cfg.lambda;
    cell.reps = cfg.reps;
    cell.reducer = kReducers.at(cfg.reducer);
    cell.master_seed = resolve_seed(cfg);
    cell.fit.restarts = cfg.restarts;
    if (cfg.null_effects && cfg.p > 0) cell.fixed_effects = cp::EffectVector::zeros(static_cast<std::size_t>(cfg.p));
    if (cfg.correlation > 0.0) cell.correlation = cp::RandomCorrelation{cfg.correlation};
    return cell;
}

void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.out.empty()) std::cout << text;
    else cp::write_text(cfg.out, text);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------
int cmd_delta(RunConfig& cfg) {
    require(cfg.features >= 1 && cfg.lambda > 0.0, "delta needs --features >= 1 and --lambda > 0");
    const double d = cp::expected_delta(cfg.features, cfg.lambda);
    char line[64];
    std::snprintf(line, sizeof(line), "delta_hat=%.3f", d);
    std::cout << line << '\n'
              << "per_feature_mean=" << g6(cp::mean_effect(cfg.lambda)) << " ("
              << cp::interpret_delta(cp::mean_effect(cfg.lambda)) << ")\n"
              << "context=" << cp::EffectContext::from_lambda(cfg.lambda).name() << '\n';
    return 0;
}

int cmd_features(RunConfig& cfg) {
    require(cfg.delta > 0.0 && cfg.lambda > 0.0, "features needs --delta > 0 and --lambda > 0");
    std::cout << cp::min_features(cfg.delta, cfg.lambda, cfg.ceil ? cp::Rounding::Ceil : cp::Rounding::Nearest) << '\n';
    return 0;
}

void write_estimates(const RunConfig& cfg, const std::string& command, const std::vector<cp::PowerEstimate>& estimates) {
    if (cfg.out.empty()) {
        if (cfg.format == "json") {
            cp::json results = cp::json::array();
            for (const auto& e : estimates) results.push_back(cp::to_json(e, cfg.timing));
            std::cout << cp::json{{"config", config_json(cfg, command)}, {"results", results}}.dump(2) << '\n';
        } else {
            std::cout << cp::kPowerCsvHeader << '\n';
            for (const auto& e : estimates) std::cout << cp::power_csv_row(e, cfg.timing) << '\n';
        }
        return;
    }
    if (cfg.format == "json") cp::upsert_power_json(cfg.out, config_json(cfg, command), estimates, cfg.timing);
    else cp::upsert_power_csv(cfg.out, estimates, cfg.timing);
}

std::string summary(const cp::PowerEstimate& e) {
    std::ostringstream s;
    s << "method=" << cp::method_name(e.cell.method) << " n=" << e.cell.n_per_group << " p=" << e.cell.p
      << " lambda=" << g6(e.cell.lambda) << " reps=" << e.cell.reps << " rejections=" << e.rejections
      << " power=" << g6(e.power) << " ci95=[" << g6(e.ci_low) << "," << g6(e.ci_high) << "]";
    if (e.flagged > 0) s << " flagged=" << e.flagged;
    return s.str();
}

int cmd_power(RunConfig& cfg) {
    require(cfg.n >= 1 && cfg.p >= 1 && cfg.lambda > 0.0, "power needs --n, --p and --lambda");
    const auto cell = base_cell(cfg);
    const auto est = cp::estimate_power(cell, cfg.workers);
    (cfg.out.empty() ? std::cerr : std::cout) << summary(est) << '\n';
    write_estimates(cfg, "power", {est});
    return 0;
}

int cmd_search(RunConfig& cfg) {
    require(cfg.p >= 1 && cfg.lambda > 0.0, "search needs --p and --lambda");
    auto cell = base_cell(cfg);
    cp::SearchOptions options;
    options.target_power = cfg.target_power;
    options.n_grid = cfg.grid;
    options.workers = cfg.workers;
    options.on_estimate = [](const cp::PowerEstimate& e) { std::cerr << summary(e) << '\n'; };
    const auto result = cp::min_sample_search(cell, options);
    std::cout << (result.n ? std::to_string(*result.n) : std::string("no detection")) << '\n';
    if (!cfg.out.empty()) write_estimates(cfg, "search", result.evaluated);
    return 0;
}

int cmd_table(RunConfig& cfg) {
    require(!cfg.lambdas.empty(), "table needs --lambdas");
    require(!cfg.methods.empty(), "table needs --methods");
    std::vector<cp::Method> methods;
    for (const auto& m : cfg.methods) methods.push_back(to_method(m));
    cp::TableOptions options;
    options.delta_targets = cfg.deltas;
    options.budget = cfg.budget;
    options.base = base_cell(cfg);
    options.search.target_power = cfg.target_power;
    options.search.n_grid = cfg.grid;
    options.search.workers = cfg.workers;
    const std::size_t total = methods.size() * cfg.lambdas.size() * cfg.deltas.size();
    std::size_t done = 0;
    options.on_row = [&](const cp::TableRow&) { std::cerr << "cells " << ++done << "/" << total << '\n'; };
    const auto rows = cp::build_reference_table(methods, cfg.lambdas, options);
    emit(cfg, cp::reference_table_csv(rows));
    return 0;
}

int cmd_figure(RunConfig& cfg) {
    require(!cfg.lambdas.empty(), "figure needs at least one --lambdas value");
    if (cfg.which == "effect-curves") {
        emit(cfg, cp::effect_curves_csv(cp::effect_curves(cfg.lambdas, cfg.p_max)));
        return 0;
    }
    require(cfg.which == "centroid-shift", "unknown figure: " + cfg.which);
    require(!cfg.p_values.empty() && !cfg.reducers.empty(), "centroid-shift needs --ps and --reducers");
    cp::CentroidShiftOptions options;
    options.lambdas = cfg.lambdas;
    options.p_values = cfg.p_values;
    options.reducers.clear();
    for (const auto& r : cfg.reducers) options.reducers.push_back(kReducers.at(r));
    if (cfg.correlation > 0.0) options.correlation = cp::RandomCorrelation{cfg.correlation};
    options.reps = cfg.reps;
    options.n_per_group = cfg.n > 0 ? cfg.n : 200;
    options.seed = resolve_seed(cfg);
    options.workers = cfg.workers;
    emit(cfg, cp::centroid_shift_csv(cp::centroid_shift_experiment(options)));
    return 0;
}

int cmd_sensitivity(RunConfig& cfg) {
    require(cfg.features >= 1 && cfg.lambda > 0.0, "sensitivity needs --features >= 1 and --lambda > 0");
    const auto r = cp::sensitivity(cfg.features, cfg.lambda);
    auto verdict = [](bool pass, bool borderline) { return pass ? "pass" : borderline ? "borderline" : "fail"; };
    std::cout << "delta_hat=" << g6(r.delta_hat) << '\n'
              << "kmeans(delta>4)=" << verdict(r.kmeans_pass, r.kmeans_borderline) << '\n'
              << "cmeans_gmm(delta>3)=" << verdict(r.cmeans_gmm_pass, r.cmeans_gmm_borderline) << '\n'
              << "features_needed_kmeans=" << r.features_for_kmeans << '\n'
              << "features_needed_cmeans_gmm=" << r.features_for_cmeans_gmm << '\n'
              << "verdict=" << r.verdict << '\n';
    return 0;
}

int cmd_total(RunConfig& cfg) {
    require(cfg.n >= 1, "total needs --n");
    long long total = 0;
    try {
        total = cp::total_sample(cfg.n, cfg.proportions);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    std::cout << "total=" << total << '\n';
    if (cfg.features >= 1) {
        const auto rules = cp::legacy_sample_rules(cfg.features);
        std::cout << "rule_70p=" << rules.dolnicar << '\n' << "rule_2p=" << rules.formann << '\n';
    }
    return 0;
}

int cmd_simulate(RunConfig& cfg) {
    require(!cfg.group_sizes.empty(), "simulate needs --groups");
    cp::DatasetSpec spec;
    spec.n_per_group = cfg.group_sizes;
    if (!cfg.effects.empty()) {
        spec.p = static_cast<int>(cfg.effects.size());
        spec.effects = cp::EffectVector(cfg.effects);
    } else {
        require(cfg.p >= 1 && cfg.lambda > 0.0, "simulate needs --p and --lambda, or --effects");
        spec.p = cfg.p;
        spec.effects = cfg.lambda;
    }
    spec.feature_kind = cfg.binary ? cp::FeatureKind::Binary : cp::FeatureKind::Continuous;
    if (cfg.correlation > 0.0) spec.correlation = cp::RandomCorrelation{cfg.correlation};
    spec.seed = resolve_seed(cfg);
    const auto ds = cp::generate(spec);
    std::cerr << "realized_delta=" << g6(ds.realized_delta) << '\n';
    emit(cfg, cp::dataset_csv(ds));
    return 0;
}

int cmd_evaluate(RunConfig& cfg) {
    require(!cfg.data_path.empty(), "evaluate needs --data");
    const auto ds = cp::load_dataset(cfg.data_path);
    const auto method = to_method(cfg.method);
    cp::FitConfig fit;
    fit.k = cfg.k;
    fit.restarts = cfg.restarts;
    fit.seed = resolve_seed(cfg);

    if (method == cp::Method::LCA) {
        require(ds.feature_kind == cp::FeatureKind::Binary, "lca needs 0/1 data");
        cp::FitConfig null_fit = fit;
        null_fit.k = 1;
        const auto h0 = cp::lca(ds.data, null_fit);
        const auto h1 = cp::lca(ds.data, fit);
        cp::EvaluationResult e;
        e.bic_null = cp::bic(*h0.log_likelihood, h0.n_params, ds.data.rows());
        e.bic_alt = cp::bic(*h1.log_likelihood, h1.n_params, ds.data.rows());
        e = cp::decide(e, cp::DecisionRule::BayesFactorThreshold);
        std::cout << "bic_null=" << g6(*e.bic_null) << "\nbic_alt=" << g6(*e.bic_alt)
                  << "\nbayes_factor=" << g6(*e.bayes_factor) << "\nrejected_null=" << (e.rejected_null ? 1 : 0) << '\n';
        return 0;
    }

    cp::RngStream rng(fit.seed);
    const int dims = std::min<int>(2, static_cast<int>(ds.data.cols()));
    const auto emb = cp::reduce(ds.data, kReducers.at(cfg.reducer), dims, rng);
    const auto sol = cp::fit(method, emb.coords, fit);
    require(sol.non_empty_clusters() >= 2, "fit collapsed to a single cluster");
    cp::EvaluationResult e;
    e.silhouette = cp::silhouette(emb.coords, sol.hard_labels);
    if (cp::is_fuzzy(method) && sol.soft_memberships)
        e.fuzzy_silhouette = cp::fuzzy_silhouette(emb.coords, *sol.soft_memberships);
    e = cp::decide(e, cp::DecisionRule::SilhouetteThreshold);
    std::cout << "silhouette=" << g6(*e.silhouette) << '\n';
    if (e.fuzzy_silhouette) std::cout << "fuzzy_silhouette=" << g6(*e.fuzzy_silhouette) << '\n';
    if (cfg.k == 2 && ds.groups() == 2) {
        // Agreement with the stored labels, up to swapping the two clusters.
        std::size_t same = 0;
        for (std::size_t i = 0; i < ds.labels.size(); ++i) same += sol.hard_labels[i] == ds.labels[i] ? 1 : 0;
        const double acc = static_cast<double>(std::max(same, ds.labels.size() - same)) / ds.labels.size();
        std::cout << "label_agreement=" << g6(acc) << '\n';
    }
    std::cout << "rejected_null=" << (e.rejected_null ? 1 : 0) << '\n';
    return 0;
}

// Fills options the user did not pass from the config file's [defaults].
void apply_config(CLI::App* sub, const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        CLI::Option* opt = nullptr;
        try {
            opt = sub->get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
            continue;
        }
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sample-size and power planning for subgroup analyses"};
    app.require_subcommand(1);
    RunConfig cfg;

    const auto method_check = CLI::IsMember(method_names());
    const auto reducer_check = CLI::IsMember({"none", "pca", "mds", "cmds"});
    const auto positive_int = CLI::Range(1, std::numeric_limits<int>::max());

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cfg.config_path, "key = value file with a [defaults] section")->check(CLI::ExistingFile);
        sub->add_option("--seed", cfg.seed, "master seed (random and echoed when omitted)");
        sub->add_option("--workers", cfg.workers, "worker threads")->check(positive_int)->capture_default_str();
        sub->add_option("--out", cfg.out, "output file (stdout when omitted)");
    };
    auto add_cell = [&](CLI::App* sub) {
        sub->add_option("--method", cfg.method, "kmeans|ward|cmeans|lca|lpa|gmm")->check(method_check)->capture_default_str();
        sub->add_option("--p", cfg.p, "number of features")->check(positive_int);
        sub->add_option("--lambda", cfg.lambda, "exponential rate of per-feature effects")->check(CLI::PositiveNumber);
        sub->add_option("--reps", cfg.reps, "replicates per cell")->check(positive_int)->capture_default_str();
        sub->add_option("--reducer", cfg.reducer, "none|pca|mds|cmds")->check(reducer_check)->capture_default_str();
        sub->add_option("--restarts", cfg.restarts, "restarts per fit")->check(positive_int)->capture_default_str();
        sub->add_option("--format", cfg.format, "csv|json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        sub->add_option("--correlation", cfg.correlation, "feature correlation strength in [0,1)")
            ->check(CLI::Range(0.0, 0.999999));
        sub->add_flag("--null", cfg.null_effects, "use zero effects (single-group data)");
        sub->add_flag("--timing", cfg.timing, "record runtime_s (breaks byte-identical reruns)");
        add_common(sub);
    };

    auto* delta = app.add_subcommand("delta", "estimated centroid distance for p features");
    delta->add_option("--features", cfg.features, "number of features")->check(positive_int);
    delta->add_option("--lambda", cfg.lambda, "exponential rate")->check(CLI::PositiveNumber);
    delta->add_option("--config", cfg.config_path)->check(CLI::ExistingFile);

    auto* features = app.add_subcommand("features", "features needed for a target centroid distance");
    features->add_option("--delta", cfg.delta, "target centroid distance")->check(CLI::PositiveNumber);
    features->add_option("--lambda", cfg.lambda, "exponential rate")->check(CLI::PositiveNumber);
    features->add_flag("--ceil", cfg.ceil, "round up instead of to nearest");
    features->add_option("--config", cfg.config_path)->check(CLI::ExistingFile);

    auto* power = app.add_subcommand("power", "Monte-Carlo power for one cell");
    add_cell(power);
    power->add_option("--n", cfg.n, "observations per subgroup")->check(positive_int);

    auto* search = app.add_subcommand("search", "smallest n per subgroup reaching the target power");
    add_cell(search);
    search->add_option("--power", cfg.target_power, "target power")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    search->add_option("--grid", cfg.grid, "ascending n grid")->delimiter(',')->check(positive_int);

    auto* table = app.add_subcommand("table", "reference table of minimal n and p");
    add_cell(table);
    table->add_option("--methods", cfg.methods, "methods")->delimiter(',')->check(method_check);
    table->add_option("--lambdas", cfg.lambdas, "exponential rates")->delimiter(',')->check(CLI::PositiveNumber);
    table->add_option("--deltas", cfg.deltas, "target centroid distances")->delimiter(',')->check(CLI::PositiveNumber);
    table->add_option("--budget", cfg.budget, "maximum total replicates")->check(CLI::NonNegativeNumber)->capture_default_str();
    table->add_option("--power", cfg.target_power, "target power")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    table->add_option("--grid", cfg.grid, "ascending n grid")->delimiter(',')->check(positive_int);

    auto* figure = app.add_subcommand("figure", "plot data: effect-curves or centroid-shift");
    figure->add_option("--which", cfg.which, "effect-curves|centroid-shift");
    figure->add_option("--lambdas", cfg.lambdas, "exponential rates")->delimiter(',')->check(CLI::PositiveNumber);
    figure->add_option("--pmax", cfg.p_max, "largest p for effect curves")->check(positive_int)->capture_default_str();
    figure->add_option("--ps", cfg.p_values, "feature counts for centroid-shift")->delimiter(',')->check(positive_int);
    figure->add_option("--reducers", cfg.reducers, "reducers for centroid-shift")->delimiter(',')->check(reducer_check);
    figure->add_option("--correlation", cfg.correlation, "feature correlation strength in [0,1)")
        ->check(CLI::Range(0.0, 0.999999));
    figure->add_option("--reps", cfg.reps, "replicates")->check(positive_int);
    figure->add_option("--n", cfg.n, "observations per subgroup (default 200)")->check(positive_int);
    add_common(figure);

    auto* sens = app.add_subcommand("sensitivity", "feasibility check for an existing set of features");
    sens->add_option("--features", cfg.features, "usable features")->check(positive_int);
    sens->add_option("--lambda", cfg.lambda, "exponential rate")->check(CLI::PositiveNumber);
    sens->add_option("--config", cfg.config_path)->check(CLI::ExistingFile);

    auto* total = app.add_subcommand("total", "total sample from per-subgroup n and subgroup proportions");
    total->add_option("--n", cfg.n, "observations per subgroup")->check(positive_int);
    total->add_option("--proportions", cfg.proportions, "subgroup shares summing to 1")->delimiter(',');
    total->add_option("--features", cfg.features, "also print the 70p and 2^p rules")->check(positive_int);

    auto* simulate = app.add_subcommand("simulate", "write a simulated dataset as CSV");
    simulate->add_option("--groups", cfg.group_sizes, "observations per group")->delimiter(',')->check(positive_int);
    simulate->add_option("--p", cfg.p, "number of features")->check(positive_int);
    simulate->add_option("--lambda", cfg.lambda, "exponential rate")->check(CLI::PositiveNumber);
    simulate->add_option("--effects", cfg.effects, "fixed per-feature effects")->delimiter(',');
    simulate->add_flag("--binary", cfg.binary, "binary features");
    simulate->add_option("--correlation", cfg.correlation, "correlation strength")->check(CLI::Range(0.0, 0.999999));
    add_common(simulate);

    auto* evaluate = app.add_subcommand("evaluate", "fit a method to a dataset CSV and apply the decision rule");
    evaluate->add_option("--data", cfg.data_path, "dataset CSV (f1..fp,label)")->check(CLI::ExistingFile);
    evaluate->add_option("--method", cfg.method, "method")->check(method_check)->capture_default_str();
    evaluate->add_option("--k", cfg.k, "clusters")->check(CLI::Range(2, 1000))->capture_default_str();
    evaluate->add_option("--reducer", cfg.reducer, "none|pca|mds|cmds")->check(reducer_check)->capture_default_str();
    evaluate->add_option("--restarts", cfg.restarts, "restarts per fit")->check(positive_int)->capture_default_str();
    add_common(evaluate);

    try {
        app.parse(argc, argv);
        CLI::App* sub = app.get_subcommands().front();
        if (!cfg.config_path.empty()) apply_config(sub, cp::load_config(cfg.config_path));

        const std::string name = sub->get_name();
        if (name == "delta") return cmd_delta(cfg);
        if (name == "features") return cmd_features(cfg);
        if (name == "power") return cmd_power(cfg);
        if (name == "search") return cmd_search(cfg);
        if (name == "table") return cmd_table(cfg);
        if (name == "figure") return cmd_figure(cfg);
        if (name == "sensitivity") return cmd_sensitivity(cfg);
        if (name == "total") return cmd_total(cfg);
        if (name == "simulate") return cmd_simulate(cfg);
        if (name == "evaluate") return cmd_evaluate(cfg);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
