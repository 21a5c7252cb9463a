#pragma once

// File formats: power-estimate CSV/JSON, reference tables, plot data,
// dataset dumps and the key = value config file.
//
// CSV floats are written with 6 significant digits; JSON keeps full double
// precision.  Power-estimate files are upserted: rows whose key (method, n,
// p, lambda, reps, seed) matches a new estimate are replaced in place, other
// rows are kept.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "datagen.hpp"
#include "power.hpp"

namespace clusterpower {

using json = nlohmann::json;

inline std::string format_g6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

inline std::string format_full(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Power estimates
// ---------------------------------------------------------------------------
inline constexpr const char* kPowerCsvHeader = "method,n,p,lambda,reps,rejections,power,ci_low,ci_high,seed,runtime_s";

// runtime_s is written only when timing is requested; otherwise 0 so that
// seeded runs produce byte-identical files.
inline std::string power_csv_row(const PowerEstimate& est, bool with_timing) {
    const auto& c = est.cell;
    std::ostringstream row;
    row << method_name(c.method) << ',' << c.n_per_group << ',' << c.p << ',' << format_g6(c.lambda) << ',' << c.reps
        << ',' << est.rejections << ',' << format_g6(est.power) << ',' << format_g6(est.ci_low) << ','
        << format_g6(est.ci_high) << ',' << c.master_seed << ',' << format_g6(with_timing ? est.runtime_seconds : 0.0);
    return row.str();
}

inline std::string power_row_key(const std::vector<std::string>& fields) {
    // method, n, p, lambda, reps, seed
    if (fields.size() < 11) return {};
    return fields[0] + '|' + fields[1] + '|' + fields[2] + '|' + fields[3] + '|' + fields[4] + '|' + fields[9];
}

inline void upsert_power_csv(const std::filesystem::path& path, const std::vector<PowerEstimate>& estimates,
                             bool with_timing = false) {
    std::vector<std::string> rows;
    if (std::filesystem::exists(path)) {
        auto lines = read_lines(path);
        if (!lines.empty() && lines.front() != kPowerCsvHeader)
            throw std::runtime_error(path.string() + " is not a power-estimate CSV");
        for (std::size_t i = 1; i < lines.size(); ++i)
            if (!lines[i].empty()) rows.push_back(lines[i]);
    }
    for (const auto& est : estimates) {
        const std::string row = power_csv_row(est, with_timing);
        const std::string key = power_row_key(split_csv_line(row));
        bool replaced = false;
        for (auto& existing : rows) {
            if (power_row_key(split_csv_line(existing)) == key) {
                existing = row;
                replaced = true;
            }
        }
        if (!replaced) rows.push_back(row);
    }
    std::string text = std::string(kPowerCsvHeader) + '\n';
    for (const auto& r : rows) text += r + '\n';
    write_text(path, text);
}

inline json optional_json(const std::optional<double>& value) { return value ? json(*value) : json(nullptr); }

inline json to_json(const ReplicateResult& r) {
    const auto& e = r.evaluation;
    return json{{"index", r.index},
                {"realized_delta", r.realized_delta},
                {"silhouette", optional_json(e.silhouette)},
                {"fuzzy_silhouette", optional_json(e.fuzzy_silhouette)},
                {"bic_null", optional_json(e.bic_null)},
                {"bic_alt", optional_json(e.bic_alt)},
                {"bayes_factor", optional_json(e.bayes_factor)},
                {"rule", std::string(rule_name(e.rule))},
                {"rejected_null", e.rejected_null},
                {"flagged", e.flagged},
                {"warnings", e.warnings}};
}

inline json to_json(const PowerEstimate& est, bool with_timing) {
    const auto& c = est.cell;
    json replicates = json::array();
    for (const auto& r : est.replicates) replicates.push_back(to_json(r));
    return json{{"method", std::string(method_name(c.method))},
                {"n", c.n_per_group},
                {"p", c.p},
                {"lambda", c.lambda},
                {"reps", c.reps},
                {"rejections", est.rejections},
                {"power", est.power},
                {"ci_low", est.ci_low},
                {"ci_high", est.ci_high},
                {"seed", c.master_seed},
                {"runtime_s", with_timing ? est.runtime_seconds : 0.0},
                {"reducer", std::string(reducer_name(c.effective_reducer()))},
                {"flagged", est.flagged},
                {"mean_score", est.mean_score},
                {"replicates", std::move(replicates)}};
}

inline std::string json_row_key(const json& row) {
    return row.at("method").get<std::string>() + '|' + std::to_string(row.at("n").get<long long>()) + '|' +
           std::to_string(row.at("p").get<long long>()) + '|' + format_full(row.at("lambda").get<double>()) + '|' +
           std::to_string(row.at("reps").get<long long>()) + '|' + std::to_string(row.at("seed").get<std::uint64_t>());
}

inline void upsert_power_json(const std::filesystem::path& path, const json& config,
                              const std::vector<PowerEstimate>& estimates, bool with_timing = false) {
    json doc{{"config", config}, {"results", json::array()}};
    if (std::filesystem::exists(path)) {
        std::ifstream in(path);
        json existing = json::parse(in);
        if (!existing.contains("results") || !existing["results"].is_array())
            throw std::runtime_error(path.string() + " is not a power-estimate JSON file");
        doc["results"] = existing["results"];
    }
    for (const auto& est : estimates) {
        json row = to_json(est, with_timing);
        const std::string key = json_row_key(row);
        bool replaced = false;
        for (auto& existing : doc["results"]) {
            if (json_row_key(existing) == key) {
                existing = row;
                replaced = true;
            }
        }
        if (!replaced) doc["results"].push_back(std::move(row));
    }
    write_text(path, doc.dump(2) + '\n');
}

// ---------------------------------------------------------------------------
// Reference table and plot data
// ---------------------------------------------------------------------------
inline std::string reference_table_csv(const std::vector<TableRow>& rows) {
    std::string text = "method,lambda,delta_target,p,n,power,ci_low,ci_high,status,fewer_features,fewer_observations\n";
    for (const auto& r : rows) {
        text += std::string(method_name(r.method)) + ',' + format_g6(r.lambda) + ',' + format_g6(r.delta_target) + ',' +
                std::to_string(r.p) + ',' + (r.n ? std::to_string(*r.n) : std::string()) + ',' + format_g6(r.power) +
                ',' + format_g6(r.ci_low) + ',' + format_g6(r.ci_high) + ',' + std::string(table_status_name(r.status)) +
                ',' + (r.fewer_features ? "1" : "0") + ',' + (r.fewer_observations ? "1" : "0") + '\n';
    }
    return text;
}

struct EffectCurvePoint {
    double lambda = 0.0;
    int p = 0;
    double delta_hat = 0.0;
};

// Planning estimate over log-spaced feature counts in [1, p_max].
inline std::vector<EffectCurvePoint> effect_curves(const std::vector<double>& lambdas, int p_max = 10000,
                                                   int points_per_decade = 20) {
    if (lambdas.empty()) throw std::invalid_argument("no lambda values given");
    if (p_max < 1 || points_per_decade < 1) throw std::invalid_argument("invalid curve resolution");
    std::vector<int> ps;
    const double decades = std::log10(static_cast<double>(p_max));
    const int steps = static_cast<int>(std::ceil(decades * points_per_decade));
    for (int s = 0; s <= steps; ++s) {
        const int p = static_cast<int>(std::lround(std::pow(10.0, decades * s / std::max(steps, 1))));
        if (ps.empty() || p != ps.back()) ps.push_back(std::clamp(p, 1, p_max));
    }
    std::vector<EffectCurvePoint> out;
    for (double lambda : lambdas) {
        // Add the exact crossings of the usual separation targets.
        std::vector<int> curve = ps;
        for (double target : {3.0, 4.0, 5.0}) {
            const int p = min_features(target, lambda);
            if (p <= p_max) curve.push_back(p);
        }
        std::sort(curve.begin(), curve.end());
        curve.erase(std::unique(curve.begin(), curve.end()), curve.end());
        for (int p : curve) out.push_back({lambda, p, expected_delta(p, lambda)});
    }
    return out;
}

inline std::string effect_curves_csv(const std::vector<EffectCurvePoint>& points) {
    std::string text = "lambda,p,delta_hat\n";
    for (const auto& pt : points)
        text += format_g6(pt.lambda) + ',' + std::to_string(pt.p) + ',' + format_g6(pt.delta_hat) + '\n';
    return text;
}

inline std::string centroid_shift_csv(const std::vector<CentroidShiftRow>& rows) {
    std::string text = "lambda,p,correlated,reducer,expected_delta,mean_delta,sd_delta,reps\n";
    for (const auto& r : rows) {
        text += format_g6(r.lambda) + ',' + std::to_string(r.p) + ',' + (r.correlated ? "1" : "0") + ',' +
                std::string(reducer_name(r.reducer)) + ',' + format_g6(r.expected_delta) + ',' +
                format_g6(r.mean_delta) + ',' + (r.sd_delta ? format_g6(*r.sd_delta) : std::string()) + ',' +
                std::to_string(r.reps) + '\n';
    }
    return text;
}

// ---------------------------------------------------------------------------
// Dataset dump: header f1..fp,label; full precision values
// ---------------------------------------------------------------------------
inline std::string dataset_csv(const LabeledDataset& ds) {
    std::string text;
    for (Eigen::Index j = 0; j < ds.data.cols(); ++j) text += 'f' + std::to_string(j + 1) + ',';
    text += "label\n";
    for (Eigen::Index i = 0; i < ds.data.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.data.cols(); ++j) text += format_full(ds.data(i, j)) + ',';
        text += std::to_string(ds.labels[static_cast<std::size_t>(i)]) + '\n';
    }
    return text;
}

inline void save_dataset(const std::filesystem::path& path, const LabeledDataset& ds) { write_text(path, dataset_csv(ds)); }

// Loads data and labels; effect information is not stored in the file.
inline LabeledDataset load_dataset(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw std::runtime_error(path.string() + " is empty");
    const auto header = split_csv_line(lines.front());
    if (header.size() < 2 || header.back() != "label") throw std::runtime_error("dataset header must end with 'label'");
    const auto p = static_cast<Eigen::Index>(header.size() - 1);
    for (Eigen::Index j = 0; j < p; ++j)
        if (header[static_cast<std::size_t>(j)] != 'f' + std::to_string(j + 1))
            throw std::runtime_error("dataset header must be f1..fp,label");

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i)
        if (!lines[i].empty()) rows.push_back(split_csv_line(lines[i]));

    LabeledDataset ds;
    ds.data.resize(static_cast<Eigen::Index>(rows.size()), p);
    ds.labels.resize(rows.size());
    bool binary = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != header.size())
            throw std::runtime_error("row " + std::to_string(i + 2) + " has the wrong number of fields");
        for (Eigen::Index j = 0; j < p; ++j) {
            const double v = std::stod(rows[i][static_cast<std::size_t>(j)]);
            ds.data(static_cast<Eigen::Index>(i), j) = v;
            binary = binary && (v == 0.0 || v == 1.0);
        }
        ds.labels[i] = std::stoi(rows[i].back());
    }
    ds.feature_kind = binary && !rows.empty() ? FeatureKind::Binary : FeatureKind::Continuous;
    return ds;
}

// ---------------------------------------------------------------------------
// Config file: key = value lines under a [defaults] section
// ---------------------------------------------------------------------------
inline std::map<std::string, std::string> parse_config(std::istream& in) {
    auto trim = [](std::string s) {
        const auto first = s.find_first_not_of(" \t");
        if (first == std::string::npos) return std::string();
        const auto last = s.find_last_not_of(" \t\r");
        return s.substr(first, last - first + 1);
    };
    std::map<std::string, std::string> values;
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw std::runtime_error("config line " + std::to_string(line_no) + ": bad section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
        if (section != "defaults") continue;
        values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return values;
}

inline std::map<std::string, std::string> load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    return parse_config(in);
}

}  // namespace clusterpower
