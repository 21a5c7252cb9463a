#include <filesystem>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>
#include <clusterpower/io.hpp>

using namespace clusterpower;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "clusterpower_io_tests";
    fs::create_directories(dir);
    const auto path = dir / name;
    fs::remove(path);
    return path;
}

PowerEstimate estimate(int n, std::uint64_t seed) {
    PowerCell c;
    c.n_per_group = n;
    c.reps = 3;
    c.master_seed = seed;
    return estimate_power(c);
}
}  // namespace

TEST_CASE("number formatting", "[io]") {
    CHECK(format_g6(4.0) == "4");
    CHECK(format_g6(1.0 / 3.0) == "0.333333");
    CHECK(std::stod(format_full(0.1)) == 0.1);
}

TEST_CASE("power csv upsert replaces matching rows", "[io]") {
    const auto path = scratch("power.csv");
    const auto a = estimate(30, 1), b = estimate(50, 1);
    upsert_power_csv(path, {a});
    upsert_power_csv(path, {b});
    upsert_power_csv(path, {a});
    const auto lines = read_lines(path);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == kPowerCsvHeader);
    CHECK(lines[1] == power_csv_row(a, false));
    CHECK(lines[2] == power_csv_row(b, false));
    CHECK(split_csv_line(lines[1]).size() == 11);
    CHECK(split_csv_line(lines[1]).back() == "0");
}

TEST_CASE("power json upsert keeps full precision", "[io]") {
    const auto path = scratch("power.json");
    const auto a = estimate(30, 2);
    upsert_power_json(path, json{{"seed", 2}}, {a});
    upsert_power_json(path, json{{"seed", 2}}, {a});
    std::ifstream in(path);
    const auto doc = json::parse(in);
    REQUIRE(doc["results"].size() == 1);
    const auto& row = doc["results"][0];
    CHECK(row["power"].get<double>() == a.power);
    CHECK(row["ci_low"].get<double>() == a.ci_low);
    CHECK(row["replicates"].size() == 3);
    // The CSV row carries the same values rounded to six digits.
    const auto fields = split_csv_line(power_csv_row(a, false));
    CHECK(fields[7] == format_g6(row["ci_low"].get<double>()));
}

TEST_CASE("upsert refuses foreign files", "[io]") {
    const auto path = scratch("foreign.csv");
    write_text(path, "a,b\n1,2\n");
    CHECK_THROWS(upsert_power_csv(path, {estimate(30, 1)}));
}

TEST_CASE("dataset round trip", "[io]") {
    DatasetSpec spec;
    spec.p = 4;
    spec.n_per_group = {6, 9};
    spec.effects = 1.0;
    spec.seed = 3;
    const auto ds = generate(spec);
    const auto path = scratch("data.csv");
    save_dataset(path, ds);
    const auto back = load_dataset(path);
    CHECK(back.data == ds.data);
    CHECK(back.labels == ds.labels);
    CHECK(back.feature_kind == FeatureKind::Continuous);

    spec.feature_kind = FeatureKind::Binary;
    save_dataset(path, generate(spec));
    CHECK(load_dataset(path).feature_kind == FeatureKind::Binary);

    write_text(path, "f1,label\n1.0\n");
    CHECK_THROWS(load_dataset(path));
}

TEST_CASE("config parsing", "[io]") {
    std::istringstream in("# comment\n[other]\nreps = 3\n[defaults]\nreps = 100\n; note\nmethod=gmm\n\n");
    const auto cfg = parse_config(in);
    CHECK(cfg.at("reps") == "100");
    CHECK(cfg.at("method") == "gmm");
    CHECK(cfg.size() == 2);
    std::istringstream bad("[defaults]\nno equals sign\n");
    CHECK_THROWS(parse_config(bad));
}

TEST_CASE("effect curves", "[io]") {
    const auto pts = effect_curves({1.5, 12.0});
    auto first_reaching = [&](double lambda) {
        for (const auto& pt : pts)
            if (pt.lambda == lambda && pt.delta_hat >= 4.0 - 1e-12) return pt;
        return EffectCurvePoint{};
    };
    CHECK(first_reaching(1.5).p == 36);
    CHECK(first_reaching(1.5).delta_hat == Catch::Approx(4.0));
    CHECK(first_reaching(12.0).p == 2304);
    CHECK(first_reaching(12.0).p >= 500);
    CHECK(first_reaching(12.0).p <= 2500);
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].lambda == pts[i - 1].lambda) CHECK(pts[i].p > pts[i - 1].p);
    CHECK(pts.front().p == 1);
    CHECK(pts.back().p == 10000);
    CHECK_THROWS(effect_curves({}));
}
