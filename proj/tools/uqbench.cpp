// uqbench: synthetic data generation, dataset dumps, benchmark grid runs,
// reports and coverage-drift monitoring.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "uqt/bench.hpp"
#include "uqt/csv.hpp"
#include "uqt/dataset.hpp"
#include "uqt/error.hpp"
#include "uqt/metrics.hpp"
#include "uqt/synthetic.hpp"

namespace fs = std::filesystem;
using namespace uqt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "uqbench_out";
    int jobs = 1;
    std::optional<double> alpha;
};

CalendarInfo load_calendar(const std::string& holidays, const std::string& school, const SensorSeries* series) {
    if (!holidays.empty() || !school.empty()) return CalendarInfo::from_files(holidays, school);
    if (series && series->size() > 0) {
        const int y0 = static_cast<int>(date_of(series->timestamps.front()).year());
        const int y1 = static_cast<int>(date_of(series->timestamps.back()).year());
        return default_calendar(y0, y1);
    }
    return {};
}

int cmd_generate(const Globals& g, const std::string& profile, int days, const std::string& sensor, bool write_calendar) {
    SyntheticConfig cfg = g.config.empty() ? SyntheticConfig{} : SyntheticConfig::from_file(g.config);
    cfg.validate();
    const int y0 = static_cast<int>(parse_date(cfg.start_date).year());
    const auto calendar = default_calendar(y0, y0 + days / 365 + 1);
    (void)profile;
    const auto series = generate_synthetic(cfg, days, g.seed.value_or(42), calendar, sensor);
    fs::path out = g.out;
    if (out.extension() != ".csv") {
        fs::create_directories(out);
        out /= sensor + ".csv";
    } else if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    write_csv(series, out);
    if (write_calendar) calendar.write_files(out.parent_path() / "holidays.txt", out.parent_path() / "school_periods.txt");
    std::cout << "wrote " << series.size() << " samples to " << out.string() << '\n';
    return kExitOk;
}

int cmd_build(const Globals& g, const std::string& input, const std::string& holidays, const std::string& school, int window,
              int horizon, bool meteo, bool calendar_features) {
    const auto loaded = load_csv(input);
    if (loaded.dropped_rows > 0) std::cerr << "dropped " << loaded.dropped_rows << " unparsable rows\n";
    const auto calendar = load_calendar(holidays, school, &loaded.series);
    DatasetConfig dc;
    dc.window = window;
    dc.horizon = horizon;
    dc.use_meteo = meteo;
    dc.use_calendar = calendar_features;
    dc.alpha = g.alpha.value_or(0.1);
    const auto ds = build_windows(loaded.series, calendar, dc);
    const auto splits = stratified_monthly_split(ds);
    std::vector<const char*> role(ds.size(), "");
    for (auto i : splits.train) role[i] = "train";
    for (auto i : splits.calibration) role[i] = "calibration";
    for (auto i : splits.test) role[i] = "test";

    fs::path out = g.out;
    if (out.extension() != ".csv") {
        fs::create_directories(out);
        out /= "dataset.csv";
    }
    std::ofstream f(out);
    if (!f) throw Error("cannot write " + out.string());
    f << "timestamp,split";
    for (const auto& name : dc.feature_names()) f << ',' << name;
    f << ",target\n";
    for (std::size_t r = 0; r < ds.size(); ++r) {
        f << format_timestamp(ds.sample_timestamps[r]) << ',' << role[r];
        for (double v : ds.X.row(r)) f << ',' << csv::fmt(v);
        f << ',' << csv::fmt(ds.y[r]) << '\n';
    }
    std::cout << "wrote " << ds.size() << " rows (" << splits.train.size() << " train, " << splits.calibration.size()
              << " calibration, " << splits.test.size() << " test) to " << out.string() << '\n';
    return kExitOk;
}

int cmd_run(const Globals& g, int repeats) {
    if (g.config.empty()) throw ConfigError("run needs --config <path>");
    auto config = BenchConfig::from_file(g.config);
    if (g.seed) config.seed = *g.seed;
    if (g.alpha) config.alpha = *g.alpha;
    if (repeats > 0) config.repeats = repeats;
    config.validate();

    RunOptions opts;
    opts.out_dir = g.out;
    opts.jobs = g.jobs;
    const auto manifest = run_benchmark(config, opts);
    write_run_outputs(manifest, g.out);
    for (const auto& w : emit_report(manifest, g.out)) std::cerr << "warning: " << w << '\n';
    std::cout << manifest.results.size() - manifest.failures() << "/" << manifest.results.size()
              << " scenarios succeeded; outputs in " << g.out << '\n';
    return manifest.failures() > 0 ? kExitPartial : kExitOk;
}

int cmd_report(const Globals& g, const std::string& manifest_path) {
    const fs::path path = manifest_path.empty() ? fs::path(g.out) / "manifest.json" : fs::path(manifest_path);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path.string());
    const auto manifest = RunManifest::from_json(nlohmann::json::parse(in));
    const auto warnings = emit_report(manifest, g.out);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "report written to " << g.out << '\n';
    return warnings.empty() ? kExitOk : kExitPartial;
}

int cmd_monitor(const Globals& g, const std::string& dump, std::size_t window, double kappa) {
    std::ifstream in(dump);
    if (!in) throw ConfigError("cannot open interval dump " + dump);
    std::string line;
    std::getline(in, line);
    const auto header = csv::split(line);
    if (header.size() < 6 || header[0] != "timestamp" || header[1] != "y_true" || header[3] != "lower" || header[4] != "upper")
        throw SchemaError(dump + ": not an interval dump");
    std::vector<PredictionInterval> ivs;
    std::vector<double> y;
    std::vector<std::string> ts;
    double alpha = g.alpha.value_or(-1.0);
    while (std::getline(in, line)) {
        const auto c = csv::split(line);
        if (c.size() < 6) continue;
        auto yt = csv::parse_double(c[1]), yh = csv::parse_double(c[2]), lo = csv::parse_double(c[3]),
             hi = csv::parse_double(c[4]), a = csv::parse_double(c[5]);
        if (!yt || !yh || !lo || !hi || !a) continue;
        if (alpha < 0.0) alpha = *a;
        ivs.push_back({*yh, *lo, *hi, *a});
        y.push_back(*yt);
        ts.emplace_back(c[0]);
    }
    if (ivs.empty()) throw SchemaError(dump + ": no intervals");
    const auto alarms = coverage_drift_monitor(ivs, y, window, alpha, kappa);
    std::cout << "index,timestamp,miss_rate\n";
    for (const auto& a : alarms) std::cout << a.index << ',' << ts[a.index] << ',' << csv::fmt(a.miss_rate) << '\n';
    std::cerr << alarms.size() << " alarm(s) over " << ivs.size() << " observations\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prediction-interval benchmark for traffic-flow forecasting"};
    app.require_subcommand(1);
    // Global flags are accepted after the subcommand name too.
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "Config file (JSON for run, key-value for generate)");
    app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--out", g.out, "Output directory or file");
    app.add_option("--jobs", g.jobs, "Parallel workers")->check(CLI::PositiveNumber);
    app.add_option("--alpha", g.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));

    auto* gen = app.add_subcommand("generate", "Write a synthetic sensor series as CSV");
    int days = 365;
    std::string sensor = "synthetic", profile;
    bool write_cal = false;
    gen->add_option("--days", days)->check(CLI::PositiveNumber);
    gen->add_option("--sensor", sensor);
    gen->add_flag("--write-calendar", write_cal, "Also write holidays.txt and school_periods.txt");

    auto* build = app.add_subcommand("build", "Dump a windowed dataset with its split assignment");
    std::string input, holidays, school;
    int window = 5, horizon = 1;
    bool meteo = false, cal = false;
    build->add_option("--input", input)->required();
    build->add_option("--holidays", holidays);
    build->add_option("--school-periods", school);
    build->add_option("--window", window);
    build->add_option("--horizon", horizon);
    build->add_flag("--meteo", meteo);
    build->add_flag("--calendar", cal);

    auto* run = app.add_subcommand("run", "Run the benchmark grid");
    int repeats = 0;
    run->add_option("--repeats", repeats, "Repeat every scenario with derived seeds");

    auto* report = app.add_subcommand("report", "Rebuild pivots and plots from a manifest");
    std::string manifest_path;
    report->add_option("--manifest", manifest_path);

    auto* monitor = app.add_subcommand("monitor", "Coverage-drift alarms over an interval dump");
    std::string dump;
    std::size_t mon_window = 500;
    double kappa = 4.0;
    monitor->add_option("--input", dump)->required();
    monitor->add_option("--window", mon_window);
    monitor->add_option("--kappa", kappa);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*gen) return cmd_generate(g, profile, days, sensor, write_cal);
        if (*build) return cmd_build(g, input, holidays, school, window, horizon, meteo, cal);
        if (*run) return cmd_run(g, repeats);
        if (*report) return cmd_report(g, manifest_path);
        if (*monitor) return cmd_monitor(g, dump, mon_window, kappa);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}
