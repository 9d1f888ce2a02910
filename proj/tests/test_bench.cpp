#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "uqt/bench.hpp"
#include "uqt/error.hpp"
#include "uqt/synthetic.hpp"

using namespace uqt;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("uqt_bench_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

BenchConfig small_config() {
    BenchConfig c;
    c.sensors = {"s1"};
    c.omegas = {1};
    c.horizons = {1};
    c.meteo = {false};
    c.calendar = {true};
    c.pairs = {parse_method("CP-RFR"), parse_method("E-RFR")};
    c.data.days = 60;
    c.params.n_estimators = 10;
    c.seed = 5;
    return c;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(UQBENCH_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("scenarios") {
    TEST_CASE("full grid has 320 configurations") {
        BenchConfig c;
        c.sensors.clear();
        for (int i = 0; i < 10; ++i) c.sensors.push_back("s" + std::to_string(i));
        c.omegas = {1, 5};
        c.meteo = {false, true};
        c.calendar = {false, true};
        c.horizons = {1, 2, 4, 8};
        c.pairs = {parse_method("CP-RFR")};
        const auto sc = enumerate_scenarios(c);
        CHECK(sc.size() == 320);
        std::set<std::string> ids;
        for (const auto& s : sc) ids.insert(s.id());
        CHECK(ids.size() == 320);
    }

    TEST_CASE("single values everywhere give one scenario") {
        BenchConfig c;
        const auto sc = enumerate_scenarios(c);
        REQUIRE(sc.size() == 1);
        CHECK(sc[0].method() == "CP-RFR");
        CHECK(sc[0].id() == "synthetic_w5_h1_m1_c1_r0_CP-RFR");
    }

    TEST_CASE("applicability matrix") {
        const std::set<std::string> legal{"CP-RFR", "CP-ETR", "CP-GBR", "CP-ABR", "CP-MLP", "E-RFR", "E-ETR",
                                          "E-ABR",  "Q-GBR",  "MCD-MLP", "HR-MLP"};
        for (auto m : {ModelKind::RFR, ModelKind::ETR, ModelKind::GBR, ModelKind::ABR, ModelKind::MLP})
            for (auto u : {UQKind::conformal, UQKind::ensemble, UQKind::quantile, UQKind::mc_dropout, UQKind::heteroscedastic}) {
                const std::string label = uq_prefix(u) + "-" + to_string(m);
                CHECK(applicable(m, u) == legal.contains(label));
            }

        BenchConfig c;
        c.models = {ModelKind::RFR, ModelKind::ETR, ModelKind::GBR, ModelKind::ABR, ModelKind::MLP};
        c.uq_methods = {UQKind::conformal, UQKind::ensemble, UQKind::quantile, UQKind::mc_dropout, UQKind::heteroscedastic};
        CHECK(enumerate_scenarios(c).size() == legal.size());
    }

    TEST_CASE("an illegal explicit pair is a config error naming the pair") {
        try {
            (void)parse_method("Q-RFR");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("Q-RFR") != std::string::npos);
        }
        CHECK_THROWS_AS(BenchConfig::from_json(json::parse(R"({"pairs": ["MCD-GBR"]})")), ConfigError);
        CHECK_THROWS_AS(parse_method("CPRFR"), ConfigError);
    }

    TEST_CASE("seed is shared by techniques wrapping the same model") {
        auto c = small_config();
        const auto sc = enumerate_scenarios(c);
        REQUIRE(sc.size() == 2);
        CHECK(sc[0].seed == sc[1].seed);
        c.seed = 6;
        CHECK(enumerate_scenarios(c)[0].seed != sc[0].seed);
    }
}

TEST_SUITE("config") {
    TEST_CASE("JSON parsing and round trip") {
        const auto doc = json::parse(R"({
            "sensors": ["4458", "3911"], "omegas": [1, 5], "horizons": [1, 2, 4, 8],
            "meteo": [0, 1], "calendar": [true], "models": ["RFR", "GBR"], "uq_methods": ["CP", "Q"],
            "alpha": 0.2, "seed": 9, "repeats": 2,
            "data": {"source": "synthetic", "days": 90},
            "synthetic": {"kappa": 0.1, "start_date": "2020-01-01"},
            "model_params": {"n_estimators": 20, "hidden_sizes": [16, 8]}
        })");
        const auto c = BenchConfig::from_json(doc);
        CHECK(c.sensors.size() == 2);
        CHECK(c.meteo == std::vector<bool>{false, true});
        CHECK(c.alpha == 0.2);
        CHECK(c.repeats == 2);
        CHECK(c.synthetic.kappa == 0.1);
        CHECK(c.synthetic.start_date == "2020-01-01");
        CHECK(c.params.hidden_sizes == std::vector<int>{16, 8});
        // RFR x {CP} + GBR x {CP, Q} = 3 methods.
        CHECK(enumerate_scenarios(c).size() == 2 * 2 * 4 * 2 * 1 * 2 * 3);
        const auto back = BenchConfig::from_json(c.to_json());
        CHECK(back.to_json() == c.to_json());
    }

    TEST_CASE("malformed documents") {
        CHECK_THROWS_AS(BenchConfig::from_json(json::parse(R"({"sensor": ["x"]})")), ConfigError);
        CHECK_THROWS_AS(BenchConfig::from_json(json::parse(R"({"alpha": 1.5})")), ConfigError);
        CHECK_THROWS_AS(BenchConfig::from_json(json::parse(R"({"omegas": [0]})")), ConfigError);
        CHECK_THROWS_AS(BenchConfig::from_json(json::parse(R"({"meteo": [2]})")), ConfigError);
        CHECK_THROWS_AS(BenchConfig::from_json(json::parse(R"({"models": ["LSTM"]})")), ConfigError);
        CHECK_THROWS_AS(BenchConfig::from_json(json::parse(R"({"data": {"source": "csv"}})")), ConfigError);
        CHECK_THROWS_AS(BenchConfig::from_json(json::parse(R"({"model_params": {"trees": 3}})")), ConfigError);
        CHECK_THROWS_AS(BenchConfig::from_json(json::parse(R"({"synthetic": {"nope": 3}})")), ConfigError);
        CHECK_THROWS_AS(BenchConfig::from_json(json::parse(R"([1, 2])")), ConfigError);
        CHECK_THROWS_AS(BenchConfig::from_file("/nonexistent/config.json"), ConfigError);
    }
}

TEST_SUITE("run and report") {
    TEST_CASE("small synthetic run: coverage, determinism, outputs") {
        const auto dir = scratch("small");
        const auto cfg = small_config();
        RunOptions opts;
        opts.out_dir = dir;
        const auto a = run_benchmark(cfg, opts);
        REQUIRE(a.results.size() == 2);
        CHECK(a.failures() == 0);
        for (const auto& r : a.results) {
            CHECK(r.ok);
            CHECK(r.metrics.T == r.n_test);
            CHECK(r.n_train > 0);
            CHECK(r.n_calibration > 0);
            CHECK(r.metrics.miscalibration_area.has_value());
        }
        const auto& cp = a.results[0];
        CHECK(cp.scenario.method() == "CP-RFR");
        CHECK(cp.metrics.icp >= 0.85);
        CHECK(cp.metrics.icp <= 0.95);

        write_run_outputs(a, dir);
        const auto csv1 = slurp(dir / "metrics.csv");
        CHECK(csv1 == metrics_csv(a));
        CHECK(fs::exists(dir / "manifest.json"));
        CHECK(fs::exists(dir / "intervals" / (cp.scenario.id() + ".csv")));
        CHECK(fs::exists(dir / "calibration" / (cp.scenario.id() + ".csv")));
        const auto header = slurp(dir / "intervals" / (cp.scenario.id() + ".csv")).substr(0, 60);
        CHECK(header.rfind("timestamp,y_true,y_hat,lower,upper,alpha,method,scenario_id\n", 0) == 0);

        RunOptions mem;
        mem.jobs = 3;
        const auto b = run_benchmark(cfg, mem);
        CHECK(metrics_csv(b) == csv1);

        const auto parsed = RunManifest::from_json(json::parse(slurp(dir / "manifest.json")));
        CHECK(metrics_csv(parsed) == csv1);
        CHECK(parsed.config_digest == a.config_digest);

        const auto warnings = emit_report(a, dir);
        CHECK(warnings.empty());
        for (const char* f : {"pivot_CP-RFR.csv", "pivot_E-RFR.csv", "calibration_comparison.csv", "method_summary.csv",
                              "icp_boxplot.svg", "calibration_curves.svg", "interval_band.svg"})
            CHECK_MESSAGE(fs::exists(dir / f), f);
        fs::remove_all(dir);
    }

    TEST_CASE("pivot has three metric rows per sensor") {
        RunManifest m;
        for (const std::string sensor : {"a", "b"})
            for (int h : {1, 2}) {
                ScenarioResult r;
                r.scenario.sensor_id = sensor;
                r.scenario.horizon = h;
                r.ok = true;
                r.metrics.r2 = 0.9;
                r.metrics.icp = 0.9;
                r.metrics.mil = 100.0 * h;
                m.results.push_back(r);
            }
        const auto pivots = build_pivots(m);
        REQUIRE(pivots.contains("CP-RFR"));
        const auto& p = pivots.at("CP-RFR");
        CHECK(p.row_keys.size() == 6);
        CHECK(p.columns.size() == 2);
        CHECK(p.row_keys[0] == std::pair<std::string, std::string>{"a", "R2"});
        CHECK(p.row_keys[2].second == "MIL");
        CHECK(*p.cells[2][1] == 200.0);
    }

    TEST_CASE("empty manifest is an error") {
        CHECK_THROWS_AS(emit_report(RunManifest{}, fs::temp_directory_path() / "uqt_bench_empty"), Error);
    }

    TEST_CASE("a failing scenario is isolated and reported") {
        const auto dir = scratch("failure");
        const auto cal = default_calendar(2019, 2019);
        write_csv(generate_synthetic(SyntheticConfig{}, 60, 1, cal, "good"), dir / "good.csv");
        write_csv(generate_synthetic(SyntheticConfig{}, 1, 1, cal, "short"), dir / "short.csv");
        BenchConfig c = small_config();
        c.sensors = {"good", "short"};
        c.data.kind = "csv";
        c.data.files = {{"good", (dir / "good.csv").string()}, {"short", (dir / "short.csv").string()}};
        const auto m = run_benchmark(c, RunOptions{});
        REQUIRE(m.results.size() == 4);
        CHECK(m.failures() == 2);
        CHECK(m.results[0].ok);
        CHECK(m.results[1].ok);
        CHECK_FALSE(m.results[2].ok);
        CHECK_FALSE(m.results[2].error.empty());
        const auto warnings = emit_report(m, dir);
        REQUIRE(warnings.size() == 3);
        CHECK(warnings[0].find("partial report") != std::string::npos);
        fs::remove_all(dir);
    }

    TEST_CASE("digest is stable FNV-1a") {
        CHECK(digest("") == "cbf29ce484222325");
        CHECK(digest("a") == "af63dc4c8601ec8c");
    }
}

TEST_SUITE("cli") {
    TEST_CASE("exit codes and subcommands") {
        const auto dir = scratch("cli");
        // Config errors exit 1.
        CHECK(run_cli("run --config /nonexistent.json --out " + (dir / "x").string()) == 1);
        {
            std::ofstream(dir / "bad.json") << R"({"pairs": ["Q-RFR"]})";
        }
        CHECK(run_cli("run --config " + (dir / "bad.json").string()) == 1);
        CHECK(run_cli("frobnicate") == 1);

        // generate -> build -> run -> report -> monitor.
        CHECK(run_cli("generate --days 40 --seed 3 --sensor s1 --out " + (dir / "s1.csv").string()) == 0);
        CHECK(fs::exists(dir / "s1.csv"));
        CHECK(run_cli("build --input " + (dir / "s1.csv").string() + " --window 5 --horizon 2 --calendar --meteo --out " +
                      (dir / "ds.csv").string()) == 0);
        const auto ds = slurp(dir / "ds.csv");
        CHECK(ds.rfind("timestamp,split,", 0) == 0);

        {
            std::ofstream(dir / "ok.json") << R"({"sensors": ["s1"], "omegas": [1], "meteo": [0], "calendar": [1],
                "pairs": ["CP-RFR"], "data": {"source": "csv", "files": {"s1": ")" << (dir / "s1.csv").string()
                                           << R"("}}, "model_params": {"n_estimators": 5}})";
        }
        CHECK(run_cli("run --config " + (dir / "ok.json").string() + " --out " + (dir / "run").string()) == 0);
        CHECK(fs::exists(dir / "run" / "metrics.csv"));
        CHECK(run_cli("report --out " + (dir / "run").string()) == 0);
        const auto dump = dir / "run" / "intervals" / "s1_w1_h1_m0_c1_r0_CP-RFR.csv";
        CHECK(fs::exists(dump));
        CHECK(run_cli("monitor --input " + dump.string() + " --window 100 --kappa 4") == 0);

        // A partially failing grid exits 2.
        write_csv(generate_synthetic(SyntheticConfig{}, 1, 1, CalendarInfo{}, "tiny"), dir / "tiny.csv");
        {
            std::ofstream(dir / "partial.json") << R"({"sensors": ["s1", "tiny"], "omegas": [1], "meteo": [0], "calendar": [1],
                "pairs": ["CP-RFR"], "data": {"source": "csv", "files": {"s1": ")" << (dir / "s1.csv").string()
                                                << R"(", "tiny": ")" << (dir / "tiny.csv").string()
                                                << R"("}}, "model_params": {"n_estimators": 5}})";
        }
        CHECK(run_cli("run --config " + (dir / "partial.json").string() + " --out " + (dir / "partial").string()) == 2);
        fs::remove_all(dir);
    }
}
