#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uqt/metrics.hpp"
#include "uqt/synthetic.hpp"
#include "uqt/uncertainty.hpp"

namespace uqt {

inline constexpr const char* kToolVersion = "0.1.0";

enum class ModelKind { RFR, ETR, GBR, ABR, MLP };
std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Short technique prefix used in method labels: CP, E, Q, MCD, HR.
std::string uq_prefix(UQKind kind);
/// Accepts long names ("conformal") or prefixes ("CP").
UQKind parse_uq(const std::string& name);

/// Applicability matrix: conformal wraps every model; ensembles apply to
/// RFR/ETR/ABR; quantile regression to GBR; MC dropout and heteroscedastic
/// heads to MLP.
bool applicable(ModelKind model, UQKind uq);

/// Parses "CP-RFR" style labels. Throws ConfigError for unknown or
/// inapplicable combinations (the message names the pair).
std::pair<UQKind, ModelKind> parse_method(const std::string& label);

struct ModelParams {
    int n_estimators = 100;
    double boosting_learning_rate = 0.1;
    int boosting_depth = 3;
    double adaboost_learning_rate = 0.1;
    std::vector<int> hidden_sizes{50};
    int epochs = 20;
    int batch_size = 32;
    double dropout = 0.2;
    int mc_passes = 100;
    int tree_threads = 1;
};

struct DataSource {
    std::string kind = "synthetic";  // "synthetic" or "csv"
    int days = 365;
    std::map<std::string, std::string> files;  // sensor id -> CSV path
    std::string holidays;
    std::string school_periods;
};

struct BenchConfig {
    std::vector<std::string> sensors{"synthetic"};
    std::vector<int> omegas{5};
    std::vector<int> horizons{1};
    std::vector<bool> meteo{true};
    std::vector<bool> calendar{true};
    std::vector<ModelKind> models{ModelKind::RFR};
    std::vector<UQKind> uq_methods{UQKind::conformal};
    std::vector<std::pair<UQKind, ModelKind>> pairs;  // explicit pairs override models x uq_methods
    double alpha = 0.1;
    std::uint64_t seed = 42;
    int repeats = 1;
    bool calibration_curves = true;
    bool save_models = false;
    DataSource data;
    SyntheticConfig synthetic;
    ModelParams params;

    /// Throws ConfigError on malformed documents.
    static BenchConfig from_json(const nlohmann::json& doc);
    static BenchConfig from_file(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    void validate() const;
};

struct Scenario {
    std::string sensor_id;
    std::size_t sensor_index = 0;
    int window = 5;
    int horizon = 1;
    bool meteo = true;
    bool calendar = true;
    ModelKind model = ModelKind::RFR;
    UQKind uq = UQKind::conformal;
    double alpha = 0.1;
    int repeat = 0;
    std::uint64_t seed = 0;  // shared by all techniques wrapping the same fitted model

    std::string method() const { return uq_prefix(uq) + "-" + to_string(model); }
    std::string dataset_key() const;  // sensor/window/horizon/features/repeat
    std::string id() const;
};

/// Cartesian product of the configured axes filtered by the applicability
/// matrix, in a stable order.
std::vector<Scenario> enumerate_scenarios(const BenchConfig& config);

struct ScenarioResult {
    Scenario scenario;
    bool ok = false;
    std::string error;
    MetricReport metrics;
    CalibrationCurve curve;
    std::size_t quantile_crossings = 0;
    std::size_t n_train = 0, n_calibration = 0, n_test = 0;
    double elapsed_ms = 0.0;
};

struct RunManifest {
    std::string config_digest;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    double alpha = 0.1;
    std::vector<ScenarioResult> results;
    double elapsed_ms = 0.0;

    std::size_t failures() const;
    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& doc);
};

struct RunOptions {
    std::filesystem::path out_dir;  // empty: keep everything in memory
    int jobs = 1;
    bool write_intervals = true;
};

/// Runs every scenario; failures are recorded per scenario and do not stop
/// the run. Results are ordered as enumerated regardless of `jobs`.
RunManifest run_benchmark(const BenchConfig& config, const RunOptions& options);

/// Writes metrics.csv, manifest.json and calibration curves to `out_dir`.
void write_run_outputs(const RunManifest& manifest, const std::filesystem::path& out_dir);
std::string metrics_csv(const RunManifest& manifest);

/// Pivot tables, calibration comparison and SVG plots. Returns warnings
/// (e.g. failed scenarios). Throws Error for an empty manifest.
std::vector<std::string> emit_report(const RunManifest& manifest, const std::filesystem::path& out_dir);

/// Rows of the per-method pivot: one (sensor, metric) row per metric in {R2, ICP, MIL}.
struct PivotTable {
    std::vector<std::string> columns;
    std::vector<std::pair<std::string, std::string>> row_keys;  // (sensor, metric)
    std::vector<std::vector<std::optional<double>>> cells;
};
std::map<std::string, PivotTable> build_pivots(const RunManifest& manifest);

/// 64-bit FNV-1a of the text, hex encoded.
std::string digest(const std::string& text);

}  // namespace uqt
