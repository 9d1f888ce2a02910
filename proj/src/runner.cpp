#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "uqt/bench.hpp"
#include "uqt/csv.hpp"
#include "uqt/dataset.hpp"
#include "uqt/error.hpp"
#include "uqt/model_io.hpp"
#include "uqt/random.hpp"
#include "uqt/standardizer.hpp"

namespace uqt {

namespace fs = std::filesystem;

namespace {

struct SeriesEntry {
    std::optional<SensorSeries> series;
    std::string error;
};

// Scenarios sharing one dataset and one fitted base model.
struct WorkUnit {
    std::vector<std::size_t> scenario_indices;
};

/// Rejects any fit or calibration row that belongs to the test partition.
class LeakGuard {
public:
    LeakGuard(std::size_t n, const DatasetSplits& splits) : role_(n, 0) {
        for (auto i : splits.train) mark(i, 1);
        for (auto i : splits.calibration) mark(i, 2);
        for (auto i : splits.test) mark(i, 3);
    }
    void require_no_test(std::span<const std::size_t> rows, const char* what) const {
        for (auto i : rows)
            if (role_.at(i) == 3) throw LeakageError(std::string("test row ") + std::to_string(i) + " reached " + what);
    }

private:
    void mark(std::size_t i, char r) {
        if (role_.at(i) != 0) throw LeakageError("row " + std::to_string(i) + " belongs to two partitions");
        role_[i] = r;
    }
    std::vector<char> role_;
};

SyntheticConfig sensor_profile(const SyntheticConfig& base, std::size_t sensor_index) {
    if (sensor_index == 0) return base;
    SyntheticConfig c = base;
    const std::uint64_t h = mix_seed(sensor_index);
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    const double v = static_cast<double>(mix_seed(h) >> 11) * 0x1.0p-53;
    const double scale = 0.6 + 0.8 * u;
    c.base_level *= scale;
    c.morning_peak_amplitude *= scale;
    c.evening_peak_amplitude *= scale * (0.8 + 0.4 * v);
    c.morning_peak_hour += v - 0.5;
    return c;
}

std::vector<PredictionInterval> to_original(std::vector<PredictionInterval> ivs, const Standardizer& s) {
    for (auto& iv : ivs) iv = to_original_units(iv, s);
    return ivs;
}

void write_interval_dump(const fs::path& path, const Scenario& sc, std::span<const Timestamp> ts,
                         std::span<const double> y, std::span<const PredictionInterval> ivs) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "timestamp,y_true,y_hat,lower,upper,alpha,method,scenario_id\n";
    const auto id = sc.id();
    const auto method = sc.method();
    for (std::size_t i = 0; i < ivs.size(); ++i)
        out << format_timestamp(ts[i]) << ',' << csv::fmt(y[i]) << ',' << csv::fmt(ivs[i].point) << ','
            << csv::fmt(ivs[i].lower) << ',' << csv::fmt(ivs[i].upper) << ',' << csv::fmt(ivs[i].alpha) << ',' << method
            << ',' << id << '\n';
}

template <typename Model, typename Fit, typename Load>
std::shared_ptr<const Model> fit_or_resume(const fs::path& dump, Fit fit, Load load) {
    if (!dump.empty() && fs::exists(dump)) return std::make_shared<const Model>(load(dump));
    auto model = std::make_shared<const Model>(fit());
    if (!dump.empty()) save_model(*model, dump);
    return model;
}

class UnitRunner {
public:
    UnitRunner(const BenchConfig& config, const RunOptions& options, const CalendarInfo& calendar)
        : config_(config), options_(options), calendar_(calendar) {}

    void run(const std::vector<Scenario>& scenarios, const WorkUnit& unit, const SensorSeries& series,
             std::vector<ScenarioResult>& results) const {
        const Scenario& head = scenarios[unit.scenario_indices.front()];
        DatasetConfig dc;
        dc.window = head.window;
        dc.horizon = head.horizon;
        dc.use_meteo = head.meteo;
        dc.use_calendar = head.calendar;
        dc.alpha = head.alpha;
        const WindowedDataset ds = build_windows(series, calendar_, dc);
        const DatasetSplits splits = stratified_monthly_split(ds);
        const LeakGuard guard(ds.size(), splits);
        guard.require_no_test(splits.train, "model fitting");
        guard.require_no_test(splits.calibration, "calibration");

        const Matrix X_train_raw = ds.X.select_rows(splits.train);
        const auto y_train_raw = select(ds.y, splits.train);
        const Standardizer st = Standardizer::fit(X_train_raw, y_train_raw);
        const Matrix X_train = st.transform(X_train_raw);
        const auto y_train = st.transform_y(y_train_raw);
        const Matrix X_cal = st.transform(ds.X.select_rows(splits.calibration));
        const auto y_cal = st.transform_y(select(ds.y, splits.calibration));
        const Matrix X_test = st.transform(ds.X.select_rows(splits.test));
        const auto y_test_raw = select(ds.y, splits.test);
        const auto y_test = st.transform_y(y_test_raw);
        std::vector<Timestamp> ts_test;
        for (auto i : splits.test) ts_test.push_back(ds.sample_timestamps[i]);

        Models models(*this, head, X_train, y_train);
        for (auto idx : unit.scenario_indices) {
            ScenarioResult& res = results[idx];
            const Scenario& sc = scenarios[idx];
            const auto start = std::chrono::steady_clock::now();
            try {
                res.n_train = splits.train.size();
                res.n_calibration = splits.calibration.size();
                res.n_test = splits.test.size();
                auto estimator = models.estimator(sc, X_cal, y_cal);
                auto intervals = to_original(estimator->predict(X_test, sc.alpha), st);
                res.metrics = evaluate_intervals(intervals, y_test_raw);
                res.quantile_crossings = estimator->diagnostics();
                if (config_.calibration_curves) {
                    const auto grid = default_confidence_grid();
                    res.curve = calibration_curve(*estimator, X_test, y_test, grid);
                    if (res.curve.confidence.size() >= 2) res.metrics.miscalibration_area = miscalibration_area(res.curve);
                }
                if (!options_.out_dir.empty() && options_.write_intervals)
                    write_interval_dump(options_.out_dir / "intervals" / (sc.id() + ".csv"), sc, ts_test, y_test_raw, intervals);
                res.ok = true;
            } catch (const std::exception& e) {
                res.ok = false;
                res.error = e.what();
            }
            res.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
        models.write_traces();
    }

private:
    // Lazily fitted base models shared by the techniques of one unit.
    class Models {
    public:
        Models(const UnitRunner& owner, const Scenario& head, const Matrix& X, const std::vector<double>& y)
            : owner_(owner), head_(head), X_(X), y_(y) {}

        std::unique_ptr<IntervalEstimator> estimator(const Scenario& sc, const Matrix& X_cal, const std::vector<double>& y_cal) {
            switch (sc.uq) {
                case UQKind::conformal: {
                    auto base = point_model(sc.model);
                    return std::make_unique<ConformalEstimator>(base, conformal_calibrate(*base, X_cal, y_cal));
                }
                case UQKind::ensemble: return std::make_unique<EnsembleEstimator>(ensemble());
                case UQKind::quantile: return std::make_unique<QuantileEstimator>(quantile(sc.alpha));
                case UQKind::mc_dropout:
                    return std::make_unique<MCDropoutEstimator>(mlp(OutputHead::scalar), owner_.config_.params.mc_passes,
                                                                derive_seed(sc.seed, {0x3cd}));
                case UQKind::heteroscedastic: return std::make_unique<HeteroscedasticEstimator>(mlp(OutputHead::gaussian));
            }
            throw ConfigError("unsupported technique");
        }

        void write_traces() const {
            if (owner_.options_.out_dir.empty()) return;
            for (const auto& [head, model] : mlps_) {
                auto name = head_.dataset_key() + "_MLP_" + (head == OutputHead::scalar ? "scalar" : "gaussian") + ".csv";
                write_loss_trace(*model, owner_.options_.out_dir / "loss_traces" / name);
            }
        }

    private:
        fs::path dump_path(const std::string& suffix) const {
            if (!owner_.config_.save_models || owner_.options_.out_dir.empty()) return {};
            return owner_.options_.out_dir / "models" / (head_.dataset_key() + "_" + suffix + ".json");
        }

        std::shared_ptr<const PointRegressor> point_model(ModelKind kind) {
            switch (kind) {
                case ModelKind::RFR:
                case ModelKind::ETR:
                case ModelKind::ABR: return ensemble();
                case ModelKind::GBR: return boosting();
                case ModelKind::MLP: return mlp(OutputHead::scalar);
            }
            throw ConfigError("unsupported model");
        }

        std::shared_ptr<const EnsembleModel> ensemble() {
            if (ensemble_) return ensemble_;
            const auto& p = owner_.config_.params;
            const auto kind = head_.model;
            ensemble_ = fit_or_resume<EnsembleModel>(
                dump_path(to_string(kind)),
                [&] {
                    if (kind == ModelKind::ABR) {
                        AdaBoostConfig cfg;
                        cfg.n_estimators = p.n_estimators;
                        cfg.learning_rate = p.adaboost_learning_rate;
                        return fit_adaboost_r2(X_, y_, cfg, head_.seed);
                    }
                    ForestConfig cfg;
                    cfg.n_estimators = p.n_estimators;
                    cfg.n_threads = p.tree_threads;
                    return kind == ModelKind::ETR ? fit_extra_trees(X_, y_, cfg, head_.seed)
                                                  : fit_random_forest(X_, y_, cfg, head_.seed);
                },
                [](const fs::path& f) { return load_ensemble(f); });
            return ensemble_;
        }

        BoostingConfig boosting_config() const {
            const auto& p = owner_.config_.params;
            BoostingConfig cfg;
            cfg.n_estimators = p.n_estimators;
            cfg.learning_rate = p.boosting_learning_rate;
            cfg.max_depth = p.boosting_depth;
            return cfg;
        }

        std::shared_ptr<const EnsembleModel> boosting() {
            if (!boosting_)
                boosting_ = fit_or_resume<EnsembleModel>(
                    dump_path("GBR_squared"), [&] { return fit_gradient_boosting(X_, y_, boosting_config(), head_.seed); },
                    [](const fs::path& f) { return load_ensemble(f); });
            return boosting_;
        }

        std::shared_ptr<const QuantileModels> quantile(double alpha) {
            if (!quantile_) quantile_ = std::make_shared<const QuantileModels>(
                                fit_quantile_models(X_, y_, alpha, boosting_config(), derive_seed(head_.seed, {0x9b})));
            return quantile_;
        }

        std::shared_ptr<const MLPModel> mlp(OutputHead head) {
            if (auto it = mlps_.find(head); it != mlps_.end()) return it->second;
            const auto& p = owner_.config_.params;
            MLPConfig cfg;
            cfg.hidden_sizes = p.hidden_sizes;
            cfg.epochs = p.epochs;
            cfg.batch_size = p.batch_size;
            cfg.head = head;
            cfg.dropout = head == OutputHead::scalar ? p.dropout : 0.0;
            cfg.seed = derive_seed(head_.seed, {head == OutputHead::scalar ? 11u : 12u});
            auto model = fit_or_resume<MLPModel>(dump_path(head == OutputHead::scalar ? "MLP_scalar" : "MLP_gaussian"),
                                                 [&] { return fit_mlp(X_, y_, cfg); },
                                                 [](const fs::path& f) { return load_mlp(f); });
            mlps_.emplace(head, model);
            return model;
        }

        const UnitRunner& owner_;
        const Scenario& head_;
        const Matrix& X_;
        const std::vector<double>& y_;
        std::shared_ptr<const EnsembleModel> ensemble_;
        std::shared_ptr<const EnsembleModel> boosting_;
        std::shared_ptr<const QuantileModels> quantile_;
        std::map<OutputHead, std::shared_ptr<const MLPModel>> mlps_;
    };

    const BenchConfig& config_;
    const RunOptions& options_;
    const CalendarInfo& calendar_;
};

}  // namespace

RunManifest run_benchmark(const BenchConfig& config, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const auto scenarios = enumerate_scenarios(config);

    if (!options.out_dir.empty()) {
        fs::create_directories(options.out_dir / "intervals");
        fs::create_directories(options.out_dir / "loss_traces");
        if (config.save_models) fs::create_directories(options.out_dir / "models");
    }

    CalendarInfo calendar;
    if (config.data.kind == "synthetic") {
        const int y0 = static_cast<int>(parse_date(config.synthetic.start_date).year());
        calendar = default_calendar(y0, y0 + config.data.days / 365 + 1);
    } else {
        calendar = CalendarInfo::from_files(config.data.holidays, config.data.school_periods);
    }

    // Series per (sensor, repeat), generated serially so seeds never depend on scheduling.
    std::map<std::pair<std::size_t, int>, SeriesEntry> series;
    for (const auto& sc : scenarios) {
        auto key = std::make_pair(sc.sensor_index, sc.repeat);
        if (series.contains(key)) continue;
        SeriesEntry entry;
        try {
            if (config.data.kind == "synthetic") {
                entry.series = generate_synthetic(sensor_profile(config.synthetic, sc.sensor_index), config.data.days,
                                                  derive_seed(config.seed, {sc.sensor_index, 0xDA7A, static_cast<std::uint64_t>(sc.repeat)}),
                                                  calendar, sc.sensor_id);
            } else {
                entry.series = load_csv(config.data.files.at(sc.sensor_id), sc.sensor_id).series;
            }
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        series.emplace(key, std::move(entry));
    }

    std::vector<WorkUnit> units;
    std::map<std::string, std::size_t> unit_of;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto key = scenarios[i].dataset_key() + "|" + to_string(scenarios[i].model);
        auto [it, inserted] = unit_of.emplace(key, units.size());
        if (inserted) units.emplace_back();
        units[it->second].scenario_indices.push_back(i);
    }

    std::vector<ScenarioResult> results(scenarios.size());
    for (std::size_t i = 0; i < scenarios.size(); ++i) results[i].scenario = scenarios[i];

    const UnitRunner runner(config, options, calendar);
    auto run_unit = [&](std::size_t u) {
        const auto& unit = units[u];
        const auto& head = scenarios[unit.scenario_indices.front()];
        const auto& entry = series.at({head.sensor_index, head.repeat});
        try {
            if (!entry.series) throw DataError(entry.error);
            runner.run(scenarios, unit, *entry.series, results);
        } catch (const std::exception& e) {
            for (auto idx : unit.scenario_indices) {
                if (results[idx].ok) continue;
                results[idx].error = e.what();
            }
        }
    };

    const auto workers = static_cast<std::size_t>(std::max(1, options.jobs));
    if (workers == 1) {
        for (std::size_t u = 0; u < units.size(); ++u) run_unit(u);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, units.size()); ++w)
            pool.emplace_back([&] {
                for (std::size_t u = next++; u < units.size(); u = next++) run_unit(u);
            });
    }

    RunManifest manifest;
    manifest.config_digest = digest(config.to_json().dump());
    manifest.seed = config.seed;
    manifest.alpha = config.alpha;
    manifest.results = std::move(results);
    manifest.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return manifest;
}

std::string metrics_csv(const RunManifest& manifest) {
    std::string out =
        "scenario_id,sensor,omega,horizon,meteo,calendar,model,uq,method,alpha,repeat,status,T,r2,icp,mil,rmil,"
        "miscalibration_area,quantile_crossings,error\n";
    auto opt = [](const std::optional<double>& v) { return v ? csv::fmt(*v) : std::string{}; };
    for (const auto& r : manifest.results) {
        const auto& s = r.scenario;
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out += s.id() + ',' + s.sensor_id + ',' + std::to_string(s.window) + ',' + std::to_string(s.horizon) + ',' +
               (s.meteo ? "1" : "0") + ',' + (s.calendar ? "1" : "0") + ',' + to_string(s.model) + ',' + to_string(s.uq) +
               ',' + s.method() + ',' + csv::fmt(s.alpha) + ',' + std::to_string(s.repeat) + ',' + (r.ok ? "ok" : "failed") +
               ',' + std::to_string(r.metrics.T) + ',' + opt(r.metrics.r2) + ',' + csv::fmt(r.metrics.icp) + ',' +
               csv::fmt(r.metrics.mil) + ',' + csv::fmt(r.metrics.rmil) + ',' + opt(r.metrics.miscalibration_area) + ',' +
               std::to_string(r.quantile_crossings) + ',' + err + '\n';
    }
    return out;
}

void write_run_outputs(const RunManifest& manifest, const fs::path& out_dir) {
    fs::create_directories(out_dir / "calibration");
    {
        std::ofstream out(out_dir / "metrics.csv");
        if (!out) throw Error("cannot write metrics.csv in " + out_dir.string());
        out << metrics_csv(manifest);
    }
    {
        std::ofstream out(out_dir / "manifest.json");
        out << manifest.to_json().dump(2) << '\n';
    }
    for (const auto& r : manifest.results) {
        if (!r.ok || r.curve.confidence.empty()) continue;
        std::ofstream out(out_dir / "calibration" / (r.scenario.id() + ".csv"));
        out << "confidence,coverage\n";
        for (std::size_t i = 0; i < r.curve.confidence.size(); ++i)
            out << csv::fmt(r.curve.confidence[i]) << ',' << csv::fmt(r.curve.coverage[i]) << '\n';
    }
}

}  // namespace uqt
