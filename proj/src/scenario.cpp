#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "uqt/bench.hpp"
#include "uqt/error.hpp"
#include "uqt/random.hpp"

namespace uqt {

using nlohmann::json;

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::RFR: return "RFR";
        case ModelKind::ETR: return "ETR";
        case ModelKind::GBR: return "GBR";
        case ModelKind::ABR: return "ABR";
        case ModelKind::MLP: return "MLP";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    for (auto k : {ModelKind::RFR, ModelKind::ETR, ModelKind::GBR, ModelKind::ABR, ModelKind::MLP})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown model '" + name + "' (expected RFR, ETR, GBR, ABR or MLP)");
}

std::string uq_prefix(UQKind kind) {
    switch (kind) {
        case UQKind::conformal: return "CP";
        case UQKind::ensemble: return "E";
        case UQKind::quantile: return "Q";
        case UQKind::mc_dropout: return "MCD";
        case UQKind::heteroscedastic: return "HR";
    }
    return "?";
}

UQKind parse_uq(const std::string& name) {
    for (auto k : {UQKind::conformal, UQKind::ensemble, UQKind::quantile, UQKind::mc_dropout, UQKind::heteroscedastic})
        if (uq_prefix(k) == name || to_string(k) == name) return k;
    throw ConfigError("unknown uncertainty technique '" + name + "'");
}

bool applicable(ModelKind model, UQKind uq) {
    switch (uq) {
        case UQKind::conformal: return true;
        case UQKind::ensemble: return model == ModelKind::RFR || model == ModelKind::ETR || model == ModelKind::ABR;
        case UQKind::quantile: return model == ModelKind::GBR;
        case UQKind::mc_dropout:
        case UQKind::heteroscedastic: return model == ModelKind::MLP;
    }
    return false;
}

std::pair<UQKind, ModelKind> parse_method(const std::string& label) {
    const auto dash = label.find('-');
    if (dash == std::string::npos) throw ConfigError("method label '" + label + "' must look like CP-RFR");
    const UQKind uq = parse_uq(label.substr(0, dash));
    const ModelKind model = model_kind_from_string(label.substr(dash + 1));
    if (!applicable(model, uq))
        throw ConfigError("technique " + to_string(uq) + " is not applicable to model " + to_string(model) + " (" + label + ")");
    return {uq, model};
}

std::string digest(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// --- configuration -----------------------------------------------------------

namespace {

template <typename T>
std::vector<T> get_list(const json& doc, const char* key, std::vector<T> fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc.at(key);
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
}

std::vector<bool> get_flags(const json& doc, const char* key, std::vector<bool> fallback) {
    if (!doc.contains(key)) return fallback;
    std::vector<bool> out;
    auto one = [](const json& v) {
        if (v.is_boolean()) return v.get<bool>();
        if (v.is_number_integer()) {
            const int i = v.get<int>();
            if (i != 0 && i != 1) throw ConfigError("feature flags must be 0/1 or booleans");
            return i == 1;
        }
        throw ConfigError("feature flags must be 0/1 or booleans");
    };
    const auto& v = doc.at(key);
    if (v.is_array())
        for (const auto& e : v) out.push_back(one(e));
    else
        out.push_back(one(v));
    return out;
}

}  // namespace

BenchConfig BenchConfig::from_json(const json& doc) {
    try {
        BenchConfig c;
        if (!doc.is_object()) throw ConfigError("config must be a JSON object");
        static const std::set<std::string> known{"sensors", "omegas",  "horizons", "meteo",  "calendar",  "models",
                                                 "uq_methods", "pairs", "alpha", "seed", "repeats", "calibration_curves",
                                                 "save_models", "data", "synthetic", "model_params"};
        for (const auto& [key, _] : doc.items())
            if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
        c.sensors = get_list<std::string>(doc, "sensors", c.sensors);
        c.omegas = get_list<int>(doc, "omegas", c.omegas);
        c.horizons = get_list<int>(doc, "horizons", c.horizons);
        c.meteo = get_flags(doc, "meteo", c.meteo);
        c.calendar = get_flags(doc, "calendar", c.calendar);
        if (doc.contains("models")) {
            c.models.clear();
            for (const auto& m : get_list<std::string>(doc, "models", {})) c.models.push_back(model_kind_from_string(m));
        }
        if (doc.contains("uq_methods")) {
            c.uq_methods.clear();
            for (const auto& m : get_list<std::string>(doc, "uq_methods", {})) c.uq_methods.push_back(parse_uq(m));
        }
        for (const auto& p : get_list<std::string>(doc, "pairs", {})) c.pairs.push_back(parse_method(p));
        c.alpha = doc.value("alpha", c.alpha);
        c.seed = doc.value("seed", c.seed);
        c.repeats = doc.value("repeats", c.repeats);
        c.calibration_curves = doc.value("calibration_curves", c.calibration_curves);
        c.save_models = doc.value("save_models", c.save_models);
        if (doc.contains("data")) {
            const auto& d = doc.at("data");
            c.data.kind = d.value("source", c.data.kind);
            c.data.days = d.value("days", c.data.days);
            if (d.contains("files")) c.data.files = d.at("files").get<std::map<std::string, std::string>>();
            c.data.holidays = d.value("holidays", std::string{});
            c.data.school_periods = d.value("school_periods", std::string{});
        }
        if (doc.contains("synthetic")) {
            std::ostringstream text;
            for (const auto& [key, value] : doc.at("synthetic").items()) {
                text << key << " = ";
                if (value.is_string()) text << value.get<std::string>();
                else text << value.dump();
                text << '\n';
            }
            c.synthetic = SyntheticConfig::from_text(text.str());
        }
        if (doc.contains("model_params")) {
            const auto& p = doc.at("model_params");
            static const std::set<std::string> known_params{"n_estimators", "boosting_learning_rate", "boosting_depth",
                                                            "adaboost_learning_rate", "hidden_sizes", "epochs",
                                                            "batch_size", "dropout", "mc_passes", "tree_threads"};
            for (const auto& [key, _] : p.items())
                if (!known_params.contains(key)) throw ConfigError("unknown model_params key '" + key + "'");
            auto& m = c.params;
            m.n_estimators = p.value("n_estimators", m.n_estimators);
            m.boosting_learning_rate = p.value("boosting_learning_rate", m.boosting_learning_rate);
            m.boosting_depth = p.value("boosting_depth", m.boosting_depth);
            m.adaboost_learning_rate = p.value("adaboost_learning_rate", m.adaboost_learning_rate);
            m.hidden_sizes = p.value("hidden_sizes", m.hidden_sizes);
            m.epochs = p.value("epochs", m.epochs);
            m.batch_size = p.value("batch_size", m.batch_size);
            m.dropout = p.value("dropout", m.dropout);
            m.mc_passes = p.value("mc_passes", m.mc_passes);
            m.tree_threads = p.value("tree_threads", m.tree_threads);
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

BenchConfig BenchConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

json BenchConfig::to_json() const {
    json models_j = json::array(), uq_j = json::array(), pairs_j = json::array();
    for (auto m : models) models_j.push_back(to_string(m));
    for (auto u : uq_methods) uq_j.push_back(to_string(u));
    for (auto [u, m] : pairs) pairs_j.push_back(uq_prefix(u) + "-" + to_string(m));
    json synth = json::object();
    std::istringstream lines(synthetic.to_text());
    for (std::string line; std::getline(lines, line);) {
        auto eq = line.find(" = ");
        synth[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return {{"sensors", sensors},
            {"omegas", omegas},
            {"horizons", horizons},
            {"meteo", meteo},
            {"calendar", calendar},
            {"models", models_j},
            {"uq_methods", uq_j},
            {"pairs", pairs_j},
            {"alpha", alpha},
            {"seed", seed},
            {"repeats", repeats},
            {"calibration_curves", calibration_curves},
            {"save_models", save_models},
            {"data",
             {{"source", data.kind},
              {"days", data.days},
              {"files", data.files},
              {"holidays", data.holidays},
              {"school_periods", data.school_periods}}},
            {"synthetic", synth},
            {"model_params",
             {{"n_estimators", params.n_estimators},
              {"boosting_learning_rate", params.boosting_learning_rate},
              {"boosting_depth", params.boosting_depth},
              {"adaboost_learning_rate", params.adaboost_learning_rate},
              {"hidden_sizes", params.hidden_sizes},
              {"epochs", params.epochs},
              {"batch_size", params.batch_size},
              {"dropout", params.dropout},
              {"mc_passes", params.mc_passes},
              {"tree_threads", params.tree_threads}}}};
}

void BenchConfig::validate() const {
    if (sensors.empty() || omegas.empty() || horizons.empty() || meteo.empty() || calendar.empty())
        throw ConfigError("every scenario axis needs at least one value");
    if (pairs.empty() && (models.empty() || uq_methods.empty())) throw ConfigError("no models or uncertainty techniques configured");
    for (int w : omegas)
        if (w < 1) throw ConfigError("omegas must be >= 1");
    for (int h : horizons)
        if (h < 1) throw ConfigError("horizons must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    if (data.kind != "synthetic" && data.kind != "csv") throw ConfigError("data.source must be 'synthetic' or 'csv'");
    if (data.kind == "synthetic" && data.days < 28) throw ConfigError("synthetic data needs at least 28 days");
    if (data.kind == "csv")
        for (const auto& s : sensors)
            if (!data.files.contains(s)) throw ConfigError("no CSV file configured for sensor '" + s + "'");
    if (params.n_estimators < 2) throw ConfigError("n_estimators must be >= 2");
    if (params.mc_passes < 10) throw ConfigError("mc_passes must be >= 10");
    if (!(params.dropout > 0.0 && params.dropout < 1.0)) throw ConfigError("dropout must lie in (0, 1)");
    synthetic.validate();
}

// --- scenarios -----------------------------------------------------------------

std::string Scenario::dataset_key() const {
    return sensor_id + "_w" + std::to_string(window) + "_h" + std::to_string(horizon) + "_m" + (meteo ? "1" : "0") + "_c" +
           (calendar ? "1" : "0") + "_r" + std::to_string(repeat);
}

std::string Scenario::id() const { return dataset_key() + "_" + method(); }

std::vector<Scenario> enumerate_scenarios(const BenchConfig& config) {
    config.validate();
    std::vector<std::pair<UQKind, ModelKind>> methods = config.pairs;
    if (methods.empty()) {
        for (auto m : config.models)
            for (auto u : config.uq_methods)
                if (applicable(m, u)) methods.emplace_back(u, m);
        if (methods.empty()) throw ConfigError("no applicable (model, technique) combination in config");
    }
    std::vector<Scenario> out;
    for (std::size_t si = 0; si < config.sensors.size(); ++si)
        for (int w : config.omegas)
            for (bool m : config.meteo)
                for (bool c : config.calendar)
                    for (int h : config.horizons)
                        for (int r = 0; r < config.repeats; ++r)
                            for (auto [uq, model] : methods) {
                                Scenario s;
                                s.sensor_id = config.sensors[si];
                                s.sensor_index = si;
                                s.window = w;
                                s.horizon = h;
                                s.meteo = m;
                                s.calendar = c;
                                s.model = model;
                                s.uq = uq;
                                s.alpha = config.alpha;
                                s.repeat = r;
                                s.seed = derive_seed(config.seed, {si, static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(h),
                                                                   m ? 1u : 0u, c ? 1u : 0u, static_cast<std::uint64_t>(model),
                                                                   static_cast<std::uint64_t>(r)});
                                out.push_back(std::move(s));
                            }
    return out;
}

// --- manifest ------------------------------------------------------------------------

std::size_t RunManifest::failures() const {
    return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.ok; }));
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_from(const json& v) {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

}  // namespace

json RunManifest::to_json() const {
    json rs = json::array();
    for (const auto& r : results) {
        const auto& s = r.scenario;
        rs.push_back({{"id", s.id()},
                      {"sensor", s.sensor_id},
                      {"sensor_index", s.sensor_index},
                      {"omega", s.window},
                      {"horizon", s.horizon},
                      {"meteo", s.meteo},
                      {"calendar", s.calendar},
                      {"model", to_string(s.model)},
                      {"uq", to_string(s.uq)},
                      {"method", s.method()},
                      {"alpha", s.alpha},
                      {"repeat", s.repeat},
                      {"seed", s.seed},
                      {"status", r.ok ? "ok" : "failed"},
                      {"error", r.error},
                      {"metrics",
                       {{"r2", opt(r.metrics.r2)},
                        {"mil", r.metrics.mil},
                        {"icp", r.metrics.icp},
                        {"rmil", r.metrics.rmil},
                        {"miscalibration_area", opt(r.metrics.miscalibration_area)},
                        {"T", r.metrics.T}}},
                      {"calibration_curve", {{"confidence", r.curve.confidence}, {"coverage", r.curve.coverage}}},
                      {"quantile_crossings", r.quantile_crossings},
                      {"rows", {{"train", r.n_train}, {"calibration", r.n_calibration}, {"test", r.n_test}}},
                      {"elapsed_ms", r.elapsed_ms}});
    }
    return {{"tool_version", tool_version}, {"config_digest", config_digest}, {"seed", seed}, {"alpha", alpha},
            {"elapsed_ms", elapsed_ms},     {"scenarios", rs}};
}

RunManifest RunManifest::from_json(const json& doc) {
    try {
        RunManifest m;
        m.tool_version = doc.at("tool_version").get<std::string>();
        m.config_digest = doc.at("config_digest").get<std::string>();
        m.seed = doc.at("seed").get<std::uint64_t>();
        m.alpha = doc.at("alpha").get<double>();
        m.elapsed_ms = doc.value("elapsed_ms", 0.0);
        for (const auto& j : doc.at("scenarios")) {
            ScenarioResult r;
            auto& s = r.scenario;
            s.sensor_id = j.at("sensor").get<std::string>();
            s.sensor_index = j.at("sensor_index").get<std::size_t>();
            s.window = j.at("omega").get<int>();
            s.horizon = j.at("horizon").get<int>();
            s.meteo = j.at("meteo").get<bool>();
            s.calendar = j.at("calendar").get<bool>();
            s.model = model_kind_from_string(j.at("model").get<std::string>());
            s.uq = uq_kind_from_string(j.at("uq").get<std::string>());
            s.alpha = j.at("alpha").get<double>();
            s.repeat = j.at("repeat").get<int>();
            s.seed = j.at("seed").get<std::uint64_t>();
            r.ok = j.at("status") == "ok";
            r.error = j.value("error", std::string{});
            const auto& mt = j.at("metrics");
            r.metrics.r2 = opt_from(mt.at("r2"));
            r.metrics.mil = mt.at("mil").get<double>();
            r.metrics.icp = mt.at("icp").get<double>();
            r.metrics.rmil = mt.at("rmil").get<double>();
            r.metrics.miscalibration_area = opt_from(mt.at("miscalibration_area"));
            r.metrics.T = mt.at("T").get<std::size_t>();
            r.curve.confidence = j.at("calibration_curve").at("confidence").get<std::vector<double>>();
            r.curve.coverage = j.at("calibration_curve").at("coverage").get<std::vector<double>>();
            r.quantile_crossings = j.value("quantile_crossings", std::size_t{0});
            r.n_train = j.at("rows").at("train").get<std::size_t>();
            r.n_calibration = j.at("rows").at("calibration").get<std::size_t>();
            r.n_test = j.at("rows").at("test").get<std::size_t>();
            r.elapsed_ms = j.value("elapsed_ms", 0.0);
            m.results.push_back(std::move(r));
        }
        return m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed manifest: ") + e.what());
    }
}

}  // namespace uqt
