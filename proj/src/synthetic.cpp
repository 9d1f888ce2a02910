#include "uqt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "uqt/csv.hpp"
#include "uqt/error.hpp"
#include "uqt/random.hpp"

namespace uqt {

namespace {

using Field = double SyntheticConfig::*;

const std::map<std::string, Field, std::less<>>& numeric_fields() {
    static const std::map<std::string, Field, std::less<>> fields{
        {"base_level", &SyntheticConfig::base_level},
        {"morning_peak_amplitude", &SyntheticConfig::morning_peak_amplitude},
        {"morning_peak_hour", &SyntheticConfig::morning_peak_hour},
        {"morning_peak_width", &SyntheticConfig::morning_peak_width},
        {"evening_peak_amplitude", &SyntheticConfig::evening_peak_amplitude},
        {"evening_peak_hour", &SyntheticConfig::evening_peak_hour},
        {"evening_peak_width", &SyntheticConfig::evening_peak_width},
        {"weekend_factor", &SyntheticConfig::weekend_factor},
        {"school_boost", &SyntheticConfig::school_boost},
        {"rain_effect", &SyntheticConfig::rain_effect},
        {"sigma0", &SyntheticConfig::sigma0},
        {"kappa", &SyntheticConfig::kappa},
        {"ar_coefficient", &SyntheticConfig::ar_coefficient},
        {"ar_sigma", &SyntheticConfig::ar_sigma},
    };
    return fields;
}

std::string trimmed(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

double bump(double hour, double centre, double width) {
    const double d = (hour - centre) / width;
    return std::exp(-0.5 * d * d);
}

}  // namespace

void SyntheticConfig::validate() const {
    if (!(base_level > 0.0)) throw ConfigError("base_level must be positive");
    if (!(morning_peak_amplitude > 0.0) || !(evening_peak_amplitude > 0.0))
        throw ConfigError("peak amplitudes must be positive");
    if (!(morning_peak_width > 0.0) || !(evening_peak_width > 0.0)) throw ConfigError("peak widths must be positive");
    if (morning_peak_hour < 0.0 || morning_peak_hour >= 24.0 || evening_peak_hour < 0.0 || evening_peak_hour >= 24.0)
        throw ConfigError("peak hours must lie in [0, 24)");
    if (!(weekend_factor > 0.0) || weekend_factor > 1.0) throw ConfigError("weekend_factor must lie in (0, 1]");
    if (school_boost < 0.0) throw ConfigError("school_boost must be >= 0");
    if (rain_effect < 0.0 || rain_effect >= 1.0) throw ConfigError("rain_effect must lie in [0, 1)");
    if (sigma0 < 0.0) throw ConfigError("sigma0 must be >= 0");
    if (kappa < 0.0) throw ConfigError("kappa must be >= 0");
    if (ar_coefficient < 0.0 || ar_coefficient >= 1.0) throw ConfigError("ar_coefficient must lie in [0, 1)");
    if (ar_sigma < 0.0) throw ConfigError("ar_sigma must be >= 0");
    try {
        parse_date(start_date);
    } catch (const DataError& e) {
        throw ConfigError(std::string("start_date: ") + e.what());
    }
}

SyntheticConfig SyntheticConfig::from_text(const std::string& text) {
    SyntheticConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trimmed(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("synthetic config line " + std::to_string(lineno) + ": expected key = value");
        auto key = trimmed(line.substr(0, eq));
        auto value = trimmed(line.substr(eq + 1));
        if (key == "start_date") {
            cfg.start_date = value;
            continue;
        }
        auto it = numeric_fields().find(key);
        if (it == numeric_fields().end()) throw ConfigError("unknown synthetic config key '" + key + "'");
        auto v = csv::parse_double(value);
        if (!v) throw ConfigError("synthetic config key '" + key + "': not a number");
        cfg.*(it->second) = *v;
    }
    cfg.validate();
    return cfg;
}

SyntheticConfig SyntheticConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open synthetic config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

std::string SyntheticConfig::to_text() const {
    std::ostringstream out;
    for (const auto& [key, field] : numeric_fields()) out << key << " = " << csv::fmt(this->*field) << '\n';
    out << "start_date = " << start_date << '\n';
    return out.str();
}

double synthetic_level(const SyntheticConfig& cfg, Timestamp ts, const CalendarInfo& calendar, double precipitation) {
    const Date d = date_of(ts);
    const double hour = seconds_of_day(ts) / 3600.0;
    const double school = calendar.is_school_day(d) ? 1.0 + cfg.school_boost : 1.0;
    double level = cfg.base_level + school * cfg.morning_peak_amplitude * bump(hour, cfg.morning_peak_hour, cfg.morning_peak_width) +
                   cfg.evening_peak_amplitude * bump(hour, cfg.evening_peak_hour, cfg.evening_peak_width);
    if (day_of_week(ts) >= 5 || calendar.is_holiday(d)) level *= cfg.weekend_factor;
    level *= 1.0 - cfg.rain_effect * std::min(precipitation / 5.0, 1.0);
    return level;
}

SensorSeries generate_synthetic(const SyntheticConfig& cfg, int days, std::uint64_t seed, const CalendarInfo& calendar,
                                std::string sensor_id) {
    if (days < 1) throw ConfigError("days must be >= 1");
    cfg.validate();
    const Timestamp start{std::chrono::sys_days{parse_date(cfg.start_date)}};
    const std::size_t n = static_cast<std::size_t>(days) * kSamplesPerDay;

    Rng weather_rng(derive_seed(seed, {1}));
    Rng noise_rng(derive_seed(seed, {2}));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> rain_amount(0.5);  // mean 2 mm/h

    SensorSeries s;
    s.sensor_id = std::move(sensor_id);
    s.timestamps.resize(n);
    s.flow.resize(n);
    s.weather.emplace(n);

    double cloud = 0.4;
    bool raining = false;
    double rain = 0.0;
    double ar = 0.0;
    const double ar_sd = cfg.ar_sigma;
    constexpr double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < n; ++i) {
        const Timestamp ts = start + kStep * static_cast<long>(i);
        s.timestamps[i] = ts;
        const double hour = seconds_of_day(ts) / 3600.0;
        const double doy = static_cast<double>(i / kSamplesPerDay) + 1.0;

        cloud = std::clamp(0.98 * cloud + 0.02 * 0.45 + 0.05 * gauss(weather_rng), 0.0, 1.0);
        if (raining) {
            if (unif(weather_rng) < 0.08) raining = false;
        } else if (unif(weather_rng) < 0.004 * (0.5 + cloud)) {
            raining = true;
            rain = rain_amount(weather_rng);
        }
        const double precipitation = raining ? rain : 0.0;
        Weather w;
        w.temperature = 15.0 - 9.0 * std::cos(2.0 * pi * (doy - 15.0) / 365.0) - 5.0 * std::cos(2.0 * pi * (hour - 3.0) / 24.0) +
                        1.0 * gauss(weather_rng);
        w.cloud_cover = cloud;
        w.humidity = std::clamp(0.55 + 0.3 * cloud - 0.01 * (w.temperature - 15.0) + (raining ? 0.2 : 0.0), 0.0, 1.0);
        w.precipitation = precipitation;
        (*s.weather)[i] = w;

        const double level = synthetic_level(cfg, ts, calendar, precipitation);
        ar = cfg.ar_coefficient * ar + ar_sd * gauss(noise_rng);
        const double noise = synthetic_noise_sd(cfg, level) * gauss(noise_rng);
        s.flow[i] = std::max(0.0, level * (1.0 + ar) + noise);
    }
    return s;
}

}  // namespace uqt
