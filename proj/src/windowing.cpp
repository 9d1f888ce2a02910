#include "uqt/dataset.hpp"

#include <chrono>
#include <string>

#include "uqt/error.hpp"

namespace uqt {

void DatasetConfig::validate() const {
    if (window < 1) throw ConfigError("window must be >= 1");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

std::vector<std::string> DatasetConfig::feature_names() const {
    std::vector<std::string> names;
    for (int k = 0; k < window; ++k) names.push_back(k == 0 ? "flow_t0" : "flow_t-" + std::to_string(k));
    if (use_meteo) names.insert(names.end(), {"temperature", "cloud_cover", "humidity", "precipitation"});
    if (use_calendar) names.insert(names.end(), {"day_of_week", "is_holiday", "is_school_period"});
    return names;
}

WindowedDataset build_windows(const SensorSeries& series, const CalendarInfo& calendar, const DatasetConfig& config) {
    config.validate();
    if (config.use_meteo && !series.has_weather())
        throw ConfigError("meteo features requested but series '" + series.sensor_id + "' has no weather columns");
    const auto w = static_cast<std::size_t>(config.window);
    const auto h = static_cast<std::size_t>(config.horizon);
    if (series.size() < w + h) throw ConfigError("series shorter than window + horizon");

    WindowedDataset ds;
    ds.config = config;
    const std::size_t cols = config.feature_count();
    std::vector<double> row(cols);
    for (std::size_t t = w - 1; t + h < series.size(); ++t) {
        // Strictly increasing 900 s grid: index distance equals time distance iff no gap.
        if (series.timestamps[t] - series.timestamps[t + 1 - w] != kStep * static_cast<long>(w - 1)) continue;
        if (series.timestamps[t + h] - series.timestamps[t] != kStep * static_cast<long>(h)) continue;
        std::size_t c = 0;
        for (std::size_t k = 0; k < w; ++k) row[c++] = series.flow[t - k];
        if (config.use_meteo) {
            const auto& wx = (*series.weather)[t];
            row[c++] = wx.temperature;
            row[c++] = wx.cloud_cover;
            row[c++] = wx.humidity;
            row[c++] = wx.precipitation;
        }
        if (config.use_calendar) {
            auto f = calendar.features(series.timestamps[t]);
            row[c++] = f.day_of_week;
            row[c++] = f.is_holiday;
            row[c++] = f.is_school_period;
        }
        ds.X.append_row(row);
        ds.y.push_back(series.flow[t + h]);
        ds.sample_timestamps.push_back(series.timestamps[t + h]);
    }
    if (ds.X.cols() == 0) ds.X = Matrix(0, cols);
    return ds;
}

DatasetSplits stratified_monthly_split(const WindowedDataset& dataset) {
    if (dataset.sample_timestamps.size() != dataset.size()) throw SplitError("sample timestamps missing");
    DatasetSplits s;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const unsigned dom = static_cast<unsigned>(date_of(dataset.sample_timestamps[i]).day());
        if (dom <= 14) s.train.push_back(i);
        else if (dom <= 21) s.calibration.push_back(i);
        else s.test.push_back(i);
    }
    if (s.train.empty()) throw SplitError("train partition is empty");
    if (s.calibration.empty()) throw SplitError("calibration partition is empty");
    if (s.test.empty()) throw SplitError("test partition is empty");
    return s;
}

}  // namespace uqt
