#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uqt/calendar.hpp"

namespace uqt {

struct Weather {
    double temperature = 0.0;     // degrees C
    double cloud_cover = 0.0;     // fraction [0,1]
    double humidity = 0.0;        // fraction [0,1]
    double precipitation = 0.0;   // mm/h
};

/// 15-minute flow readings of one sensor, optionally with weather channels.
struct SensorSeries {
    std::string sensor_id;
    std::vector<Timestamp> timestamps;
    std::vector<double> flow;  // vehicles/hour
    std::optional<std::vector<Weather>> weather;

    std::size_t size() const noexcept { return timestamps.size(); }
    bool has_weather() const noexcept { return weather.has_value(); }

    /// Throws DataError when ordering, spacing, sign, or length invariants fail.
    void validate() const;
};

struct LoadResult {
    SensorSeries series;
    std::size_t dropped_rows = 0;
};

/// Reads `timestamp,flow[,temperature,cloud_cover,humidity,precipitation]`.
/// Rows with unparsable cells are dropped and counted; records are sorted
/// chronologically. Missing mandatory columns raise SchemaError, duplicate
/// timestamps raise DataError.
LoadResult load_csv(const std::filesystem::path& path, std::string sensor_id = {});

void write_csv(const SensorSeries& series, const std::filesystem::path& path);

}  // namespace uqt
