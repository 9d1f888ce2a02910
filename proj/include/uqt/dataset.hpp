#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "uqt/calendar.hpp"
#include "uqt/matrix.hpp"
#include "uqt/series.hpp"

namespace uqt {

struct DatasetConfig {
    int window = 5;          // number of lagged flows
    int horizon = 1;         // steps ahead of the most recent lag
    bool use_meteo = false;
    bool use_calendar = false;
    double alpha = 0.1;      // significance level; confidence is 1 - alpha

    void validate() const;
    std::size_t feature_count() const noexcept {
        return static_cast<std::size_t>(window) + (use_meteo ? 4 : 0) + (use_calendar ? 3 : 0);
    }
    std::vector<std::string> feature_names() const;
};

/// Supervised design matrix. Columns: lags t0..t-(window-1), then weather,
/// then calendar (day_of_week, is_holiday, is_school_period).
struct WindowedDataset {
    Matrix X;
    std::vector<double> y;
    std::vector<Timestamp> sample_timestamps;  // target instants
    DatasetConfig config;

    std::size_t size() const noexcept { return y.size(); }
};

/// Rows whose lag window or target crosses a gap in the series are omitted.
WindowedDataset build_windows(const SensorSeries& series, const CalendarInfo& calendar, const DatasetConfig& config);

struct DatasetSplits {
    std::vector<std::size_t> train;
    std::vector<std::size_t> calibration;
    std::vector<std::size_t> test;
};

/// Day-of-month buckets of the target instant: 1-14 train, 15-21
/// calibration, 22-end test. Throws SplitError if any partition is empty.
DatasetSplits stratified_monthly_split(const WindowedDataset& dataset);

}  // namespace uqt
