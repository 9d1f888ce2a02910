#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "uqt/calendar.hpp"
#include "uqt/matrix.hpp"
#include "uqt/series.hpp"

namespace testutil {

inline uqt::SensorSeries make_series(const std::vector<double>& flow, const std::string& start = "2019-03-04T00:00") {
    uqt::SensorSeries s;
    s.sensor_id = "t";
    auto ts = uqt::parse_timestamp(start);
    for (double v : flow) {
        s.timestamps.push_back(ts);
        s.flow.push_back(v);
        ts += uqt::kStep;
    }
    return s;
}

inline uqt::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    uqt::Matrix m(rows, cols);
    for (auto& v : m.data()) v = u(rng);
    return m;
}

inline std::string data_path(const std::string& name) { return std::string(UQT_TEST_DATA) + "/" + name; }

}  // namespace testutil
