#include "uqt/series.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>

#include "uqt/csv.hpp"
#include "uqt/error.hpp"

namespace uqt {

void SensorSeries::validate() const {
    if (flow.size() != timestamps.size()) throw DataError("flow and timestamp lengths differ");
    if (weather && weather->size() != timestamps.size()) throw DataError("weather and timestamp lengths differ");
    for (std::size_t i = 0; i < flow.size(); ++i)
        if (!(flow[i] >= 0.0)) throw DataError("negative or non-finite flow at " + format_timestamp(timestamps[i]));
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        auto step = timestamps[i] - timestamps[i - 1];
        if (step <= std::chrono::seconds{0}) throw DataError("timestamps not increasing at " + format_timestamp(timestamps[i]));
        if (step.count() % kStep.count() != 0)
            throw DataError("timestamp off the 15-minute grid at " + format_timestamp(timestamps[i]));
    }
}

LoadResult load_csv(const std::filesystem::path& path, std::string sensor_id) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM

    auto header = csv::split(line);
    auto find_col = [&](std::string_view name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };
    const int ts_col = find_col("timestamp");
    const int flow_col = find_col("flow");
    if (ts_col < 0) throw SchemaError(path.string() + ": missing mandatory column 'timestamp'");
    if (flow_col < 0) throw SchemaError(path.string() + ": missing mandatory column 'flow'");
    const std::array<int, 4> weather_cols{find_col("temperature"), find_col("cloud_cover"), find_col("humidity"),
                                          find_col("precipitation")};
    const auto n_weather = std::count_if(weather_cols.begin(), weather_cols.end(), [](int c) { return c >= 0; });
    if (n_weather != 0 && n_weather != 4)
        throw SchemaError(path.string() + ": weather columns must be all present or all absent");
    const bool with_weather = n_weather == 4;

    struct Record {
        Timestamp ts;
        double flow;
        Weather w;
    };
    std::vector<Record> records;
    std::size_t dropped = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = csv::split(line);
        auto cell = [&](int c) -> std::string_view { return c < static_cast<int>(cells.size()) ? cells[c] : std::string_view{}; };
        Record r{};
        try {
            r.ts = parse_timestamp(cell(ts_col));
        } catch (const DataError&) {
            ++dropped;
            continue;
        }
        auto f = csv::parse_double(cell(flow_col));
        if (!f || *f < 0.0) {
            ++dropped;
            continue;
        }
        r.flow = *f;
        if (with_weather) {
            std::array<double, 4> v{};
            bool ok = true;
            for (std::size_t k = 0; k < 4 && ok; ++k) {
                auto p = csv::parse_double(cell(weather_cols[k]));
                ok = p.has_value();
                if (ok) v[k] = *p;
            }
            if (!ok) {
                ++dropped;
                continue;
            }
            r.w = {v[0], v[1], v[2], v[3]};
        }
        records.push_back(r);
    }
    std::stable_sort(records.begin(), records.end(), [](const Record& a, const Record& b) { return a.ts < b.ts; });
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].ts == records[i - 1].ts)
            throw DataError(path.string() + ": duplicate timestamp " + format_timestamp(records[i].ts));

    LoadResult out;
    out.dropped_rows = dropped;
    out.series.sensor_id = sensor_id.empty() ? path.stem().string() : std::move(sensor_id);
    out.series.timestamps.reserve(records.size());
    out.series.flow.reserve(records.size());
    if (with_weather) out.series.weather.emplace().reserve(records.size());
    for (const auto& r : records) {
        out.series.timestamps.push_back(r.ts);
        out.series.flow.push_back(r.flow);
        if (with_weather) out.series.weather->push_back(r.w);
    }
    out.series.validate();
    return out;
}

void write_csv(const SensorSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "timestamp,flow";
    if (series.weather) out << ",temperature,cloud_cover,humidity,precipitation";
    out << '\n';
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_timestamp(series.timestamps[i]) << ',' << csv::fmt(series.flow[i]);
        if (series.weather) {
            const auto& w = (*series.weather)[i];
            out << ',' << csv::fmt(w.temperature) << ',' << csv::fmt(w.cloud_cover) << ',' << csv::fmt(w.humidity) << ','
                << csv::fmt(w.precipitation);
        }
        out << '\n';
    }
}

}  // namespace uqt
