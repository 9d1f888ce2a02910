#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "uqt/bench.hpp"
#include "uqt/csv.hpp"
#include "uqt/error.hpp"
#include "uqt/svg.hpp"

namespace uqt {

namespace fs = std::filesystem;

namespace {

const char* kColours[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string column_label(const Scenario& s) {
    return "w" + std::to_string(s.window) + "_m" + (s.meteo ? "1" : "0") + "c" + (s.calendar ? "1" : "0") + "_h" +
           std::to_string(s.horizon);
}

std::string opt_str(const std::optional<double>& v) { return v ? csv::fmt(*v) : std::string{}; }

void write_pivot(const PivotTable& t, const fs::path& path) {
    std::ofstream out(path);
    out << "sensor,metric";
    for (const auto& c : t.columns) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < t.row_keys.size(); ++r) {
        out << t.row_keys[r].first << ',' << t.row_keys[r].second;
        for (const auto& cell : t.cells[r]) out << ',' << opt_str(cell);
        out << '\n';
    }
}

// Key without the technique, so CP and uncalibrated runs on one model pair up.
std::string model_key(const Scenario& s) { return s.dataset_key() + "|" + to_string(s.model); }

void write_calibration_summary(const RunManifest& m, const fs::path& out_dir) {
    std::map<std::string, const ScenarioResult*> cp;
    for (const auto& r : m.results)
        if (r.ok && r.scenario.uq == UQKind::conformal) cp[model_key(r.scenario)] = &r;

    std::ofstream out(out_dir / "calibration_comparison.csv");
    out << "dataset,model,uncalibrated_method,cp_icp,uncalibrated_icp,cp_mil,uncalibrated_mil,cp_area,uncalibrated_area,"
           "cp_area_lower\n";
    for (const auto& r : m.results) {
        if (!r.ok || r.scenario.uq == UQKind::conformal) continue;
        auto it = cp.find(model_key(r.scenario));
        if (it == cp.end()) continue;
        const auto& c = *it->second;
        const auto& a = c.metrics.miscalibration_area;
        const auto& b = r.metrics.miscalibration_area;
        out << r.scenario.dataset_key() << ',' << to_string(r.scenario.model) << ',' << r.scenario.method() << ','
            << csv::fmt(c.metrics.icp) << ',' << csv::fmt(r.metrics.icp) << ',' << csv::fmt(c.metrics.mil) << ','
            << csv::fmt(r.metrics.mil) << ',' << opt_str(a) << ',' << opt_str(b) << ','
            << (a && b ? (*a < *b ? "1" : "0") : "") << '\n';
    }

    struct Agg {
        std::size_t n = 0, n_area = 0;
        double icp = 0, mil = 0, area = 0;
    };
    std::map<std::string, Agg> per_method;
    std::vector<std::string> order;
    for (const auto& r : m.results) {
        if (!r.ok) continue;
        const auto name = r.scenario.method();
        if (!per_method.contains(name)) order.push_back(name);
        auto& a = per_method[name];
        ++a.n;
        a.icp += r.metrics.icp;
        a.mil += r.metrics.mil;
        if (r.metrics.miscalibration_area) {
            ++a.n_area;
            a.area += *r.metrics.miscalibration_area;
        }
    }
    std::ofstream sum(out_dir / "method_summary.csv");
    sum << "method,scenarios,mean_icp,mean_mil,mean_miscalibration_area\n";
    for (const auto& name : order) {
        const auto& a = per_method[name];
        const double n = static_cast<double>(a.n);
        sum << name << ',' << a.n << ',' << csv::fmt(a.icp / n) << ',' << csv::fmt(a.mil / n) << ','
            << (a.n_area ? csv::fmt(a.area / static_cast<double>(a.n_area)) : std::string{}) << '\n';
    }
}

void plot_icp_boxes(const RunManifest& m, const fs::path& out_dir) {
    std::vector<svg::BoxGroup> groups;
    std::map<std::string, std::size_t> index;
    for (const auto& r : m.results) {
        if (!r.ok) continue;
        auto [it, inserted] = index.emplace(r.scenario.method(), groups.size());
        if (inserted) groups.push_back({r.scenario.method(), {}});
        groups[it->second].values.push_back(r.metrics.icp);
    }
    svg::write(out_dir / "icp_boxplot.svg",
               svg::box_plot("ICP per technique (dashed: 1 - alpha)", "ICP", groups, 1.0 - m.alpha));
}

void plot_calibration_curves(const RunManifest& m, const fs::path& out_dir) {
    std::string first_key;
    for (const auto& r : m.results)
        if (r.ok && r.curve.confidence.size() >= 2) {
            first_key = r.scenario.dataset_key();
            break;
        }
    std::vector<svg::Series> series;
    series.push_back({"ideal", {0.0, 1.0}, {0.0, 1.0}, "#000000", true});
    std::size_t k = 0;
    for (const auto& r : m.results) {
        if (!r.ok || r.scenario.dataset_key() != first_key || r.curve.confidence.size() < 2) continue;
        series.push_back({r.scenario.method(), r.curve.confidence, r.curve.coverage, kColours[k++ % 8], false});
    }
    svg::write(out_dir / "calibration_curves.svg",
               svg::line_chart("Calibration curves " + first_key, "confidence level", "observed coverage", series));
}

void plot_interval_band(const RunManifest& m, const fs::path& out_dir) {
    for (const auto& r : m.results) {
        if (!r.ok) continue;
        const auto path = out_dir / "intervals" / (r.scenario.id() + ".csv");
        std::ifstream in(path);
        if (!in) continue;
        std::string line;
        std::getline(in, line);
        std::vector<double> x, y, yhat, lo, hi;
        while (std::getline(in, line) && x.size() < 96) {
            auto cells = csv::split(line);
            if (cells.size() < 5) break;
            x.push_back(static_cast<double>(x.size()) * 0.25);
            y.push_back(csv::parse_double(cells[1]).value_or(0.0));
            yhat.push_back(csv::parse_double(cells[2]).value_or(0.0));
            lo.push_back(csv::parse_double(cells[3]).value_or(0.0));
            hi.push_back(csv::parse_double(cells[4]).value_or(0.0));
        }
        if (x.empty()) continue;
        svg::write(out_dir / "interval_band.svg",
                   svg::line_chart(r.scenario.id() + " (first test day)", "hours", "vehicles/hour",
                                   {{"observed", x, y, "#000000", false}, {"forecast", x, yhat, "#1f77b4", false}},
                                   {{x, lo, hi, "#1f77b4"}}));
        return;
    }
}

}  // namespace

std::map<std::string, PivotTable> build_pivots(const RunManifest& manifest) {
    struct Cell {
        double sum = 0;
        int n = 0;
    };
    std::map<std::string, PivotTable> tables;
    std::map<std::string, std::map<std::tuple<std::string, std::string, std::string>, Cell>> acc;
    for (const auto& r : manifest.results) {
        const auto method = r.scenario.method();
        auto& t = tables[method];
        const auto col = column_label(r.scenario);
        if (std::find(t.columns.begin(), t.columns.end(), col) == t.columns.end()) t.columns.push_back(col);
        for (const char* metric : {"R2", "ICP", "MIL"}) {
            std::pair<std::string, std::string> key{r.scenario.sensor_id, metric};
            if (std::find(t.row_keys.begin(), t.row_keys.end(), key) == t.row_keys.end()) t.row_keys.push_back(key);
            if (!r.ok) continue;
            std::optional<double> v;
            if (std::string(metric) == "R2") v = r.metrics.r2;
            else if (std::string(metric) == "ICP") v = r.metrics.icp;
            else v = r.metrics.mil;
            if (!v) continue;
            auto& c = acc[method][{key.first, key.second, col}];
            c.sum += *v;
            ++c.n;
        }
    }
    for (auto& [method, t] : tables) {
        t.cells.assign(t.row_keys.size(), std::vector<std::optional<double>>(t.columns.size()));
        for (std::size_t r = 0; r < t.row_keys.size(); ++r)
            for (std::size_t c = 0; c < t.columns.size(); ++c) {
                auto it = acc[method].find({t.row_keys[r].first, t.row_keys[r].second, t.columns[c]});
                if (it != acc[method].end() && it->second.n > 0) t.cells[r][c] = it->second.sum / it->second.n;
            }
    }
    return tables;
}

std::vector<std::string> emit_report(const RunManifest& manifest, const fs::path& out_dir) {
    if (manifest.results.empty()) throw Error("manifest contains no scenarios; nothing to report");
    std::vector<std::string> warnings;
    for (const auto& r : manifest.results)
        if (!r.ok) warnings.push_back("scenario " + r.scenario.id() + " failed: " + r.error);
    fs::create_directories(out_dir);
    for (const auto& [method, table] : build_pivots(manifest)) write_pivot(table, out_dir / ("pivot_" + method + ".csv"));
    write_calibration_summary(manifest, out_dir);
    plot_icp_boxes(manifest, out_dir);
    plot_calibration_curves(manifest, out_dir);
    plot_interval_band(manifest, out_dir);
    if (!warnings.empty()) warnings.insert(warnings.begin(), "partial report: " + std::to_string(warnings.size()) + " scenario(s) missing");
    return warnings;
}

}  // namespace uqt
