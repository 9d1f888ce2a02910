#include "uqt/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "uqt/error.hpp"

namespace uqt {

double mil(std::span<const PredictionInterval> intervals) {
    if (intervals.empty()) throw MetricError("MIL of an empty interval set");
    double s = 0.0;
    for (const auto& iv : intervals) s += iv.upper - iv.lower;
    return s / static_cast<double>(intervals.size());
}

double icp(std::span<const PredictionInterval> intervals, std::span<const double> y_true) {
    if (intervals.size() != y_true.size()) throw ShapeError("ICP: interval and target counts differ");
    if (intervals.empty()) throw MetricError("ICP of an empty interval set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) hits += intervals[i].covers(y_true[i]) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(intervals.size());
}

double rmil(std::span<const PredictionInterval> intervals, std::span<const double> y_true, std::span<const double> y_hat,
            double floor) {
    if (!(floor > 0.0)) throw ConfigError("RMIL floor must be positive");
    if (intervals.size() != y_true.size() || y_hat.size() != y_true.size()) throw ShapeError("RMIL: input lengths differ");
    if (intervals.empty()) throw MetricError("RMIL of an empty interval set");
    double s = 0.0;
    for (std::size_t i = 0; i < intervals.size(); ++i)
        s += (intervals[i].upper - intervals[i].lower) / std::max(std::abs(y_true[i] - y_hat[i]), floor);
    return s / static_cast<double>(intervals.size());
}

std::optional<double> r_squared(std::span<const double> y_true, std::span<const double> y_hat) {
    if (y_true.size() != y_hat.size()) throw ShapeError("R2: input lengths differ");
    if (y_true.empty()) throw MetricError("R2 of an empty sample");
    double mean = 0.0;
    for (double y : y_true) mean += y;
    mean /= static_cast<double>(y_true.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ss_res += (y_true[i] - y_hat[i]) * (y_true[i] - y_hat[i]);
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
    }
    if (ss_tot == 0.0) return std::nullopt;
    return 1.0 - ss_res / ss_tot;
}

std::vector<double> default_confidence_grid() {
    std::vector<double> grid;
    for (int k = 1; k <= 19; ++k) grid.push_back(0.05 * k);
    return grid;
}

CalibrationCurve calibration_curve(const IntervalEstimator& estimator, const Matrix& X, std::span<const double> y_true,
                                   std::span<const double> confidence_grid) {
    if (confidence_grid.empty()) throw ConfigError("calibration grid is empty");
    for (std::size_t i = 0; i < confidence_grid.size(); ++i) {
        if (!(confidence_grid[i] > 0.0 && confidence_grid[i] < 1.0)) throw ConfigError("confidence levels must lie in (0, 1)");
        if (i > 0 && !(confidence_grid[i] > confidence_grid[i - 1])) throw ConfigError("calibration grid must be strictly increasing");
    }
    CalibrationCurve curve;
    std::vector<double> alphas;
    for (double c : confidence_grid) {
        if (!estimator.supports_alpha(1.0 - c)) continue;
        curve.confidence.push_back(c);
        alphas.push_back(1.0 - c);
    }
    if (alphas.empty()) return curve;
    auto levels = estimator.predict_levels(X, alphas);
    for (const auto& ivs : levels) curve.coverage.push_back(icp(ivs, y_true));
    return curve;
}

double miscalibration_area(const CalibrationCurve& curve) {
    if (curve.confidence.size() != curve.coverage.size()) throw ShapeError("calibration curve arrays differ in length");
    if (curve.confidence.size() < 2) throw MetricError("miscalibration area needs at least two curve points");
    double area = 0.0;
    for (std::size_t i = 1; i < curve.confidence.size(); ++i) {
        const double a = std::abs(curve.coverage[i - 1] - curve.confidence[i - 1]);
        const double b = std::abs(curve.coverage[i] - curve.confidence[i]);
        area += 0.5 * (a + b) * (curve.confidence[i] - curve.confidence[i - 1]);
    }
    return area;
}

MetricReport evaluate_intervals(std::span<const PredictionInterval> intervals, std::span<const double> y_true,
                                double rmil_floor) {
    std::vector<double> y_hat(intervals.size());
    for (std::size_t i = 0; i < intervals.size(); ++i) y_hat[i] = intervals[i].point;
    MetricReport r;
    r.T = intervals.size();
    r.mil = mil(intervals);
    r.icp = icp(intervals, y_true);
    r.rmil = rmil(intervals, y_true, y_hat, rmil_floor);
    r.r2 = r_squared(y_true, y_hat);
    return r;
}

}  // namespace uqt
