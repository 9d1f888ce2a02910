#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "uqt/uncertainty.hpp"

namespace uqt {

/// Mean interval length (1/T) sum(u - l). Throws MetricError on empty input.
double mil(std::span<const PredictionInterval> intervals);

/// Fraction of targets with l <= y <= u (boundaries count as covered).
double icp(std::span<const PredictionInterval> intervals, std::span<const double> y_true);

/// (1/T) sum (u - l) / max(|y - y_hat|, floor). The point forecast is taken
/// from `y_hat`. Throws ConfigError when floor <= 0.
double rmil(std::span<const PredictionInterval> intervals, std::span<const double> y_true, std::span<const double> y_hat,
            double floor = 1e-6);

/// Coefficient of determination; nullopt when y_true is constant.
std::optional<double> r_squared(std::span<const double> y_true, std::span<const double> y_hat);

struct CalibrationCurve {
    std::vector<double> confidence;  // strictly increasing, 1 - alpha'
    std::vector<double> coverage;    // observed ICP at each level
};

/// Default grid 0.05, 0.10, ..., 0.95.
std::vector<double> default_confidence_grid();

/// Observed ICP at each confidence level of the grid. Levels the estimator
/// cannot produce without refitting are skipped. Throws ConfigError for an
/// empty or non-increasing grid.
CalibrationCurve calibration_curve(const IntervalEstimator& estimator, const Matrix& X, std::span<const double> y_true,
                                   std::span<const double> confidence_grid);

/// Trapezoidal integral of |coverage(c) - c| over the curve's grid.
/// Throws MetricError for curves with fewer than two points.
double miscalibration_area(const CalibrationCurve& curve);

struct MetricReport {
    std::optional<double> r2;
    double mil = 0.0;
    double icp = 0.0;
    double rmil = 0.0;
    std::optional<double> miscalibration_area;
    std::size_t T = 0;
};

MetricReport evaluate_intervals(std::span<const PredictionInterval> intervals, std::span<const double> y_true,
                                double rmil_floor = 1e-6);

/// Sliding-window miss-rate monitor. Raises an alarm when the window miss
/// rate exceeds alpha + kappa * sqrt(alpha (1 - alpha) / W). One alarm is
/// reported per excursion (on entering the alarm state).
class CoverageDriftMonitor {
public:
    struct Alarm {
        std::size_t index = 0;  // index of the window's last observation
        double miss_rate = 0.0;
    };

    /// Throws ConfigError for W < 30 or alpha outside (0, 1).
    CoverageDriftMonitor(std::size_t window, double alpha, double kappa);

    std::optional<Alarm> push(bool covered);
    std::optional<Alarm> push(const PredictionInterval& interval, double y) { return push(interval.covers(y)); }

    double threshold() const noexcept { return threshold_; }
    std::size_t observations() const noexcept { return count_; }

private:
    std::size_t window_;
    double threshold_;
    std::vector<char> ring_;
    std::size_t misses_ = 0;
    std::size_t count_ = 0;
    bool alarmed_ = false;
};

std::vector<CoverageDriftMonitor::Alarm> coverage_drift_monitor(std::span<const PredictionInterval> intervals,
                                                                std::span<const double> y_true, std::size_t window,
                                                                double alpha, double kappa);

}  // namespace uqt
