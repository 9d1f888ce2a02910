#include <cmath>

#include "uqt/error.hpp"
#include "uqt/metrics.hpp"

namespace uqt {

CoverageDriftMonitor::CoverageDriftMonitor(std::size_t window, double alpha, double kappa)
    : window_(window), ring_(window, 0) {
    if (window < 30) throw ConfigError("drift monitor window must be >= 30");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (!(kappa >= 0.0)) throw ConfigError("kappa must be >= 0");
    threshold_ = alpha + kappa * std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(window));
}

std::optional<CoverageDriftMonitor::Alarm> CoverageDriftMonitor::push(bool covered) {
    const std::size_t slot = count_ % window_;
    if (count_ >= window_) misses_ -= static_cast<std::size_t>(ring_[slot]);
    ring_[slot] = covered ? 0 : 1;
    misses_ += covered ? 0 : 1;
    ++count_;
    if (count_ < window_) return std::nullopt;
    const double rate = static_cast<double>(misses_) / static_cast<double>(window_);
    const bool above = rate > threshold_;
    const bool rising = above && !alarmed_;
    alarmed_ = above;
    if (!rising) return std::nullopt;
    return Alarm{count_ - 1, rate};
}

std::vector<CoverageDriftMonitor::Alarm> coverage_drift_monitor(std::span<const PredictionInterval> intervals,
                                                                std::span<const double> y_true, std::size_t window,
                                                                double alpha, double kappa) {
    if (intervals.size() != y_true.size()) throw ShapeError("monitor: interval and target counts differ");
    CoverageDriftMonitor monitor(window, alpha, kappa);
    std::vector<CoverageDriftMonitor::Alarm> alarms;
    for (std::size_t i = 0; i < intervals.size(); ++i)
        if (auto a = monitor.push(intervals[i], y_true[i])) alarms.push_back(*a);
    return alarms;
}

}  // namespace uqt
