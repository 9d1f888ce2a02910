#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "uqt/matrix.hpp"
#include "uqt/neural.hpp"
#include "uqt/regressors.hpp"
#include "uqt/standardizer.hpp"

namespace uqt {

struct PredictionInterval {
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.1;  // significance level

    double width() const noexcept { return upper - lower; }
    bool covers(double y) const noexcept { return lower <= y && y <= upper; }
};

/// Maps an interval from standardized target units back to original units.
PredictionInterval to_original_units(const PredictionInterval& interval, const Standardizer& standardizer);

/// Sorted absolute residuals of a held-out calibration partition.
class CalibrationScores {
public:
    CalibrationScores() = default;
    /// Sorts; throws CalibrationError if empty, negative, or non-finite.
    explicit CalibrationScores(std::vector<double> scores);

    std::size_t size() const noexcept { return scores_.size(); }
    const std::vector<double>& scores() const noexcept { return scores_; }

    /// k = ceil((n + 1)(1 - alpha)); returns the k-th smallest score.
    /// Throws InsufficientCalibrationError when k > n.
    double quantile(double alpha) const;
    static std::size_t rank(std::size_t n, double alpha);

private:
    std::vector<double> scores_;
};

CalibrationScores conformal_calibrate(const PointRegressor& model, const Matrix& X_cal, std::span<const double> y_cal);
PredictionInterval conformal_interval(double y_hat, const CalibrationScores& scores, double alpha);
PredictionInterval conformal_interval(const PointRegressor& model, const CalibrationScores& scores,
                                      std::span<const double> x, double alpha);

/// Type-1 alpha/2 and 1-alpha/2 quantiles of `samples`.
PredictionInterval interval_from_samples(std::span<const double> samples, double point, double alpha);

/// Percentile interval of the per-estimator predictions. Needs >= 2 estimators.
PredictionInterval ensemble_interval(const EnsembleModel& model, std::span<const double> x, double alpha);

/// Lower, median and upper pinball-loss boosting models.
struct QuantileModels {
    EnsembleModel lower;
    EnsembleModel median;
    EnsembleModel upper;
    double alpha = 0.1;  // trained significance level: taus alpha/2 and 1 - alpha/2
};

QuantileModels fit_quantile_models(const Matrix& X, std::span<const double> y, double alpha, const BoostingConfig& base,
                                   std::uint64_t seed);

/// Crossed bounds are swapped; `crossings` (if given) is incremented.
PredictionInterval quantile_interval(const QuantileModels& models, std::span<const double> x, std::size_t* crossings = nullptr);
PredictionInterval quantile_interval(double lower, double median, double upper, double alpha, std::size_t* crossings = nullptr);

/// Point is the mean of the stochastic passes. Throws ConfigError for passes < 10.
PredictionInterval mcdropout_interval(const MLPModel& model, std::span<const double> x, double alpha, int passes,
                                      std::uint64_t seed);
PredictionInterval mcdropout_interval_from_samples(std::span<const double> samples, double alpha);

/// mean -/+ z_{1-alpha/2} * sigma.
PredictionInterval heteroscedastic_interval(double mean, double sigma, double alpha);
PredictionInterval heteroscedastic_interval(const MLPModel& model, std::span<const double> x, double alpha);

double standard_normal_quantile(double p);

enum class UQKind { conformal, ensemble, quantile, mc_dropout, heteroscedastic };
std::string to_string(UQKind kind);
UQKind uq_kind_from_string(const std::string& name);

/// Common interface over the five techniques, batch-oriented.
class IntervalEstimator {
public:
    virtual ~IntervalEstimator() = default;
    virtual UQKind kind() const = 0;
    /// Whether intervals at significance `alpha` can be produced without refitting.
    virtual bool supports_alpha(double alpha) const { (void)alpha; return true; }
    virtual std::vector<PredictionInterval> predict(const Matrix& X, double alpha) const = 0;
    /// One interval vector per alpha; implementations may share work across levels.
    virtual std::vector<std::vector<PredictionInterval>> predict_levels(const Matrix& X, std::span<const double> alphas) const;
    /// Extra diagnostic count (quantile crossings); zero for most techniques.
    virtual std::size_t diagnostics() const { return 0; }
};

class ConformalEstimator final : public IntervalEstimator {
public:
    ConformalEstimator(std::shared_ptr<const PointRegressor> model, CalibrationScores scores)
        : model_(std::move(model)), scores_(std::move(scores)) {}
    UQKind kind() const override { return UQKind::conformal; }
    bool supports_alpha(double alpha) const override;
    std::vector<PredictionInterval> predict(const Matrix& X, double alpha) const override;
    std::vector<std::vector<PredictionInterval>> predict_levels(const Matrix& X, std::span<const double> alphas) const override;
    const CalibrationScores& scores() const noexcept { return scores_; }

private:
    std::shared_ptr<const PointRegressor> model_;
    CalibrationScores scores_;
};

class EnsembleEstimator final : public IntervalEstimator {
public:
    explicit EnsembleEstimator(std::shared_ptr<const EnsembleModel> model);
    UQKind kind() const override { return UQKind::ensemble; }
    std::vector<PredictionInterval> predict(const Matrix& X, double alpha) const override;
    std::vector<std::vector<PredictionInterval>> predict_levels(const Matrix& X, std::span<const double> alphas) const override;

private:
    std::shared_ptr<const EnsembleModel> model_;
};

class QuantileEstimator final : public IntervalEstimator {
public:
    explicit QuantileEstimator(std::shared_ptr<const QuantileModels> models) : models_(std::move(models)) {}
    UQKind kind() const override { return UQKind::quantile; }
    bool supports_alpha(double alpha) const override;
    std::vector<PredictionInterval> predict(const Matrix& X, double alpha) const override;
    std::size_t diagnostics() const override { return crossings_; }

private:
    std::shared_ptr<const QuantileModels> models_;
    mutable std::size_t crossings_ = 0;
};

class MCDropoutEstimator final : public IntervalEstimator {
public:
    MCDropoutEstimator(std::shared_ptr<const MLPModel> model, int passes, std::uint64_t seed);
    UQKind kind() const override { return UQKind::mc_dropout; }
    std::vector<PredictionInterval> predict(const Matrix& X, double alpha) const override;
    std::vector<std::vector<PredictionInterval>> predict_levels(const Matrix& X, std::span<const double> alphas) const override;

private:
    std::shared_ptr<const MLPModel> model_;
    int passes_;
    std::uint64_t seed_;
};

class HeteroscedasticEstimator final : public IntervalEstimator {
public:
    explicit HeteroscedasticEstimator(std::shared_ptr<const MLPModel> model);
    UQKind kind() const override { return UQKind::heteroscedastic; }
    std::vector<PredictionInterval> predict(const Matrix& X, double alpha) const override;

private:
    std::shared_ptr<const MLPModel> model_;
};

}  // namespace uqt
