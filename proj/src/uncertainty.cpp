#include "uqt/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "uqt/error.hpp"
#include "uqt/quantile.hpp"
#include "uqt/random.hpp"

namespace uqt {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

}  // namespace

PredictionInterval to_original_units(const PredictionInterval& iv, const Standardizer& s) {
    return {s.inverse_transform_y(iv.point), s.inverse_transform_y(iv.lower), s.inverse_transform_y(iv.upper), iv.alpha};
}

double standard_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal quantile needs p in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

// --- conformal ---------------------------------------------------------------

CalibrationScores::CalibrationScores(std::vector<double> scores) : scores_(std::move(scores)) {
    if (scores_.empty()) throw CalibrationError("calibration set is empty");
    for (double s : scores_)
        if (!(s >= 0.0) || !std::isfinite(s)) throw CalibrationError("nonconformity scores must be finite and >= 0");
    std::sort(scores_.begin(), scores_.end());
}

std::size_t CalibrationScores::rank(std::size_t n, double alpha) {
    check_alpha(alpha);
    const double target = static_cast<double>(n + 1) * (1.0 - alpha);
    // Tolerance absorbs representation error such as 10 * 0.9 = 9.000000000000002.
    return static_cast<std::size_t>(std::ceil(target - 1e-9));
}

double CalibrationScores::quantile(double alpha) const {
    const std::size_t k = rank(scores_.size(), alpha);
    if (k > scores_.size())
        throw InsufficientCalibrationError("calibration set of " + std::to_string(scores_.size()) +
                                           " scores is too small for alpha = " + std::to_string(alpha));
    return scores_[std::max<std::size_t>(k, 1) - 1];
}

CalibrationScores conformal_calibrate(const PointRegressor& model, const Matrix& X_cal, std::span<const double> y_cal) {
    if (X_cal.rows() != y_cal.size()) throw ShapeError("calibration X and y row counts differ");
    if (X_cal.rows() == 0) throw CalibrationError("calibration set is empty");
    auto pred = model.predict(X_cal);
    std::vector<double> scores(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) scores[i] = std::abs(y_cal[i] - pred[i]);
    return CalibrationScores(std::move(scores));
}

PredictionInterval conformal_interval(double y_hat, const CalibrationScores& scores, double alpha) {
    const double q = scores.quantile(alpha);
    return {y_hat, y_hat - q, y_hat + q, alpha};
}

PredictionInterval conformal_interval(const PointRegressor& model, const CalibrationScores& scores,
                                      std::span<const double> x, double alpha) {
    return conformal_interval(model.predict_row(x), scores, alpha);
}

// --- sample-based (ensemble, dropout) -------------------------------------------

PredictionInterval interval_from_samples(std::span<const double> samples, double point, double alpha) {
    check_alpha(alpha);
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    return {point, sorted_quantile_type1(sorted, alpha / 2.0), sorted_quantile_type1(sorted, 1.0 - alpha / 2.0), alpha};
}

PredictionInterval ensemble_interval(const EnsembleModel& model, std::span<const double> x, double alpha) {
    if (model.size() < 2) throw ModelError("ensemble interval needs at least 2 estimators");
    return interval_from_samples(model.predict_per_estimator(x), model.predict_row(x), alpha);
}

PredictionInterval mcdropout_interval_from_samples(std::span<const double> samples, double alpha) {
    if (samples.size() < 10) throw ConfigError("MC dropout needs at least 10 passes");
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    return interval_from_samples(samples, mean, alpha);
}

PredictionInterval mcdropout_interval(const MLPModel& model, std::span<const double> x, double alpha, int passes,
                                      std::uint64_t seed) {
    if (passes < 10) throw ConfigError("MC dropout needs at least 10 passes");
    return mcdropout_interval_from_samples(mc_dropout_samples(model, x, passes, seed), alpha);
}

// --- quantile regression --------------------------------------------------------

QuantileModels fit_quantile_models(const Matrix& X, std::span<const double> y, double alpha, const BoostingConfig& base,
                                   std::uint64_t seed) {
    check_alpha(alpha);
    QuantileModels q;
    q.alpha = alpha;
    BoostingConfig cfg = base;
    cfg.loss = LossSpec::pinball(alpha / 2.0);
    q.lower = fit_gradient_boosting(X, y, cfg, derive_seed(seed, {0}));
    cfg.loss = LossSpec::pinball(0.5);
    q.median = fit_gradient_boosting(X, y, cfg, derive_seed(seed, {1}));
    cfg.loss = LossSpec::pinball(1.0 - alpha / 2.0);
    q.upper = fit_gradient_boosting(X, y, cfg, derive_seed(seed, {2}));
    return q;
}

PredictionInterval quantile_interval(double lower, double median, double upper, double alpha, std::size_t* crossings) {
    if (lower > upper) {
        std::swap(lower, upper);
        if (crossings) ++*crossings;
    }
    return {median, lower, upper, alpha};
}

PredictionInterval quantile_interval(const QuantileModels& models, std::span<const double> x, std::size_t* crossings) {
    return quantile_interval(models.lower.predict_row(x), models.median.predict_row(x), models.upper.predict_row(x),
                             models.alpha, crossings);
}

// --- heteroscedastic ---------------------------------------------------------------

PredictionInterval heteroscedastic_interval(double mean, double sigma, double alpha) {
    check_alpha(alpha);
    if (!std::isfinite(sigma) || sigma < 0.0) throw ModelError("predicted sigma is not finite");
    const double half = standard_normal_quantile(1.0 - alpha / 2.0) * sigma;
    return {mean, mean - half, mean + half, alpha};
}

PredictionInterval heteroscedastic_interval(const MLPModel& model, std::span<const double> x, double alpha) {
    if (model.config.head != OutputHead::gaussian) throw ModelError("heteroscedastic intervals need a gaussian-head model");
    const auto out = model.forward(x);
    return heteroscedastic_interval(out.mean, std::exp(0.5 * out.log_var), alpha);
}

// --- estimator interface ------------------------------------------------------------

std::string to_string(UQKind kind) {
    switch (kind) {
        case UQKind::conformal: return "conformal";
        case UQKind::ensemble: return "ensemble";
        case UQKind::quantile: return "quantile";
        case UQKind::mc_dropout: return "mc_dropout";
        case UQKind::heteroscedastic: return "heteroscedastic";
    }
    return "unknown";
}

UQKind uq_kind_from_string(const std::string& name) {
    for (auto k : {UQKind::conformal, UQKind::ensemble, UQKind::quantile, UQKind::mc_dropout, UQKind::heteroscedastic})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown uncertainty technique '" + name + "'");
}

std::vector<std::vector<PredictionInterval>> IntervalEstimator::predict_levels(const Matrix& X,
                                                                                std::span<const double> alphas) const {
    std::vector<std::vector<PredictionInterval>> out;
    for (double a : alphas) out.push_back(predict(X, a));
    return out;
}

bool ConformalEstimator::supports_alpha(double alpha) const {
    return alpha > 0.0 && alpha < 1.0 && CalibrationScores::rank(scores_.size(), alpha) <= scores_.size();
}

std::vector<PredictionInterval> ConformalEstimator::predict(const Matrix& X, double alpha) const {
    const double q = scores_.quantile(alpha);
    auto pred = model_->predict(X);
    std::vector<PredictionInterval> out(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) out[i] = {pred[i], pred[i] - q, pred[i] + q, alpha};
    return out;
}

std::vector<std::vector<PredictionInterval>> ConformalEstimator::predict_levels(const Matrix& X,
                                                                                 std::span<const double> alphas) const {
    auto pred = model_->predict(X);
    std::vector<std::vector<PredictionInterval>> out;
    for (double a : alphas) {
        const double q = scores_.quantile(a);
        auto& level = out.emplace_back(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) level[i] = {pred[i], pred[i] - q, pred[i] + q, a};
    }
    return out;
}

EnsembleEstimator::EnsembleEstimator(std::shared_ptr<const EnsembleModel> model) : model_(std::move(model)) {
    if (model_->size() < 2) throw ModelError("ensemble interval needs at least 2 estimators");
}

std::vector<PredictionInterval> EnsembleEstimator::predict(const Matrix& X, double alpha) const {
    const double levels[] = {alpha};
    return std::move(predict_levels(X, levels).front());
}

std::vector<std::vector<PredictionInterval>> EnsembleEstimator::predict_levels(const Matrix& X,
                                                                                std::span<const double> alphas) const {
    for (double a : alphas) check_alpha(a);
    std::vector<std::vector<PredictionInterval>> out(alphas.size(), std::vector<PredictionInterval>(X.rows()));
    const Matrix all = model_->predict_per_estimator(X);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        std::vector<double> per(all.row(r).begin(), all.row(r).end());
        const double point = model_->combine(per);
        std::sort(per.begin(), per.end());
        for (std::size_t k = 0; k < alphas.size(); ++k)
            out[k][r] = {point, sorted_quantile_type1(per, alphas[k] / 2.0), sorted_quantile_type1(per, 1.0 - alphas[k] / 2.0),
                         alphas[k]};
    }
    return out;
}

bool QuantileEstimator::supports_alpha(double alpha) const { return std::abs(alpha - models_->alpha) < 1e-12; }

std::vector<PredictionInterval> QuantileEstimator::predict(const Matrix& X, double alpha) const {
    if (!supports_alpha(alpha))
        throw ConfigError("quantile models were trained for alpha = " + std::to_string(models_->alpha));
    std::vector<PredictionInterval> out(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) out[r] = quantile_interval(*models_, X.row(r), &crossings_);
    return out;
}

MCDropoutEstimator::MCDropoutEstimator(std::shared_ptr<const MLPModel> model, int passes, std::uint64_t seed)
    : model_(std::move(model)), passes_(passes), seed_(seed) {
    if (passes_ < 10) throw ConfigError("MC dropout needs at least 10 passes");
    if (!(model_->config.dropout > 0.0)) throw ConfigError("MC dropout needs a model trained with dropout > 0");
}

std::vector<PredictionInterval> MCDropoutEstimator::predict(const Matrix& X, double alpha) const {
    const double levels[] = {alpha};
    return std::move(predict_levels(X, levels).front());
}

std::vector<std::vector<PredictionInterval>> MCDropoutEstimator::predict_levels(const Matrix& X,
                                                                                 std::span<const double> alphas) const {
    for (double a : alphas) check_alpha(a);
    const Matrix samples = mc_dropout_samples(*model_, X, passes_, seed_);
    std::vector<std::vector<PredictionInterval>> out(alphas.size(), std::vector<PredictionInterval>(X.rows()));
    std::vector<double> sorted;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        auto row = samples.row(r);
        sorted.assign(row.begin(), row.end());
        double mean = 0.0;
        for (double s : sorted) mean += s;
        mean /= static_cast<double>(sorted.size());
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t k = 0; k < alphas.size(); ++k)
            out[k][r] = {mean, sorted_quantile_type1(sorted, alphas[k] / 2.0), sorted_quantile_type1(sorted, 1.0 - alphas[k] / 2.0),
                         alphas[k]};
    }
    return out;
}

HeteroscedasticEstimator::HeteroscedasticEstimator(std::shared_ptr<const MLPModel> model) : model_(std::move(model)) {
    if (model_->config.head != OutputHead::gaussian) throw ModelError("heteroscedastic intervals need a gaussian-head model");
}

std::vector<PredictionInterval> HeteroscedasticEstimator::predict(const Matrix& X, double alpha) const {
    std::vector<PredictionInterval> out(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) out[r] = heteroscedastic_interval(*model_, X.row(r), alpha);
    return out;
}

}  // namespace uqt
