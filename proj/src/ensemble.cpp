#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "uqt/error.hpp"
#include "uqt/quantile.hpp"
#include "uqt/random.hpp"
#include "uqt/regressors.hpp"

namespace uqt {

std::string to_string(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::random_forest: return "random_forest";
        case EnsembleKind::extra_trees: return "extra_trees";
        case EnsembleKind::adaboost_r2: return "adaboost_r2";
        case EnsembleKind::gradient_boosting: return "gradient_boosting";
    }
    return "unknown";
}

EnsembleKind ensemble_kind_from_string(const std::string& name) {
    for (auto k : {EnsembleKind::random_forest, EnsembleKind::extra_trees, EnsembleKind::adaboost_r2,
                   EnsembleKind::gradient_boosting})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown ensemble kind '" + name + "'");
}

double EnsembleModel::predict_row(std::span<const double> x) const {
    return combine(predict_per_estimator(x));
}

double EnsembleModel::combine(std::span<const double> per_estimator) const {
    if (per_estimator.size() != estimators.size()) throw ShapeError("per-estimator prediction count mismatch");
    switch (kind) {
        case EnsembleKind::random_forest:
        case EnsembleKind::extra_trees: {
            if (estimators.empty()) throw ModelError("ensemble has no estimators");
            double s = 0.0;
            for (double v : per_estimator) s += v;
            return s / static_cast<double>(estimators.size());
        }
        case EnsembleKind::adaboost_r2: {
            if (estimators.empty()) throw ModelError("ensemble has no estimators");
            return weighted_quantile_type1(per_estimator, weights, 0.5);
        }
        case EnsembleKind::gradient_boosting: {
            double s = 0.0;
            for (double v : per_estimator) s += v;
            return init + learning_rate * s;
        }
    }
    return 0.0;
}

std::vector<double> EnsembleModel::predict(const Matrix& X) const {
    const Matrix per = predict_per_estimator(X);
    std::vector<double> out(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) out[r] = combine(per.row(r));
    return out;
}

std::vector<double> EnsembleModel::predict_per_estimator(std::span<const double> x) const {
    check_width(x.size());
    std::vector<double> out(estimators.size());
    for (std::size_t i = 0; i < estimators.size(); ++i) out[i] = estimators[i].predict(x);
    return out;
}

Matrix EnsembleModel::predict_per_estimator(const Matrix& X) const {
    check_width(X.cols());
    Matrix out(X.rows(), estimators.size());
    for (std::size_t i = 0; i < estimators.size(); ++i)
        for (std::size_t r = 0; r < X.rows(); ++r) out(r, i) = estimators[i].predict(X.row(r));
    return out;
}

namespace {

// Runs body(i) for i in [0, n) on up to n_threads workers; rethrows the first error.
template <typename Body>
void parallel_for(std::size_t n, int n_threads, Body body) {
    const auto workers = static_cast<std::size_t>(std::clamp(n_threads, 1, 64));
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (error) std::rethrow_exception(error);
}

EnsembleModel fit_forest(const Matrix& X, std::span<const double> y, const ForestConfig& config, std::uint64_t seed,
                         EnsembleKind kind) {
    if (config.n_estimators < 1) throw ConfigError("n_estimators must be >= 1");
    config.tree.validate();
    if (X.rows() == 0) throw FitError("cannot fit an ensemble on an empty sample");
    if (y.size() != X.rows()) throw ShapeError("X and y row counts differ");

    EnsembleModel model;
    model.kind = kind;
    model.seed = seed;
    model.feature_count = X.cols();
    model.estimators.resize(static_cast<std::size_t>(config.n_estimators));
    const std::size_t n = X.rows();
    parallel_for(model.estimators.size(), config.n_threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed, {i, 0}));
        std::vector<std::size_t> rows(n);
        if (config.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (auto& r : rows) r = pick(rng);
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        model.estimators[i] = RegressionTree::fit(X, y, rows, config.tree, derive_seed(seed, {i, 1}));
    });
    return model;
}

}  // namespace

EnsembleModel fit_random_forest(const Matrix& X, std::span<const double> y, const ForestConfig& config, std::uint64_t seed) {
    return fit_forest(X, y, config, seed, EnsembleKind::random_forest);
}

EnsembleModel fit_extra_trees(const Matrix& X, std::span<const double> y, const ForestConfig& config, std::uint64_t seed) {
    ForestConfig cfg = config;
    cfg.bootstrap = false;
    cfg.tree.split_mode = SplitMode::random_threshold;
    return fit_forest(X, y, cfg, seed, EnsembleKind::extra_trees);
}

}  // namespace uqt
