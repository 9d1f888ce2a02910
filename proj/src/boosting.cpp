#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "uqt/error.hpp"
#include "uqt/quantile.hpp"
#include "uqt/random.hpp"
#include "uqt/regressors.hpp"

namespace uqt {

void LossSpec::validate() const {
    if (kind == LossKind::pinball && !(tau > 0.0 && tau < 1.0)) throw ConfigError("pinball tau must lie in (0, 1)");
}

double pinball_loss(double tau, double y, double y_hat) {
    const double r = y - y_hat;
    return std::max(tau * r, (tau - 1.0) * r);
}

namespace {

double mean_loss(const LossSpec& loss, std::span<const double> y, std::span<const double> f) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - f[i];
        s += loss.kind == LossKind::squared ? r * r : pinball_loss(loss.tau, y[i], f[i]);
    }
    return s / static_cast<double>(y.size());
}

}  // namespace

EnsembleModel fit_gradient_boosting(const Matrix& X, std::span<const double> y, const BoostingConfig& config,
                                    std::uint64_t seed) {
    config.loss.validate();
    if (config.n_estimators < 0) throw ConfigError("n_estimators must be >= 0");
    if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (X.rows() == 0) throw FitError("cannot fit boosting on an empty sample");
    if (y.size() != X.rows()) throw ShapeError("X and y row counts differ");

    EnsembleModel model;
    model.kind = EnsembleKind::gradient_boosting;
    model.seed = seed;
    model.feature_count = X.cols();
    model.learning_rate = config.learning_rate;
    model.loss = config.loss;

    const std::size_t n = X.rows();
    if (config.loss.kind == LossKind::squared) {
        model.init = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    } else {
        model.init = quantile_type1(std::vector<double>(y.begin(), y.end()), config.loss.tau);
    }
    std::vector<double> f(n, model.init);
    model.train_loss.push_back(mean_loss(config.loss, y, f));

    TreeConfig tree_cfg;
    tree_cfg.max_depth = config.max_depth;
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<double> gradient(n);
    std::vector<int> leaf_of(n);

    for (int stage = 0; stage < config.n_estimators; ++stage) {
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f[i];
            gradient[i] = config.loss.kind == LossKind::squared ? r : (r > 0.0 ? config.loss.tau : config.loss.tau - 1.0);
        }
        RegressionTree tree = RegressionTree::fit(X, gradient, rows, tree_cfg, derive_seed(seed, {static_cast<std::uint64_t>(stage)}));

        // Terminal-node re-estimation: each leaf takes the loss-optimal constant
        // for the residuals routed to it.
        if (config.loss.kind == LossKind::pinball) {
            std::vector<std::vector<double>> residuals(tree.nodes().size());
            for (std::size_t i = 0; i < n; ++i) {
                leaf_of[i] = tree.leaf_index(X.row(i));
                residuals[static_cast<std::size_t>(leaf_of[i])].push_back(y[i] - f[i]);
            }
            for (std::size_t leaf = 0; leaf < residuals.size(); ++leaf)
                if (!residuals[leaf].empty())
                    tree.set_leaf_value(static_cast<int>(leaf), quantile_type1(std::move(residuals[leaf]), config.loss.tau));
        }
        for (std::size_t i = 0; i < n; ++i) f[i] += config.learning_rate * tree.predict(X.row(i));
        model.estimators.push_back(std::move(tree));
        const double loss = mean_loss(config.loss, y, f);
        if (!std::isfinite(loss)) throw FitError("boosting loss diverged at stage " + std::to_string(stage));
        model.train_loss.push_back(loss);
    }
    return model;
}

EnsembleModel fit_adaboost_r2(const Matrix& X, std::span<const double> y, const AdaBoostConfig& config, std::uint64_t seed) {
    if (config.n_estimators < 1) throw ConfigError("n_estimators must be >= 1");
    if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (X.rows() == 0) throw FitError("cannot fit AdaBoost on an empty sample");
    if (y.size() != X.rows()) throw ShapeError("X and y row counts differ");

    EnsembleModel model;
    model.kind = EnsembleKind::adaboost_r2;
    model.seed = seed;
    model.feature_count = X.cols();
    model.learning_rate = config.learning_rate;

    const std::size_t n = X.rows();
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<double> cumulative(n);
    std::vector<std::size_t> rows(n);
    std::vector<double> err(n);
    TreeConfig tree_cfg;
    tree_cfg.max_depth = config.max_depth;
    Rng rng(derive_seed(seed, {0}));
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int round = 0; round < config.n_estimators; ++round) {
        std::partial_sum(w.begin(), w.end(), cumulative.begin());
        const double total = cumulative.back();
        for (auto& r : rows) {
            const double u = unif(rng) * total;
            auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
            r = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(), static_cast<std::ptrdiff_t>(n - 1)));
        }
        RegressionTree tree = RegressionTree::fit(X, y, rows, tree_cfg, derive_seed(seed, {static_cast<std::uint64_t>(round) + 1}));

        double max_err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            err[i] = std::abs(y[i] - tree.predict(X.row(i)));
            max_err = std::max(max_err, err[i]);
        }
        if (max_err <= 0.0) {
            // Perfect fit: keep this estimator and stop.
            model.estimators.push_back(std::move(tree));
            model.weights.push_back(1.0);
            break;
        }
        double avg_loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            err[i] /= max_err;
            avg_loss += w[i] * err[i];
        }
        avg_loss /= total;
        if (avg_loss <= 0.0) {
            model.estimators.push_back(std::move(tree));
            model.weights.push_back(1.0);
            break;
        }
        if (avg_loss >= 0.5) {
            if (model.estimators.empty()) {
                model.estimators.push_back(std::move(tree));
                model.weights.push_back(1.0);
            }
            break;
        }
        const double beta = avg_loss / (1.0 - avg_loss);
        model.estimators.push_back(std::move(tree));
        model.weights.push_back(config.learning_rate * std::log(1.0 / beta));
        double new_total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] *= std::pow(beta, (1.0 - err[i]) * config.learning_rate);
            new_total += w[i];
        }
        for (auto& wi : w) wi /= new_total;
    }
    return model;
}

}  // namespace uqt
