#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uqt/matrix.hpp"

namespace uqt {

/// Anything that maps a feature row to a point forecast.
class PointRegressor {
public:
    virtual ~PointRegressor() = default;
    virtual double predict_row(std::span<const double> x) const = 0;
    virtual std::size_t n_features() const = 0;

    /// Throws ShapeError when the column count differs from training.
    virtual std::vector<double> predict(const Matrix& X) const;

protected:
    void check_width(std::size_t cols) const;
};

enum class SplitMode { best, random_threshold };

struct TreeConfig {
    std::optional<int> max_depth;    // nullopt = unlimited
    int min_samples_leaf = 1;
    double feature_fraction = 1.0;   // fraction of features examined per split, (0,1]
    SplitMode split_mode = SplitMode::best;

    void validate() const;
};

/// Binary regression tree; `x[feature] <= threshold` routes left.
class RegressionTree {
public:
    struct Node {
        double threshold = 0.0;
        double value = 0.0;
        int feature = -1;  // -1 marks a leaf
        int left = -1;
        int right = -1;
        int n_samples = 0;

        bool is_leaf() const noexcept { return feature < 0; }
    };

    RegressionTree() = default;
    RegressionTree(std::vector<Node> nodes, std::size_t n_features) : nodes_(std::move(nodes)), n_features_(n_features) {}

    /// Fits on the (possibly repeated) training rows `rows` of X.
    static RegressionTree fit(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows,
                              const TreeConfig& config, std::uint64_t seed);
    static RegressionTree constant(double value, std::size_t n_features);

    double predict(std::span<const double> x) const { return nodes_[leaf_index(x)].value; }
    int leaf_index(std::span<const double> x) const;
    void set_leaf_value(int node, double value) { nodes_.at(static_cast<std::size_t>(node)).value = value; }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    std::size_t n_features() const noexcept { return n_features_; }
    std::size_t leaf_count() const;
    int depth() const;

private:
    std::vector<Node> nodes_;
    std::size_t n_features_ = 0;
};

/// Fits a tree on all rows of X. Throws FitError on empty input.
RegressionTree fit_tree(const Matrix& X, std::span<const double> y, const TreeConfig& config, std::uint64_t seed);

enum class LossKind { squared, pinball };

struct LossSpec {
    LossKind kind = LossKind::squared;
    double tau = 0.5;

    static LossSpec squared() { return {LossKind::squared, 0.5}; }
    static LossSpec pinball(double tau) { return {LossKind::pinball, tau}; }
    void validate() const;
};

/// max(tau * (y - yhat), (tau - 1) * (y - yhat))
double pinball_loss(double tau, double y, double y_hat);

enum class EnsembleKind { random_forest, extra_trees, adaboost_r2, gradient_boosting };
std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& name);

struct ForestConfig {
    int n_estimators = 100;
    bool bootstrap = true;
    TreeConfig tree;
    int n_threads = 1;  // result is independent of this value
};

struct BoostingConfig {
    int n_estimators = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    LossSpec loss;
};

struct AdaBoostConfig {
    int n_estimators = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
};

/// Tree ensemble behind the point-prediction interface.
///
/// Random forest / extra trees predict the mean of the trees, AdaBoost.R2
/// the weighted median, gradient boosting `init + learning_rate * sum(tree)`.
class EnsembleModel final : public PointRegressor {
public:
    EnsembleKind kind = EnsembleKind::random_forest;
    std::vector<RegressionTree> estimators;
    std::vector<double> weights;       // AdaBoost estimator weights
    double learning_rate = 1.0;        // boosting shrinkage
    double init = 0.0;                 // boosting initial constant
    LossSpec loss;
    std::uint64_t seed = 0;
    std::size_t feature_count = 0;
    std::vector<double> train_loss;    // boosting: loss after each stage, index 0 = init only

    double predict_row(std::span<const double> x) const override;
    std::vector<double> predict(const Matrix& X) const override;
    std::size_t n_features() const override { return feature_count; }

    /// One prediction per estimator (raw tree outputs).
    std::vector<double> predict_per_estimator(std::span<const double> x) const;
    /// Rows x estimators; walks one tree at a time over the whole batch.
    Matrix predict_per_estimator(const Matrix& X) const;
    /// Folds raw tree outputs (in estimator order) into the ensemble prediction.
    double combine(std::span<const double> per_estimator) const;
    std::size_t size() const noexcept { return estimators.size(); }
};

EnsembleModel fit_random_forest(const Matrix& X, std::span<const double> y, const ForestConfig& config, std::uint64_t seed);
/// No bootstrap; random thresholds. `config.bootstrap` and `split_mode` are overridden.
EnsembleModel fit_extra_trees(const Matrix& X, std::span<const double> y, const ForestConfig& config, std::uint64_t seed);
EnsembleModel fit_gradient_boosting(const Matrix& X, std::span<const double> y, const BoostingConfig& config, std::uint64_t seed);
EnsembleModel fit_adaboost_r2(const Matrix& X, std::span<const double> y, const AdaBoostConfig& config, std::uint64_t seed);

}  // namespace uqt
