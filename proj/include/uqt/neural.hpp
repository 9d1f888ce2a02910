#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "uqt/matrix.hpp"
#include "uqt/regressors.hpp"

namespace uqt {

enum class OutputHead { scalar, gaussian };

struct AdamConfig {
    double step = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct MLPConfig {
    std::vector<int> hidden_sizes{50};
    int epochs = 20;
    AdamConfig adam;
    int batch_size = 32;
    double dropout = 0.2;  // applied after every hidden layer
    OutputHead head = OutputHead::scalar;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;  // outputs x inputs, row-major
    std::vector<double> bias;
};

/// Fully connected ReLU network. The scalar head predicts a mean; the
/// gaussian head predicts (mean, log variance).
class MLPModel final : public PointRegressor {
public:
    struct Output {
        double mean = 0.0;
        double log_var = 0.0;  // 0 for the scalar head
    };

    MLPConfig config;
    std::vector<DenseLayer> layers;
    std::vector<double> loss_trace;  // full training loss after each epoch, dropout off

    /// Deterministic forward pass (dropout disabled).
    Output forward(std::span<const double> x) const;
    double predict_row(std::span<const double> x) const override { return forward(x).mean; }
    std::size_t n_features() const override { return layers.empty() ? 0 : layers.front().inputs; }

    std::size_t parameter_count() const;
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);
};

/// Randomly initialised (He-uniform) network; log-variance head starts at zero.
MLPModel init_mlp(std::size_t n_features, const MLPConfig& config);

/// Adam over shuffled minibatches. MSE for the scalar head, Gaussian NLL
/// 0.5 * (log var + (y - mean)^2 / var) for the gaussian head. Throws
/// TrainingError on a non-finite loss.
MLPModel fit_mlp(const Matrix& X, std::span<const double> y, const MLPConfig& config);

/// Mean loss over (X, y) with dropout disabled.
double mlp_loss(const MLPModel& model, const Matrix& X, std::span<const double> y);
/// Analytic gradient of mlp_loss, flattened in parameters() order.
std::vector<double> mlp_gradient(const MLPModel& model, const Matrix& X, std::span<const double> y);
/// Max relative error between analytic and central-difference gradients.
double gradient_check(const MLPModel& model, const Matrix& X, std::span<const double> y, double step = 1e-5);

/// Stochastic forward passes with dropout active (inverted scaling).
/// Returns rows x passes. Throws ConfigError when the model has no dropout.
Matrix mc_dropout_samples(const MLPModel& model, const Matrix& X, int passes, std::uint64_t seed);
std::vector<double> mc_dropout_samples(const MLPModel& model, std::span<const double> x, int passes, std::uint64_t seed);

/// CSV `epoch,loss`.
void write_loss_trace(const MLPModel& model, const std::filesystem::path& path);

}  // namespace uqt
