#include "uqt/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "uqt/csv.hpp"
#include "uqt/error.hpp"
#include "uqt/random.hpp"

namespace uqt {

void MLPConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    for (int h : hidden_sizes)
        if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
    if (!(adam.step > 0.0) || adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0)
        throw ConfigError("invalid Adam hyperparameters");
}

std::size_t MLPModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

std::vector<double> MLPModel::parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& l : layers) {
        flat.insert(flat.end(), l.weights.begin(), l.weights.end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

void MLPModel::set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ShapeError("parameter vector has wrong length");
    std::size_t k = 0;
    for (auto& l : layers) {
        for (auto& w : l.weights) w = flat[k++];
        for (auto& b : l.bias) b = flat[k++];
    }
}

MLPModel init_mlp(std::size_t n_features, const MLPConfig& config) {
    config.validate();
    MLPModel model;
    model.config = config;
    Rng rng(derive_seed(config.seed, {0}));
    std::size_t inputs = n_features;
    const std::size_t head_outputs = config.head == OutputHead::gaussian ? 2 : 1;
    std::vector<std::size_t> sizes;
    for (int h : config.hidden_sizes) sizes.push_back(static_cast<std::size_t>(h));
    sizes.push_back(head_outputs);
    for (std::size_t li = 0; li < sizes.size(); ++li) {
        const bool output = li + 1 == sizes.size();
        DenseLayer layer;
        layer.inputs = inputs;
        layer.outputs = sizes[li];
        layer.weights.resize(layer.inputs * layer.outputs);
        layer.bias.assign(layer.outputs, 0.0);
        const double limit = output ? std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs))
                                    : std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(layer.inputs, 1)));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (auto& w : layer.weights) w = u(rng);
        if (output && config.head == OutputHead::gaussian)
            std::fill(layer.weights.begin() + static_cast<std::ptrdiff_t>(layer.inputs), layer.weights.end(), 0.0);
        model.layers.push_back(std::move(layer));
        inputs = sizes[li];
    }
    return model;
}

namespace {

// Scratch space for one sample's forward/backward pass.
struct Workspace {
    std::vector<std::vector<double>> pre;   // pre-activations per layer
    std::vector<std::vector<double>> act;   // act[0] = input, act[l+1] = output of layer l (after ReLU/dropout)
    std::vector<std::vector<double>> mask;  // dropout multipliers per hidden layer
    std::vector<double> delta, next_delta;

    explicit Workspace(const MLPModel& m) {
        act.emplace_back(m.n_features());
        for (const auto& l : m.layers) {
            pre.emplace_back(l.outputs);
            act.emplace_back(l.outputs);
            mask.emplace_back(l.outputs, 1.0);
        }
    }
};

void forward_pass(const MLPModel& m, std::span<const double> x, Workspace& ws, bool use_mask) {
    std::copy(x.begin(), x.end(), ws.act[0].begin());
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        const auto& l = m.layers[li];
        const bool output = li + 1 == m.layers.size();
        const auto& in = ws.act[li];
        auto& z = ws.pre[li];
        auto& a = ws.act[li + 1];
        for (std::size_t o = 0; o < l.outputs; ++o) {
            const double* w = l.weights.data() + o * l.inputs;
            double s = l.bias[o];
            for (std::size_t i = 0; i < l.inputs; ++i) s += w[i] * in[i];
            z[o] = s;
            if (output) a[o] = s;
            else a[o] = (s > 0.0 ? s : 0.0) * (use_mask ? ws.mask[li][o] : 1.0);
        }
    }
}

double sample_loss(OutputHead head, double mean, double log_var, double y) {
    const double r = y - mean;
    if (head == OutputHead::scalar) return r * r;
    return 0.5 * (log_var + r * r * std::exp(-log_var));
}

// Accumulates scale * d(sample loss)/d(params) into grad.
void backward_pass(const MLPModel& m, double y, Workspace& ws, bool use_mask, double scale, std::vector<double>& grad,
                   const std::vector<std::size_t>& offsets) {
    const auto& out = ws.act.back();
    const double mean = out[0];
    ws.delta.assign(out.size(), 0.0);
    if (m.config.head == OutputHead::scalar) {
        ws.delta[0] = scale * 2.0 * (mean - y);
    } else {
        const double r = y - mean;
        const double inv_var = std::exp(-out[1]);
        ws.delta[0] = -scale * r * inv_var;
        ws.delta[1] = scale * 0.5 * (1.0 - r * r * inv_var);
    }
    for (std::size_t li = m.layers.size(); li-- > 0;) {
        const auto& l = m.layers[li];
        const auto& in = ws.act[li];
        double* gw = grad.data() + offsets[li];
        double* gb = gw + l.weights.size();
        for (std::size_t o = 0; o < l.outputs; ++o) {
            const double d = ws.delta[o];
            if (d == 0.0) continue;
            gb[o] += d;
            double* row = gw + o * l.inputs;
            for (std::size_t i = 0; i < l.inputs; ++i) row[i] += d * in[i];
        }
        if (li == 0) break;
        ws.next_delta.assign(l.inputs, 0.0);
        for (std::size_t o = 0; o < l.outputs; ++o) {
            const double d = ws.delta[o];
            if (d == 0.0) continue;
            const double* w = l.weights.data() + o * l.inputs;
            for (std::size_t i = 0; i < l.inputs; ++i) ws.next_delta[i] += w[i] * d;
        }
        const auto& z_prev = ws.pre[li - 1];
        for (std::size_t i = 0; i < l.inputs; ++i) {
            const double gate = z_prev[i] > 0.0 ? (use_mask ? ws.mask[li - 1][i] : 1.0) : 0.0;
            ws.next_delta[i] *= gate;
        }
        std::swap(ws.delta, ws.next_delta);
    }
}

std::vector<std::size_t> parameter_offsets(const MLPModel& m) {
    std::vector<std::size_t> offsets;
    std::size_t k = 0;
    for (const auto& l : m.layers) {
        offsets.push_back(k);
        k += l.weights.size() + l.bias.size();
    }
    return offsets;
}

void draw_masks(Workspace& ws, std::size_t hidden_layers, double p, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - p);
    for (std::size_t li = 0; li < hidden_layers; ++li)
        for (auto& v : ws.mask[li]) v = u(rng) < p ? 0.0 : keep_scale;
}

void check_shapes(const MLPModel& model, const Matrix& X, std::span<const double> y) {
    if (X.cols() != model.n_features()) throw ShapeError("feature count does not match network input");
    if (X.rows() != y.size()) throw ShapeError("X and y row counts differ");
}

}  // namespace

MLPModel::Output MLPModel::forward(std::span<const double> x) const {
    check_width(x.size());
    Workspace ws(*this);
    forward_pass(*this, x, ws, false);
    Output o;
    o.mean = ws.act.back()[0];
    if (config.head == OutputHead::gaussian) o.log_var = ws.act.back()[1];
    return o;
}

double mlp_loss(const MLPModel& model, const Matrix& X, std::span<const double> y) {
    check_shapes(model, X, y);
    if (X.rows() == 0) throw ShapeError("empty batch");
    Workspace ws(model);
    double total = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        forward_pass(model, X.row(r), ws, false);
        const auto& out = ws.act.back();
        total += sample_loss(model.config.head, out[0], out.size() > 1 ? out[1] : 0.0, y[r]);
    }
    return total / static_cast<double>(X.rows());
}

std::vector<double> mlp_gradient(const MLPModel& model, const Matrix& X, std::span<const double> y) {
    check_shapes(model, X, y);
    if (X.rows() == 0) throw ShapeError("empty batch");
    Workspace ws(model);
    const auto offsets = parameter_offsets(model);
    std::vector<double> grad(model.parameter_count(), 0.0);
    const double scale = 1.0 / static_cast<double>(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        forward_pass(model, X.row(r), ws, false);
        backward_pass(model, y[r], ws, false, scale, grad, offsets);
    }
    return grad;
}

double gradient_check(const MLPModel& model, const Matrix& X, std::span<const double> y, double step) {
    const auto analytic = mlp_gradient(model, X, y);
    auto params = model.parameters();
    MLPModel probe = model;
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = params[k];
        params[k] = saved + step;
        probe.set_parameters(params);
        const double up = mlp_loss(probe, X, y);
        params[k] = saved - step;
        probe.set_parameters(params);
        const double down = mlp_loss(probe, X, y);
        params[k] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
    }
    return worst;
}

MLPModel fit_mlp(const Matrix& X, std::span<const double> y, const MLPConfig& config) {
    config.validate();
    if (X.rows() == 0) throw FitError("cannot train on an empty sample");
    MLPModel model = init_mlp(X.cols(), config);
    check_shapes(model, X, y);

    const std::size_t n = X.rows();
    const std::size_t hidden = model.layers.size() - 1;
    const auto offsets = parameter_offsets(model);
    auto params = model.parameters();
    std::vector<double> grad(params.size()), m1(params.size(), 0.0), m2(params.size(), 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, {1}));
    Workspace ws(model);
    const auto& adam = config.adam;
    long t = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(order[i - 1], order[pick(rng)]);
        }
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
            const double scale = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = start; k < stop; ++k) {
                if (config.dropout > 0.0) draw_masks(ws, hidden, config.dropout, rng);
                forward_pass(model, X.row(order[k]), ws, config.dropout > 0.0);
                backward_pass(model, y[order[k]], ws, config.dropout > 0.0, scale, grad, offsets);
            }
            ++t;
            const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(t));
            const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(t));
            for (std::size_t k = 0; k < params.size(); ++k) {
                m1[k] = adam.beta1 * m1[k] + (1.0 - adam.beta1) * grad[k];
                m2[k] = adam.beta2 * m2[k] + (1.0 - adam.beta2) * grad[k] * grad[k];
                params[k] -= adam.step * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + adam.epsilon);
            }
            model.set_parameters(params);
        }
        const double loss = mlp_loss(model, X, y);
        if (!std::isfinite(loss)) throw TrainingError("training loss diverged at epoch " + std::to_string(epoch + 1));
        model.loss_trace.push_back(loss);
    }
    return model;
}

Matrix mc_dropout_samples(const MLPModel& model, const Matrix& X, int passes, std::uint64_t seed) {
    if (!(model.config.dropout > 0.0))
        throw ConfigError("MC dropout needs a model trained with dropout > 0; all passes would be identical");
    if (passes < 1) throw ConfigError("number of passes must be >= 1");
    if (X.cols() != model.n_features()) throw ShapeError("feature count does not match network input");
    Matrix out(X.rows(), static_cast<std::size_t>(passes));
    Workspace ws(model);
    const std::size_t hidden = model.layers.size() - 1;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        Rng rng(derive_seed(seed, {r}));
        for (int k = 0; k < passes; ++k) {
            draw_masks(ws, hidden, model.config.dropout, rng);
            forward_pass(model, X.row(r), ws, true);
            out(r, static_cast<std::size_t>(k)) = ws.act.back()[0];
        }
    }
    return out;
}

std::vector<double> mc_dropout_samples(const MLPModel& model, std::span<const double> x, int passes, std::uint64_t seed) {
    Matrix one(1, x.size(), std::vector<double>(x.begin(), x.end()));
    auto m = mc_dropout_samples(model, one, passes, seed);
    auto row = m.row(0);
    return {row.begin(), row.end()};
}

void write_loss_trace(const MLPModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < model.loss_trace.size(); ++e) out << e + 1 << ',' << csv::fmt(model.loss_trace[e]) << '\n';
}

}  // namespace uqt
