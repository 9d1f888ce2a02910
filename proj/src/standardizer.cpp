#include "uqt/standardizer.hpp"

#include <cmath>
#include <tuple>

namespace uqt {

namespace {

std::pair<double, double> mean_sd(std::span<const double> v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

}  // namespace

Standardizer Standardizer::fit(const Matrix& X, std::span<const double> y) {
    Standardizer s;
    s.x_mean_.resize(X.cols());
    s.x_sd_.resize(X.cols());
    for (std::size_t c = 0; c < X.cols(); ++c) {
        auto col = X.column(c);
        std::tie(s.x_mean_[c], s.x_sd_[c]) = mean_sd(col);
    }
    std::tie(s.y_mean_, s.y_sd_) = mean_sd(y);
    return s;
}

Matrix Standardizer::transform(const Matrix& X) const {
    if (X.cols() != x_mean_.size()) throw ShapeError("standardizer column count mismatch");
    Matrix out(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c)
            out(r, c) = x_sd_[c] > 0.0 ? (X(r, c) - x_mean_[c]) / x_sd_[c] : 0.0;
    return out;
}

Matrix Standardizer::inverse_transform(const Matrix& Xs) const {
    if (Xs.cols() != x_mean_.size()) throw ShapeError("standardizer column count mismatch");
    Matrix out(Xs.rows(), Xs.cols());
    for (std::size_t r = 0; r < Xs.rows(); ++r)
        for (std::size_t c = 0; c < Xs.cols(); ++c)
            out(r, c) = x_sd_[c] > 0.0 ? Xs(r, c) * x_sd_[c] + x_mean_[c] : x_mean_[c];
    return out;
}

std::vector<double> Standardizer::transform_y(std::span<const double> y) const {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = transform_y(y[i]);
    return out;
}

std::vector<double> Standardizer::inverse_transform_y(std::span<const double> ys) const {
    std::vector<double> out(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) out[i] = inverse_transform_y(ys[i]);
    return out;
}

}  // namespace uqt
