#pragma once

#include <span>
#include <vector>

#include "uqt/matrix.hpp"

namespace uqt {

/// Per-column z-scoring with population standard deviation. Columns with
/// zero deviation map to zero.
class Standardizer {
public:
    Standardizer() = default;

    static Standardizer fit(const Matrix& X, std::span<const double> y);

    Matrix transform(const Matrix& X) const;
    Matrix inverse_transform(const Matrix& Xs) const;
    std::vector<double> transform_y(std::span<const double> y) const;
    std::vector<double> inverse_transform_y(std::span<const double> ys) const;

    double transform_y(double v) const noexcept { return (v - y_mean_) / y_scale(); }
    double inverse_transform_y(double v) const noexcept { return v * y_scale() + y_mean_; }
    /// Multiplier taking widths in standardized units back to original units.
    double y_scale() const noexcept { return y_sd_ > 0.0 ? y_sd_ : 1.0; }

    const std::vector<double>& x_mean() const noexcept { return x_mean_; }
    const std::vector<double>& x_sd() const noexcept { return x_sd_; }
    double y_mean() const noexcept { return y_mean_; }
    double y_sd() const noexcept { return y_sd_; }

private:
    std::vector<double> x_mean_, x_sd_;
    double y_mean_ = 0.0;
    double y_sd_ = 1.0;
};

}  // namespace uqt
