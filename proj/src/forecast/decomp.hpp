#pragma once

#include <span>
#include <vector>

#include "forecast/tensor.hpp"

namespace ranopt::forecast {

struct Decomposition {
    std::vector<double> seasonal;
    std::vector<double> trend;
};

/// Trend is a centred moving average over the series padded by repeating its
/// end values (so the length is unchanged); seasonal is the remainder.
Decomposition decompose(std::span<const double> x, int kernel);

/// Moving average applied per sample (blocks of `length` rows) and per column.
Mat moving_average(const Mat& x, Eigen::Index length, int kernel);
/// Adjoint of moving_average, used in backpropagation.
Mat moving_average_adjoint(const Mat& dy, Eigen::Index length, int kernel);

} // namespace ranopt::forecast
