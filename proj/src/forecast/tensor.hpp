#pragma once

#include <Eigen/Dense>

namespace ranopt::forecast {

/// Activations are stacked per sample: a batch of B sequences of length T with
/// d channels is a (B*T) x d row-major matrix.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

} // namespace ranopt::forecast
