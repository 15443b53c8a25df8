#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "forecast/tensor.hpp"

namespace ranopt::forecast {

/// Number of lags kept by time-delay aggregation: max(1, floor(rho * ln L)),
/// clamped to L - 1.
struct AutoCorrConfig {
    double rho = 2.0;

    std::size_t k_for(std::size_t length) const;
};

/// Circular lag correlation R[tau] = (1/L) sum_t q[t] k[(t - tau) mod L],
/// computed through the frequency domain (forward transforms, conjugate
/// product, inverse transform).
std::vector<double> autocorrelation(std::span<const double> q, std::span<const double> k);

/// Channel-mean of the lag correlation between columns [c0, c1) of two
/// L x d blocks (rows [row0, row0 + L) of each matrix).
std::vector<double> mean_autocorrelation(const Mat& q, const Mat& k, Eigen::Index row0, Eigen::Index length,
                                         Eigen::Index c0, Eigen::Index c1);

/// Indices of the k largest scores, ties broken by lower lag.
std::vector<std::size_t> top_k_lags(std::span<const double> scores, std::size_t k);

/// Softmax over the selected scores.
std::vector<double> softmax_at(std::span<const double> scores, std::span<const std::size_t> idx);

/// roll(v, s)[t] = v[(t - s) mod L].
std::vector<double> roll(std::span<const double> v, std::ptrdiff_t shift);

/// Keeps the top-k lags of R, weights them by a softmax over their scores and
/// returns sum_i w_i * roll(values, lag_i).
std::vector<double> time_delay_aggregate(std::span<const double> values, std::span<const double> scores,
                                         const AutoCorrConfig& cfg);

} // namespace ranopt::forecast
