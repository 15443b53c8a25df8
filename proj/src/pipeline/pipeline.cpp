#include "pipeline/pipeline.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "common/csv.hpp"
#include "common/error.hpp"

namespace ranopt::pipeline {

AggregateResult aggregate(std::span<const double> tti_mbit, double tti_ms, double frame_ms, double origin_time_s) {
    if (!(tti_ms > 0.0) || !(frame_ms > 0.0)) throw Error("pipeline", "TTI and frame length must be > 0");
    const double ratio = frame_ms / tti_ms;
    const auto per_frame = static_cast<std::size_t>(std::llround(ratio));
    if (per_frame == 0 || std::abs(ratio - static_cast<double>(per_frame)) > 1e-9)
        throw Error("pipeline", "frame length must be divisible by the TTI length");

    AggregateResult out;
    out.series.frame_length_ms = frame_ms;
    out.series.origin_time_s = origin_time_s;
    const std::size_t frames = tti_mbit.size() / per_frame;
    out.truncated_samples = tti_mbit.size() - frames * per_frame;
    out.series.values.reserve(frames);
    const double frame_s = frame_ms * 1e-3;
    for (std::size_t f = 0; f < frames; ++f) {
        double sum = 0.0;
        for (std::size_t i = 0; i < per_frame; ++i) sum += tti_mbit[f * per_frame + i];
        out.series.values.push_back(sum / frame_s);
    }
    return out;
}

void SgFilterConfig::validate() const {
    if (window < 3 || window % 2 == 0) throw Error("pipeline", "SG window must be odd and >= 3");
    if (poly_order < 0 || poly_order >= window) throw Error("pipeline", "SG order must satisfy 0 <= order < window");
}

namespace {

Eigen::MatrixXd vandermonde(int window, int order) {
    const int h = window / 2;
    Eigen::MatrixXd a(window, order + 1);
    for (int i = 0; i < window; ++i) {
        double p = 1.0;
        for (int j = 0; j <= order; ++j) {
            a(i, j) = p;
            p *= static_cast<double>(i - h);
        }
    }
    return a;
}

// Least-squares projection matrix: row r gives the weights that evaluate the
// fitted polynomial at offset r - h.
Eigen::MatrixXd projection(int window, int order) {
    const Eigen::MatrixXd a = vandermonde(window, order);
    const Eigen::MatrixXd pinv = a.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));
    return a * pinv;
}

} // namespace

std::vector<double> savgol_coefficients(int window, int order) {
    SgFilterConfig{window, order}.validate();
    const Eigen::MatrixXd p = projection(window, order);
    const int h = window / 2;
    std::vector<double> c(static_cast<std::size_t>(window));
    for (int j = 0; j < window; ++j) c[static_cast<std::size_t>(j)] = p(h, j);
    return c;
}

std::vector<double> smooth(std::span<const double> x, const SgFilterConfig& cfg) {
    cfg.validate();
    const auto n = x.size();
    const auto w = static_cast<std::size_t>(cfg.window);
    if (n < w) throw Error("pipeline", "series shorter than SG window");
    const auto coeff = savgol_coefficients(cfg.window, cfg.poly_order);
    const std::ptrdiff_t h = cfg.window / 2;
    const auto sn = static_cast<std::ptrdiff_t>(n);

    auto at = [&](std::ptrdiff_t i) {
        if (i < 0) i = -i;
        if (i >= sn) i = 2 * (sn - 1) - i;
        return x[static_cast<std::size_t>(i)];
    };

    std::vector<double> y(n);
    for (std::ptrdiff_t t = 0; t < sn; ++t) {
        double acc = 0.0;
        for (std::ptrdiff_t j = -h; j <= h; ++j) acc += coeff[static_cast<std::size_t>(j + h)] * at(t + j);
        y[static_cast<std::size_t>(t)] = acc;
    }

    if (cfg.edges == EdgeMode::Interp) {
        const Eigen::MatrixXd p = projection(cfg.window, cfg.poly_order);
        for (std::ptrdiff_t t = 0; t < h; ++t) {
            double lo = 0.0, hi = 0.0;
            for (std::size_t j = 0; j < w; ++j) {
                lo += p(t, static_cast<Eigen::Index>(j)) * x[j];
                hi += p(static_cast<Eigen::Index>(w) - 1 - t, static_cast<Eigen::Index>(j)) * x[n - w + j];
            }
            y[static_cast<std::size_t>(t)] = lo;
            y[n - 1 - static_cast<std::size_t>(t)] = hi;
        }
    }
    return y;
}

AggregateSeries smooth(const AggregateSeries& series, const SgFilterConfig& cfg) {
    AggregateSeries out = series;
    out.values = smooth(std::span<const double>(series.values), cfg);
    return out;
}

WindowedDataset::WindowedDataset(std::span<const double> values, std::size_t input_length, std::size_t horizon,
                                 double train_fraction)
    : input_length_(input_length), horizon_(horizon) {
    if (input_length == 0 || horizon == 0) throw Error("pipeline", "input length and horizon must be >= 1");
    if (values.size() < input_length + horizon)
        throw Error("pipeline", "series of length " + std::to_string(values.size()) + " too short for L=" +
                                    std::to_string(input_length) + " + horizon " + std::to_string(horizon));
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw Error("pipeline", "train fraction must be in (0, 1]");

    const std::size_t n = values.size();
    const auto split = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
    const std::size_t stat_len = std::max<std::size_t>(split, 1);
    double mean = 0.0;
    for (std::size_t i = 0; i < stat_len; ++i) mean += values[i];
    mean /= static_cast<double>(stat_len);
    double var = 0.0;
    for (std::size_t i = 0; i < stat_len; ++i) var += (values[i] - mean) * (values[i] - mean);
    var /= static_cast<double>(stat_len);
    norm_ = {mean, std::sqrt(var)};
    if (!(norm_.std > 0.0)) throw Error("pipeline", "training split has zero variance; cannot normalize");

    z_.resize(n);
    for (std::size_t i = 0; i < n; ++i) z_[i] = norm_.normalize(values[i]);

    const std::size_t pairs = n - input_length - horizon + 1;
    starts_.resize(pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
        starts_[i] = i;
        // A pair belongs to training when its whole target lies inside the training prefix.
        if (i + input_length + horizon <= split) train_pairs_ = i + 1;
    }
}

std::span<const double> WindowedDataset::input(std::size_t i) const {
    return std::span<const double>(z_).subspan(starts_[i], input_length_);
}

std::span<const double> WindowedDataset::target(std::size_t i) const {
    return std::span<const double>(z_).subspan(starts_[i] + input_length_, horizon_);
}

void write_series_csv(const std::string& path, const AggregateSeries& s) {
    csv::Writer w(path);
    w.header({"frame_index", "mbps"});
    for (std::size_t i = 0; i < s.values.size(); ++i) w.row({std::to_string(i), csv::fmt(s.values[i])});
}

AggregateSeries read_series_csv(const std::string& path, double frame_length_ms) {
    const auto t = csv::read(path);
    AggregateSeries s;
    s.frame_length_ms = frame_length_ms;
    s.values = t.numeric("mbps");
    for (double v : s.values)
        if (!std::isfinite(v) || v < 0.0) throw Error("pipeline", "series CSV has a non-finite or negative value: " + path);
    return s;
}

} // namespace ranopt::pipeline
