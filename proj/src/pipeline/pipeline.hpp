#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ranopt::pipeline {

/// Traffic volume per frame, Mbps, uniformly spaced.
struct AggregateSeries {
    double frame_length_ms = 1000.0;
    double origin_time_s = 0.0;
    std::vector<double> values;
};

struct AggregateResult {
    AggregateSeries series;
    std::size_t truncated_samples = 0; // samples of a ragged final frame that were discarded
};

/// Sums per-TTI volumes (Mbit per TTI) into frames and reports each frame as Mbps.
AggregateResult aggregate(std::span<const double> tti_mbit, double tti_ms, double frame_ms, double origin_time_s = 0.0);

enum class EdgeMode { Mirror, Interp };

struct SgFilterConfig {
    int window = 11;
    int poly_order = 3;
    EdgeMode edges = EdgeMode::Mirror;

    void validate() const;
};

/// Centered smoothing coefficients: row 0 of the least-squares pseudo-inverse
/// of the Vandermonde matrix over offsets -h..h.
std::vector<double> savgol_coefficients(int window, int poly_order);

/// Savitzky-Golay smoothing. Mirror edges reflect about the first/last sample;
/// Interp edges evaluate the polynomial fitted to the first/last full window.
std::vector<double> smooth(std::span<const double> values, const SgFilterConfig& cfg);
AggregateSeries smooth(const AggregateSeries& series, const SgFilterConfig& cfg);

struct Normalization {
    double mean = 0.0;
    double std = 1.0;

    double normalize(double x) const { return (x - mean) / std; }
    double denormalize(double z) const { return z * std + mean; }
};

/// Sliding stride-1 many-to-one windows over a z-scored series. Statistics
/// come from the training prefix only; the split is chronological.
class WindowedDataset {
public:
    WindowedDataset(std::span<const double> values, std::size_t input_length, std::size_t horizon, double train_fraction);

    std::size_t input_length() const { return input_length_; }
    std::size_t horizon() const { return horizon_; }
    std::size_t size() const { return starts_.size(); }
    std::size_t train_size() const { return train_pairs_; }
    std::size_t test_size() const { return starts_.size() - train_pairs_; }
    const Normalization& normalization() const { return norm_; }

    /// Start index in the series of pair i's input window.
    std::size_t start(std::size_t i) const { return starts_[i]; }
    std::span<const double> input(std::size_t i) const;
    std::span<const double> target(std::size_t i) const;
    /// Index in the original series of pair i's first target value.
    std::size_t target_index(std::size_t i) const { return starts_[i] + input_length_; }

private:
    std::vector<double> z_;
    std::vector<std::size_t> starts_;
    std::size_t input_length_ = 0;
    std::size_t horizon_ = 1;
    std::size_t train_pairs_ = 0;
    Normalization norm_;
};

/// Two-column CSV (frame_index, mbps).
void write_series_csv(const std::string& path, const AggregateSeries& s);
AggregateSeries read_series_csv(const std::string& path, double frame_length_ms = 1000.0);

} // namespace ranopt::pipeline
