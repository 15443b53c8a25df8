#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "forecast/model.hpp"
#include "pipeline/pipeline.hpp"

namespace ranopt::forecast {

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 32;
    int epochs = 20;
    std::uint64_t seed = 1;
    double grad_clip = 1.0;        // global L2 norm bound, <= 0 disables
    std::size_t max_samples_per_epoch = 0; // 0: every pair each epoch; also caps the held-out evaluation
    bool evaluate_test = true;     // record held-out loss per epoch
    double divergence_factor = 1e3;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double test_loss = 0.0; // NaN when no held-out pairs or disabled
};

/// Adam with bias correction; state per parameter tensor.
class Adam {
public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
    void step(ParamSet& ps);
    long steps() const { return t_; }

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<Mat> m_, v_;
};

/// A forecaster plus the normalization it was trained under.
struct ForecastModel {
    std::unique_ptr<Forecaster> net;
    pipeline::Normalization norm;
    bool trained = false;
    std::vector<EpochRecord> history;

    const ModelConfig& config() const { return net->config(); }
};

ForecastModel make_model(const ModelConfig& cfg, std::uint64_t seed);

/// Global L2 norm of all gradients; rescales them to `bound` when above it.
double clip_gradients(ParamSet& ps, double bound);

/// Mean squared error over a batch of dataset pairs (normalized units).
double batch_loss(const Forecaster& net, const pipeline::WindowedDataset& ds, std::span<const std::size_t> idx);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch MSE training with seeded per-epoch shuffling. Throws on
/// divergence (loss above divergence_factor x the first batch loss).
void train(ForecastModel& model, const pipeline::WindowedDataset& ds, const TrainConfig& cfg,
           const EpochCallback& on_epoch = {});

/// Normalizes the last L values, runs the network and returns the first
/// horizon value in Mbps.
double predict_next(const ForecastModel& model, std::span<const double> recent);

/// One-step predictions for every dataset pair in [first, last), in Mbps.
std::vector<double> predict_pairs(const ForecastModel& model, const pipeline::WindowedDataset& ds, std::size_t first,
                                  std::size_t last);

void save_model(const std::string& path, const ForecastModel& model);
ForecastModel load_model(const std::string& path);
void write_loss_history(const std::string& path, const std::vector<EpochRecord>& history);

double baseline_seasonal_naive(std::span<const double> series, std::size_t season);
double baseline_moving_average(std::span<const double> series, std::size_t window);

} // namespace ranopt::forecast
