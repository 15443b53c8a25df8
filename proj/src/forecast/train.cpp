#include "forecast/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/checkpoint.hpp"
#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace ranopt::forecast {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw Error("forecast", "learning_rate must be >= 0");
    if (batch_size < 1) throw Error("forecast", "batch_size must be >= 1");
    if (epochs < 0) throw Error("forecast", "epochs must be >= 0");
    if (!(divergence_factor > 1.0)) throw Error("forecast", "divergence_factor must exceed 1");
}

void Adam::step(ParamSet& ps) {
    if (m_.empty()) {
        for (const auto& p : ps.all()) {
            m_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
            v_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < ps.size(); ++i) {
        auto& p = ps.all()[i];
        m_[i] = b1_ * m_[i] + (1.0 - b1_) * p.grad;
        v_[i] = b2_ * v_[i] + (1.0 - b2_) * p.grad.cwiseAbs2();
        p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
        if (!p.value.allFinite()) throw NumericError("forecast", "non-finite parameter after update: " + p.name);
    }
}

ForecastModel make_model(const ModelConfig& cfg, std::uint64_t seed) {
    ForecastModel m;
    m.net = std::make_unique<Forecaster>(cfg, seed);
    return m;
}

double clip_gradients(ParamSet& ps, double bound) {
    double sq = 0.0;
    for (const auto& p : ps.all()) sq += p.grad.squaredNorm();
    const double norm = std::sqrt(sq);
    if (bound > 0.0 && norm > bound) {
        const double s = bound / norm;
        for (auto& p : ps.all()) p.grad *= s;
    }
    return norm;
}

namespace {

void gather(const pipeline::WindowedDataset& ds, std::span<const std::size_t> idx, Mat& x, Mat& y) {
    const auto L = static_cast<Eigen::Index>(ds.input_length());
    const auto h = static_cast<Eigen::Index>(ds.horizon());
    x.resize(static_cast<Eigen::Index>(idx.size()), L);
    y.resize(static_cast<Eigen::Index>(idx.size()), h);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto in = ds.input(idx[r]);
        const auto tg = ds.target(idx[r]);
        for (Eigen::Index t = 0; t < L; ++t) x(static_cast<Eigen::Index>(r), t) = in[static_cast<std::size_t>(t)];
        for (Eigen::Index t = 0; t < h; ++t) y(static_cast<Eigen::Index>(r), t) = tg[static_cast<std::size_t>(t)];
    }
}

void check_shapes(const ModelConfig& mc, const pipeline::WindowedDataset& ds) {
    if (static_cast<std::size_t>(mc.input_length) != ds.input_length() || static_cast<std::size_t>(mc.horizon) != ds.horizon())
        throw Error("forecast", "dataset window shape does not match the model");
}

// Evenly strided subset when max_samples > 0.
double held_out_loss(const Forecaster& net, const pipeline::WindowedDataset& ds, std::size_t max_samples) {
    if (ds.test_size() == 0) return std::nan("");
    const std::size_t stride = max_samples > 0 ? (ds.test_size() + max_samples - 1) / max_samples : 1;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.test_size(); i += stride) idx.push_back(ds.train_size() + i);
    double total = 0.0;
    for (std::size_t s = 0; s < idx.size(); s += 128) {
        const std::size_t e = std::min(idx.size(), s + 128);
        total += batch_loss(net, ds, std::span(idx).subspan(s, e - s)) * static_cast<double>(e - s);
    }
    return total / static_cast<double>(idx.size());
}

} // namespace

double batch_loss(const Forecaster& net, const pipeline::WindowedDataset& ds, std::span<const std::size_t> idx) {
    Mat x, y;
    gather(ds, idx, x, y);
    const Mat pred = net.forward(x);
    return (pred - y).squaredNorm() / static_cast<double>(pred.size());
}

void train(ForecastModel& model, const pipeline::WindowedDataset& ds, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (ds.train_size() == 0) throw Error("forecast", "training split is empty");
    check_shapes(model.config(), ds);
    auto& net = *model.net;
    model.norm = ds.normalization();
    Adam opt(cfg.learning_rate);
    std::vector<std::size_t> order(ds.train_size());
    double initial = -1.0;
    Mat x, y;
    Forecaster::Cache cache;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(cfg.seed, {0xF0CA57ULL, static_cast<std::uint64_t>(epoch)}));
        std::shuffle(order.begin(), order.end(), rng);
        std::size_t n = order.size();
        if (cfg.max_samples_per_epoch > 0) n = std::min(n, cfg.max_samples_per_epoch);
        double sum = 0.0;
        for (std::size_t s = 0; s < n; s += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t e = std::min(n, s + static_cast<std::size_t>(cfg.batch_size));
            gather(ds, std::span(order).subspan(s, e - s), x, y);
            net.params().zero_grad();
            const Mat pred = net.forward(x, cache);
            const Mat diff = pred - y;
            const double loss = diff.squaredNorm() / static_cast<double>(diff.size());
            if (initial < 0.0) initial = std::max(loss, 1e-12);
            if (!std::isfinite(loss) || loss > cfg.divergence_factor * initial) {
                throw NumericError("forecast", "training diverged at epoch " + std::to_string(epoch) + ": batch loss " +
                                            csv::fmt(loss) + " vs initial " + csv::fmt(initial));
            }
            net.backward(diff * (2.0 / static_cast<double>(diff.size())), cache);
            clip_gradients(net.params(), cfg.grad_clip);
            opt.step(net.params());
            sum += loss * static_cast<double>(e - s);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = sum / static_cast<double>(n);
        rec.test_loss = cfg.evaluate_test ? held_out_loss(net, ds, cfg.max_samples_per_epoch) : std::nan("");
        model.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }
    model.trained = true;
}

double predict_next(const ForecastModel& model, std::span<const double> recent) {
    if (!model.trained) throw Error("forecast", "model has not been trained");
    const auto L = static_cast<std::size_t>(model.config().input_length);
    if (recent.size() < L) throw Error("forecast", "need at least " + std::to_string(L) + " recent frames");
    Mat x(1, static_cast<Eigen::Index>(L));
    const auto tail = recent.subspan(recent.size() - L);
    for (std::size_t i = 0; i < L; ++i) x(0, static_cast<Eigen::Index>(i)) = model.norm.normalize(tail[i]);
    const Mat pred = model.net->forward(x);
    return model.norm.denormalize(pred(0, 0));
}

std::vector<double> predict_pairs(const ForecastModel& model, const pipeline::WindowedDataset& ds, std::size_t first,
                                  std::size_t last) {
    if (!model.trained) throw Error("forecast", "model has not been trained");
    check_shapes(model.config(), ds);
    std::vector<double> out;
    out.reserve(last - first);
    Mat x, y;
    std::vector<std::size_t> idx;
    for (std::size_t s = first; s < last; s += 128) {
        const std::size_t e = std::min(last, s + 128);
        idx.resize(e - s);
        std::iota(idx.begin(), idx.end(), s);
        gather(ds, idx, x, y);
        const Mat pred = model.net->forward(x);
        // dataset is z-scored with its own statistics
        for (Eigen::Index r = 0; r < pred.rows(); ++r) out.push_back(ds.normalization().denormalize(pred(r, 0)));
    }
    return out;
}

namespace {

nlohmann::json config_json(const ModelConfig& c) {
    return {{"input_length", c.input_length}, {"horizon", c.horizon},       {"label_length", c.label_length},
            {"d_model", c.d_model},           {"heads", c.heads},           {"d_ff", c.d_ff},
            {"encoder_layers", c.encoder_layers}, {"decoder_layers", c.decoder_layers},
            {"ma_kernel", c.ma_kernel},       {"rho", c.autocorr.rho},      {"positional_embedding", c.positional_embedding}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.input_length = j.at("input_length").get<int>();
    c.horizon = j.at("horizon").get<int>();
    c.label_length = j.at("label_length").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.heads = j.at("heads").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.encoder_layers = j.at("encoder_layers").get<int>();
    c.decoder_layers = j.at("decoder_layers").get<int>();
    c.ma_kernel = j.at("ma_kernel").get<int>();
    c.autocorr.rho = j.at("rho").get<double>();
    c.positional_embedding = j.at("positional_embedding").get<bool>();
    return c;
}

} // namespace

void save_model(const std::string& path, const ForecastModel& model) {
    Checkpoint ck;
    ck.kind = "forecaster";
    ck.meta = {{"config", config_json(model.config())},
               {"norm_mean", model.norm.mean},
               {"norm_std", model.norm.std},
               {"trained", model.trained}};
    for (const auto& p : model.net->params().all()) {
        NamedTensor t{p.name, static_cast<std::size_t>(p.value.rows()), static_cast<std::size_t>(p.value.cols()), {}};
        t.data.assign(p.value.data(), p.value.data() + p.value.size());
        ck.tensors.push_back(std::move(t));
    }
    save_checkpoint(path, ck);
}

ForecastModel load_model(const std::string& path) {
    const Checkpoint ck = load_checkpoint(path, "forecaster");
    ForecastModel m;
    try {
        m.net = std::make_unique<Forecaster>(config_from_json(ck.meta.at("config")), 0);
        m.norm.mean = ck.meta.at("norm_mean").get<double>();
        m.norm.std = ck.meta.at("norm_std").get<double>();
        m.trained = ck.meta.at("trained").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("forecast", "malformed checkpoint header in " + path + ": " + e.what());
    }
    for (auto& p : m.net->params().all()) {
        const auto& t = ck.tensor(p.name);
        if (t.rows != static_cast<std::size_t>(p.value.rows()) || t.cols != static_cast<std::size_t>(p.value.cols()))
            throw Error("forecast", "checkpoint tensor " + p.name + " has the wrong shape");
        std::copy(t.data.begin(), t.data.end(), p.value.data());
    }
    return m;
}

void write_loss_history(const std::string& path, const std::vector<EpochRecord>& history) {
    csv::Writer w(path);
    w.header({"epoch", "train_loss", "test_loss"});
    for (const auto& r : history) w.row({std::to_string(r.epoch), csv::fmt(r.train_loss), csv::fmt(r.test_loss)});
}

double baseline_seasonal_naive(std::span<const double> series, std::size_t season) {
    if (season == 0 || series.size() < season) throw Error("forecast", "seasonal naive needs at least one season of history");
    return series[series.size() - season];
}

double baseline_moving_average(std::span<const double> series, std::size_t window) {
    if (window == 0 || series.size() < window) throw Error("forecast", "moving average needs a full window of history");
    double s = 0.0;
    for (std::size_t i = series.size() - window; i < series.size(); ++i) s += series[i];
    return s / static_cast<double>(window);
}

} // namespace ranopt::forecast
