#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "forecast/autocorr.hpp"
#include "forecast/tensor.hpp"

namespace ranopt::forecast {

struct ModelConfig {
    int input_length = 96;
    int horizon = 1;
    int label_length = -1; // -1: input_length / 2
    int d_model = 32;
    int heads = 2;
    int d_ff = 64;
    int encoder_layers = 2;
    int decoder_layers = 1;
    int ma_kernel = 25;
    AutoCorrConfig autocorr{};
    bool positional_embedding = true;

    int label_len() const { return label_length < 0 ? input_length / 2 : label_length; }
    int decoder_length() const { return label_len() + horizon; }
    void validate() const;
};

struct Param {
    std::string name;
    Mat value;
    Mat grad;
};

/// Named parameter list; layers refer to entries by index.
class ParamSet {
public:
    int add(std::string name, Eigen::Index rows, Eigen::Index cols);
    Param& operator[](int i) { return params_[static_cast<std::size_t>(i)]; }
    const Param& operator[](int i) const { return params_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return params_.size(); }
    std::vector<Param>& all() { return params_; }
    const std::vector<Param>& all() const { return params_; }
    std::size_t scalar_count() const;
    void zero_grad();

private:
    std::vector<Param> params_;
};

struct Linear {
    int w = -1;
    int b = -1;
    static Linear make(ParamSet& ps, const std::string& name, Eigen::Index in, Eigen::Index out);
    Mat forward(const ParamSet& ps, const Mat& x) const;
    Mat backward(ParamSet& ps, const Mat& x, const Mat& dy) const;
};

struct FeedForward {
    Linear l1, l2;
    struct Cache {
        Mat x, hidden;
    };
    Mat forward(const ParamSet& ps, const Mat& x, Cache& c) const;
    Mat backward(ParamSet& ps, const Mat& dy, const Cache& c) const;
};

/// Multi-head auto-correlation block. Queries come from xq (blocks of lq rows),
/// keys and values from xkv (blocks of lkv rows). Keys and values are truncated
/// or zero-padded to lq rows before the lag correlation.
struct AutoCorrelationBlock {
    Linear q, k, v, o;
    int heads = 1;
    AutoCorrConfig cfg{};

    struct Cache {
        Mat xq, xkv, Q, Kt, Vt, O;
        Eigen::Index lq = 0, lkv = 0, batch = 0;
        std::vector<std::vector<std::size_t>> lags;  // [sample*heads + h]
        std::vector<std::vector<double>> weights;
    };
    Mat forward(const ParamSet& ps, const Mat& xq, Eigen::Index lq, const Mat& xkv, Eigen::Index lkv,
                Cache& c) const;
    /// Accumulates parameter gradients; returns input gradients.
    void backward(ParamSet& ps, const Mat& dy, const Cache& c, Mat& dxq, Mat& dxkv) const;
};

class Forecaster {
public:
    explicit Forecaster(ModelConfig cfg, std::uint64_t seed = 0);

    const ModelConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    struct Cache;
    /// windows: B x L normalized inputs. Returns B x horizon predictions.
    Mat forward(const Mat& windows) const;
    Mat forward(const Mat& windows, Cache& cache) const;
    /// dpred: B x horizon gradient of the loss. Accumulates into param grads.
    void backward(const Mat& dpred, const Cache& cache);

    /// Zero-initializes the output head so an all-zero input maps to zero.
    void zero_output_head();

private:
    struct EncoderLayer {
        AutoCorrelationBlock ac;
        FeedForward ff;
    };
    struct DecoderLayer {
        AutoCorrelationBlock self_ac, cross_ac;
        FeedForward ff;
        int trend_w = -1;
    };

    ModelConfig cfg_;
    ParamSet params_;
    int enc_val_ = -1, enc_pos_ = -1, dec_val_ = -1, dec_pos_ = -1;
    std::vector<EncoderLayer> enc_;
    std::vector<DecoderLayer> dec_;
    int head_w_ = -1, head_b_ = -1;

    Mat embed(const Mat& series, Eigen::Index len, int val, int pos) const;
    void embed_backward(const Mat& series, Eigen::Index len, int val, int pos, const Mat& d);
    void init(std::uint64_t seed);
};

struct Forecaster::Cache {
    Eigen::Index batch = 0;
    Mat x, seasonal_init, trend_init;
    struct Enc {
        AutoCorrelationBlock::Cache ac;
        FeedForward::Cache ff;
    };
    struct Dec {
        AutoCorrelationBlock::Cache self_ac, cross_ac;
        FeedForward::Cache ff;
        Mat trend_sum, out;
    };
    std::vector<Enc> enc;
    std::vector<Dec> dec;
    Mat enc_out;
};

} // namespace ranopt::forecast
