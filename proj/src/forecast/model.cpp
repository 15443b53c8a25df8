#include "forecast/model.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "forecast/decomp.hpp"

namespace ranopt::forecast {

void ModelConfig::validate() const {
    if (input_length < 2) throw Error("forecast", "input_length must be >= 2");
    if (horizon < 1) throw Error("forecast", "horizon must be >= 1");
    if (label_len() < 1 || label_len() > input_length) throw Error("forecast", "label_length must lie in [1, input_length]");
    if (d_model < 1 || heads < 1 || d_model % heads != 0) throw Error("forecast", "d_model must be divisible by heads");
    if (d_ff < 1) throw Error("forecast", "d_ff must be positive");
    if (encoder_layers < 1 || decoder_layers < 1) throw Error("forecast", "layer counts must be positive");
    if (ma_kernel < 1 || ma_kernel % 2 == 0) throw Error("forecast", "ma_kernel must be odd");
    if (ma_kernel > decoder_length()) throw Error("forecast", "ma_kernel exceeds decoder length");
    if (!(autocorr.rho > 0.0)) throw Error("forecast", "rho must be positive");
}

int ParamSet::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    params_.push_back(Param{std::move(name), Mat::Zero(rows, cols), Mat::Zero(rows, cols)});
    return static_cast<int>(params_.size() - 1);
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

void ParamSet::zero_grad() {
    for (auto& p : params_) p.grad.setZero();
}

// ---------------------------------------------------------------- Linear / FF

Linear Linear::make(ParamSet& ps, const std::string& name, Eigen::Index in, Eigen::Index out) {
    Linear l;
    l.w = ps.add(name + ".w", in, out);
    l.b = ps.add(name + ".b", 1, out);
    return l;
}

Mat Linear::forward(const ParamSet& ps, const Mat& x) const {
    Mat y = x * ps[w].value;
    y.rowwise() += ps[b].value.row(0);
    return y;
}

Mat Linear::backward(ParamSet& ps, const Mat& x, const Mat& dy) const {
    ps[w].grad.noalias() += x.transpose() * dy;
    ps[b].grad.row(0) += dy.colwise().sum();
    return dy * ps[w].value.transpose();
}

Mat FeedForward::forward(const ParamSet& ps, const Mat& x, Cache& c) const {
    c.x = x;
    c.hidden = l1.forward(ps, x).cwiseMax(0.0);
    return l2.forward(ps, c.hidden);
}

Mat FeedForward::backward(ParamSet& ps, const Mat& dy, const Cache& c) const {
    Mat dh = l2.backward(ps, c.hidden, dy);
    dh = (c.hidden.array() > 0.0).select(dh, 0.0);
    return l1.backward(ps, c.x, dh);
}

// ------------------------------------------------------ auto-correlation block

Mat AutoCorrelationBlock::forward(const ParamSet& ps, const Mat& xq, Eigen::Index lq, const Mat& xkv,
                                  Eigen::Index lkv, Cache& c) const {
    const Eigen::Index batch = xq.rows() / lq;
    const Eigen::Index d = ps[q.w].value.cols();
    const Eigen::Index dh = d / heads;
    c.xq = xq;
    c.xkv = xkv;
    c.lq = lq;
    c.lkv = lkv;
    c.batch = batch;
    c.Q = q.forward(ps, xq);
    const Mat K = k.forward(ps, xkv);
    const Mat V = v.forward(ps, xkv);
    const Eigen::Index keep = std::min(lq, lkv);
    c.Kt = Mat::Zero(batch * lq, d);
    c.Vt = Mat::Zero(batch * lq, d);
    for (Eigen::Index b = 0; b < batch; ++b) {
        c.Kt.middleRows(b * lq, keep) = K.middleRows(b * lkv, keep);
        c.Vt.middleRows(b * lq, keep) = V.middleRows(b * lkv, keep);
    }
    c.O = Mat::Zero(batch * lq, d);
    c.lags.assign(static_cast<std::size_t>(batch * heads), {});
    c.weights.assign(static_cast<std::size_t>(batch * heads), {});
    const std::size_t topk = cfg.k_for(static_cast<std::size_t>(lq));
    for (Eigen::Index b = 0; b < batch; ++b) {
        const Eigen::Index r0 = b * lq;
        for (int h = 0; h < heads; ++h) {
            const Eigen::Index c0 = h * dh;
            const auto r = mean_autocorrelation(c.Q, c.Kt, r0, lq, c0, c0 + dh);
            auto lags = top_k_lags(r, topk);
            auto w = softmax_at(r, lags);
            for (std::size_t i = 0; i < lags.size(); ++i) {
                const auto lag = static_cast<Eigen::Index>(lags[i]);
                for (Eigen::Index t = 0; t < lq; ++t) {
                    const Eigen::Index src = (t - lag + lq) % lq;
                    c.O.row(r0 + t).segment(c0, dh) += w[i] * c.Vt.row(r0 + src).segment(c0, dh);
                }
            }
            const auto slot = static_cast<std::size_t>(b * heads + h);
            c.lags[slot] = std::move(lags);
            c.weights[slot] = std::move(w);
        }
    }
    return o.forward(ps, c.O);
}

void AutoCorrelationBlock::backward(ParamSet& ps, const Mat& dy, const Cache& c, Mat& dxq, Mat& dxkv) const {
    const Eigen::Index lq = c.lq, lkv = c.lkv, batch = c.batch;
    const Eigen::Index d = c.Q.cols();
    const Eigen::Index dh = d / heads;
    const Mat dO = o.backward(ps, c.O, dy);
    Mat dQ = Mat::Zero(batch * lq, d);
    Mat dKt = Mat::Zero(batch * lq, d);
    Mat dVt = Mat::Zero(batch * lq, d);
    const double inv = 1.0 / (static_cast<double>(dh) * static_cast<double>(lq));
    for (Eigen::Index b = 0; b < batch; ++b) {
        const Eigen::Index r0 = b * lq;
        for (int h = 0; h < heads; ++h) {
            const Eigen::Index c0 = h * dh;
            const auto slot = static_cast<std::size_t>(b * heads + h);
            const auto& lags = c.lags[slot];
            const auto& w = c.weights[slot];
            std::vector<double> dw(lags.size(), 0.0);
            for (std::size_t i = 0; i < lags.size(); ++i) {
                const auto lag = static_cast<Eigen::Index>(lags[i]);
                for (Eigen::Index t = 0; t < lq; ++t) {
                    const Eigen::Index src = (t - lag + lq) % lq;
                    const auto g = dO.row(r0 + t).segment(c0, dh);
                    dw[i] += g.dot(c.Vt.row(r0 + src).segment(c0, dh));
                    dVt.row(r0 + src).segment(c0, dh) += w[i] * g;
                }
            }
            double mix = 0.0;
            for (std::size_t i = 0; i < lags.size(); ++i) mix += w[i] * dw[i];
            for (std::size_t i = 0; i < lags.size(); ++i) {
                const double g = w[i] * (dw[i] - mix) * inv;
                const auto lag = static_cast<Eigen::Index>(lags[i]);
                for (Eigen::Index t = 0; t < lq; ++t) {
                    const Eigen::Index src = (t - lag + lq) % lq;
                    dQ.row(r0 + t).segment(c0, dh) += g * c.Kt.row(r0 + src).segment(c0, dh);
                    dKt.row(r0 + src).segment(c0, dh) += g * c.Q.row(r0 + t).segment(c0, dh);
                }
            }
        }
    }
    const Eigen::Index keep = std::min(lq, lkv);
    Mat dK = Mat::Zero(batch * lkv, d);
    Mat dV = Mat::Zero(batch * lkv, d);
    for (Eigen::Index b = 0; b < batch; ++b) {
        dK.middleRows(b * lkv, keep) = dKt.middleRows(b * lq, keep);
        dV.middleRows(b * lkv, keep) = dVt.middleRows(b * lq, keep);
    }
    dxq = q.backward(ps, c.xq, dQ);
    dxkv = k.backward(ps, c.xkv, dK);
    dxkv += v.backward(ps, c.xkv, dV);
}

// ------------------------------------------------------------------ Forecaster

namespace {

void check_finite(const Mat& m, const std::string& where) {
    if (!m.allFinite()) throw NumericError("forecast", "non-finite activation in " + where);
}

} // namespace

Forecaster::Forecaster(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const Eigen::Index d = cfg_.d_model;
    auto ac_block = [&](const std::string& name) {
        AutoCorrelationBlock ac;
        ac.q = Linear::make(params_, name + ".q", d, d);
        ac.k = Linear::make(params_, name + ".k", d, d);
        ac.v = Linear::make(params_, name + ".v", d, d);
        ac.o = Linear::make(params_, name + ".o", d, d);
        ac.heads = cfg_.heads;
        ac.cfg = cfg_.autocorr;
        return ac;
    };
    auto ff_block = [&](const std::string& name) {
        FeedForward ff;
        ff.l1 = Linear::make(params_, name + ".ff1", d, cfg_.d_ff);
        ff.l2 = Linear::make(params_, name + ".ff2", cfg_.d_ff, d);
        return ff;
    };
    enc_val_ = params_.add("enc.value", 1, d);
    if (cfg_.positional_embedding) enc_pos_ = params_.add("enc.position", cfg_.input_length, d);
    dec_val_ = params_.add("dec.value", 1, d);
    if (cfg_.positional_embedding) dec_pos_ = params_.add("dec.position", cfg_.decoder_length(), d);
    for (int l = 0; l < cfg_.encoder_layers; ++l) {
        const std::string n = "enc" + std::to_string(l);
        enc_.push_back({ac_block(n + ".ac"), ff_block(n)});
    }
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
        const std::string n = "dec" + std::to_string(l);
        DecoderLayer layer{ac_block(n + ".self"), ac_block(n + ".cross"), ff_block(n), -1};
        layer.trend_w = params_.add(n + ".trend", d, 1);
        dec_.push_back(std::move(layer));
    }
    head_w_ = params_.add("head.w", d, 1);
    head_b_ = params_.add("head.b", 1, 1);
    init(seed);
}

void Forecaster::init(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& p : params_.all()) {
        double bound;
        if (p.name.ends_with(".position")) {
            bound = 0.1;
        } else if (p.name.ends_with(".b") && p.value.rows() == 1 && p.name != "head.b") {
            // bias shares the fan-in of its weight matrix
            const auto& w = params_.all()[static_cast<std::size_t>(&p - params_.all().data() - 1)];
            bound = 1.0 / std::sqrt(static_cast<double>(w.value.rows()));
        } else {
            bound = 1.0 / std::sqrt(static_cast<double>(p.value.rows()));
        }
        for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = (2.0 * uniform_open0(rng) - 1.0) * bound;
    }
}

void Forecaster::zero_output_head() {
    params_[head_w_].value.setZero();
    params_[head_b_].value.setZero();
    for (auto& l : dec_) params_[l.trend_w].value.setZero();
}

Mat Forecaster::embed(const Mat& series, Eigen::Index len, int val, int pos) const {
    const Eigen::Index batch = series.rows();
    const auto& w = params_[val].value;
    Mat e(batch * len, w.cols());
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (Eigen::Index t = 0; t < len; ++t) {
            e.row(b * len + t) = series(b, t) * w.row(0);
            if (pos >= 0) e.row(b * len + t) += params_[pos].value.row(t);
        }
    }
    return e;
}

void Forecaster::embed_backward(const Mat& series, Eigen::Index len, int val, int pos, const Mat& d) {
    const Eigen::Index batch = series.rows();
    auto& gw = params_[val].grad;
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (Eigen::Index t = 0; t < len; ++t) {
            gw.row(0) += series(b, t) * d.row(b * len + t);
            if (pos >= 0) params_[pos].grad.row(t) += d.row(b * len + t);
        }
    }
}

Mat Forecaster::forward(const Mat& windows) const {
    Cache c;
    return forward(windows, c);
}

Mat Forecaster::forward(const Mat& windows, Cache& c) const {
    const Eigen::Index L = cfg_.input_length;
    if (windows.cols() != L) throw Error("forecast", "window length does not match model input_length");
    const Eigen::Index batch = windows.rows();
    const Eigen::Index lab = cfg_.label_len();
    const Eigen::Index ld = cfg_.decoder_length();
    const int kernel = cfg_.ma_kernel;
    c.batch = batch;
    c.x = windows;
    c.seasonal_init = Mat::Zero(batch, ld);
    c.trend_init = Mat::Zero(batch, ld);
    for (Eigen::Index b = 0; b < batch; ++b) {
        std::vector<double> row(windows.row(b).data(), windows.row(b).data() + L);
        const auto dc = decompose(row, kernel);
        const double mean = windows.row(b).mean();
        for (Eigen::Index t = 0; t < lab; ++t) {
            c.seasonal_init(b, t) = dc.seasonal[static_cast<std::size_t>(L - lab + t)];
            c.trend_init(b, t) = dc.trend[static_cast<std::size_t>(L - lab + t)];
        }
        for (Eigen::Index t = lab; t < ld; ++t) c.trend_init(b, t) = mean;
    }

    // encoder
    Mat e = embed(windows, L, enc_val_, enc_pos_);
    c.enc.assign(enc_.size(), {});
    for (std::size_t l = 0; l < enc_.size(); ++l) {
        const std::string tag = "encoder layer " + std::to_string(l);
        Mat s = e + enc_[l].ac.forward(params_, e, L, e, L, c.enc[l].ac);
        s -= moving_average(s, L, kernel);
        Mat s2 = s + enc_[l].ff.forward(params_, s, c.enc[l].ff);
        e = s2 - moving_average(s2, L, kernel);
        check_finite(e, tag);
    }
    c.enc_out = e;

    // decoder
    Mat dmat = embed(c.seasonal_init, ld, dec_val_, dec_pos_);
    Mat trend(batch * ld, 1);
    for (Eigen::Index b = 0; b < batch; ++b) trend.middleRows(b * ld, ld) = c.trend_init.row(b).transpose();
    c.dec.assign(dec_.size(), {});
    for (std::size_t l = 0; l < dec_.size(); ++l) {
        const std::string tag = "decoder layer " + std::to_string(l);
        auto& dc = c.dec[l];
        Mat u = dmat + dec_[l].self_ac.forward(params_, dmat, ld, dmat, ld, dc.self_ac);
        Mat t1 = moving_average(u, ld, kernel);
        Mat d1 = u - t1;
        u = d1 + dec_[l].cross_ac.forward(params_, d1, ld, c.enc_out, L, dc.cross_ac);
        Mat t2 = moving_average(u, ld, kernel);
        Mat d2 = u - t2;
        u = d2 + dec_[l].ff.forward(params_, d2, dc.ff);
        Mat t3 = moving_average(u, ld, kernel);
        dmat = u - t3;
        dc.trend_sum = t1 + t2 + t3;
        trend += dc.trend_sum * params_[dec_[l].trend_w].value;
        dc.out = dmat;
        check_finite(dmat, tag);
    }
    Mat out = trend + dmat * params_[head_w_].value;
    out.array() += params_[head_b_].value(0, 0);
    check_finite(out, "output head");

    Mat pred(batch, cfg_.horizon);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index j = 0; j < cfg_.horizon; ++j) pred(b, j) = out(b * ld + lab + j, 0);
    return pred;
}

void Forecaster::backward(const Mat& dpred, const Cache& c) {
    const Eigen::Index L = cfg_.input_length;
    const Eigen::Index batch = c.batch;
    const Eigen::Index lab = cfg_.label_len();
    const Eigen::Index ld = cfg_.decoder_length();
    const int kernel = cfg_.ma_kernel;
    if (dpred.rows() != batch || dpred.cols() != cfg_.horizon) throw Error("forecast", "gradient shape mismatch");

    Mat dout = Mat::Zero(batch * ld, 1);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index j = 0; j < cfg_.horizon; ++j) dout(b * ld + lab + j, 0) = dpred(b, j);

    const Mat& last = c.dec.back().out;
    params_[head_w_].grad.noalias() += last.transpose() * dout;
    params_[head_b_].grad(0, 0) += dout.sum();
    Mat dd = dout * params_[head_w_].value.transpose();

    Mat denc = Mat::Zero(batch * L, cfg_.d_model);
    Mat dxq, dxkv;
    for (std::size_t li = dec_.size(); li-- > 0;) {
        const auto& layer = dec_[li];
        const auto& dc = c.dec[li];
        params_[layer.trend_w].grad.noalias() += dc.trend_sum.transpose() * dout;
        const Mat dt = dout * params_[layer.trend_w].value.transpose();

        Mat du = dd + moving_average_adjoint(dt - dd, ld, kernel);
        Mat dd2 = du + layer.ff.backward(params_, du, dc.ff);
        du = dd2 + moving_average_adjoint(dt - dd2, ld, kernel);
        layer.cross_ac.backward(params_, du, dc.cross_ac, dxq, dxkv);
        Mat dd1 = du + dxq;
        denc += dxkv;
        du = dd1 + moving_average_adjoint(dt - dd1, ld, kernel);
        layer.self_ac.backward(params_, du, dc.self_ac, dxq, dxkv);
        dd = du + dxq + dxkv;
    }
    embed_backward(c.seasonal_init, ld, dec_val_, dec_pos_, dd);

    Mat de = denc;
    for (std::size_t li = enc_.size(); li-- > 0;) {
        const auto& layer = enc_[li];
        const auto& ec = c.enc[li];
        Mat ds2 = de - moving_average_adjoint(de, L, kernel);
        Mat ds = ds2 + layer.ff.backward(params_, ds2, ec.ff);
        Mat ds1 = ds - moving_average_adjoint(ds, L, kernel);
        layer.ac.backward(params_, ds1, ec.ac, dxq, dxkv);
        de = ds1 + dxq + dxkv;
    }
    embed_backward(c.x, L, enc_val_, enc_pos_, de);
}

} // namespace ranopt::forecast
