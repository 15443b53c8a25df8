#include "forecast/autocorr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "common/fft.hpp"

namespace ranopt::forecast {

using fft::cplx;

std::size_t AutoCorrConfig::k_for(std::size_t length) const {
    if (length < 2) throw Error("forecast", "auto-correlation needs length >= 2");
    const double raw = std::floor(rho * std::log(static_cast<double>(length)));
    std::size_t k = raw < 1.0 ? 1 : static_cast<std::size_t>(raw);
    return std::min(k, length - 1);
}

namespace {

// Accumulates sum_c Q_c(f) conj(K_c(f)) for columns [c0, c1) using one complex
// transform per channel (q in the real part, k in the imaginary part).
void accumulate_cross_spectrum(const Mat& q, const Mat& k, Eigen::Index row0, Eigen::Index len, Eigen::Index c0,
                               Eigen::Index c1, std::vector<cplx>& acc, std::vector<cplx>& buf) {
    const std::size_t n = acc.size();
    for (Eigen::Index c = c0; c < c1; ++c) {
        std::fill(buf.begin(), buf.end(), cplx{});
        for (Eigen::Index t = 0; t < len; ++t) buf[static_cast<std::size_t>(t)] = {q(row0 + t, c), k(row0 + t, c)};
        fft::transform(buf, false);
        for (std::size_t f = 0; f < n; ++f) {
            // Q(f) = (Z(f) + conj Z(-f)) / 2, K(f) = (Z(f) - conj Z(-f)) / 2i
            const cplx z = buf[f];
            const cplx m = buf[(n - f) % n];
            const double qr = 0.5 * (z.real() + m.real()), qi = 0.5 * (z.imag() - m.imag());
            const double kr = 0.5 * (z.imag() + m.imag()), ki = -0.5 * (z.real() - m.real());
            acc[f] += cplx(qr * kr + qi * ki, qi * kr - qr * ki);
        }
    }
}

std::vector<double> fold_circular(std::vector<cplx>& spectrum, std::size_t length, double scale) {
    fft::transform(spectrum, true);
    const std::size_t n = spectrum.size();
    std::vector<double> r(length);
    // Linear correlation at lag m sits at index m mod n; circular lag tau
    // collects lags tau and tau - L.
    for (std::size_t tau = 0; tau < length; ++tau) {
        double v = spectrum[tau].real();
        if (tau > 0) v += spectrum[n - (length - tau)].real();
        r[tau] = v * scale;
    }
    return r;
}

} // namespace

std::vector<double> autocorrelation(std::span<const double> q, std::span<const double> k) {
    if (q.size() != k.size()) throw Error("forecast", "auto-correlation inputs differ in length");
    const std::size_t len = q.size();
    if (len < 2) throw Error("forecast", "auto-correlation needs length >= 2");
    Mat qm(static_cast<Eigen::Index>(len), 1), km(static_cast<Eigen::Index>(len), 1);
    for (std::size_t i = 0; i < len; ++i) {
        qm(static_cast<Eigen::Index>(i), 0) = q[i];
        km(static_cast<Eigen::Index>(i), 0) = k[i];
    }
    return mean_autocorrelation(qm, km, 0, static_cast<Eigen::Index>(len), 0, 1);
}

std::vector<double> mean_autocorrelation(const Mat& q, const Mat& k, Eigen::Index row0, Eigen::Index length,
                                         Eigen::Index c0, Eigen::Index c1) {
    const auto len = static_cast<std::size_t>(length);
    const std::size_t n = fft::next_pow2(2 * len);
    std::vector<cplx> acc(n), buf(n);
    accumulate_cross_spectrum(q, k, row0, length, c0, c1, acc, buf);
    const double scale = 1.0 / (static_cast<double>(len) * static_cast<double>(c1 - c0));
    return fold_circular(acc, len, scale);
}

std::vector<std::size_t> top_k_lags(std::span<const double> scores, std::size_t k) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    k = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
    idx.resize(k);
    return idx;
}

std::vector<double> softmax_at(std::span<const double> scores, std::span<const std::size_t> idx) {
    double mx = -INFINITY;
    for (auto i : idx) mx = std::max(mx, scores[i]);
    std::vector<double> w(idx.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
        w[j] = std::exp(scores[idx[j]] - mx);
        sum += w[j];
    }
    for (auto& x : w) x /= sum;
    return w;
}

std::vector<double> roll(std::span<const double> v, std::ptrdiff_t shift) {
    const auto n = static_cast<std::ptrdiff_t>(v.size());
    std::vector<double> out(v.size());
    if (n == 0) return out;
    for (std::ptrdiff_t t = 0; t < n; ++t) out[static_cast<std::size_t>(t)] = v[static_cast<std::size_t>(((t - shift) % n + n) % n)];
    return out;
}

std::vector<double> time_delay_aggregate(std::span<const double> values, std::span<const double> scores,
                                         const AutoCorrConfig& cfg) {
    if (values.size() != scores.size()) throw Error("forecast", "values and lag scores differ in length");
    const std::size_t len = values.size();
    const auto lags = top_k_lags(scores, cfg.k_for(len));
    const auto w = softmax_at(scores, lags);
    std::vector<double> out(len, 0.0);
    for (std::size_t i = 0; i < lags.size(); ++i) {
        for (std::size_t t = 0; t < len; ++t) out[t] += w[i] * values[(t + len - lags[i]) % len];
    }
    return out;
}

} // namespace ranopt::forecast
