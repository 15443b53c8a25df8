#include "forecast/decomp.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace ranopt::forecast {

namespace {

void check_kernel(int kernel, Eigen::Index length) {
    if (kernel < 1 || kernel % 2 == 0) throw Error("forecast", "decomposition kernel must be odd");
    if (kernel > length) throw Error("forecast", "decomposition kernel larger than series length");
}

} // namespace

Mat moving_average(const Mat& x, Eigen::Index length, int kernel) {
    check_kernel(kernel, length);
    const Eigen::Index h = kernel / 2;
    const Eigen::Index blocks = x.rows() / length;
    const double inv = 1.0 / kernel;
    Mat out(x.rows(), x.cols());
    Eigen::RowVectorXd acc(x.cols());
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const Eigen::Index r0 = b * length;
        auto row = [&](Eigen::Index t) { return x.row(r0 + std::clamp<Eigen::Index>(t, 0, length - 1)); };
        acc.setZero();
        for (Eigen::Index j = -h; j <= h; ++j) acc += row(j);
        out.row(r0) = acc * inv;
        for (Eigen::Index t = 1; t < length; ++t) {
            acc += row(t + h);
            acc -= row(t - 1 - h);
            out.row(r0 + t) = acc * inv;
        }
    }
    return out;
}

Mat moving_average_adjoint(const Mat& dy, Eigen::Index length, int kernel) {
    check_kernel(kernel, length);
    const Eigen::Index h = kernel / 2;
    const Eigen::Index blocks = dy.rows() / length;
    const double inv = 1.0 / kernel;
    Mat dx = Mat::Zero(dy.rows(), dy.cols());
    // Padded position p in [-h, length-1+h] receives sum of dy[t] for |t - p| <= h;
    // padded positions fold onto the replicated end samples.
    Eigen::RowVectorXd acc(dy.cols());
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const Eigen::Index r0 = b * length;
        auto dyrow = [&](Eigen::Index t) -> Eigen::RowVectorXd {
            if (t < 0 || t >= length) return Eigen::RowVectorXd::Zero(dy.cols());
            return dy.row(r0 + t);
        };
        acc.setZero();
        for (Eigen::Index t = -h - h; t <= 0; ++t) acc += dyrow(t);
        for (Eigen::Index p = -h; p < length + h; ++p) {
            // acc holds sum dy[p-h .. p+h]
            const Eigen::Index dst = std::clamp<Eigen::Index>(p, 0, length - 1);
            dx.row(r0 + dst) += acc * inv;
            acc += dyrow(p + h + 1);
            acc -= dyrow(p - h);
        }
    }
    return dx;
}

Decomposition decompose(std::span<const double> x, int kernel) {
    const auto n = static_cast<Eigen::Index>(x.size());
    check_kernel(kernel, n);
    Mat m(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) m(i, 0) = x[static_cast<std::size_t>(i)];
    const Mat t = moving_average(m, n, kernel);
    Decomposition d;
    d.trend.resize(x.size());
    d.seasonal.resize(x.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        d.trend[static_cast<std::size_t>(i)] = t(i, 0);
        d.seasonal[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - t(i, 0);
    }
    return d;
}

} // namespace ranopt::forecast
