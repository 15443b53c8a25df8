#include "common/fft.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace ranopt::fft {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace {

struct Plan {
    std::vector<std::size_t> bitrev;
    std::vector<cplx> twiddle; // e^{-2 pi i k / n}, k < n/2
};

const Plan& plan_for(std::size_t n) {
    thread_local std::map<std::size_t, Plan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    Plan p;
    p.bitrev.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < bits; ++b)
            if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
        p.bitrev[i] = r;
    }
    p.twiddle.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        p.twiddle[k] = {std::cos(ang), std::sin(ang)};
    }
    return cache.emplace(n, std::move(p)).first->second;
}

} // namespace

void transform(std::span<cplx> data, bool inverse) {
    const std::size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft size must be a power of two");
    if (n == 1) return;
    const Plan& p = plan_for(n);

    for (std::size_t i = 0; i < n; ++i)
        if (i < p.bitrev[i]) std::swap(data[i], data[p.bitrev[i]]);

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                // explicit product: std::complex operator* takes the slow NaN-checking path
                const double wr = p.twiddle[j * step].real();
                const double wi = inverse ? -p.twiddle[j * step].imag() : p.twiddle[j * step].imag();
                const cplx u = data[i + j];
                const cplx b = data[i + j + half];
                const cplx v{b.real() * wr - b.imag() * wi, b.real() * wi + b.imag() * wr};
                data[i + j] = u + v;
                data[i + j + half] = u - v;
            }
        }
    }
    if (inverse) {
        const double s = 1.0 / static_cast<double>(n);
        for (auto& x : data) x *= s;
    }
}

} // namespace ranopt::fft
