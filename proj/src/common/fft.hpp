#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ranopt::fft {

using cplx = std::complex<double>;

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

/// In-place iterative radix-2 transform. `data.size()` must be a power of two.
/// inverse=true applies the conjugate twiddles and the 1/N scale.
void transform(std::span<cplx> data, bool inverse);

} // namespace ranopt::fft
