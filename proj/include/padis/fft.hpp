#pragma once

#include <complex>
#include <vector>

namespace padis {

// In-place iterative radix-2 FFT; length must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse);
size_t next_pow2(size_t n);

}  // namespace padis
