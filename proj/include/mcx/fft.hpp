#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace mcx::fft {

// Complex DFT, rank 1 or 2, unnormalized (FFTW convention: inverse needs a
// 1/N by the caller).  sign = -1 forward, +1 backward.  Plans are cached per
// (dims, sign) behind a mutex and executed with the new-array interface, so
// calls are thread-safe and bit-deterministic at any thread count.
void dft(const std::vector<int64_t>& dims, std::complex<double>* in,
         std::complex<double>* out, int sign);

}  // namespace mcx::fft
