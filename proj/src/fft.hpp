#pragma once

// Thin RAII layer over FFTW. Plans are created per call with FFTW_ESTIMATE;
// planner calls are serialized because FFTW's planner is not re-entrant.

#include <vector>

#include "afcmem/core.hpp"

namespace afcmem::detail {

// In-place unnormalized DFT: X_k = sum_n x_n exp(sign * 2 pi i k n / N).
void dft(std::vector<cplx>& data, int sign);

// Full linear convolution c[n] = sum_m a[m] b[n - m], length na + nb - 1.
std::vector<cplx> linear_convolve(const std::vector<cplx>& a, const std::vector<cplx>& b);

// Smallest 2^a 3^b 5^c >= n.
std::size_t good_fft_size(std::size_t n);

}  // namespace afcmem::detail
