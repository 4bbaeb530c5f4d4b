#pragma once

// Thin FFTW wrapper shared by the STFT and the convolution engine.
// Plans are created once per size under a mutex with FFTW_ESTIMATE, which
// keeps the chosen algorithm (and therefore the rounding) identical from
// run to run.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace shdoa::detail {

/// Forward real DFT of length n; out receives n/2 + 1 bins. No scaling.
void rfft(std::span<const double> in, std::span<std::complex<double>> out);

/// Inverse of rfft including the 1/n scaling; `in` has n/2 + 1 bins.
void irfft(std::span<const std::complex<double>> in, std::span<double> out);

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

/// Linear convolution of x with h, truncated to out_len samples.
std::vector<double> convolve(std::span<const double> x, std::span<const double> h,
                             std::size_t out_len);

/// Convolution of one signal with several filters, sharing the signal FFT.
std::vector<std::vector<double>> convolve_many(std::span<const double> x,
                                               const std::vector<std::vector<double>>& filters,
                                               std::size_t out_len);

}  // namespace shdoa::detail
