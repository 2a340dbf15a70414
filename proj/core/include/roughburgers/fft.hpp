#pragma once

#include <complex>
#include <span>
#include <vector>

namespace rough {

// In-place complex FFT, n a power of two.
void fft_pow2(std::span<std::complex<double>> a, bool inverse);

bool is_pow2(int n);

// Forward DFT of a real sequence of any length n (FFT when n is a power of
// two, direct O(n^2) otherwise). Returns all n coefficients,
// c[k] = sum_j x[j] exp(-2 pi i j k / n).
std::vector<std::complex<double>> dft_real(std::span<const double> x);

// Inverse of dft_real, keeping only the real part.
std::vector<double> idft_real(std::span<const std::complex<double>> c);

// Signed frequency of DFT bin k for length n: k for k <= n/2, k - n above.
inline int signed_freq(int k, int n) { return (2 * k <= n) ? k : k - n; }

}  // namespace rough
