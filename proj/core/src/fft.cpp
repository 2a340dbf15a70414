#include "roughburgers/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rough {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

namespace {

// roots[j] = exp(-2 pi i j / n) for j < n/2, cached per size and thread
const std::vector<std::complex<double>>& twiddles(int n) {
  thread_local std::vector<std::vector<std::complex<double>>> cache;
  int log2n = 0;
  while ((1 << log2n) < n) ++log2n;
  if (static_cast<int>(cache.size()) <= log2n) cache.resize(log2n + 1);
  auto& tw = cache[log2n];
  if (tw.empty()) {
    tw.resize(n / 2);
    for (int j = 0; j < n / 2; ++j) {
      const double ang = -2.0 * std::numbers::pi * j / n;
      tw[j] = {std::cos(ang), std::sin(ang)};
    }
  }
  return tw;
}

}  // namespace

void fft_pow2(std::span<std::complex<double>> a, bool inverse) {
  const int n = static_cast<int>(a.size());
  if (!is_pow2(n)) throw std::invalid_argument("fft_pow2: length not a power of two");
  if (n == 1) return;
  const auto& tw = twiddles(n);
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const int stride = n / len;
    for (int i = 0; i < n; i += len) {
      for (int j = 0; j < len / 2; ++j) {
        std::complex<double> w = tw[static_cast<size_t>(j) * stride];
        if (inverse) w = std::conj(w);
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / n;
    for (auto& x : a) x *= inv;
  }
}

std::vector<std::complex<double>> dft_real(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> c(n);
  if (is_pow2(n)) {
    for (int i = 0; i < n; ++i) c[i] = x[i];
    fft_pow2(c, false);
    return c;
  }
  const double w = -2.0 * std::numbers::pi / n;
  for (int k = 0; k < n; ++k) {
    std::complex<double> s(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
      const double ang = w * ((static_cast<long long>(j) * k) % n);
      s += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    c[k] = s;
  }
  return c;
}

std::vector<double> idft_real(std::span<const std::complex<double>> c) {
  const int n = static_cast<int>(c.size());
  std::vector<double> x(n);
  if (is_pow2(n)) {
    std::vector<std::complex<double>> a(c.begin(), c.end());
    fft_pow2(a, true);
    for (int i = 0; i < n; ++i) x[i] = a[i].real();
    return x;
  }
  const double w = 2.0 * std::numbers::pi / n;
  for (int j = 0; j < n; ++j) {
    std::complex<double> s(0.0, 0.0);
    for (int k = 0; k < n; ++k) {
      const double ang = w * ((static_cast<long long>(j) * k) % n);
      s += c[k] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    x[j] = s.real() / n;
  }
  return x;
}

}  // namespace rough
