#pragma once
#include <cmath>
#include <complex>
#include <vector>

#include "sepfield/tensor.hpp"

namespace sepfield {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// True when n factors completely into primes <= 7 (mixed-radix support set).
inline bool dft_size_supported(int n) {
  if (n < 1) return false;
  for (int p : {2, 3, 5, 7})
    while (n % p == 0) n /= p;
  return n == 1;
}

namespace detail {

/// Twiddle table exp(sign 2 pi i j / n), j < n, cached per (n, sign).
inline const std::vector<cd>& twiddles(int n, int sign) {
  thread_local std::vector<std::pair<long, std::vector<cd>>> cache;
  const long key = long(n) * 2 + (sign > 0 ? 1 : 0);
  for (const auto& [k, tw] : cache)
    if (k == key) return tw;
  std::vector<cd> tw(std::size_t(n), cd(0));
  for (int j = 0; j < n; ++j) {
    const double ang = sign * 2.0 * kPi * j / n;
    tw[std::size_t(j)] = cd(std::cos(ang), std::sin(ang));
  }
  cache.emplace_back(key, std::move(tw));
  return cache.back().second;
}

/// In-place iterative radix-2 transform for power-of-two sizes.
inline void fft_pow2(std::vector<cd>& a, int sign) {
  const int n = int(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[std::size_t(i)], a[std::size_t(j)]);
  }
  const auto& tw = twiddles(n, sign);
  for (int len = 2; len <= n; len <<= 1) {
    const int half = len / 2;
    const int step = n / len;
    for (int base = 0; base < n; base += len)
      for (int k = 0; k < half; ++k) {
        const cd u = a[std::size_t(base + k)];
        const cd v = a[std::size_t(base + k + half)] * tw[std::size_t(k) * step];
        a[std::size_t(base + k)] = u + v;
        a[std::size_t(base + k + half)] = u - v;
      }
  }
}

/// Unnormalized DFT, mixed-radix Cooley-Tukey. sign = -1 forward, +1 inverse.
inline void fft_rec(std::vector<cd>& a, int sign) {
  const int n = int(a.size());
  if (n == 1) return;
  if ((n & (n - 1)) == 0) {
    fft_pow2(a, sign);
    return;
  }
  int r = 0;
  for (int p : {2, 3, 5, 7})
    if (n % p == 0) {
      r = p;
      break;
    }
  check(r != 0, "dft: size has a prime factor larger than 7");
  const int m = n / r;

  std::vector<std::vector<cd>> sub(std::size_t(r), std::vector<cd>(std::size_t(m), cd(0)));
  for (int k = 0; k < n; ++k) sub[std::size_t(k % r)][std::size_t(k / r)] = a[std::size_t(k)];
  for (auto& s : sub) fft_rec(s, sign);

  // X[p] = sum_s w^{p s} Y_s[p mod m], w = exp(sign * 2 pi i / n)
  const auto& tw = twiddles(n, sign);
  for (int p = 0; p < n; ++p) {
    cd acc(0.0, 0.0);
    for (int s = 0; s < r; ++s) acc += tw[std::size_t(p) * s % n] * sub[std::size_t(s)][std::size_t(p % m)];
    a[std::size_t(p)] = acc;
  }
}

/// Centered unitary DFT of one line:
///   X[p] = (1/sqrt(P)) sum_k x[k] exp(-+2 pi i (p-c)(k-c)/P),  c = floor(P/2).
inline void centered_dft_line(std::vector<cd>& line, std::vector<cd>& scratch, bool inverse) {
  const int n = int(line.size());
  if (!dft_size_supported(n))
    throw std::invalid_argument("dft: unsupported size " + std::to_string(n));
  const int c = n / 2;
  const int sign = inverse ? +1 : -1;
  scratch = line;
  fft_rec(scratch, sign);
  const double scale = 1.0 / std::sqrt(double(n));
  const auto& ph = twiddles(n, -sign); // exp(-sign 2 pi i j / n)
  for (int p = 0; p < n; ++p) {
    const int q = p - c;
    const int qi = ((q % n) + n) % n;
    // phase exp(-sign 2 pi i q c / n) via the table at index (q c) mod n
    const long jc = ((long(q) * c) % n + n) % n;
    line[std::size_t(p)] = scratch[std::size_t(qi)] * ph[std::size_t(jc)] * scale;
  }
}

} // namespace detail

/// Centered unitary DFT along one axis of a flat row-major array.
inline void dft_axis(std::vector<cd>& data, const std::vector<int>& shape, int axis, bool inverse) {
  detail::check(axis >= 0 && axis < int(shape.size()), "dft_axis: axis out of range");
  const int n = shape[axis];
  std::size_t outer = 1, inner = 1;
  for (int j = 0; j < axis; ++j) outer *= std::size_t(shape[j]);
  for (int j = axis + 1; j < int(shape.size()); ++j) inner *= std::size_t(shape[j]);

  std::vector<cd> line(std::size_t(n), cd(0)), scratch(std::size_t(n), cd(0));
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * std::size_t(n) * inner + i;
      for (int k = 0; k < n; ++k) line[std::size_t(k)] = data[base + std::size_t(k) * inner];
      detail::centered_dft_line(line, scratch, inverse);
      for (int k = 0; k < n; ++k) data[base + std::size_t(k) * inner] = line[std::size_t(k)];
    }
}

/// Centered unitary DFT over every axis of a tensor (image grid <-> k-space).
inline DenseTensor spatial_dft(const DenseTensor& img, bool inverse = false) {
  DenseTensor out = img;
  for (int j = 0; j < img.rank(); ++j) dft_axis(out.data(), out.shape(), j, inverse);
  return out;
}

} // namespace sepfield
