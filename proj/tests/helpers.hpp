#pragma once
#include <cmath>
#include <vector>

#include "sepfield/tensor.hpp"

namespace testutil {

/// Central finite difference of f() with respect to the storage slot x.
template <class F>
double fd_central(F&& f, double& x, double h = 1e-5) {
  const double x0 = x;
  x = x0 + h;
  const double fp = f();
  x = x0 - h;
  const double fm = f();
  x = x0;
  return (fp - fm) / (2.0 * h);
}

inline double rel_err(double got, double want) {
  const double denom = std::max(std::abs(want), 1e-12);
  return std::abs(got - want) / denom;
}

/// Literal multivariate sum: out[p...] = sum_k c[k] prod_j factors[j](p_j, k_j).
/// The nested-loop oracle for tensor-product evaluation.
inline sepfield::cd brute_tucker_point(const sepfield::DenseTensor& c,
                                       const std::vector<sepfield::DenseTensor>& factors,
                                       const std::vector<int>& out_idx) {
  const int d = c.rank();
  std::vector<int> k(d, 0);
  sepfield::cd acc(0.0, 0.0);
  while (true) {
    sepfield::cd term = c.at(k);
    for (int j = 0; j < d; ++j) term *= factors[j].at({out_idx[j], k[j]});
    acc += term;
    int j = d - 1;
    while (j >= 0) {
      if (++k[j] < c.shape()[j]) break;
      k[j] = 0;
      --j;
    }
    if (j < 0) break;
  }
  return acc;
}

/// Direct O(P^2)-per-line centered unitary DFT over every axis; an
/// implementation-independent oracle for the transform in the library.
inline sepfield::DenseTensor naive_centered_dft(const sepfield::DenseTensor& x, bool inverse) {
  using sepfield::cd;
  sepfield::DenseTensor cur = x;
  const auto& shape = x.shape();
  for (int axis = 0; axis < x.rank(); ++axis) {
    const int n = shape[std::size_t(axis)];
    const int c = n / 2;
    const double sign = inverse ? +1.0 : -1.0;
    std::size_t outer = 1, inner = 1;
    for (int j = 0; j < axis; ++j) outer *= std::size_t(shape[std::size_t(j)]);
    for (int j = axis + 1; j < x.rank(); ++j) inner *= std::size_t(shape[std::size_t(j)]);
    sepfield::DenseTensor next(shape);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < inner; ++i)
        for (int p = 0; p < n; ++p) {
          cd acc(0);
          for (int k = 0; k < n; ++k) {
            const double ang = sign * 2.0 * 3.141592653589793238462643 * double(p - c) *
                               double(k - c) / n;
            acc += cur[(o * std::size_t(n) + std::size_t(k)) * inner + i] *
                   cd(std::cos(ang), std::sin(ang));
          }
          next[(o * std::size_t(n) + std::size_t(p)) * inner + i] = acc / std::sqrt(double(n));
        }
    cur = next;
  }
  return cur;
}

} // namespace testutil
