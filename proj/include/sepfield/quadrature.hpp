#pragma once
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sepfield {

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_q.
/// Exact for polynomials of degree <= 2q-1.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int q) {
  if (q < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  std::vector<double> x(q), w(q);
  const int mid = (q + 1) / 2;
  for (int i = 0; i < mid; ++i) {
    double z = std::cos(3.141592653589793 * (i + 0.75) / (q + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < q; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = q * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[q - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[q - 1 - i] = w[i];
  }
  return {x, w};
}

/// Nodes and weights mapped to [lo, hi].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int q, double lo,
                                                                          double hi) {
  auto [x, w] = gauss_legendre(q);
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  for (int i = 0; i < q; ++i) {
    x[i] = mid + half * x[i];
    w[i] *= half;
  }
  return {x, w};
}

} // namespace sepfield
