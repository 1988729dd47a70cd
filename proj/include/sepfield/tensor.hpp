#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace sepfield {

using cd = std::complex<double>;

namespace detail {

inline void check(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}
inline void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) {
    check(s > 0, "tensor shape entries must be positive");
    n *= std::size_t(s);
  }
  return n;
}

/// Contraction along one mode, viewing the tensor as (outer, n, inner).
/// out[o,p,i] = sum_k in[o,k,i] * m[p,k], with m row-major p x n.
/// Works for real (double) and complex (cd) element types alike.
template <class T, class M>
void mode_contract_kernel(const T* in, std::size_t outer, std::size_t n, std::size_t inner,
                          const M* m, std::size_t p, T* out) {
  std::fill(out, out + outer * p * inner, T(0));
  for (std::size_t o = 0; o < outer; ++o) {
    const T* in_o = in + o * n * inner;
    T* out_o = out + o * p * inner;
    for (std::size_t q = 0; q < p; ++q) {
      T* out_row = out_o + q * inner;
      const M* m_row = m + q * n;
      for (std::size_t k = 0; k < n; ++k) {
        const M w = m_row[k];
        if (w == M(0)) continue;
        const T* in_row = in_o + k * inner;
        for (std::size_t i = 0; i < inner; ++i) out_row[i] += w * in_row[i];
      }
    }
  }
}

} // namespace detail

/// Dense row-major complex tensor. Shape is fixed at construction; data is
/// validated to be free of NaN/Inf when supplied by the caller.
class DenseTensor {
public:
  DenseTensor() = default;

  explicit DenseTensor(std::vector<int> shape)
      : shape_(std::move(shape)), data_(detail::shape_numel(shape_), cd(0.0, 0.0)) {}

  DenseTensor(std::vector<int> shape, std::vector<cd> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    detail::check(data_.size() == detail::shape_numel(shape_),
                  "tensor data length does not match shape");
    for (const cd& v : data_)
      detail::check(std::isfinite(v.real()) && std::isfinite(v.imag()),
                    "tensor data must be finite");
  }

  int rank() const { return int(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }

  const std::vector<cd>& data() const { return data_; }
  std::vector<cd>& data() { return data_; }

  cd& operator[](std::size_t flat) { return data_[flat]; }
  const cd& operator[](std::size_t flat) const { return data_[flat]; }

  std::size_t index_of(const std::vector<int>& idx) const {
    detail::check(idx.size() == shape_.size(), "index rank mismatch");
    std::size_t flat = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      detail::check(idx[j] >= 0 && idx[j] < shape_[j], "index out of range");
      flat = flat * std::size_t(shape_[j]) + std::size_t(idx[j]);
    }
    return flat;
  }

  cd& at(const std::vector<int>& idx) { return data_[index_of(idx)]; }
  const cd& at(const std::vector<int>& idx) const { return data_[index_of(idx)]; }

private:
  std::vector<int> shape_;
  std::vector<cd> data_;
};

/// Contract mode `mode` of `t` with the rank-2 factor `m` (p x n, n = t.shape[mode]).
inline DenseTensor mode_contract(const DenseTensor& t, int mode, const DenseTensor& m) {
  detail::check(mode >= 0 && mode < t.rank(), "mode index out of range");
  detail::check(m.rank() == 2, "factor must be a matrix");
  const int p = m.shape()[0];
  const int n = m.shape()[1];
  detail::check(t.shape()[mode] == n, "factor inner dimension does not match tensor mode");

  std::size_t outer = 1, inner = 1;
  for (int j = 0; j < mode; ++j) outer *= std::size_t(t.shape()[j]);
  for (int j = mode + 1; j < t.rank(); ++j) inner *= std::size_t(t.shape()[j]);

  std::vector<int> out_shape = t.shape();
  out_shape[mode] = p;
  DenseTensor out(out_shape);
  detail::mode_contract_kernel(t.data().data(), outer, std::size_t(n), inner, m.data().data(),
                               std::size_t(p), out.data().data());
  return out;
}

/// Apply one factor matrix per mode (factor j of shape P_j x N_j), contracting
/// all modes. Modes are processed in descending N_j/P_j ratio so the
/// intermediate tensor shrinks as early as possible; the result is the same
/// for any order.
inline DenseTensor tucker_apply(const DenseTensor& coeffs, const std::vector<DenseTensor>& factors) {
  detail::check(int(factors.size()) == coeffs.rank(),
                "tucker_apply: factor count must equal coefficient rank");
  for (int j = 0; j < coeffs.rank(); ++j) {
    detail::check(factors[j].rank() == 2, "tucker_apply: factors must be matrices");
    detail::check(factors[j].shape()[1] == coeffs.shape()[j],
                  "tucker_apply: factor inner dimension mismatch");
  }
  std::vector<int> order(factors.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ra = double(coeffs.shape()[a]) / double(factors[a].shape()[0]);
    const double rb = double(coeffs.shape()[b]) / double(factors[b].shape()[0]);
    return ra > rb;
  });
  DenseTensor acc = coeffs;
  for (int j : order) acc = mode_contract(acc, j, factors[j]);
  return acc;
}

} // namespace sepfield
