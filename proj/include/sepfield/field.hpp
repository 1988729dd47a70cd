#pragma once
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "sepfield/autodiff.hpp"
#include "sepfield/quadrature.hpp"
#include "sepfield/siren.hpp"
#include "sepfield/tensor.hpp"

namespace sepfield {

struct Interval {
  double lo = -1.0, hi = 1.0;
};

/// Per-axis point lists; the tensor-product grid they span is never
/// materialized as coordinates, only per-axis.
struct EvalGrid {
  std::vector<std::vector<double>> axes;
};

/// A d-variate complex field built from one univariate network per axis and a
/// complex coefficient tensor: f(y) = sum_k c_k prod_j net_j(y_j)[k_j].
/// With channels > 1 the coefficients carry a trailing channel axis that is
/// not contracted (vector-valued field, one channel per coil).
struct SeparableField {
  std::vector<SirenMlp> nets;
  std::vector<int> modes;
  int channels = 1;
  std::vector<double> coeff_re, coeff_im; // row-major over modes... x channels
  mutable std::uint64_t eval_count = 0;   // univariate network point evaluations

  int dim() const { return int(nets.size()); }
  Interval domain(int j) const { return {nets[std::size_t(j)].lo, nets[std::size_t(j)].hi}; }

  std::vector<int> coeff_shape() const {
    std::vector<int> s = modes;
    if (channels > 1) s.push_back(channels);
    return s;
  }

  std::size_t coeff_numel() const {
    std::size_t n = 1;
    for (int m : modes) n *= std::size_t(m);
    return n * std::size_t(channels);
  }

  void validate() const {
    detail::check(!nets.empty() && nets.size() == modes.size(), "field: net/mode count mismatch");
    for (int j = 0; j < dim(); ++j) {
      detail::check(nets[std::size_t(j)].out_modes == modes[std::size_t(j)],
                    "field: network output modes must match coefficient modes");
      detail::check(nets[std::size_t(j)].lo < nets[std::size_t(j)].hi,
                    "field: degenerate domain interval");
    }
    detail::check(channels >= 1, "field: channels must be >= 1");
    detail::check(coeff_re.size() == coeff_numel() && coeff_im.size() == coeff_numel(),
                  "field: coefficient size mismatch");
  }
};

/// Build a field with per-axis networks of one shared architecture and one
/// frequency embedding per axis. The coefficient tensor is initialized
/// uniform on (-s, s) per real/imaginary part with s = 1/sqrt(prod modes),
/// keeping the initial field magnitude O(1).
inline SeparableField make_field(std::uint64_t seed, const std::vector<int>& modes,
                                 int hidden_layers, int width,
                                 const std::vector<FrequencyEmbedding>& omega,
                                 const std::vector<Interval>& domains, int channels = 1) {
  detail::check(modes.size() == domains.size(), "make_field: modes/domains size mismatch");
  detail::check(omega.size() == modes.size(), "make_field: one embedding per axis required");
  SeparableField f;
  f.modes = modes;
  f.channels = channels;
  Rng rng(seed);
  for (std::size_t j = 0; j < modes.size(); ++j)
    f.nets.push_back(init_siren(rng.next_u64(), hidden_layers, width, modes[j], omega[j],
                                domains[j].lo, domains[j].hi));
  std::size_t prod = 1;
  for (int m : modes) prod *= std::size_t(m);
  const double s = 1.0 / std::sqrt(double(prod));
  f.coeff_re.resize(prod * std::size_t(channels));
  f.coeff_im.resize(prod * std::size_t(channels));
  for (auto& v : f.coeff_re) v = rng.uniform(-s, s);
  for (auto& v : f.coeff_im) v = rng.uniform(-s, s);
  f.validate();
  return f;
}

/// Coordinate-independent embedding convenience overload.
inline SeparableField make_field(std::uint64_t seed, const std::vector<int>& modes,
                                 int hidden_layers, int width, FrequencyEmbedding omega,
                                 const std::vector<Interval>& domains, int channels = 1) {
  return make_field(seed, modes, hidden_layers, width,
                    std::vector<FrequencyEmbedding>(modes.size(), omega), domains, channels);
}

namespace detail {

inline DenseTensor coeff_tensor(const SeparableField& f) {
  std::vector<cd> data(f.coeff_numel());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = cd(f.coeff_re[i], f.coeff_im[i]);
  return DenseTensor(f.coeff_shape(), std::move(data));
}

inline DenseTensor factor_matrix(const SirenMlp& net, const std::vector<double>& xs,
                                 bool derivative) {
  std::vector<cd> vals, dvals;
  siren_eval(net, xs, vals, derivative ? &dvals : nullptr);
  return DenseTensor({int(xs.size()), net.out_modes}, derivative ? std::move(dvals)
                                                                 : std::move(vals));
}

/// Contraction order: descending modes/points ratio shrinks intermediates first.
inline std::vector<int> contraction_order(const std::vector<int>& modes, const EvalGrid& g) {
  std::vector<int> order(modes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return double(modes[std::size_t(a)]) / double(g.axes[std::size_t(a)].size()) >
           double(modes[std::size_t(b)]) / double(g.axes[std::size_t(b)].size());
  });
  return order;
}

inline void check_grid(const SeparableField& f, const EvalGrid& g) {
  check(int(g.axes.size()) == f.dim(), "grid rank does not match field dimension");
  for (const auto& ax : g.axes) check(!ax.empty(), "grid axes must be nonempty");
}

} // namespace detail

/// Evaluate on the tensor-product grid via one network pass per axis followed
/// by mode contractions; costs sum_j |P_j| network evaluations, never the
/// product.
inline DenseTensor eval_grid(const SeparableField& f, const EvalGrid& g) {
  f.validate();
  detail::check_grid(f, g);
  std::vector<DenseTensor> factors;
  for (int j = 0; j < f.dim(); ++j) {
    factors.push_back(detail::factor_matrix(f.nets[std::size_t(j)], g.axes[std::size_t(j)], false));
    f.eval_count += g.axes[std::size_t(j)].size();
  }
  DenseTensor acc = detail::coeff_tensor(f);
  for (int j : detail::contraction_order(f.modes, g)) acc = mode_contract(acc, j, factors[std::size_t(j)]);
  return acc;
}

/// Same as eval_grid with the factor of one axis replaced by the network's
/// input-derivative: the partial derivative of the field along that axis.
inline DenseTensor partial_grid(const SeparableField& f, int axis, const EvalGrid& g) {
  f.validate();
  detail::check_grid(f, g);
  detail::check(axis >= 0 && axis < f.dim(), "partial_grid: invalid axis");
  std::vector<DenseTensor> factors;
  for (int j = 0; j < f.dim(); ++j) {
    factors.push_back(
        detail::factor_matrix(f.nets[std::size_t(j)], g.axes[std::size_t(j)], j == axis));
    f.eval_count += g.axes[std::size_t(j)].size();
  }
  DenseTensor acc = detail::coeff_tensor(f);
  for (int j : detail::contraction_order(f.modes, g)) acc = mode_contract(acc, j, factors[std::size_t(j)]);
  return acc;
}

/// Literal evaluation of the expansion at scattered points; the oracle for
/// eval_grid. Returns row-major points x channels.
inline std::vector<cd> eval_points(const SeparableField& f,
                                   const std::vector<std::vector<double>>& pts) {
  f.validate();
  const int d = f.dim();
  const int B = int(pts.size());
  std::vector<DenseTensor> factors;
  for (int j = 0; j < d; ++j) {
    std::vector<double> xs(B);
    for (int i = 0; i < B; ++i) {
      detail::check(int(pts[std::size_t(i)].size()) == d, "eval_points: point rank mismatch");
      xs[std::size_t(i)] = pts[std::size_t(i)][std::size_t(j)];
    }
    factors.push_back(detail::factor_matrix(f.nets[std::size_t(j)], xs, false));
    f.eval_count += std::size_t(B);
  }
  const DenseTensor c = detail::coeff_tensor(f);
  std::vector<cd> out(std::size_t(B) * f.channels);
  for (int i = 0; i < B; ++i) {
    DenseTensor acc = c;
    for (int j = 0; j < d; ++j) {
      std::vector<cd> row(std::size_t(f.modes[std::size_t(j)]));
      for (int k = 0; k < f.modes[std::size_t(j)]; ++k)
        row[std::size_t(k)] = factors[std::size_t(j)].at({i, k});
      // after j contractions the leading mode is always mode 0 of the remainder
      acc = mode_contract(acc, 0, DenseTensor({1, f.modes[std::size_t(j)]}, std::move(row)));
      std::vector<int> sq(acc.shape().begin() + 1, acc.shape().end());
      acc = DenseTensor(sq.empty() ? std::vector<int>{1} : sq, acc.data());
    }
    for (int ch = 0; ch < f.channels; ++ch) out[std::size_t(i) * f.channels + ch] = acc[std::size_t(ch)];
  }
  return out;
}

/// Integrate factor-by-factor with per-axis Gauss-Legendre rules, combining
/// the univariate integrals through the coefficients. FactorFn(axis, x) must
/// return the modes[axis] factor values at x.
template <class FactorFn>
std::vector<cd> integrate_with_factors(const DenseTensor& coeffs, const std::vector<int>& modes,
                                       int channels, const std::vector<Interval>& box,
                                       const std::vector<int>& q, FactorFn&& fn) {
  detail::check(box.size() == modes.size() && q.size() == modes.size(),
                "integrate: box/order rank mismatch");
  DenseTensor acc = coeffs;
  for (std::size_t j = 0; j < modes.size(); ++j) {
    detail::check(q[j] >= 1, "integrate: quadrature order must be >= 1");
    detail::check(box[j].lo < box[j].hi, "integrate: degenerate subrectangle");
    auto [x, w] = gauss_legendre(q[j], box[j].lo, box[j].hi);
    std::vector<cd> row(std::size_t(modes[j]), cd(0));
    for (int i = 0; i < q[j]; ++i) {
      const std::vector<cd> vals = fn(int(j), x[std::size_t(i)]);
      detail::check(int(vals.size()) == modes[j], "integrate: factor length mismatch");
      for (int k = 0; k < modes[j]; ++k) row[std::size_t(k)] += w[std::size_t(i)] * vals[std::size_t(k)];
    }
    acc = mode_contract(acc, 0, DenseTensor({1, modes[j]}, std::move(row)));
    std::vector<int> sq(acc.shape().begin() + 1, acc.shape().end());
    acc = DenseTensor(sq.empty() ? std::vector<int>{1} : sq, acc.data());
  }
  return {acc.data().begin(), acc.data().begin() + channels};
}

/// Integral of the field over a subrectangle of its domain (scalar fields).
inline cd integrate(const SeparableField& f, const std::vector<Interval>& box,
                    const std::vector<int>& q) {
  f.validate();
  detail::check(f.channels == 1, "integrate: defined for scalar fields");
  detail::check(int(box.size()) == f.dim() && int(q.size()) == f.dim(),
                "integrate: box/order rank mismatch");
  for (int j = 0; j < f.dim(); ++j) {
    detail::check(box[std::size_t(j)].lo >= f.domain(j).lo - 1e-12 &&
                      box[std::size_t(j)].hi <= f.domain(j).hi + 1e-12,
                  "integrate: subrectangle outside domain");
    f.eval_count += std::size_t(q[std::size_t(j)]);
  }
  auto vals = integrate_with_factors(detail::coeff_tensor(f), f.modes, 1, box, q,
                                     [&](int axis, double x) {
                                       std::vector<cd> v;
                                       siren_eval(f.nets[std::size_t(axis)], {x}, v);
                                       return v;
                                     });
  return vals[0];
}

// ---- tape path ---------------------------------------------------------------

struct FieldVars {
  std::vector<SirenVars> nets;
  Var c_re, c_im;
};

inline FieldVars bind_field(Tape& t, SeparableField& f, Bindings& bindings) {
  f.validate();
  FieldVars v;
  for (auto& net : f.nets) v.nets.push_back(bind_siren(t, net, bindings));
  v.c_re = t.leaf(f.coeff_re, f.coeff_shape());
  bindings.push_back({&f.coeff_re, v.c_re});
  v.c_im = t.leaf(f.coeff_im, f.coeff_shape());
  bindings.push_back({&f.coeff_im, v.c_im});
  return v;
}

namespace detail {

inline CVar tucker_tape(const SeparableField& f, const FieldVars& v, const EvalGrid& g,
                        const std::vector<CVar>& factors) {
  CVar acc{v.c_re, v.c_im};
  for (int j : contraction_order(f.modes, g)) {
    const CVar& m = factors[std::size_t(j)];
    Var rr = contract_mode(acc.re, j, m.re);
    Var ii = contract_mode(acc.im, j, m.im);
    Var ri = contract_mode(acc.re, j, m.im);
    Var ir = contract_mode(acc.im, j, m.re);
    acc = {sub(rr, ii), add(ri, ir)};
  }
  return acc;
}

} // namespace detail

/// Tape version of eval_grid: complex (|P_1| x ... x |P_d| [x channels]) pair,
/// differentiable in all field parameters.
inline CVar eval_grid_t(Tape& t, const SeparableField& f, const FieldVars& v, const EvalGrid& g) {
  detail::check_grid(f, g);
  std::vector<CVar> factors;
  for (int j = 0; j < f.dim(); ++j) {
    factors.push_back(
        siren_forward(t, f.nets[std::size_t(j)], v.nets[std::size_t(j)], g.axes[std::size_t(j)]));
    f.eval_count += g.axes[std::size_t(j)].size();
  }
  return detail::tucker_tape(f, v, g, factors);
}

/// Tape version of partial_grid.
inline CVar partial_grid_t(Tape& t, const SeparableField& f, const FieldVars& v, int axis,
                           const EvalGrid& g) {
  detail::check_grid(f, g);
  detail::check(axis >= 0 && axis < f.dim(), "partial_grid: invalid axis");
  std::vector<CVar> factors;
  for (int j = 0; j < f.dim(); ++j) {
    const auto& net = f.nets[std::size_t(j)];
    const auto& nv = v.nets[std::size_t(j)];
    const auto& xs = g.axes[std::size_t(j)];
    if (j == axis) {
      factors.push_back(siren_forward_deriv(t, net, nv, xs).second);
    } else {
      factors.push_back(siren_forward(t, net, nv, xs));
    }
    f.eval_count += xs.size();
  }
  return detail::tucker_tape(f, v, g, factors);
}

} // namespace sepfield
