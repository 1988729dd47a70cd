#pragma once
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sepfield/autodiff.hpp"
#include "sepfield/rng.hpp"
#include "sepfield/tensor.hpp"

namespace sepfield {

/// Frequency scalings of a sinusoidal MLP: one for the first layer, one for
/// all subsequent layers. Both strictly positive.
struct FrequencyEmbedding {
  double first = 30.0;
  double hidden = 30.0;
};

/// Univariate sinusoidal MLP x in [lo, hi] -> C^{out_modes}. Inputs are
/// affinely rescaled to [-1, 1] before the first layer; the complex output is
/// realized as separate real/imaginary heads of the final linear layer.
struct SirenMlp {
  int hidden_layers = 0; // L
  int width = 0;         // K
  int out_modes = 0;     // N
  FrequencyEmbedding omega;
  double lo = -1.0, hi = 1.0;

  // w[0]: width x 1, w[l>0]: width x width, b[l]: width. Row-major (out x in).
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;
  std::vector<double> w_out_re, w_out_im; // out_modes x width
  std::vector<double> b_out_re, b_out_im; // out_modes

  double rescale(double x) const { return 2.0 * (x - lo) / (hi - lo) - 1.0; }
  double rescale_rate() const { return 2.0 / (hi - lo); }

  void check_domain(const std::vector<double>& xs) const {
    const double slack = 1e-12 * (hi - lo);
    for (double x : xs)
      if (!(x >= lo - slack && x <= hi + slack))
        throw std::invalid_argument("siren: input outside domain [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
  }
};

/// SIREN initialization: first layer uniform on (-1/fan_in, 1/fan_in), deeper
/// layers uniform on (-sqrt(6/fan_in)/omega_hidden, +sqrt(6/fan_in)/omega_hidden),
/// biases on the deep range of their layer. Deterministic under seed.
inline SirenMlp init_siren(std::uint64_t seed, int hidden_layers, int width, int out_modes,
                           FrequencyEmbedding omega, double lo = -1.0, double hi = 1.0) {
  detail::check(hidden_layers >= 1 && width >= 1 && out_modes >= 1,
                "init_siren: sizes must be positive");
  detail::check(omega.first > 0.0 && omega.hidden > 0.0,
                "init_siren: frequency embeddings must be strictly positive");
  detail::check(lo < hi, "init_siren: degenerate domain");

  SirenMlp net;
  net.hidden_layers = hidden_layers;
  net.width = width;
  net.out_modes = out_modes;
  net.omega = omega;
  net.lo = lo;
  net.hi = hi;

  Rng rng(seed);
  auto fill = [&rng](std::vector<double>& v, std::size_t n, double bound) {
    v.resize(n);
    for (auto& x : v) x = rng.uniform(-bound, bound);
  };

  net.w.resize(hidden_layers);
  net.b.resize(hidden_layers);
  for (int l = 0; l < hidden_layers; ++l) {
    const int fan_in = (l == 0) ? 1 : width;
    const double wb = (l == 0) ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / omega.hidden;
    const double bb = std::sqrt(6.0 / fan_in) / omega.hidden;
    fill(net.w[l], std::size_t(width) * fan_in, wb);
    fill(net.b[l], std::size_t(width), bb);
  }
  const double ob = std::sqrt(6.0 / width) / omega.hidden;
  fill(net.w_out_re, std::size_t(out_modes) * width, ob);
  fill(net.w_out_im, std::size_t(out_modes) * width, ob);
  fill(net.b_out_re, std::size_t(out_modes), ob);
  fill(net.b_out_im, std::size_t(out_modes), ob);
  return net;
}

/// Forward pass without a tape. vals is batch x out_modes row-major; when
/// dvals is non-null it receives d/dx (physical units, includes the rescale
/// chain factor).
inline void siren_eval(const SirenMlp& net, const std::vector<double>& xs, std::vector<cd>& vals,
                       std::vector<cd>* dvals = nullptr) {
  net.check_domain(xs);
  const int B = int(xs.size());
  const int K = net.width;
  const int N = net.out_modes;
  const double r = net.rescale_rate();

  std::vector<double> y(std::size_t(B) * K), d;
  if (dvals) d.resize(std::size_t(B) * K);
  for (int i = 0; i < B; ++i) {
    const double xh = net.rescale(xs[i]);
    for (int k = 0; k < K; ++k) {
      const double z = net.omega.first * (net.w[0][k] * xh + net.b[0][k]);
      y[std::size_t(i) * K + k] = std::sin(z);
      if (dvals) d[std::size_t(i) * K + k] = std::cos(z) * net.omega.first * net.w[0][k] * r;
    }
  }
  std::vector<double> y2(std::size_t(B) * K), d2;
  if (dvals) d2.resize(std::size_t(B) * K);
  for (int l = 1; l < net.hidden_layers; ++l) {
    for (int i = 0; i < B; ++i)
      for (int k = 0; k < K; ++k) {
        double acc = net.b[l][k], dacc = 0.0;
        const double* wrow = net.w[l].data() + std::size_t(k) * K;
        const double* yrow = y.data() + std::size_t(i) * K;
        for (int j = 0; j < K; ++j) acc += wrow[j] * yrow[j];
        if (dvals) {
          const double* drow = d.data() + std::size_t(i) * K;
          for (int j = 0; j < K; ++j) dacc += wrow[j] * drow[j];
        }
        const double z = net.omega.hidden * acc;
        y2[std::size_t(i) * K + k] = std::sin(z);
        if (dvals) d2[std::size_t(i) * K + k] = std::cos(z) * net.omega.hidden * dacc;
      }
    std::swap(y, y2);
    if (dvals) std::swap(d, d2);
  }

  vals.assign(std::size_t(B) * N, cd(0));
  if (dvals) dvals->assign(std::size_t(B) * N, cd(0));
  for (int i = 0; i < B; ++i) {
    const double* yrow = y.data() + std::size_t(i) * K;
    for (int n = 0; n < N; ++n) {
      double re = net.b_out_re[n], im = net.b_out_im[n];
      const double* wr = net.w_out_re.data() + std::size_t(n) * K;
      const double* wi = net.w_out_im.data() + std::size_t(n) * K;
      for (int j = 0; j < K; ++j) {
        re += wr[j] * yrow[j];
        im += wi[j] * yrow[j];
      }
      vals[std::size_t(i) * N + n] = cd(re, im);
      if (dvals) {
        const double* drow = d.data() + std::size_t(i) * K;
        double dre = 0.0, dim = 0.0;
        for (int j = 0; j < K; ++j) {
          dre += wr[j] * drow[j];
          dim += wi[j] * drow[j];
        }
        (*dvals)[std::size_t(i) * N + n] = cd(dre, dim);
      }
    }
  }
}

// ---- tape path ---------------------------------------------------------------

/// One bound parameter leaf: the tape variable and the model array it mirrors.
struct ParamBinding {
  std::vector<double>* storage = nullptr;
  Var var;
};
using Bindings = std::vector<ParamBinding>;

struct SirenVars {
  std::vector<Var> w, b;
  Var wre, wim, bre, bim;
};

/// Insert all parameters of the net as tape leaves and record the bindings in
/// a stable order (the optimizer keys its state off this order).
inline SirenVars bind_siren(Tape& t, SirenMlp& net, Bindings& bindings) {
  SirenVars v;
  for (int l = 0; l < net.hidden_layers; ++l) {
    const int fan_in = (l == 0) ? 1 : net.width;
    v.w.push_back(t.leaf(net.w[l], {net.width, fan_in}));
    bindings.push_back({&net.w[l], v.w.back()});
    v.b.push_back(t.leaf(net.b[l], {net.width}));
    bindings.push_back({&net.b[l], v.b.back()});
  }
  v.wre = t.leaf(net.w_out_re, {net.out_modes, net.width});
  bindings.push_back({&net.w_out_re, v.wre});
  v.wim = t.leaf(net.w_out_im, {net.out_modes, net.width});
  bindings.push_back({&net.w_out_im, v.wim});
  v.bre = t.leaf(net.b_out_re, {net.out_modes});
  bindings.push_back({&net.b_out_re, v.bre});
  v.bim = t.leaf(net.b_out_im, {net.out_modes});
  bindings.push_back({&net.b_out_im, v.bim});
  return v;
}

namespace detail {

inline std::vector<double> rescaled_batch(const SirenMlp& net, const std::vector<double>& xs) {
  net.check_domain(xs);
  std::vector<double> xh(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) xh[i] = net.rescale(xs[i]);
  return xh;
}

} // namespace detail

/// Tape forward pass: batch x out_modes complex pair, differentiable in all
/// net parameters.
inline CVar siren_forward(Tape& t, const SirenMlp& net, const SirenVars& v,
                          const std::vector<double>& xs) {
  const int B = int(xs.size());
  Var x = t.constant(detail::rescaled_batch(net, xs), {B, 1});
  Var y = sin(scale(add_rowvec(matmul_nt(x, v.w[0]), v.b[0]), net.omega.first));
  for (int l = 1; l < net.hidden_layers; ++l)
    y = sin(scale(add_rowvec(matmul_nt(y, v.w[l]), v.b[l]), net.omega.hidden));
  return {add_rowvec(matmul_nt(y, v.wre), v.bre), add_rowvec(matmul_nt(y, v.wim), v.bim)};
}

/// Tape forward pass returning (value, d/dx). The input-derivative is the
/// analytic chain of cosines with the layer weights, recorded as ordinary tape
/// nodes so parameter gradients flow through it.
inline std::pair<CVar, CVar> siren_forward_deriv(Tape& t, const SirenMlp& net, const SirenVars& v,
                                                 const std::vector<double>& xs) {
  const int B = int(xs.size());
  const double r = net.rescale_rate();
  Var x = t.constant(detail::rescaled_batch(net, xs), {B, 1});

  Var z = scale(add_rowvec(matmul_nt(x, v.w[0]), v.b[0]), net.omega.first);
  Var y = sin(z);
  Var d = mul_rowvec(cos(z), scale(reshape(v.w[0], {net.width}), net.omega.first * r));
  for (int l = 1; l < net.hidden_layers; ++l) {
    z = scale(add_rowvec(matmul_nt(y, v.w[l]), v.b[l]), net.omega.hidden);
    y = sin(z);
    d = mul(cos(z), scale(matmul_nt(d, v.w[l]), net.omega.hidden));
  }
  CVar val{add_rowvec(matmul_nt(y, v.wre), v.bre), add_rowvec(matmul_nt(y, v.wim), v.bim)};
  CVar der{matmul_nt(d, v.wre), matmul_nt(d, v.wim)};
  return {val, der};
}

} // namespace sepfield
