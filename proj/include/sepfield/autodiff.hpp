#pragma once
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sepfield/dft.hpp"
#include "sepfield/tensor.hpp"

namespace sepfield {

class Tape;

/// Handle to a node on a Tape. Mixing handles from different tapes is a
/// usage error and throws.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
};

namespace detail {

// C(m x n) += A(m x k) * B(k x n)
inline void gemm_nn_acc(const double* a, const double* b, int m, int k, int n, double* c) {
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < k; ++l) {
      const double av = a[std::size_t(i) * k + l];
      if (av == 0.0) continue;
      const double* brow = b + std::size_t(l) * n;
      double* crow = c + std::size_t(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

// C(m x n) += A(m x k) * B(n x k)^T
inline void gemm_nt_acc(const double* a, const double* b, int m, int k, int n, double* c) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const double* arow = a + std::size_t(i) * k;
      const double* brow = b + std::size_t(j) * k;
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += arow[l] * brow[l];
      c[std::size_t(i) * n + j] += acc;
    }
}

// C(k x n) += A(m x k)^T * B(m x n)
inline void gemm_tn_acc(const double* a, const double* b, int m, int k, int n, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + std::size_t(i) * k;
    const double* brow = b + std::size_t(i) * n;
    for (int l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      double* crow = c + std::size_t(l) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

inline std::size_t numel_of(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) n *= std::size_t(s);
  return n;
}

} // namespace detail

/// Append-only reverse-mode tape over real arrays. Nodes are recorded in
/// topological order by construction; backward() visits them once in reverse.
/// A tape serves one loss evaluation and is reset() before reuse.
class Tape {
public:
  struct Node {
    std::vector<double> val;
    std::vector<double> adj;
    std::vector<int> shape;
    std::array<int, 2> parents{-1, -1};
    std::function<void(Tape&, const Node&)> back; // null for leaves
  };

  Var leaf(std::vector<double> val, std::vector<int> shape) {
    detail::check(val.size() == detail::numel_of(shape), "leaf: value length mismatch");
    return emit(std::move(shape), std::move(val), {-1, -1}, nullptr);
  }
  Var leaf(double v) { return leaf(std::vector<double>{v}, {1}); }

  /// Constant input (a leaf whose gradient is simply never read).
  Var constant(std::vector<double> val, std::vector<int> shape) {
    return leaf(std::move(val), std::move(shape));
  }
  Var constant(double v) { return leaf(v); }

  Var emit(std::vector<int> shape, std::vector<double> val, std::array<int, 2> parents,
           std::function<void(Tape&, const Node&)> back) {
    Node n;
    n.shape = std::move(shape);
    n.val = std::move(val);
    n.parents = parents;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{this, int(nodes_.size()) - 1};
  }

  Node& node(int id) { return nodes_[std::size_t(id)]; }
  const Node& node(int id) const { return nodes_[std::size_t(id)]; }

  const std::vector<double>& value(Var v) const { return own(v).val; }
  const std::vector<int>& shape(Var v) const { return own(v).shape; }
  double scalar(Var v) const {
    detail::check(own(v).val.size() == 1, "scalar: variable is not scalar");
    return own(v).val[0];
  }

  /// Accumulated adjoint of a variable; valid after backward().
  const std::vector<double>& grad(Var v) const { return own(v).adj; }

  void backward(Var loss) {
    const Node& l = own(loss);
    detail::check(l.val.size() == 1, "backward: loss must be scalar");
    for (auto& n : nodes_) n.adj.assign(n.val.size(), 0.0);
    nodes_[std::size_t(loss.id)].adj[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[std::size_t(i)];
      if (n.back) n.back(*this, n);
    }
  }

  void reset() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

private:
  const Node& own(Var v) const {
    detail::check(v.tape == this && v.id >= 0 && v.id < int(nodes_.size()),
                  "variable does not belong to this tape");
    return nodes_[std::size_t(v.id)];
  }
  std::vector<Node> nodes_;
};

namespace detail {

inline Tape& same_tape(Var a, Var b) {
  check(a.tape != nullptr && a.tape == b.tape, "variables must live on the same tape");
  return *a.tape;
}
inline Tape& tape_of(Var a) {
  check(a.tape != nullptr, "variable has no tape");
  return *a.tape;
}
inline void same_shape(const Tape& t, Var a, Var b) {
  check(t.shape(a) == t.shape(b), "operand shapes must match");
}

} // namespace detail

// ---- elementwise -----------------------------------------------------------

inline Var add(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  detail::same_shape(t, a, b);
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const int ai = a.id, bi = b.id;
  return t.emit(t.shape(a), std::move(out), {ai, bi}, [ai, bi](Tape& tp, const Tape::Node& n) {
    auto& ga = tp.node(ai).adj;
    auto& gb = tp.node(bi).adj;
    for (std::size_t i = 0; i < n.adj.size(); ++i) {
      ga[i] += n.adj[i];
      gb[i] += n.adj[i];
    }
  });
}

inline Var sub(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  detail::same_shape(t, a, b);
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const int ai = a.id, bi = b.id;
  return t.emit(t.shape(a), std::move(out), {ai, bi}, [ai, bi](Tape& tp, const Tape::Node& n) {
    auto& ga = tp.node(ai).adj;
    auto& gb = tp.node(bi).adj;
    for (std::size_t i = 0; i < n.adj.size(); ++i) {
      ga[i] += n.adj[i];
      gb[i] -= n.adj[i];
    }
  });
}

inline Var mul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  detail::same_shape(t, a, b);
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const int ai = a.id, bi = b.id;
  return t.emit(t.shape(a), std::move(out), {ai, bi}, [ai, bi](Tape& tp, const Tape::Node& n) {
    auto& na = tp.node(ai);
    auto& nb = tp.node(bi);
    for (std::size_t i = 0; i < n.adj.size(); ++i) {
      na.adj[i] += n.adj[i] * nb.val[i];
      nb.adj[i] += n.adj[i] * na.val[i];
    }
  });
}

inline Var div(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  detail::same_shape(t, a, b);
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[i];
  const int ai = a.id, bi = b.id;
  return t.emit(t.shape(a), std::move(out), {ai, bi}, [ai, bi](Tape& tp, const Tape::Node& n) {
    auto& na = tp.node(ai);
    auto& nb = tp.node(bi);
    for (std::size_t i = 0; i < n.adj.size(); ++i) {
      na.adj[i] += n.adj[i] / nb.val[i];
      nb.adj[i] -= n.adj[i] * n.val[i] / nb.val[i];
    }
  });
}

inline Var scale(Var a, double s) {
  Tape& t = detail::tape_of(a);
  const auto& av = t.value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * av[i];
  const int ai = a.id;
  return t.emit(t.shape(a), std::move(out), {ai, -1}, [ai, s](Tape& tp, const Tape::Node& n) {
    auto& ga = tp.node(ai).adj;
    for (std::size_t i = 0; i < n.adj.size(); ++i) ga[i] += s * n.adj[i];
  });
}

inline Var add_const(Var a, double s) {
  Tape& t = detail::tape_of(a);
  const auto& av = t.value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + s;
  const int ai = a.id;
  return t.emit(t.shape(a), std::move(out), {ai, -1}, [ai](Tape& tp, const Tape::Node& n) {
    auto& ga = tp.node(ai).adj;
    for (std::size_t i = 0; i < n.adj.size(); ++i) ga[i] += n.adj[i];
  });
}

inline Var sin(Var a) {
  Tape& t = detail::tape_of(a);
  const auto& av = t.value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sin(av[i]);
  const int ai = a.id;
  return t.emit(t.shape(a), std::move(out), {ai, -1}, [ai](Tape& tp, const Tape::Node& n) {
    auto& na = tp.node(ai);
    for (std::size_t i = 0; i < n.adj.size(); ++i) na.adj[i] += n.adj[i] * std::cos(na.val[i]);
  });
}

inline Var cos(Var a) {
  Tape& t = detail::tape_of(a);
  const auto& av = t.value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::cos(av[i]);
  const int ai = a.id;
  return t.emit(t.shape(a), std::move(out), {ai, -1}, [ai](Tape& tp, const Tape::Node& n) {
    auto& na = tp.node(ai);
    for (std::size_t i = 0; i < n.adj.size(); ++i) na.adj[i] -= n.adj[i] * std::sin(na.val[i]);
  });
}

inline Var sqrt(Var a) {
  Tape& t = detail::tape_of(a);
  const auto& av = t.value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(av[i]);
  const int ai = a.id;
  return t.emit(t.shape(a), std::move(out), {ai, -1}, [ai](Tape& tp, const Tape::Node& n) {
    auto& ga = tp.node(ai).adj;
    for (std::size_t i = 0; i < n.adj.size(); ++i) ga[i] += n.adj[i] * 0.5 / n.val[i];
  });
}

inline Var square(Var a) {
  Tape& t = detail::tape_of(a);
  const auto& av = t.value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * av[i];
  const int ai = a.id;
  return t.emit(t.shape(a), std::move(out), {ai, -1}, [ai](Tape& tp, const Tape::Node& n) {
    auto& na = tp.node(ai);
    for (std::size_t i = 0; i < n.adj.size(); ++i) na.adj[i] += 2.0 * n.adj[i] * na.val[i];
  });
}

/// Smoothed absolute value sqrt(x^2 + delta^2); keeps |.| differentiable at 0.
inline Var abs_smooth(Var a, double delta) {
  Tape& t = detail::tape_of(a);
  const auto& av = t.value(a);
  const double d2 = delta * delta;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(av[i] * av[i] + d2);
  const int ai = a.id;
  return t.emit(t.shape(a), std::move(out), {ai, -1}, [ai](Tape& tp, const Tape::Node& n) {
    auto& na = tp.node(ai);
    for (std::size_t i = 0; i < n.adj.size(); ++i) na.adj[i] += n.adj[i] * na.val[i] / n.val[i];
  });
}

// ---- reductions ------------------------------------------------------------

inline Var sum(Var a) {
  Tape& t = detail::tape_of(a);
  const auto& av = t.value(a);
  double acc = 0.0;
  for (double v : av) acc += v;
  const int ai = a.id;
  return t.emit({1}, {acc}, {ai, -1}, [ai](Tape& tp, const Tape::Node& n) {
    auto& ga = tp.node(ai).adj;
    const double g = n.adj[0];
    for (double& v : ga) v += g;
  });
}

inline Var mean(Var a) {
  Tape& t = detail::tape_of(a);
  const auto& av = t.value(a);
  detail::check(!av.empty(), "mean of empty variable");
  double acc = 0.0;
  for (double v : av) acc += v;
  const double inv = 1.0 / double(av.size());
  const int ai = a.id;
  return t.emit({1}, {acc * inv}, {ai, -1}, [ai, inv](Tape& tp, const Tape::Node& n) {
    auto& ga = tp.node(ai).adj;
    const double g = n.adj[0] * inv;
    for (double& v : ga) v += g;
  });
}

// ---- matrix ops ------------------------------------------------------------

inline Var matmul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  const auto& sa = t.shape(a);
  const auto& sb = t.shape(b);
  detail::check(sa.size() == 2 && sb.size() == 2 && sa[1] == sb[0], "matmul: shape mismatch");
  const int m = sa[0], k = sa[1], n = sb[1];
  std::vector<double> out(std::size_t(m) * n, 0.0);
  detail::gemm_nn_acc(t.value(a).data(), t.value(b).data(), m, k, n, out.data());
  const int ai = a.id, bi = b.id;
  return t.emit({m, n}, std::move(out), {ai, bi},
                [ai, bi, m, k, n](Tape& tp, const Tape::Node& nd) {
                  auto& na = tp.node(ai);
                  auto& nb = tp.node(bi);
                  detail::gemm_nt_acc(nd.adj.data(), nb.val.data(), m, n, k, na.adj.data());
                  detail::gemm_tn_acc(na.val.data(), nd.adj.data(), m, k, n, nb.adj.data());
                });
}

/// a (m x k) times b (n x k) transposed -> (m x n). The natural layout for
/// dense layers stored as (out x in).
inline Var matmul_nt(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  const auto& sa = t.shape(a);
  const auto& sb = t.shape(b);
  detail::check(sa.size() == 2 && sb.size() == 2 && sa[1] == sb[1], "matmul_nt: shape mismatch");
  const int m = sa[0], k = sa[1], n = sb[0];
  std::vector<double> out(std::size_t(m) * n, 0.0);
  detail::gemm_nt_acc(t.value(a).data(), t.value(b).data(), m, k, n, out.data());
  const int ai = a.id, bi = b.id;
  return t.emit({m, n}, std::move(out), {ai, bi},
                [ai, bi, m, k, n](Tape& tp, const Tape::Node& nd) {
                  auto& na = tp.node(ai);
                  auto& nb = tp.node(bi);
                  detail::gemm_nn_acc(nd.adj.data(), nb.val.data(), m, n, k, na.adj.data());
                  detail::gemm_tn_acc(nd.adj.data(), na.val.data(), m, n, k, nb.adj.data());
                });
}

inline Var add_rowvec(Var a, Var v) {
  Tape& t = detail::same_tape(a, v);
  const auto& sa = t.shape(a);
  const auto& sv = t.shape(v);
  detail::check(sa.size() == 2 && sv.size() == 1 && sv[0] == sa[1], "add_rowvec: shape mismatch");
  const int m = sa[0], n = sa[1];
  const auto& av = t.value(a);
  const auto& vv = t.value(v);
  std::vector<double> out(av.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[std::size_t(i) * n + j] = av[std::size_t(i) * n + j] + vv[j];
  const int ai = a.id, vi = v.id;
  return t.emit(sa, std::move(out), {ai, vi}, [ai, vi, m, n](Tape& tp, const Tape::Node& nd) {
    auto& ga = tp.node(ai).adj;
    auto& gv = tp.node(vi).adj;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double g = nd.adj[std::size_t(i) * n + j];
        ga[std::size_t(i) * n + j] += g;
        gv[j] += g;
      }
  });
}

inline Var mul_rowvec(Var a, Var v) {
  Tape& t = detail::same_tape(a, v);
  const auto& sa = t.shape(a);
  const auto& sv = t.shape(v);
  detail::check(sa.size() == 2 && sv.size() == 1 && sv[0] == sa[1], "mul_rowvec: shape mismatch");
  const int m = sa[0], n = sa[1];
  const auto& av = t.value(a);
  const auto& vv = t.value(v);
  std::vector<double> out(av.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[std::size_t(i) * n + j] = av[std::size_t(i) * n + j] * vv[j];
  const int ai = a.id, vi = v.id;
  return t.emit(sa, std::move(out), {ai, vi}, [ai, vi, m, n](Tape& tp, const Tape::Node& nd) {
    auto& na = tp.node(ai);
    auto& nv = tp.node(vi);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const std::size_t f = std::size_t(i) * n + j;
        na.adj[f] += nd.adj[f] * nv.val[j];
        nv.adj[j] += nd.adj[f] * na.val[f];
      }
  });
}

// ---- tensor ops ------------------------------------------------------------

/// Contract mode `axis` of tensor `a` with matrix `m` (p x n): the real-valued
/// analog of mode_contract on DenseTensor, with gradients to both arguments.
inline Var contract_mode(Var a, int axis, Var m) {
  Tape& t = detail::same_tape(a, m);
  const auto& sa = t.shape(a);
  const auto& sm = t.shape(m);
  detail::check(axis >= 0 && axis < int(sa.size()), "contract_mode: axis out of range");
  detail::check(sm.size() == 2 && sm[1] == sa[std::size_t(axis)], "contract_mode: shape mismatch");
  const int p = sm[0], n = sm[1];
  std::size_t outer = 1, inner = 1;
  for (int j = 0; j < axis; ++j) outer *= std::size_t(sa[std::size_t(j)]);
  for (int j = axis + 1; j < int(sa.size()); ++j) inner *= std::size_t(sa[std::size_t(j)]);

  std::vector<int> so = sa;
  so[std::size_t(axis)] = p;
  std::vector<double> out(outer * std::size_t(p) * inner, 0.0);
  {
    const double* in = t.value(a).data();
    const double* mm = t.value(m).data();
    for (std::size_t o = 0; o < outer; ++o)
      for (int q = 0; q < p; ++q) {
        double* orow = out.data() + (o * std::size_t(p) + std::size_t(q)) * inner;
        for (int k = 0; k < n; ++k) {
          const double w = mm[std::size_t(q) * n + k];
          if (w == 0.0) continue;
          const double* irow = in + (o * std::size_t(n) + std::size_t(k)) * inner;
          for (std::size_t i = 0; i < inner; ++i) orow[i] += w * irow[i];
        }
      }
  }
  const int ai = a.id, mi = m.id;
  return t.emit(std::move(so), std::move(out), {ai, mi},
                [ai, mi, outer, inner, p, n](Tape& tp, const Tape::Node& nd) {
                  auto& na = tp.node(ai);
                  auto& nm = tp.node(mi);
                  const double* g = nd.adj.data();
                  const double* mm = nm.val.data();
                  const double* av = na.val.data();
                  double* ga = na.adj.data();
                  double* gm = nm.adj.data();
                  for (std::size_t o = 0; o < outer; ++o)
                    for (int q = 0; q < p; ++q) {
                      const double* grow = g + (o * std::size_t(p) + std::size_t(q)) * inner;
                      for (int k = 0; k < n; ++k) {
                        const double w = mm[std::size_t(q) * n + k];
                        double* garow = ga + (o * std::size_t(n) + std::size_t(k)) * inner;
                        const double* arow = av + (o * std::size_t(n) + std::size_t(k)) * inner;
                        double acc = 0.0;
                        for (std::size_t i = 0; i < inner; ++i) {
                          garow[i] += w * grow[i];
                          acc += grow[i] * arow[i];
                        }
                        gm[std::size_t(q) * n + k] += acc;
                      }
                    }
                });
}

/// Free relabeling of the shape (same data, identity gradient).
inline Var reshape(Var a, std::vector<int> shape) {
  Tape& t = detail::tape_of(a);
  detail::check(detail::numel_of(shape) == t.value(a).size(), "reshape: element count mismatch");
  const int ai = a.id;
  return t.emit(std::move(shape), t.value(a), {ai, -1}, [ai](Tape& tp, const Tape::Node& nd) {
    auto& ga = tp.node(ai).adj;
    for (std::size_t i = 0; i < nd.adj.size(); ++i) ga[i] += nd.adj[i];
  });
}

// ---- spectral ops ----------------------------------------------------------

namespace detail {

inline std::vector<cd> assemble_complex(const std::vector<double>& re,
                                        const std::vector<double>& im) {
  std::vector<cd> z(re.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = cd(re[i], im[i]);
  return z;
}

} // namespace detail

/// Real part of the centered unitary DFT along `axis` of the complex pair
/// (re, im). Adjoint runs the opposite-direction transform (the matrix is
/// symmetric unitary).
inline Var fft_re(Var re, Var im, int axis, bool inverse = false) {
  Tape& t = detail::same_tape(re, im);
  detail::same_shape(t, re, im);
  const std::vector<int> sh = t.shape(re);
  std::vector<cd> z = detail::assemble_complex(t.value(re), t.value(im));
  dft_axis(z, sh, axis, inverse);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].real();
  const int ri = re.id, ii = im.id;
  return t.emit(sh, std::move(out), {ri, ii},
                [ri, ii, sh, axis, inverse](Tape& tp, const Tape::Node& nd) {
                  std::vector<cd> h(nd.adj.size());
                  for (std::size_t i = 0; i < h.size(); ++i) h[i] = cd(nd.adj[i], 0.0);
                  dft_axis(h, sh, axis, !inverse);
                  auto& gr = tp.node(ri).adj;
                  auto& gi = tp.node(ii).adj;
                  for (std::size_t i = 0; i < h.size(); ++i) {
                    gr[i] += h[i].real();
                    gi[i] += h[i].imag();
                  }
                });
}

/// Imaginary part of the centered unitary DFT along `axis`.
inline Var fft_im(Var re, Var im, int axis, bool inverse = false) {
  Tape& t = detail::same_tape(re, im);
  detail::same_shape(t, re, im);
  const std::vector<int> sh = t.shape(re);
  std::vector<cd> z = detail::assemble_complex(t.value(re), t.value(im));
  dft_axis(z, sh, axis, inverse);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].imag();
  const int ri = re.id, ii = im.id;
  return t.emit(sh, std::move(out), {ri, ii},
                [ri, ii, sh, axis, inverse](Tape& tp, const Tape::Node& nd) {
                  std::vector<cd> h(nd.adj.size());
                  for (std::size_t i = 0; i < h.size(); ++i) h[i] = cd(nd.adj[i], 0.0);
                  dft_axis(h, sh, axis, !inverse);
                  auto& gr = tp.node(ri).adj;
                  auto& gi = tp.node(ii).adj;
                  for (std::size_t i = 0; i < h.size(); ++i) {
                    gr[i] -= h[i].imag();
                    gi[i] += h[i].real();
                  }
                });
}

// ---- complex pair helpers --------------------------------------------------

/// Complex array carried as a pair of equally-shaped real variables.
struct CVar {
  Var re, im;
};

inline CVar cadd(CVar a, CVar b) { return {add(a.re, b.re), add(a.im, b.im)}; }
inline CVar csub(CVar a, CVar b) { return {sub(a.re, b.re), sub(a.im, b.im)}; }

inline CVar cmul(CVar a, CVar b) {
  return {sub(mul(a.re, b.re), mul(a.im, b.im)), add(mul(a.re, b.im), mul(a.im, b.re))};
}

/// Squared modulus |z|^2 elementwise (a real variable).
inline Var cmod2(CVar a) { return add(square(a.re), square(a.im)); }

inline CVar cscale(CVar a, double s) { return {scale(a.re, s), scale(a.im, s)}; }

/// Centered unitary DFT of a complex pair along one axis. One forward
/// transform serves both output parts; one adjoint transform serves both
/// parents. The combined backward lives on the earlier sibling, which the
/// reverse sweep reaches only after both adjoints are final.
inline CVar cfft(CVar a, int axis, bool inverse = false) {
  Tape& t = detail::same_tape(a.re, a.im);
  detail::same_shape(t, a.re, a.im);
  const std::vector<int> sh = t.shape(a.re);
  std::vector<cd> z = detail::assemble_complex(t.value(a.re), t.value(a.im));
  dft_axis(z, sh, axis, inverse);
  std::vector<double> vr(z.size()), vi(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    vr[i] = z[i].real();
    vi[i] = z[i].imag();
  }
  const int pr = a.re.id, pi = a.im.id;
  const int re_id = int(t.size()) + 1; // the sibling emitted right after
  Var im = t.emit(sh, std::move(vi), {pr, pi},
                  [pr, pi, re_id, sh, axis, inverse](Tape& tp, const Tape::Node& nd) {
                    const auto& gr = tp.node(re_id).adj;
                    std::vector<cd> h(nd.adj.size());
                    for (std::size_t i = 0; i < h.size(); ++i) h[i] = cd(gr[i], nd.adj[i]);
                    dft_axis(h, sh, axis, !inverse);
                    auto& gpr = tp.node(pr).adj;
                    auto& gpi = tp.node(pi).adj;
                    for (std::size_t i = 0; i < h.size(); ++i) {
                      gpr[i] += h[i].real();
                      gpi[i] += h[i].imag();
                    }
                  });
  Var re = t.emit(sh, std::move(vr), {pr, pi}, nullptr);
  detail::check(re.id == re_id, "cfft: sibling nodes must be adjacent");
  return {re, im};
}

} // namespace sepfield
