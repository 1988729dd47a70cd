#pragma once
#include <vector>

#include "sepfield/forward.hpp"

namespace sepfield {

/// Weights of the three regularization terms.
struct RegWeights {
  double tv_x = 0.0;
  double tv_t = 0.0;
  double coil = 0.0;

  void validate() const {
    detail::check(std::isfinite(tv_x) && tv_x >= 0, "reg weights: tv_x must be finite and >= 0");
    detail::check(std::isfinite(tv_t) && tv_t >= 0, "reg weights: tv_t must be finite and >= 0");
    detail::check(std::isfinite(coil) && coil >= 0, "reg weights: coil must be finite and >= 0");
  }
};

inline constexpr double kTvDelta = 1e-8; // smoothing of |.| and the gradient norm at 0

/// Mean Euclidean norm of the spatial gradient of the image over the sample
/// grid: sqrt(sum_j |dm/dx_j|^2), real/imaginary parts as separate channels.
inline Var tv_spatial_t(Tape& t, const SeparableField& image, const FieldVars& v,
                        const EvalGrid& spacetime) {
  const int n = image.dim() - 1;
  detail::check(n >= 1, "tv_spatial: image field has no spatial axes");
  Var acc;
  for (int j = 1; j <= n; ++j) {
    CVar d = partial_grid_t(t, image, v, j, spacetime);
    Var m2 = cmod2(d);
    acc = (j == 1) ? m2 : add(acc, m2);
  }
  return mean(sqrt(add_const(acc, kTvDelta * kTvDelta)));
}

/// Mean smoothed modulus of the temporal derivative of the image.
inline Var tv_temporal_t(Tape& t, const SeparableField& image, const FieldVars& v,
                         const EvalGrid& spacetime) {
  CVar d = partial_grid_t(t, image, v, 0, spacetime);
  return mean(sqrt(add_const(cmod2(d), kTvDelta * kTvDelta)));
}

/// Mean over (coil, point) of the squared norm of the spatial derivatives of
/// the normalized sensitivities; the derivative is taken through the
/// normalization.
inline Var coil_smoothness_t(Tape& t, const SeparableField& sens, const FieldVars& v,
                             const std::vector<int>& coils, const EvalGrid& spatial) {
  detail::check(!coils.empty(), "coil_smoothness: empty coil batch");
  const int n = sens.dim();
  const int nc = sens.channels;
  std::vector<int> gshape;
  for (const auto& ax : spatial.axes) gshape.push_back(int(ax.size()));

  CVar raw_all = eval_grid_t(t, sens, v, spatial);
  std::vector<CVar> raw = detail::split_channels(t, raw_all, nc, gshape);
  Var norm2 = cmod2(raw[0]);
  for (int c = 1; c < nc; ++c) norm2 = add(norm2, cmod2(raw[std::size_t(c)]));
  Var denom = sqrt(add_const(norm2, 1e-24));
  Var denom2 = square(denom);

  Var total;
  bool first = true;
  for (int j = 0; j < n; ++j) {
    CVar draw_all = partial_grid_t(t, sens, v, j, spatial);
    std::vector<CVar> draw = detail::split_channels(t, draw_all, nc, gshape);
    // d denom = sum_c (re_c dre_c + im_c dim_c) / denom
    Var ddenom;
    for (int c = 0; c < nc; ++c) {
      Var piece = add(mul(raw[std::size_t(c)].re, draw[std::size_t(c)].re),
                      mul(raw[std::size_t(c)].im, draw[std::size_t(c)].im));
      ddenom = (c == 0) ? piece : add(ddenom, piece);
    }
    ddenom = div(ddenom, denom);
    Var ratio = div(ddenom, denom2);
    for (int c : coils) {
      CVar dS{sub(div(draw[std::size_t(c)].re, denom), mul(raw[std::size_t(c)].re, ratio)),
              sub(div(draw[std::size_t(c)].im, denom), mul(raw[std::size_t(c)].im, ratio))};
      Var m2 = cmod2(dS);
      total = first ? sum(m2) : add(total, sum(m2));
      first = false;
    }
  }
  std::size_t npts = 1;
  for (int s : gshape) npts *= std::size_t(s);
  return scale(total, 1.0 / (double(coils.size()) * double(npts)));
}

/// The assembled objective: data consistency plus weighted regularizers.
/// Terms with zero weight are not evaluated (their reported value is 0).
struct ObjectiveResult {
  Var total;
  double data = 0, tv_x = 0, tv_t = 0, coil = 0; // unweighted term values
  int empty_frames = 0;
};

inline ObjectiveResult total_objective(Tape& t, ReconstructionModel& m, const ModelVars& v,
                                       const KSpaceDataset& data, const DcBatch& dc,
                                       const SampleSet& reg, const RegWeights& w,
                                       const WeightSpec& wspec) {
  w.validate();
  ObjectiveResult out;
  DcTerm dterm = data_consistency_t(t, m, v, data, dc, wspec);
  out.empty_frames = dterm.empty_frames;
  out.data = t.scalar(dterm.loss);
  Var total = dterm.loss;
  if (w.tv_x > 0) {
    Var r = tv_spatial_t(t, m.image, v.image, spacetime_grid(reg));
    out.tv_x = t.scalar(r);
    total = add(total, scale(r, w.tv_x));
  }
  if (w.tv_t > 0) {
    Var r = tv_temporal_t(t, m.image, v.image, spacetime_grid(reg));
    out.tv_t = t.scalar(r);
    total = add(total, scale(r, w.tv_t));
  }
  if (w.coil > 0) {
    Var r = coil_smoothness_t(t, m.sens, v.sens, reg.coils, spatial_grid(reg));
    out.coil = t.scalar(r);
    total = add(total, scale(r, w.coil));
  }
  out.total = total;
  return out;
}

} // namespace sepfield
