#pragma once
#include <cstdint>
#include <vector>

#include "sepfield/autodiff.hpp"
#include "sepfield/dft.hpp"
#include "sepfield/field.hpp"
#include "sepfield/geometry.hpp"
#include "sepfield/sampler.hpp"

namespace sepfield {

/// Cartesian k-space measurements: full grids per (coil, frame) with a
/// per-frame sampling mask. Unsampled entries are zero and carry no weight.
struct KSpaceDataset {
  Geometry geom;
  std::vector<std::uint8_t> mask; // (frames, grid...) 0/1
  std::vector<cd> kspace;        // (coils, frames, grid...)
  std::vector<std::vector<std::int64_t>> sampled; // per frame: flat spatial indices

  std::size_t kindex(int coil, int frame, std::size_t flat_spatial) const {
    const std::size_t gn = geom.grid_numel();
    return (std::size_t(coil) * geom.times.size() + std::size_t(frame)) * gn + flat_spatial;
  }

  void rebuild_index() {
    const std::size_t gn = geom.grid_numel();
    sampled.assign(geom.times.size(), {});
    for (std::size_t t = 0; t < geom.times.size(); ++t)
      for (std::size_t s = 0; s < gn; ++s)
        if (mask[t * gn + s]) sampled[t].push_back(std::int64_t(s));
  }

  void validate() const {
    geom.validate();
    const std::size_t gn = geom.grid_numel();
    detail::check(mask.size() == geom.times.size() * gn, "dataset: mask size mismatch");
    detail::check(kspace.size() == std::size_t(geom.n_coils) * geom.times.size() * gn,
                  "dataset: k-space size mismatch");
    detail::check(sampled.size() == geom.times.size(), "dataset: sample index out of date");
  }

  /// Largest measurement magnitude over sampled entries.
  double max_abs() const {
    double m = 0.0;
    for (int c = 0; c < geom.n_coils; ++c)
      for (std::size_t t = 0; t < geom.times.size(); ++t)
        for (std::int64_t s : sampled[t]) m = std::max(m, std::abs(kspace[kindex(c, int(t), std::size_t(s))]));
    return m;
  }

  double sampling_fraction() const {
    std::size_t kept = 0;
    for (const auto& f : sampled) kept += f.size();
    return double(kept) / double(mask.size());
  }
};

/// Tolerance for the data-consistency weights.
struct WeightSpec {
  double epsilon = 1e-3;
};

/// 1 for magnitudes up to epsilon (inclusive), else mag^(-1/2): small
/// measurements keep full weight so high frequencies are not ignored.
inline double dc_weight(double mag, const WeightSpec& spec) {
  detail::check(spec.epsilon > 0, "weight spec: epsilon must be positive");
  return (mag <= spec.epsilon) ? 1.0 : 1.0 / std::sqrt(mag);
}

/// epsilon as a fraction of the largest measurement, so the rule is invariant
/// to global data scale.
inline WeightSpec relative_weight_spec(const KSpaceDataset& data, double rel = 1e-3) {
  const double m = data.max_abs();
  return {std::max(rel * m, 1e-300)};
}

struct NormalizedCoils {
  std::vector<cd> values;
  bool floored = false; // norm was below the guard floor
};

/// Unit Euclidean norm across the coil dimension at one point; a zero vector
/// is guarded with a 1e-12 floor in the denominator and flagged.
inline NormalizedCoils normalize_coils(const std::vector<cd>& raw) {
  detail::check(!raw.empty(), "normalize_coils: empty input");
  double n2 = 0.0;
  for (const cd& v : raw) n2 += std::norm(v);
  const double n = std::sqrt(n2);
  NormalizedCoils out;
  out.floored = n < 1e-12;
  const double denom = out.floored ? 1e-12 : n;
  out.values.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out.values[i] = raw[i] / denom;
  return out;
}

// ---- model -------------------------------------------------------------------

struct ModelConfig {
  std::vector<int> modes_image; // n+1 entries, time axis first
  std::vector<int> modes_coils; // n entries
  int layers_image = 3, width_image = 256;
  int layers_coils = 3, width_coils = 256;
  FrequencyEmbedding omega_image{30.0, 30.0};
  FrequencyEmbedding omega_coils{5.0, 5.0};
  // optional per-axis overrides (image: time first); empty = coordinate-independent
  std::vector<FrequencyEmbedding> omega_image_axes;
  std::vector<FrequencyEmbedding> omega_coils_axes;
  std::uint64_t seed = 1;
};

/// Joint model: dynamic complex image over [0,tau] x FOV and raw (unnormalized)
/// coil sensitivities over the FOV with one channel per coil.
struct ReconstructionModel {
  SeparableField image;
  SeparableField sens;
  Geometry geom;
};

inline ReconstructionModel make_model(const Geometry& geom, const ModelConfig& cfg) {
  geom.validate();
  detail::check(int(cfg.modes_image.size()) == geom.dim() + 1,
                "model: image modes must cover time plus every spatial axis");
  detail::check(int(cfg.modes_coils.size()) == geom.dim(),
                "model: coil modes must cover every spatial axis");
  std::vector<Interval> image_dom{geom.time_interval()};
  std::vector<Interval> coil_dom;
  for (int j = 0; j < geom.dim(); ++j) {
    image_dom.push_back(geom.spatial_interval(j));
    coil_dom.push_back(geom.spatial_interval(j));
  }
  std::vector<FrequencyEmbedding> om_img = cfg.omega_image_axes.empty()
      ? std::vector<FrequencyEmbedding>(cfg.modes_image.size(), cfg.omega_image)
      : cfg.omega_image_axes;
  std::vector<FrequencyEmbedding> om_coil = cfg.omega_coils_axes.empty()
      ? std::vector<FrequencyEmbedding>(cfg.modes_coils.size(), cfg.omega_coils)
      : cfg.omega_coils_axes;
  detail::check(om_img.size() == cfg.modes_image.size(), "model: image embedding rank mismatch");
  detail::check(om_coil.size() == cfg.modes_coils.size(), "model: coil embedding rank mismatch");
  Rng rng = Rng(cfg.seed);
  ReconstructionModel m;
  m.geom = geom;
  m.image = make_field(rng.next_u64(), cfg.modes_image, cfg.layers_image, cfg.width_image, om_img,
                       image_dom, 1);
  m.sens = make_field(rng.next_u64(), cfg.modes_coils, cfg.layers_coils, cfg.width_coils, om_coil,
                      coil_dom, geom.n_coils);
  return m;
}

struct ModelVars {
  FieldVars image, sens;
};

inline ModelVars bind_model(Tape& t, ReconstructionModel& m, Bindings& bindings) {
  return {bind_field(t, m.image, bindings), bind_field(t, m.sens, bindings)};
}

/// Spatial measurement grid as per-axis coordinate lists.
inline EvalGrid measurement_grid(const Geometry& geom) {
  EvalGrid g;
  for (int j = 0; j < geom.dim(); ++j) g.axes.push_back(geom.axis_coords(j));
  return g;
}

// ---- normalized sensitivities on the tape -------------------------------------

/// Per-coil complex grids plus shared normalization pieces (reused by the coil
/// smoothness penalty, whose derivative goes through the normalization).
struct CoilFieldVars {
  std::vector<CVar> raw;  // S~_c on the grid
  std::vector<CVar> unit; // S_c = S~_c / denom
  Var denom;              // sqrt(sum_c |S~_c|^2 + 1e-24), grid-shaped
  std::vector<int> grid_shape;
};

namespace detail {

/// Split the trailing channel axis into per-coil grids via selector rows.
inline std::vector<CVar> split_channels(Tape& t, CVar all, int n_coils,
                                        const std::vector<int>& grid_shape) {
  std::vector<CVar> out;
  if (n_coils == 1) {
    out.push_back(all);
    return out;
  }
  const int ch_axis = int(grid_shape.size());
  for (int c = 0; c < n_coils; ++c) {
    std::vector<double> sel(std::size_t(n_coils), 0.0);
    sel[std::size_t(c)] = 1.0;
    Var s = t.constant(sel, {1, n_coils});
    Var re = reshape(contract_mode(all.re, ch_axis, s), grid_shape);
    Var im = reshape(contract_mode(all.im, ch_axis, s), grid_shape);
    out.push_back({re, im});
  }
  return out;
}

} // namespace detail

/// Evaluate the raw sensitivity field on a spatial grid and normalize across
/// coils pointwise.
inline CoilFieldVars normalized_coils_t(Tape& t, ReconstructionModel& m, const ModelVars& v,
                                        const EvalGrid& spatial) {
  CoilFieldVars out;
  for (const auto& ax : spatial.axes) out.grid_shape.push_back(int(ax.size()));
  CVar all = eval_grid_t(t, m.sens, v.sens, spatial);
  out.raw = detail::split_channels(t, all, m.geom.n_coils, out.grid_shape);

  Var norm2 = cmod2(out.raw[0]);
  for (int c = 1; c < m.geom.n_coils; ++c) norm2 = add(norm2, cmod2(out.raw[std::size_t(c)]));
  out.denom = sqrt(add_const(norm2, 1e-24));
  for (int c = 0; c < m.geom.n_coils; ++c)
    out.unit.push_back({div(out.raw[std::size_t(c)].re, out.denom),
                        div(out.raw[std::size_t(c)].im, out.denom)});
  return out;
}

// ---- data consistency ----------------------------------------------------------

struct DcTerm {
  Var loss;
  int empty_frames = 0;
};

/// Weighted data-consistency loss over a (coil, time) batch: per term the
/// square root of the weighted squared residual between the model's k-space
/// prediction and the measurements at the sampled frequencies, averaged over
/// the batch.
inline DcTerm data_consistency_t(Tape& t, ReconstructionModel& m, const ModelVars& v,
                                 const KSpaceDataset& data, const DcBatch& batch,
                                 const WeightSpec& wspec) {
  data.validate();
  detail::check(!batch.coils.empty() && !batch.time_index.empty(),
                "data consistency: empty batch");
  const int n = m.geom.dim();
  const int bt = int(batch.time_index.size());
  const std::size_t gn = m.geom.grid_numel();

  EvalGrid g;
  g.axes.push_back({});
  for (int ti : batch.time_index) g.axes[0].push_back(m.geom.times[std::size_t(ti)]);
  for (int j = 0; j < n; ++j) g.axes.push_back(m.geom.axis_coords(j));

  CVar mm = eval_grid_t(t, m.image, v.image, g); // (bt, grid...)
  CoilFieldVars coils = normalized_coils_t(t, m, v, measurement_grid(m.geom));

  std::vector<int> grid_shape = coils.grid_shape;
  DcTerm out;
  Var acc = t.constant(0.0);
  for (int i = 0; i < bt; ++i) {
    const int frame = batch.time_index[std::size_t(i)];
    if (data.sampled[std::size_t(frame)].empty()) {
      ++out.empty_frames;
      continue;
    }
    std::vector<double> sel(std::size_t(bt), 0.0);
    sel[std::size_t(i)] = 1.0;
    Var srow = t.constant(sel, {1, bt});
    CVar m_t{reshape(contract_mode(mm.re, 0, srow), grid_shape),
             reshape(contract_mode(mm.im, 0, srow), grid_shape)};

    for (int c : batch.coils) {
      // constant data/weight grids; off-mask entries carry weight 0
      std::vector<double> dre(gn, 0.0), dim(gn, 0.0), w(gn, 0.0);
      for (std::int64_t s : data.sampled[std::size_t(frame)]) {
        const cd d = data.kspace[data.kindex(c, frame, std::size_t(s))];
        dre[std::size_t(s)] = d.real();
        dim[std::size_t(s)] = d.imag();
        w[std::size_t(s)] = dc_weight(std::abs(d), wspec);
      }
      CVar dgrid{t.constant(dre, grid_shape), t.constant(dim, grid_shape)};
      Var wgrid = t.constant(w, grid_shape);

      CVar khat = cmul(m_t, coils.unit[std::size_t(c)]);
      for (int j = 0; j < n; ++j) khat = cfft(khat, j);
      Var wsq = sum(mul(wgrid, cmod2(csub(khat, dgrid))));
      acc = add(acc, sqrt(add_const(wsq, 1e-24)));
    }
  }
  const double denom = double(batch.coils.size()) * double(batch.time_index.size());
  out.loss = scale(acc, 1.0 / denom);
  return out;
}

// ---- plain reconstruction utilities ---------------------------------------------

/// Coil images m(t,.) * S_c(.) on the measurement grid at one time, without a
/// tape (evaluation/reporting path).
inline std::vector<DenseTensor> coil_image_grid(const ReconstructionModel& m, double t) {
  EvalGrid g;
  g.axes.push_back({t});
  const EvalGrid spatial = measurement_grid(m.geom);
  for (const auto& ax : spatial.axes) g.axes.push_back(ax);

  DenseTensor mt = eval_grid(m.image, g); // (1, grid...)
  DenseTensor sraw = eval_grid(m.sens, spatial);
  const std::size_t gn = m.geom.grid_numel();
  const int nc = m.geom.n_coils;

  std::vector<int> gshape;
  for (const auto& ax : spatial.axes) gshape.push_back(int(ax.size()));
  std::vector<DenseTensor> out(std::size_t(nc), DenseTensor{gshape});
  std::vector<cd> raw(std::size_t(nc), cd(0));
  for (std::size_t s = 0; s < gn; ++s) {
    for (int c = 0; c < nc; ++c) raw[std::size_t(c)] = (nc == 1) ? sraw[s] : sraw[s * std::size_t(nc) + std::size_t(c)];
    auto unit = normalize_coils(raw);
    for (int c = 0; c < nc; ++c) out[std::size_t(c)][s] = mt[s] * unit.values[std::size_t(c)];
  }
  return out;
}

/// Root-sum-of-squares inverse-DFT of the zero-filled measurements: the
/// classical no-model baseline.
inline DenseTensor zero_filled(const KSpaceDataset& data) {
  data.validate();
  const std::size_t gn = data.geom.grid_numel();
  std::vector<int> vshape{int(data.geom.times.size())};
  for (int s : data.geom.grid) vshape.push_back(s);
  DenseTensor out(vshape);
  DenseTensor k(data.geom.grid);
  for (std::size_t t = 0; t < data.geom.times.size(); ++t) {
    std::vector<double> acc(gn, 0.0);
    for (int c = 0; c < data.geom.n_coils; ++c) {
      for (std::size_t s = 0; s < gn; ++s)
        k[s] = data.mask[t * gn + s] ? data.kspace[data.kindex(c, int(t), s)] : cd(0);
      DenseTensor img = spatial_dft(k, true);
      for (std::size_t s = 0; s < gn; ++s) acc[s] += std::norm(img[s]);
    }
    for (std::size_t s = 0; s < gn; ++s) out[t * gn + s] = cd(std::sqrt(acc[s]), 0.0);
  }
  return out;
}

/// Inverse DFT per coil combined with known sensitivities (sum of conj(S_c)
/// times coil image); exact for fully sampled data with unit-norm maps.
inline DenseTensor coil_combine_inverse(const KSpaceDataset& data,
                                        const std::vector<DenseTensor>& coil_maps) {
  data.validate();
  detail::check(int(coil_maps.size()) == data.geom.n_coils, "coil map count mismatch");
  const std::size_t gn = data.geom.grid_numel();
  std::vector<int> vshape{int(data.geom.times.size())};
  for (int s : data.geom.grid) vshape.push_back(s);
  DenseTensor out(vshape);
  DenseTensor k(data.geom.grid);
  for (std::size_t t = 0; t < data.geom.times.size(); ++t) {
    for (int c = 0; c < data.geom.n_coils; ++c) {
      for (std::size_t s = 0; s < gn; ++s)
        k[s] = data.mask[t * gn + s] ? data.kspace[data.kindex(c, int(t), s)] : cd(0);
      DenseTensor img = spatial_dft(k, true);
      for (std::size_t s = 0; s < gn; ++s) out[t * gn + s] += std::conj(coil_maps[std::size_t(c)][s]) * img[s];
    }
  }
  return out;
}

} // namespace sepfield
