#pragma once
#include <utility>
#include <vector>

#include "sepfield/geometry.hpp"
#include "sepfield/rng.hpp"

namespace sepfield {

/// Batch sizes per coordinate direction; each pair is (continuous draws,
/// discrete draws from the measurement partition). coils == -1 means all.
struct BatchSpec {
  int coils = -1;
  std::pair<int, int> time{0, 0};
  std::vector<std::pair<int, int>> space;

  void validate(const Geometry& g) const {
    detail::check(int(space.size()) == g.dim(), "batch spec: spatial rank mismatch");
    detail::check(time.first >= 0 && time.second >= 0, "batch spec: negative counts");
    for (auto& [c, d] : space) detail::check(c >= 0 && d >= 0, "batch spec: negative counts");
  }
};

/// One axis of a mixed sample: continuous coordinates plus grid nodes (values
/// and their partition indices).
struct AxisSamples {
  std::vector<double> continuous;
  std::vector<double> grid;
  std::vector<int> grid_index;
};

struct SampleSet {
  std::vector<int> coils;
  AxisSamples time;
  std::vector<AxisSamples> space;
  bool coils_clamped = false;
};

/// Coils and recorded-time indices for the data-consistency term.
struct DcBatch {
  std::vector<int> coils;
  std::vector<int> time_index;
};

namespace detail {

inline std::vector<int> draw_coils(int requested, int n_coils, Rng& rng, bool* clamped) {
  int k = (requested < 0) ? n_coils : requested;
  if (k > n_coils) {
    k = n_coils;
    if (clamped) *clamped = true;
  }
  return rng.sample_without_replacement(n_coils, k);
}

} // namespace detail

/// Mixed batch for the regularizers: samples are drawn independently in each
/// coordinate direction, uniformly over the continuous interval and uniformly
/// over the discrete partition (recorded times on the time axis, grid nodes on
/// spatial axes).
inline SampleSet draw_batch(const BatchSpec& spec, const Geometry& geom, Rng& rng) {
  spec.validate(geom);
  SampleSet out;
  out.coils = detail::draw_coils(spec.coils, geom.n_coils, rng, &out.coils_clamped);

  out.time.continuous.resize(std::size_t(spec.time.first));
  for (auto& t : out.time.continuous) t = rng.uniform(0.0, geom.tau);
  out.time.grid.resize(std::size_t(spec.time.second));
  out.time.grid_index.resize(std::size_t(spec.time.second));
  for (int i = 0; i < spec.time.second; ++i) {
    const int k = rng.uniform_int(geom.n_frames());
    out.time.grid_index[std::size_t(i)] = k;
    out.time.grid[std::size_t(i)] = geom.times[std::size_t(k)];
  }

  out.space.resize(std::size_t(geom.dim()));
  for (int j = 0; j < geom.dim(); ++j) {
    auto& ax = out.space[std::size_t(j)];
    const Interval iv = geom.spatial_interval(j);
    ax.continuous.resize(std::size_t(spec.space[std::size_t(j)].first));
    for (auto& x : ax.continuous) x = rng.uniform(iv.lo, iv.hi);
    const int nd = spec.space[std::size_t(j)].second;
    ax.grid.resize(std::size_t(nd));
    ax.grid_index.resize(std::size_t(nd));
    for (int i = 0; i < nd; ++i) {
      const int k = rng.uniform_int(geom.grid[std::size_t(j)]);
      ax.grid_index[std::size_t(i)] = k;
      ax.grid[std::size_t(i)] = geom.coord(j, k);
    }
  }
  return out;
}

/// Batch for the data-consistency term: coils without replacement, times drawn
/// i.i.d. from the recorded set.
inline DcBatch draw_dc_batch(const BatchSpec& spec, const Geometry& geom, Rng& rng) {
  DcBatch out;
  out.coils = detail::draw_coils(spec.coils, geom.n_coils, rng, nullptr);
  const int nt = std::max(1, spec.time.second);
  out.time_index.resize(std::size_t(nt));
  for (auto& k : out.time_index) k = rng.uniform_int(geom.n_frames());
  return out;
}

/// Continuous and grid coordinates merged into one axis point list.
inline std::vector<double> mixed_axis(const AxisSamples& ax) {
  std::vector<double> xs = ax.continuous;
  xs.insert(xs.end(), ax.grid.begin(), ax.grid.end());
  return xs;
}

/// (t, x_1, ..., x_n) grid of the mixed sample set.
inline EvalGrid spacetime_grid(const SampleSet& s) {
  EvalGrid g;
  g.axes.push_back(mixed_axis(s.time));
  for (const auto& ax : s.space) g.axes.push_back(mixed_axis(ax));
  return g;
}

/// Spatial axes only.
inline EvalGrid spatial_grid(const SampleSet& s) {
  EvalGrid g;
  for (const auto& ax : s.space) g.axes.push_back(mixed_axis(ax));
  return g;
}

} // namespace sepfield
