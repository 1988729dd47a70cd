#pragma once
#include <cstddef>
#include <vector>

#include "sepfield/field.hpp"

namespace sepfield {

/// Acquisition geometry: the Cartesian measurement grid, its physical extent,
/// and the recorded frame times.
struct Geometry {
  std::vector<int> grid;     // spatial sizes per axis
  std::vector<double> fov;   // extents, meters
  double tau = 1.0;          // acquisition duration, seconds
  std::vector<double> times; // recorded times, strictly increasing in [0, tau]
  int n_coils = 1;

  int dim() const { return int(grid.size()); }
  int n_frames() const { return int(times.size()); }

  double spacing(int j) const { return fov[std::size_t(j)] / grid[std::size_t(j)]; }

  /// Node k of axis j; centered so node grid/2 sits at the origin, matching
  /// the centered DFT pairing x_k * xi_q = (k-c)(q-c)/P.
  double coord(int j, int k) const { return (k - grid[std::size_t(j)] / 2) * spacing(j); }

  std::vector<double> axis_coords(int j) const {
    std::vector<double> xs(std::size_t(grid[std::size_t(j)]));
    for (int k = 0; k < grid[std::size_t(j)]; ++k) xs[std::size_t(k)] = coord(j, k);
    return xs;
  }

  Interval spatial_interval(int j) const {
    return {-fov[std::size_t(j)] / 2.0, fov[std::size_t(j)] / 2.0};
  }
  Interval time_interval() const { return {0.0, tau}; }

  std::size_t grid_numel() const {
    std::size_t n = 1;
    for (int g : grid) n *= std::size_t(g);
    return n;
  }

  void validate() const {
    detail::check(!grid.empty() && grid.size() == fov.size(), "geometry: grid/fov rank mismatch");
    for (int g : grid) detail::check(g >= 1, "geometry: grid sizes must be positive");
    for (double s : fov) detail::check(s > 0, "geometry: fov must be positive");
    detail::check(tau > 0, "geometry: tau must be positive");
    detail::check(n_coils >= 1, "geometry: need at least one coil");
    detail::check(!times.empty(), "geometry: no recorded times");
    for (std::size_t i = 0; i < times.size(); ++i) {
      detail::check(times[i] >= 0.0 && times[i] <= tau, "geometry: time outside [0, tau]");
      if (i > 0) detail::check(times[i] > times[i - 1], "geometry: times must be strictly increasing");
    }
  }
};

} // namespace sepfield
