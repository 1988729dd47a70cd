#pragma once
#include <cstdint>
#include <optional>
#include <vector>

#include "sepfield/dft.hpp"
#include "sepfield/forward.hpp"
#include "sepfield/geometry.hpp"
#include "sepfield/rng.hpp"

namespace sepfield {

/// One soft-edged ellipse of the phantom. Semi-axes oscillate with the given
/// relative amplitude and frequency (cycles per acquisition).
struct Ellipse {
  std::vector<double> center; // meters
  std::vector<double> semi;   // semi-axes, meters
  double intensity = 1.0;
  double mod_amp = 0.0;
  double mod_freq = 0.0;
};

struct PhantomSpec {
  std::vector<int> grid;
  int frames = 1;
  std::vector<double> fov;
  double tau = 1.0;
  std::uint64_t seed = 1;
  std::vector<Ellipse> ellipses;
  double edge_pixels = 2.0;          // raised-cosine edge width
  std::vector<double> phase_coeffs;  // quadratic polynomial in normalized coords

  void validate() const {
    detail::check(!grid.empty() && grid.size() == fov.size(), "phantom: grid/fov rank mismatch");
    detail::check(frames >= 1 && tau > 0, "phantom: frames and tau must be positive");
    for (const auto& e : ellipses) {
      detail::check(e.center.size() == grid.size() && e.semi.size() == grid.size(),
                    "phantom: ellipse rank mismatch");
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const double reach = std::abs(e.center[j]) + e.semi[j] * (1.0 + std::abs(e.mod_amp));
        detail::check(reach <= fov[j] / 2.0 + 1e-12, "phantom: modulated ellipse leaves the FOV");
      }
    }
  }
};

/// Frame times at cell centers of [0, tau].
inline std::vector<double> frame_times(int frames, double tau) {
  std::vector<double> t(std::size_t(frames), 0.0);
  for (int i = 0; i < frames; ++i) t[std::size_t(i)] = (i + 0.5) * tau / frames;
  return t;
}

inline Geometry synth_geometry(const std::vector<int>& grid, const std::vector<double>& fov,
                               double tau, int frames, int n_coils) {
  Geometry g;
  g.grid = grid;
  g.fov = fov;
  g.tau = tau;
  g.times = frame_times(frames, tau);
  g.n_coils = n_coils;
  g.validate();
  return g;
}

/// Heart-like dynamic phantom: static torso ellipse, a pulsing pool and two
/// small features, smooth quadratic phase. Small seed-driven jitter on the
/// feature placement.
inline PhantomSpec default_phantom_spec(const std::vector<int>& grid,
                                        const std::vector<double>& fov, int frames, double tau,
                                        std::uint64_t seed) {
  PhantomSpec spec;
  spec.grid = grid;
  spec.frames = frames;
  spec.fov = fov;
  spec.tau = tau;
  spec.seed = seed;
  Rng rng(seed);
  const int n = int(grid.size());
  auto vec = [&](double a, double b) {
    std::vector<double> v(std::size_t(n), 0.0);
    v[0] = a * fov[0];
    if (n > 1) v[1] = b * fov[1];
    return v;
  };
  auto jit = [&](std::vector<double> v, double amp) {
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += rng.uniform(-amp, amp) * fov[j];
    return v;
  };
  spec.ellipses.push_back({vec(0, 0), vec(0.40, 0.34), 1.0, 0.0, 0.0});
  spec.ellipses.push_back({jit(vec(-0.10, 0.06), 0.01), vec(0.15, 0.13), -0.45, 0.25, 1.0});
  spec.ellipses.push_back({jit(vec(0.17, -0.15), 0.01), vec(0.065, 0.065), 0.6, 0.0, 0.0});
  spec.ellipses.push_back({jit(vec(0.13, 0.19), 0.01), vec(0.06, 0.08), 0.4, 0.1, 1.0});
  spec.phase_coeffs = {0.2, 0.3, -0.25, 0.1, -0.15, 0.12};
  spec.validate();
  return spec;
}

/// Render the phantom on its grid for every frame: complex, soft edges,
/// smooth static phase.
inline DenseTensor make_phantom(const PhantomSpec& spec) {
  spec.validate();
  const int n = int(spec.grid.size());
  std::size_t gn = 1;
  for (int g : spec.grid) gn *= std::size_t(g);
  double mean_spacing = 0;
  for (int j = 0; j < n; ++j) mean_spacing += spec.fov[std::size_t(j)] / spec.grid[std::size_t(j)];
  mean_spacing /= n;
  const double edge_w = spec.edge_pixels * mean_spacing;

  std::vector<int> vshape{spec.frames};
  for (int g : spec.grid) vshape.push_back(g);
  DenseTensor out(vshape);

  const auto times = frame_times(spec.frames, spec.tau);
  std::vector<int> idx(std::size_t(n), 0);
  std::vector<double> x(std::size_t(n), 0.0);
  for (int f = 0; f < spec.frames; ++f) {
    const double t = times[std::size_t(f)];
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t s = 0; s < gn; ++s) {
      for (int j = 0; j < n; ++j)
        x[std::size_t(j)] = (idx[std::size_t(j)] - spec.grid[std::size_t(j)] / 2) *
                            (spec.fov[std::size_t(j)] / spec.grid[std::size_t(j)]);
      double val = 0;
      for (const auto& e : spec.ellipses) {
        const double pulse = 1.0 + e.mod_amp * std::sin(2.0 * kPi * e.mod_freq * t / spec.tau);
        double rho2 = 0, amin = 1e300;
        for (int j = 0; j < n; ++j) {
          const double a = e.semi[std::size_t(j)] * pulse;
          amin = std::min(amin, a);
          const double u = (x[std::size_t(j)] - e.center[std::size_t(j)]) / a;
          rho2 += u * u;
        }
        const double rho = std::sqrt(rho2);
        const double h = std::min(0.5, edge_w / (2.0 * amin));
        double soft;
        if (rho <= 1.0 - h)
          soft = 1.0;
        else if (rho >= 1.0 + h)
          soft = 0.0;
        else
          soft = 0.5 * (1.0 + std::cos(kPi * (rho - (1.0 - h)) / (2.0 * h)));
        val += e.intensity * soft;
      }
      double phase = 0;
      if (!spec.phase_coeffs.empty()) {
        std::vector<double> u(std::size_t(n), 0.0);
        for (int j = 0; j < n; ++j) u[std::size_t(j)] = 2.0 * x[std::size_t(j)] / spec.fov[std::size_t(j)];
        std::vector<double> basis{1.0};
        for (int j = 0; j < n; ++j) basis.push_back(u[std::size_t(j)]);
        for (int j = 0; j < n; ++j)
          for (int k = j; k < n; ++k) basis.push_back(u[std::size_t(j)] * u[std::size_t(k)]);
        for (std::size_t b = 0; b < basis.size() && b < spec.phase_coeffs.size(); ++b)
          phase += spec.phase_coeffs[b] * basis[b];
      }
      out[std::size_t(f) * gn + s] = cd(val * std::cos(phase), val * std::sin(phase));

      int j = n - 1;
      while (j >= 0) {
        if (++idx[std::size_t(j)] < spec.grid[std::size_t(j)]) break;
        idx[std::size_t(j)] = 0;
        --j;
      }
    }
  }
  return out;
}

/// Smooth synthetic coil maps: Gaussian magnitude lobes centered on the FOV
/// boundary at equiangular positions, linear phase per coil, jointly
/// normalized so sum_c |S_c|^2 = 1 pointwise.
inline std::vector<DenseTensor> make_coil_maps(int n_coils, const std::vector<int>& grid,
                                               const std::vector<double>& fov,
                                               std::uint64_t seed) {
  detail::check(n_coils >= 2, "make_coil_maps: need at least two coils");
  const int n = int(grid.size());
  std::size_t gn = 1;
  for (int g : grid) gn *= std::size_t(g);
  Rng rng(seed);

  std::vector<DenseTensor> maps;
  std::vector<double> mag2(gn, 0.0);
  for (int c = 0; c < n_coils; ++c) {
    const double theta = 2.0 * kPi * c / n_coils;
    std::vector<double> center(std::size_t(n), 0.0);
    center[0] = 0.5 * fov[0] * std::cos(theta);
    if (n > 1) center[1] = 0.5 * fov[1] * std::sin(theta);
    std::vector<double> kphase(std::size_t(n), 0.0);
    for (int j = 0; j < n; ++j) kphase[std::size_t(j)] = rng.uniform(-2.0, 2.0) / fov[std::size_t(j)];

    DenseTensor m(grid);
    std::vector<int> idx(std::size_t(n), 0);
    for (std::size_t s = 0; s < gn; ++s) {
      double d2 = 0, ph = 0;
      for (int j = 0; j < n; ++j) {
        const double x = (idx[std::size_t(j)] - grid[std::size_t(j)] / 2) *
                         (fov[std::size_t(j)] / grid[std::size_t(j)]);
        const double sigma = 0.55 * fov[std::size_t(j)];
        const double u = (x - center[std::size_t(j)]) / sigma;
        d2 += u * u;
        ph += kphase[std::size_t(j)] * x;
      }
      const double a = std::exp(-0.5 * d2);
      m[s] = cd(a * std::cos(ph), a * std::sin(ph));
      mag2[s] += a * a;
      int j = n - 1;
      while (j >= 0) {
        if (++idx[std::size_t(j)] < grid[std::size_t(j)]) break;
        idx[std::size_t(j)] = 0;
        --j;
      }
    }
    maps.push_back(std::move(m));
  }
  for (auto& m : maps)
    for (std::size_t s = 0; s < gn; ++s) m[s] /= std::sqrt(mag2[s]);
  return maps;
}

// ---- undersampling masks -------------------------------------------------------

enum class MaskKind { rectilinear, random_readout };

struct MaskSpec {
  MaskKind kind = MaskKind::rectilinear;
  double af = 1.0;        // acceleration factor
  int center_lines = 4;   // fully sampled central band
  std::uint64_t seed = 1;
};

namespace detail {

/// Per-axis widths of the central band: center_lines total, spread evenly
/// over the phase-encode axes.
inline std::vector<int> band_widths(int center_lines, int n_pe) {
  std::vector<int> w(std::size_t(n_pe), 1);
  const int per = std::max(1, int(std::llround(std::pow(double(center_lines), 1.0 / n_pe))));
  for (auto& x : w) x = per;
  return w;
}

} // namespace detail

/// Per-frame boolean masks on the k-space grid. The last axis is the readout
/// (always fully sampled); lines are indexed by the leading phase-encode axes.
/// rectilinear keeps floor(lines/AF) lines per frame: the center band plus a
/// uniform random remainder, re-drawn per frame. random_readout keeps each
/// line independently with probability 1/AF, center band forced.
inline std::vector<std::uint8_t> make_mask(const MaskSpec& spec, const std::vector<int>& grid,
                                           int frames) {
  detail::check(spec.af >= 1.0, "mask: acceleration factor must be >= 1");
  detail::check(!grid.empty(), "mask: empty grid");
  const int n = int(grid.size());
  const int n_pe = std::max(1, n - 1);
  std::vector<int> pe_shape(grid.begin(), grid.begin() + n_pe);
  std::size_t lines = 1;
  for (int s : pe_shape) lines *= std::size_t(s);
  std::size_t readout = (n >= 2) ? std::size_t(grid[std::size_t(n - 1)]) : 1;
  const std::size_t gn = lines * readout;

  const std::size_t keep = std::size_t(double(lines) / spec.af);
  detail::check(keep >= 1, "mask: acceleration factor exceeds the line count");

  // center band indices
  const auto widths = detail::band_widths(spec.center_lines, n_pe);
  std::vector<std::size_t> band;
  {
    std::vector<int> idx(std::size_t(n_pe), 0);
    for (std::size_t l = 0; l < lines; ++l) {
      bool in = true;
      for (int j = 0; j < n_pe; ++j) {
        const int c = pe_shape[std::size_t(j)] / 2;
        const int lo = c - widths[std::size_t(j)] / 2;
        if (idx[std::size_t(j)] < lo || idx[std::size_t(j)] >= lo + widths[std::size_t(j)]) in = false;
      }
      if (in) band.push_back(l);
      int j = n_pe - 1;
      while (j >= 0) {
        if (++idx[std::size_t(j)] < pe_shape[std::size_t(j)]) break;
        idx[std::size_t(j)] = 0;
        --j;
      }
    }
  }
  detail::check(band.size() <= lines, "mask: center band larger than line count");

  Rng rng(spec.seed);
  std::vector<std::uint8_t> mask(std::size_t(frames) * gn, 0);
  std::vector<std::uint8_t> line_kept(lines);
  for (int f = 0; f < frames; ++f) {
    std::fill(line_kept.begin(), line_kept.end(), 0);
    for (std::size_t l : band) line_kept[l] = 1;
    if (spec.kind == MaskKind::rectilinear) {
      const std::size_t want = std::max(keep, band.size());
      std::vector<int> rest;
      for (std::size_t l = 0; l < lines; ++l)
        if (!line_kept[l]) rest.push_back(int(l));
      const std::size_t extra = want - band.size();
      auto pick = rng.sample_without_replacement(int(rest.size()), int(std::min(extra, rest.size())));
      for (int p : pick) line_kept[std::size_t(rest[std::size_t(p)])] = 1;
    } else {
      const double p = 1.0 / spec.af;
      for (std::size_t l = 0; l < lines; ++l)
        if (!line_kept[l] && rng.uniform() < p) line_kept[l] = 1;
    }
    for (std::size_t l = 0; l < lines; ++l)
      if (line_kept[l])
        for (std::size_t r = 0; r < readout; ++r) mask[std::size_t(f) * gn + l * readout + r] = 1;
  }
  return mask;
}

// ---- acquisition ----------------------------------------------------------------

/// Retrospective acquisition: per (coil, frame) the masked unitary DFT of the
/// coil image, with optional complex white noise at the requested SNR.
inline KSpaceDataset simulate_acquisition(const DenseTensor& phantom,
                                          const std::vector<DenseTensor>& coil_maps,
                                          const std::vector<std::uint8_t>& mask,
                                          const Geometry& geom,
                                          std::optional<double> noise_snr_db = std::nullopt,
                                          std::uint64_t noise_seed = 1) {
  geom.validate();
  const std::size_t gn = geom.grid_numel();
  detail::check(phantom.rank() == geom.dim() + 1 &&
                    phantom.shape()[0] == int(geom.times.size()),
                "simulate_acquisition: phantom shape mismatch");
  for (int j = 0; j < geom.dim(); ++j)
    detail::check(phantom.shape()[std::size_t(j) + 1] == geom.grid[std::size_t(j)],
                  "simulate_acquisition: phantom grid mismatch");
  detail::check(int(coil_maps.size()) == geom.n_coils, "simulate_acquisition: coil count mismatch");
  detail::check(mask.size() == geom.times.size() * gn, "simulate_acquisition: mask size mismatch");

  KSpaceDataset d;
  d.geom = geom;
  d.mask = mask;
  d.kspace.assign(std::size_t(geom.n_coils) * geom.times.size() * gn, cd(0));

  DenseTensor img(geom.grid);
  for (std::size_t t = 0; t < geom.times.size(); ++t)
    for (int c = 0; c < geom.n_coils; ++c) {
      for (std::size_t s = 0; s < gn; ++s)
        img[s] = phantom[t * gn + s] * coil_maps[std::size_t(c)][s];
      DenseTensor k = spatial_dft(img);
      for (std::size_t s = 0; s < gn; ++s)
        if (mask[t * gn + s]) d.kspace[d.kindex(c, int(t), s)] = k[s];
    }
  d.rebuild_index();

  if (noise_snr_db) {
    double power = 0;
    std::size_t count = 0;
    for (int c = 0; c < geom.n_coils; ++c)
      for (std::size_t t = 0; t < geom.times.size(); ++t)
        for (std::int64_t s : d.sampled[t]) {
          power += std::norm(d.kspace[d.kindex(c, int(t), std::size_t(s))]);
          ++count;
        }
    power /= double(count);
    const double sigma2 = power / std::pow(10.0, *noise_snr_db / 10.0);
    const double s_part = std::sqrt(sigma2 / 2.0);
    Rng rng(noise_seed);
    for (int c = 0; c < geom.n_coils; ++c)
      for (std::size_t t = 0; t < geom.times.size(); ++t)
        for (std::int64_t s : d.sampled[t])
          d.kspace[d.kindex(c, int(t), std::size_t(s))] +=
              cd(s_part * rng.normal(), s_part * rng.normal());
  }
  return d;
}

} // namespace sepfield
