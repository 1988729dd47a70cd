#pragma once
#include <algorithm>
#include <cmath>
#include <vector>

#include "sepfield/tensor.hpp"

namespace sepfield {

struct PsnrResult {
  double db = 0.0;
  bool infinite = false;
};

/// 20 log10(range / RMSE) with range = max |ref|; identical inputs are
/// reported as infinite rather than a number.
inline PsnrResult psnr(const std::vector<double>& rec, const std::vector<double>& ref,
                       double range = -1.0) {
  detail::check(rec.size() == ref.size() && !ref.empty(), "psnr: shape mismatch");
  if (range <= 0.0) {
    range = 0.0;
    for (double v : ref) range = std::max(range, std::abs(v));
  }
  detail::check(range > 0.0, "psnr: reference has zero dynamic range");
  double mse = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double d = rec[i] - ref[i];
    mse += d * d;
  }
  mse /= double(rec.size());
  if (mse == 0.0) return {0.0, true};
  return {20.0 * std::log10(range / std::sqrt(mse)), false};
}

namespace detail {

/// Valid-window box sums along every axis (window w per axis), separable.
inline std::vector<double> box_valid(std::vector<double> data, std::vector<int>& shape, int w) {
  for (std::size_t axis = 0; axis < shape.size(); ++axis) {
    const int n = shape[axis];
    check(n >= w, "ssim: window larger than image");
    const int m = n - w + 1;
    std::size_t outer = 1, inner = 1;
    for (std::size_t j = 0; j < axis; ++j) outer *= std::size_t(shape[j]);
    for (std::size_t j = axis + 1; j < shape.size(); ++j) inner *= std::size_t(shape[j]);
    std::vector<double> out(outer * std::size_t(m) * inner);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < inner; ++i) {
        double acc = 0;
        for (int k = 0; k < w; ++k) acc += data[(o * std::size_t(n) + std::size_t(k)) * inner + i];
        out[o * std::size_t(m) * inner + i] = acc;
        for (int k = 1; k < m; ++k) {
          acc += data[(o * std::size_t(n) + std::size_t(k + w - 1)) * inner + i] -
                 data[(o * std::size_t(n) + std::size_t(k - 1)) * inner + i];
          out[(o * std::size_t(m) + std::size_t(k)) * inner + i] = acc;
        }
      }
    data = std::move(out);
    shape[axis] = m;
  }
  return data;
}

} // namespace detail

/// Mean SSIM over valid windows: uniform 7^d window, K1 = 0.01, K2 = 0.03.
/// range <= 0 uses max |ref|.
inline double ssim(const std::vector<double>& rec, const std::vector<double>& ref,
                   const std::vector<int>& shape, double range = -1.0, int window = 7) {
  std::size_t numel = 1;
  for (int s : shape) numel *= std::size_t(s);
  detail::check(rec.size() == numel && ref.size() == numel, "ssim: shape mismatch");
  if (range <= 0.0) {
    range = 0.0;
    for (double v : ref) range = std::max(range, std::abs(v));
  }
  detail::check(range > 0.0, "ssim: reference has zero dynamic range");
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  std::vector<double> xx(numel), yy(numel), xy(numel);
  for (std::size_t i = 0; i < numel; ++i) {
    xx[i] = rec[i] * rec[i];
    yy[i] = ref[i] * ref[i];
    xy[i] = rec[i] * ref[i];
  }
  double wcount = 1.0;
  for (int s : shape) wcount *= double(window);

  std::vector<int> s1(shape), s2(shape), s3(shape), s4(shape), s5(shape);
  auto sx = detail::box_valid(rec, s1, window);
  auto sy = detail::box_valid(ref, s2, window);
  auto sxx = detail::box_valid(std::move(xx), s3, window);
  auto syy = detail::box_valid(std::move(yy), s4, window);
  auto sxy = detail::box_valid(std::move(xy), s5, window);

  double acc = 0;
  for (std::size_t i = 0; i < sx.size(); ++i) {
    const double mx = sx[i] / wcount;
    const double my = sy[i] / wcount;
    const double vx = sxx[i] / wcount - mx * mx;
    const double vy = syy[i] / wcount - my * my;
    const double cxy = sxy[i] / wcount - mx * my;
    acc += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return acc / double(sx.size());
}

struct FrameMetrics {
  double ssim = 0.0;
  PsnrResult psnr;
};

struct MetricReport {
  std::vector<FrameMetrics> frames;
  double ssim_mean = 0, ssim_median = 0, ssim_min = 0;
  double psnr_mean = 0, psnr_median = 0, psnr_min = 0;
  bool psnr_any_infinite = false;
  double range = 0; // shared dynamic range: max |ref| over the whole volume
};

/// Per-frame magnitude SSIM/PSNR of (frames, spatial...) volumes against a
/// reference, with one shared dynamic range.
inline MetricReport evaluate_volumes(const DenseTensor& rec, const DenseTensor& ref) {
  detail::check(rec.shape() == ref.shape(), "evaluate: shape mismatch");
  detail::check(rec.rank() >= 2, "evaluate: expected (frames, spatial...) volumes");
  const int frames = rec.shape()[0];
  std::vector<int> spatial(rec.shape().begin() + 1, rec.shape().end());
  std::size_t gn = 1;
  for (int s : spatial) gn *= std::size_t(s);

  MetricReport rep;
  for (std::size_t i = 0; i < ref.numel(); ++i) rep.range = std::max(rep.range, std::abs(ref[i]));
  detail::check(rep.range > 0, "evaluate: empty reference");

  std::vector<double> a(gn), b(gn);
  std::vector<double> ssims, psnrs;
  for (int f = 0; f < frames; ++f) {
    for (std::size_t s = 0; s < gn; ++s) {
      a[s] = std::abs(rec[std::size_t(f) * gn + s]);
      b[s] = std::abs(ref[std::size_t(f) * gn + s]);
    }
    FrameMetrics fm;
    fm.ssim = ssim(a, b, spatial, rep.range);
    fm.psnr = psnr(a, b, rep.range);
    rep.frames.push_back(fm);
    ssims.push_back(fm.ssim);
    if (fm.psnr.infinite)
      rep.psnr_any_infinite = true;
    else
      psnrs.push_back(fm.psnr.db);
  }
  auto stats = [](std::vector<double> v, double& mean, double& median, double& mn) {
    if (v.empty()) {
      mean = median = mn = 0;
      return;
    }
    mean = 0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    std::sort(v.begin(), v.end());
    median = v[v.size() / 2];
    mn = v.front();
  };
  stats(ssims, rep.ssim_mean, rep.ssim_median, rep.ssim_min);
  stats(psnrs, rep.psnr_mean, rep.psnr_median, rep.psnr_min);
  return rep;
}

} // namespace sepfield
