#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "sepfield/synth.hpp"

using namespace sepfield;

TEST_CASE("make_phantom") {
  SECTION("zero modulation gives identical frames") {
    auto spec = default_phantom_spec({16, 16}, {0.3, 0.3}, 4, 1.0, 9);
    for (auto& e : spec.ellipses) e.mod_amp = 0.0;
    auto ph = make_phantom(spec);
    const std::size_t gn = 16 * 16;
    for (int f = 1; f < 4; ++f)
      for (std::size_t s = 0; s < gn; ++s)
        CHECK(ph[std::size_t(f) * gn + s] == ph[s]);
  }
  SECTION("single static ellipse matches its analytic support") {
    PhantomSpec spec;
    spec.grid = {32, 32};
    spec.fov = {0.3, 0.3};
    spec.frames = 1;
    spec.ellipses.push_back({{0.02, -0.01}, {0.08, 0.05}, 1.0, 0.0, 0.0});
    spec.phase_coeffs = {};
    auto ph = make_phantom(spec);
    const double edge_w = spec.edge_pixels * (0.3 / 32);
    const double h = edge_w / (2.0 * 0.05);
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) {
        const double x = (i - 16) * (0.3 / 32);
        const double y = (j - 16) * (0.3 / 32);
        const double rho = std::sqrt(std::pow((x - 0.02) / 0.08, 2) + std::pow((y + 0.01) / 0.05, 2));
        const double v = std::abs(ph.at({0, i, j}));
        if (rho < 1.0 - h) CHECK(v == Catch::Approx(1.0).margin(1e-12));
        if (rho > 1.0 + h) CHECK(v == 0.0);
      }
  }
  SECTION("deterministic under the seed") {
    auto a = make_phantom(default_phantom_spec({16, 16}, {0.3, 0.3}, 3, 1.0, 42));
    auto b = make_phantom(default_phantom_spec({16, 16}, {0.3, 0.3}, 3, 1.0, 42));
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
  }
  SECTION("modulated ellipse leaving the FOV is rejected") {
    PhantomSpec spec;
    spec.grid = {8, 8};
    spec.fov = {0.2, 0.2};
    spec.frames = 1;
    spec.ellipses.push_back({{0.05, 0.0}, {0.06, 0.03}, 1.0, 0.5, 1.0});
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }
}

TEST_CASE("make_coil_maps") {
  SECTION("pointwise sum of squares is one") {
    auto maps = make_coil_maps(4, {24, 20}, {0.3, 0.25}, 3);
    for (std::size_t s = 0; s < maps[0].numel(); ++s) {
      double n2 = 0;
      for (const auto& m : maps) n2 += std::norm(m[s]);
      CHECK(std::abs(n2 - 1.0) < 1e-10);
    }
  }
  SECTION("two opposite lobes are mirror symmetric in magnitude") {
    const int n = 16;
    auto maps = make_coil_maps(2, {n, n}, {0.3, 0.3}, 5);
    for (int i = 1; i < n; ++i)
      for (int j = 1; j < n; ++j) {
        const double a = std::abs(maps[0].at({i, j}));
        const double b = std::abs(maps[1].at({n - i, n - j}));
        CHECK(a == Catch::Approx(b).margin(1e-10));
      }
  }
  SECTION("maps are smooth") {
    const int n = 32;
    auto maps = make_coil_maps(4, {n, n}, {0.3, 0.3}, 7);
    double max_diff = 0;
    for (const auto& m : maps)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j + 1 < n; ++j)
          max_diff = std::max(max_diff, std::abs(m.at({i, j + 1}) - m.at({i, j})));
    CHECK(max_diff < 0.12);
  }
  SECTION("single coil is rejected") {
    CHECK_THROWS_AS(make_coil_maps(1, {8, 8}, {0.2, 0.2}, 1), std::invalid_argument);
  }
}

TEST_CASE("make_mask") {
  SECTION("AF=1 keeps everything") {
    auto m = make_mask({MaskKind::rectilinear, 1.0, 4, 1}, {16, 16}, 3);
    for (auto v : m) CHECK(v == 1);
  }
  SECTION("rectilinear AF=8 on 288 lines keeps 36 per frame with the center band") {
    MaskSpec spec{MaskKind::rectilinear, 8.0, 4, 11};
    auto m = make_mask(spec, {288, 16}, 5);
    const std::size_t gn = 288 * 16;
    for (int f = 0; f < 5; ++f) {
      int lines = 0;
      for (int l = 0; l < 288; ++l)
        if (m[std::size_t(f) * gn + std::size_t(l) * 16]) ++lines;
      CHECK(lines == 36);
      for (int l = 142; l < 146; ++l) CHECK(m[std::size_t(f) * gn + std::size_t(l) * 16] == 1);
      // full readouts along the last axis
      for (int l = 0; l < 288; ++l) {
        const bool kept = m[std::size_t(f) * gn + std::size_t(l) * 16];
        for (int r = 0; r < 16; ++r)
          CHECK(bool(m[std::size_t(f) * gn + std::size_t(l) * 16 + std::size_t(r)]) == kept);
      }
    }
    // frame-varying selection
    bool differs = false;
    for (int l = 0; l < 288 && !differs; ++l)
      differs = m[std::size_t(l) * 16] != m[gn + std::size_t(l) * 16];
    CHECK(differs);
  }
  SECTION("random_readout empirical fraction approaches 1/AF") {
    MaskSpec spec{MaskKind::random_readout, 8.0, 4, 21};
    const int frames = 100;
    auto m = make_mask(spec, {288, 8}, frames);
    double kept = 0;
    for (auto v : m) kept += v;
    const double frac = kept / double(m.size());
    CHECK(std::abs(frac - 0.125) < 0.02);
  }
  SECTION("AF larger than the line count is rejected") {
    CHECK_THROWS_AS(make_mask({MaskKind::rectilinear, 20.0, 4, 1}, {16, 16}, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("simulate_acquisition") {
  auto geom = synth_geometry({16, 16}, {0.3, 0.3}, 1.0, 3, 3);
  auto spec = default_phantom_spec(geom.grid, geom.fov, 3, geom.tau, 17);
  auto phantom = make_phantom(spec);
  auto maps = make_coil_maps(3, geom.grid, geom.fov, 18);
  auto mask = make_mask({MaskKind::rectilinear, 1.0, 4, 1}, geom.grid, 3);

  SECTION("fully sampled acquisition inverts exactly") {
    auto data = simulate_acquisition(phantom, maps, mask, geom);
    auto rec = coil_combine_inverse(data, maps);
    for (std::size_t i = 0; i < phantom.numel(); ++i)
      CHECK(std::abs(rec[i] - phantom[i]) < 1e-10);
  }
  SECTION("acquisition is linear in the phantom") {
    auto data1 = simulate_acquisition(phantom, maps, mask, geom);
    DenseTensor doubled = phantom;
    for (std::size_t i = 0; i < doubled.numel(); ++i) doubled[i] *= 2.0;
    auto data2 = simulate_acquisition(doubled, maps, mask, geom);
    for (std::size_t i = 0; i < data1.kspace.size(); ++i)
      CHECK(std::abs(data2.kspace[i] - 2.0 * data1.kspace[i]) < 1e-12);
  }
  SECTION("noise lands at the requested SNR") {
    auto clean = simulate_acquisition(phantom, maps, mask, geom);
    auto noisy = simulate_acquisition(phantom, maps, mask, geom, 30.0, 99);
    double ps = 0, pn = 0;
    std::size_t cnt = 0;
    for (int c = 0; c < geom.n_coils; ++c)
      for (std::size_t t = 0; t < geom.times.size(); ++t)
        for (std::int64_t s : clean.sampled[t]) {
          const auto i = clean.kindex(c, int(t), std::size_t(s));
          ps += std::norm(clean.kspace[i]);
          pn += std::norm(noisy.kspace[i] - clean.kspace[i]);
          ++cnt;
        }
    const double snr_db = 10.0 * std::log10(ps / pn);
    CHECK(std::abs(snr_db - 30.0) < 1.0);
  }
  SECTION("deterministic under seeds") {
    auto a = simulate_acquisition(phantom, maps, mask, geom, 25.0, 7);
    auto b = simulate_acquisition(phantom, maps, mask, geom, 25.0, 7);
    for (std::size_t i = 0; i < a.kspace.size(); ++i) CHECK(a.kspace[i] == b.kspace[i]);
  }
}
