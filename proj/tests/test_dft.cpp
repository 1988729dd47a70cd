#include <catch2/catch_amalgamated.hpp>

#include "sepfield/dft.hpp"
#include "sepfield/rng.hpp"

using namespace sepfield;

namespace {

// Direct O(n^2) centered unitary DFT of one line.
std::vector<cd> naive_centered(const std::vector<cd>& x, bool inverse) {
  const int n = int(x.size());
  const int c = n / 2;
  const double sign = inverse ? +1.0 : -1.0;
  std::vector<cd> out(n);
  for (int p = 0; p < n; ++p) {
    cd acc(0);
    for (int k = 0; k < n; ++k) {
      const double ang = sign * 2.0 * kPi * double(p - c) * double(k - c) / n;
      acc += x[k] * cd(std::cos(ang), std::sin(ang));
    }
    out[p] = acc / std::sqrt(double(n));
  }
  return out;
}

DenseTensor random_image(std::vector<int> shape, Rng& rng) {
  DenseTensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = cd(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return t;
}

double norm2(const DenseTensor& t) {
  double acc = 0;
  for (std::size_t i = 0; i < t.numel(); ++i) acc += std::norm(t[i]);
  return std::sqrt(acc);
}

} // namespace

TEST_CASE("constant image transforms to a single centered peak") {
  const cd v(0.7, -0.3);
  DenseTensor img({8, 8});
  for (std::size_t i = 0; i < img.numel(); ++i) img[i] = v;
  auto k = spatial_dft(img);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const cd want = (a == 4 && b == 4) ? 8.0 * v : cd(0);
      CHECK(std::abs(k.at({a, b}) - want) < 1e-12);
    }
}

TEST_CASE("transform is unitary") {
  Rng rng(5);
  auto img = random_image({12, 10}, rng);
  auto k = spatial_dft(img);
  auto back = spatial_dft(k, true);
  SECTION("inverse(forward(x)) = x") {
    for (std::size_t i = 0; i < img.numel(); ++i) CHECK(std::abs(back[i] - img[i]) < 1e-12);
  }
  SECTION("Parseval") { CHECK(std::abs(norm2(img) - norm2(k)) < 1e-10); }
}

TEST_CASE("mixed-radix matches the naive centered transform") {
  Rng rng(42);
  for (int n : {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 15, 21, 35, 36, 49, 64, 105}) {
    std::vector<cd> x(n);
    for (auto& v : x) v = cd(rng.uniform(-1, 1), rng.uniform(-1, 1));
    for (bool inverse : {false, true}) {
      std::vector<cd> got = x;
      dft_axis(got, {n}, 0, inverse);
      auto want = naive_centered(x, inverse);
      for (int i = 0; i < n; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-10);
    }
  }
}

TEST_CASE("sizes with prime factors above 7 are rejected") {
  CHECK(!dft_size_supported(11));
  CHECK(!dft_size_supported(13));
  CHECK(!dft_size_supported(22));
  CHECK(dft_size_supported(2 * 3 * 5 * 7));
  std::vector<cd> x(11, cd(1));
  CHECK_THROWS_AS(dft_axis(x, {11}, 0, false), std::invalid_argument);
}
