#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "sepfield/rng.hpp"
#include "sepfield/tensor.hpp"

using namespace sepfield;

namespace {

DenseTensor random_tensor(std::vector<int> shape, Rng& rng) {
  std::vector<cd> data(detail::shape_numel(shape));
  for (auto& v : data) v = cd(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return DenseTensor(std::move(shape), std::move(data));
}

} // namespace

TEST_CASE("tucker_apply hand-checked cases") {
  SECTION("d=2 identity coefficients") {
    DenseTensor c({2, 2}, {cd(1), cd(0), cd(0), cd(1)});
    DenseTensor f1({1, 2}, {cd(1), cd(2)});
    DenseTensor f2({1, 2}, {cd(3), cd(4)});
    auto out = tucker_apply(c, {f1, f2});
    REQUIRE(out.shape() == std::vector<int>{1, 1});
    CHECK(out[0].real() == Catch::Approx(11.0));
    CHECK(out[0].imag() == Catch::Approx(0.0));
  }
  SECTION("d=1 matrix-vector") {
    DenseTensor c({1}, {cd(5)});
    DenseTensor f({2, 1}, {cd(1), cd(2)});
    auto out = tucker_apply(c, {f});
    CHECK(out[0].real() == Catch::Approx(5.0));
    CHECK(out[1].real() == Catch::Approx(10.0));
  }
  SECTION("d=3 random against nested-loop oracle, seed 7") {
    Rng rng(7);
    auto c = random_tensor({2, 3, 2}, rng);
    std::vector<DenseTensor> f{random_tensor({3, 2}, rng), random_tensor({2, 3}, rng),
                               random_tensor({4, 2}, rng)};
    auto out = tucker_apply(c, f);
    REQUIRE(out.shape() == std::vector<int>{3, 2, 4});
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 2; ++b)
        for (int d = 0; d < 4; ++d) {
          const cd want = testutil::brute_tucker_point(c, f, {a, b, d});
          CHECK(std::abs(out.at({a, b, d}) - want) < 1e-12);
        }
  }
}

TEST_CASE("mode_contract basics") {
  Rng rng(3);
  SECTION("identity contraction leaves tensor unchanged") {
    auto t = random_tensor({3, 4}, rng);
    DenseTensor id({4, 4});
    for (int i = 0; i < 4; ++i) id.at({i, i}) = cd(1);
    auto out = mode_contract(t, 1, id);
    for (std::size_t i = 0; i < t.numel(); ++i) CHECK(std::abs(out[i] - t[i]) < 1e-15);
  }
  SECTION("1x1 tensor with 1x1 matrix") {
    DenseTensor t({1}, {cd(2, 1)});
    DenseTensor m({1, 1}, {cd(3, 0)});
    auto out = mode_contract(t, 0, m);
    CHECK(std::abs(out[0] - cd(6, 3)) < 1e-15);
  }
  SECTION("2x3 tensor with 4x3 matrix on mode 1") {
    auto t = random_tensor({2, 3}, rng);
    auto m = random_tensor({4, 3}, rng);
    auto out = mode_contract(t, 1, m);
    REQUIRE(out.shape() == std::vector<int>{2, 4});
    for (int i = 0; i < 2; ++i)
      for (int p = 0; p < 4; ++p) {
        cd want(0);
        for (int k = 0; k < 3; ++k) want += t.at({i, k}) * m.at({p, k});
        CHECK(std::abs(out.at({i, p}) - want) < 1e-13);
      }
  }
  SECTION("errors") {
    auto t = random_tensor({2, 3}, rng);
    auto m = random_tensor({4, 3}, rng);
    CHECK_THROWS_AS(mode_contract(t, 2, m), std::invalid_argument);
    CHECK_THROWS_AS(mode_contract(t, 0, m), std::invalid_argument);
    CHECK_THROWS_AS(tucker_apply(t, {m}), std::invalid_argument);
  }
}

TEST_CASE("tucker_apply equals brute force on random instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + rng.uniform_int(4);
    std::vector<int> shape(d);
    std::size_t numel = 1;
    for (int j = 0; j < d; ++j) {
      shape[j] = 1 + rng.uniform_int(6);
      numel *= std::size_t(shape[j]);
    }
    if (numel > 10000) {
      --trial;
      continue;
    }
    auto c = random_tensor(shape, rng);
    std::vector<DenseTensor> f;
    std::vector<int> out_shape(d);
    for (int j = 0; j < d; ++j) {
      out_shape[j] = 1 + rng.uniform_int(4);
      f.push_back(random_tensor({out_shape[j], shape[j]}, rng));
    }
    auto out = tucker_apply(c, f);

    std::vector<int> idx(d, 0);
    while (true) {
      const cd want = testutil::brute_tucker_point(c, f, idx);
      const cd got = out.at(idx);
      CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, std::abs(want)));
      int j = d - 1;
      while (j >= 0) {
        if (++idx[j] < out_shape[j]) break;
        idx[j] = 0;
        --j;
      }
      if (j < 0) break;
    }
  }
}

TEST_CASE("tucker_apply with identity factors is the identity") {
  Rng rng(11);
  auto c = random_tensor({3, 2, 4}, rng);
  std::vector<DenseTensor> f;
  for (int n : {3, 2, 4}) {
    DenseTensor id({n, n});
    for (int i = 0; i < n; ++i) id.at({i, i}) = cd(1);
    f.push_back(id);
  }
  auto out = tucker_apply(c, f);
  for (std::size_t i = 0; i < c.numel(); ++i) CHECK(std::abs(out[i] - c[i]) < 1e-14);
}

TEST_CASE("mode contraction is linear in both arguments") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto t1 = random_tensor({3, 4, 2}, rng);
    auto t2 = random_tensor({3, 4, 2}, rng);
    auto m1 = random_tensor({5, 4}, rng);
    auto m2 = random_tensor({5, 4}, rng);
    const cd alpha(rng.uniform(-2, 2), rng.uniform(-2, 2));

    DenseTensor tsum({3, 4, 2});
    for (std::size_t i = 0; i < tsum.numel(); ++i) tsum[i] = t1[i] + alpha * t2[i];
    auto lhs = mode_contract(tsum, 1, m1);
    auto r1 = mode_contract(t1, 1, m1);
    auto r2 = mode_contract(t2, 1, m1);
    for (std::size_t i = 0; i < lhs.numel(); ++i)
      CHECK(std::abs(lhs[i] - (r1[i] + alpha * r2[i])) < 1e-12);

    DenseTensor msum({5, 4});
    for (std::size_t i = 0; i < msum.numel(); ++i) msum[i] = m1[i] + alpha * m2[i];
    auto lhs2 = mode_contract(t1, 1, msum);
    auto r3 = mode_contract(t1, 1, m2);
    for (std::size_t i = 0; i < lhs2.numel(); ++i)
      CHECK(std::abs(lhs2[i] - (r1[i] + alpha * r3[i])) < 1e-12);
  }
}

TEST_CASE("tensor construction validates") {
  CHECK_THROWS_AS(DenseTensor({2, 2}, {cd(1)}), std::invalid_argument);
  CHECK_THROWS_AS(DenseTensor({-1}), std::invalid_argument);
  CHECK_THROWS_AS(DenseTensor({1}, {cd(std::nan(""), 0)}), std::invalid_argument);
}
