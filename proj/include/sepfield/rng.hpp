#pragma once
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sepfield {

/// Counter-based generator (splitmix64 finalizer over seed + counter).
/// Every draw is a pure function of (seed, counter), so runs replay exactly
/// and sub-streams can be forked without sharing state.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return mix(seed_, counter_++); }

  /// Uniform double in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    return int(next_u64() % std::uint64_t(n));
  }

  /// Standard normal via Box-Muller (one value per call).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// k distinct indices from [0, n), order randomized (partial Fisher-Yates).
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + uniform_int(n - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

  /// Independent stream derived from this seed and a tag.
  Rng fork(std::uint64_t tag) const { return Rng(mix(seed_, 0x5851f42d4c957f2dULL ^ tag)); }

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t ctr) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (ctr + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

} // namespace sepfield
