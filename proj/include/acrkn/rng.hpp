#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace acrkn {

/// Seeded random source. Distributions are implemented on top of the raw
/// mt19937_64 stream instead of <random> distribution objects, so a seed
/// produces the same values on every standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; generates pairs, caches the second.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Unbiased integer in [0, n).
  std::uint64_t integer(std::uint64_t n) {
    if (n == 0) return 0;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

  /// Derive an independent stream, e.g. one per epoch or per episode.
  Rng fork(std::uint64_t stream) {
    return Rng(gen_() ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  }

  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(integer(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace acrkn
