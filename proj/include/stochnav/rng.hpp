#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include <Eigen/Core>

namespace stochnav {

// Keyed, counter-style random stream. A stream is fully determined by the
// (seed, tags...) key, so the same draw indices always reproduce the same
// values bit for bit, independent of evaluation order or thread placement.
// Gaussians come from our own Box-Muller so results do not depend on the
// standard library's normal_distribution implementation.
class KeyedRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  explicit KeyedRng(std::uint64_t seed) : state_(mix(seed + kGolden)) {}

  KeyedRng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags)
      : KeyedRng(seed) {
    for (std::uint64_t t : tags) absorb(t);
  }

  void absorb(std::uint64_t tag) { state_ = mix(state_ ^ mix(tag + kGolden)); }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  double next_gaussian() {
    const double u1 = 1.0 - next_unit();  // (0, 1]
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  Eigen::VectorXd next_gaussian_vec(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = next_gaussian();
    return v;
  }

 private:
  std::uint64_t state_;
};

}  // namespace stochnav
