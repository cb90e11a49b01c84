#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace modreg {

/// SplitMix64. The state advances by a fixed odd increment, so the i-th draw
/// is a pure function of (seed, i): a counter-based generator whose output is
/// identical on every platform. Distribution sampling is done here rather
/// than through <random> because the standard distributions are
/// implementation-defined.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_{seed} {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    state_ += kIncrement;
    return mix(state_);
  }

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;

  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  static constexpr std::uint64_t kIncrement = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Seed of an independent child stream; a pure function of its arguments.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

Eigen::MatrixXd normal_matrix(SplitMix64& rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0);
Eigen::MatrixXd uniform_matrix(SplitMix64& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi);

/// Uniformly random permutation of 0..n-1 (Fisher-Yates).
std::vector<Eigen::Index> random_permutation(Eigen::Index n, SplitMix64& rng);

}  // namespace modreg
