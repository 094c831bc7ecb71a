#pragma once

#include <cstdint>
#include <limits>

#include "cellfree/array.hpp"

namespace cellfree {

/// Purpose-split random streams. Each (seed, drop, stream) triple owns an
/// independent sequence, so results never depend on evaluation order.
enum class Stream : std::uint64_t {
  kPositions = 1,
  kFading = 2,
  kPilotNoise = 3,
  kInitialDecisions = 4,
};

/// Counter-based generator: the n-th output is a keyed hash of n. Outputs and
/// the derived uniform/normal variates are bit-reproducible across platforms
/// (no std:: distributions involved).
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t drop, Stream stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();
  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  cplx complex_normal(double variance = 1.0);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cellfree
