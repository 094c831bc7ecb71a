#pragma once

#include <cmath>
#include <cstdint>

#include "cellfree/array.hpp"
#include "cellfree/metrics.hpp"
#include "cellfree/rng.hpp"
#include "cellfree/scenario.hpp"

namespace cellfree::testing {

inline ComplexTensor3 random_channels(std::size_t n, std::size_t k, std::size_t f, std::uint64_t seed) {
  CounterRng rng(seed, 0, Stream::kFading);
  ComplexTensor3 h(n, k, f);
  for (auto& x : h.flat()) x = rng.complex_normal();
  return h;
}

inline DecisionTensor random_decisions(std::size_t n, std::size_t k, std::size_t f, std::uint64_t seed,
                                       double scale = 1.0) {
  CounterRng rng(seed, 0, Stream::kInitialDecisions);
  DecisionTensor v(n, k, f);
  for (auto& x : v.v.flat()) x = scale * rng.complex_normal();
  return v;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

/// Small scenario for fast end-to-end runs.
inline Scenario tiny_scenario(std::uint64_t seed = 3) {
  Scenario s;
  s.n_aps = 4;
  s.n_ues = 2;
  s.n_rbs = 2;
  s.area_side_m = 100.0;
  s.clusters = contiguous_clusters(4, 2);
  s.seed = seed;
  return s;
}

}  // namespace cellfree::testing
