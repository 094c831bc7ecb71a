#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cellfree/wmmse.hpp"

namespace cellfree::oracle {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  double worst = 0.0;      // worst observed value of the suite's metric
  double threshold = 0.0;  // pass iff worst <= threshold
  std::string detail;
};

/// Per-AP update under test; ap_best_response by default.
using ApUpdateFn = std::function<ApUpdate(const ApUpdateTerms&, const ComplexMatrix&, double)>;

/// Closed form + bisection vs. the projected-gradient oracle on random
/// instances: worst relative objective gap.
SuiteResult check_closed_form_objective(std::uint64_t seed, std::size_t instances,
                                        const ApUpdateFn& update = ap_best_response);
/// Same instances: worst ||grad f + 2 mu v|| / (1 + ||v||).
SuiteResult check_kkt(std::uint64_t seed, std::size_t instances,
                      const ApUpdateFn& update = ap_best_response);
/// Noiseless OTA estimates vs. genie a, d, m, UE gains and refreshed U, w:
/// worst relative error.
SuiteResult check_ota_fidelity(std::uint64_t seed, std::size_t instances);
/// Clustered with Q = N vs. sequential and Q = 1 vs. parallel, OTA exchange:
/// worst absolute trace difference.
SuiteResult check_degeneracy(std::uint64_t seed, std::size_t drops, std::size_t iterations);
/// Centralized WMMSE surrogate: worst increase between iterations.
SuiteResult check_surrogate_monotone(std::uint64_t seed, std::size_t drops, std::size_t iterations);
/// Sequential genie, gamma = 0: worst weighted-MSE increase between the time
/// steps of one iteration.
SuiteResult check_sequential_descent(std::uint64_t seed, std::size_t drops, std::size_t iterations);

/// Small-instance run of every suite above.
std::vector<SuiteResult> run_validation(std::uint64_t seed);

/// {"passed": bool, "seed": n, "suites": [...]}
std::string verdict_json(const std::vector<SuiteResult>& results, std::uint64_t seed);

}  // namespace cellfree::oracle
