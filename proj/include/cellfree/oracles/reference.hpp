#pragma once

#include <cstddef>
#include <cstdint>

#include "cellfree/array.hpp"
#include "cellfree/metrics.hpp"
#include "cellfree/rng.hpp"
#include "cellfree/scenario.hpp"

// Reference computations that never call into the closed-form update path.
// They work from the MSE definition directly and serve as test oracles.
namespace cellfree::oracle {

/// Index-by-index G(k, f, k') with the AP sum innermost.
ComplexTensor3 naive_effective_gains(const ComplexTensor3& h, const DecisionTensor& v);

/// SINR of one (k, f) straight from channels and decisions.
double scalar_sinr(const ChannelRealization& ch, const DecisionTensor& v, std::size_t k, std::size_t f);

/// Local problem of one AP: minimize sum_{k,f} w eps over x = V_ap with all
/// other APs held at `base`, subject to ||x||_F^2 <= p_t.
struct LocalProblem {
  const ChannelRealization* ch = nullptr;
  const DecisionTensor* base = nullptr;
  const UeCoefficients* coeffs = nullptr;
  std::size_t ap = 0;
  double p_t = 1.0;

  double objective(const ComplexMatrix& x) const;
  /// Real-parametrization gradient: d/dRe + i d/dIm, from the MSE definition.
  ComplexMatrix gradient(const ComplexMatrix& x) const;
  /// Central finite differences of objective() on (Re, Im) parts.
  ComplexMatrix finite_difference_gradient(const ComplexMatrix& x, double step) const;
};

struct ConvexSolve {
  ComplexMatrix x;
  double objective = 0.0;
  std::size_t iterations = 0;
};

/// Accelerated projected gradient with backtracking and adaptive restart.
ConvexSolve projected_gradient(const LocalProblem& p, std::size_t max_iterations = 200000,
                               double step_tolerance = 1e-14);

/// ||grad f(x) + 2 mu x||_F from finite differences.
double kkt_residual(const LocalProblem& p, const ComplexMatrix& x, double mu, double fd_step = 1e-6);

/// Small random instance for property checks.
struct RandomInstance {
  ChannelRealization ch;
  DecisionTensor base;
  UeCoefficients coeffs;
  double p_t = 1.0;
};

/// N <= max_aps, K <= max_ues, F <= max_rbs; unit-variance channels. Half of
/// the instances use MMSE coefficients of `base`, the rest random ones.
RandomInstance random_instance(CounterRng& rng, std::size_t max_aps = 4, std::size_t max_ues = 3,
                               std::size_t max_rbs = 3);

}  // namespace cellfree::oracle
