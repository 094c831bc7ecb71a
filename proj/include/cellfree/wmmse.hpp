#pragma once

#include <cstddef>
#include <vector>

#include "cellfree/array.hpp"
#include "cellfree/metrics.hpp"
#include "cellfree/scenario.hpp"

namespace cellfree {

/// MSE values are floored here before taking the reciprocal weight.
inline constexpr double kMseFloor = 1e-12;

/// Quantities one AP needs to update its own decision in closed form:
/// a(k, f) = h w U, d(f) = sum_i w |h|^2 |U|^2, m(k, f) = sum_j h_j w_j |U_j|^2 conj(G~(j, f, k)).
struct ApUpdateTerms {
  ComplexMatrix a;        // (k, f)
  std::vector<double> d;  // (f), nonnegative
  ComplexMatrix m;        // (k, f)
};

struct LagrangeSolve {
  double mu = 0.0;
  double power_used = 0.0;
  int iterations = 0;
};

struct ApUpdate {
  ComplexMatrix v;
  LagrangeSolve lagrange;
};

/// U = conj(G(k,f,k)) / (sum_j |G(k,f,j)|^2 + noise).
ComplexMatrix update_u_from_gains(const ComplexTensor3& gains, const RealMatrix& noise_power_w);
ComplexMatrix update_u(const ChannelRealization& ch, const DecisionTensor& v);
/// w = 1 / max(eps, kMseFloor), elementwise.
RealMatrix update_w(const RealMatrix& eps);
/// U from update_u, then w from the MSE that U attains.
UeCoefficients mmse_coefficients(const ChannelRealization& ch, const DecisionTensor& v);
/// sum_{k,f} (1 + ln eps(k, f)) with the MMSE receiver; the value of the
/// WMMSE objective after its U and w blocks have been minimized.
double mmse_surrogate(const ChannelRealization& ch, const DecisionTensor& v);

/// Exact (genie) evaluation of the update terms for AP `ap`. `g_tilde` is the
/// (k, f, k') gain snapshot whose freshness the calling variant decides.
ApUpdateTerms ap_terms_direct(const ChannelRealization& ch, const UeCoefficients& coeffs,
                              std::size_t ap, const ComplexTensor3& g_tilde);

/// v(k, f) = conj(a + d(f) conj(v_prev) - m) / (mu + d(f)).
/// Throws std::domain_error when mu + d(f) == 0 for some RB.
ComplexMatrix ap_closed_form(const ApUpdateTerms& terms, const ComplexMatrix& v_prev_ap, double mu);

/// Smallest mu >= 0 with ||v(mu)||_F^2 <= p_t, by bracket doubling from 1
/// and at most 64 bisection steps. When the constraint is active the returned
/// power is within 1e-8 * p_t of p_t (and never above it).
LagrangeSolve solve_mu(const ApUpdateTerms& terms, const ComplexMatrix& v_prev_ap, double p_t);

/// solve_mu followed by the closed form. RBs with d(f) = 0 and mu = 0 carry
/// no objective dependence and receive zero weight.
ApUpdate ap_best_response(const ApUpdateTerms& terms, const ComplexMatrix& v_prev_ap, double p_t);

struct WmmseConfig {
  std::size_t max_iterations = 500;
  /// Outer stop: ||V(t) - V(t-1)||_F <= tolerance. 0 selects 1e-3 sqrt(N p_t).
  double tolerance = 0.0;
  std::size_t max_inner_sweeps = 50;
  /// Inner stop on per-sweep decision change. 0 selects 1e-6 sqrt(N p_t).
  double inner_tolerance = 0.0;
};

double default_outer_tolerance(std::size_t n_aps, double p_t);
double default_inner_tolerance(std::size_t n_aps, double p_t);

struct WmmseIteration {
  std::size_t iteration = 0;
  double sr_per_subcarrier = 0.0;
  double objective = 0.0;  // weighted MSE with this iteration's U, w
  double surrogate = 0.0;  // mmse_surrogate at the new decisions
  double decision_change = 0.0;
  std::size_t inner_sweeps = 0;
};

struct WmmseResult {
  DecisionTensor v;
  WmmseIteration initial;
  std::vector<WmmseIteration> trace;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Centralized WMMSE: alternate (U, w) and a V-block solved by Gauss-Seidel
/// sweeps of the per-AP closed form. Without convergence the best-rate
/// iterate is returned and `converged` is false.
WmmseResult centralized_wmmse(const ChannelRealization& ch, const DecisionTensor& v0, double p_t,
                              const WmmseConfig& config = {});

}  // namespace cellfree
