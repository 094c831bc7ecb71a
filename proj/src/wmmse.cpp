#include "cellfree/wmmse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cellfree {

ComplexMatrix update_u_from_gains(const ComplexTensor3& g, const RealMatrix& noise) {
  const std::size_t K = g.dim0(), F = g.dim1();
  require(noise.rows() == K && noise.cols() == F, "update_u: noise shape mismatch");
  ComplexMatrix u(K, F);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f) {
      double total = noise(k, f);
      for (std::size_t j = 0; j < K; ++j) total += std::norm(g(k, f, j));
      u(k, f) = std::conj(g(k, f, k)) / total;
    }
  return u;
}

ComplexMatrix update_u(const ChannelRealization& ch, const DecisionTensor& v) {
  return update_u_from_gains(effective_gains(ch.h, v), ch.noise_power_w);
}

RealMatrix update_w(const RealMatrix& eps) {
  RealMatrix w(eps.rows(), eps.cols());
  for (std::size_t i = 0; i < eps.size(); ++i)
    w.flat()[i] = 1.0 / std::max(eps.flat()[i], kMseFloor);
  return w;
}

UeCoefficients mmse_coefficients(const ChannelRealization& ch, const DecisionTensor& v) {
  const ComplexTensor3 g = effective_gains(ch.h, v);
  UeCoefficients c;
  c.u = update_u_from_gains(g, ch.noise_power_w);
  c.w = update_w(mse_from_gains(g, ch.noise_power_w, c.u));
  return c;
}

double mmse_surrogate(const ChannelRealization& ch, const DecisionTensor& v) {
  const ComplexTensor3 g = effective_gains(ch.h, v);
  const RealMatrix eps = mse_from_gains(g, ch.noise_power_w, update_u_from_gains(g, ch.noise_power_w));
  double s = 0.0;
  for (double e : eps.flat()) s += 1.0 + std::log(std::max(e, kMseFloor));
  return s;
}

ApUpdateTerms ap_terms_direct(const ChannelRealization& ch, const UeCoefficients& c,
                              std::size_t n, const ComplexTensor3& gt) {
  const std::size_t K = ch.n_ues(), F = ch.n_rbs();
  require(n < ch.n_aps(), "ap_terms_direct: AP index out of range");
  require(gt.dim0() == K && gt.dim1() == F && gt.dim2() == K, "ap_terms_direct: g_tilde shape mismatch");
  ApUpdateTerms t{ComplexMatrix(K, F), std::vector<double>(F, 0.0), ComplexMatrix(K, F)};
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t k = 0; k < K; ++k) {
      const cplx h = ch.h(n, k, f);
      t.a(k, f) = h * c.w(k, f) * c.u(k, f);
      t.d[f] += c.w(k, f) * std::norm(h) * std::norm(c.u(k, f));
    }
    for (std::size_t j = 0; j < K; ++j) {
      const cplx coef = ch.h(n, j, f) * c.w(j, f) * std::norm(c.u(j, f));
      for (std::size_t k = 0; k < K; ++k) t.m(k, f) += coef * std::conj(gt(j, f, k));
    }
  }
  return t;
}

namespace {

struct Numerators {
  ComplexMatrix b;              // conj(a + d conj(v_prev) - m)
  std::vector<double> d;
  std::vector<double> energy;   // sum_k |b(k, f)|^2
};

Numerators numerators(const ApUpdateTerms& t, const ComplexMatrix& v_prev) {
  const std::size_t K = t.a.rows(), F = t.a.cols();
  require(t.m.same_shape(t.a) && v_prev.same_shape(t.a) && t.d.size() == F,
          "ap update: term shapes disagree");
  Numerators out{ComplexMatrix(K, F), t.d, std::vector<double>(F, 0.0)};
  for (std::size_t f = 0; f < F; ++f) {
    if (!(t.d[f] >= 0.0) || !std::isfinite(t.d[f]))
      throw std::domain_error("ap update: d must be finite and nonnegative");
    for (std::size_t k = 0; k < K; ++k) {
      const cplx b = std::conj(t.a(k, f) + t.d[f] * std::conj(v_prev(k, f)) - t.m(k, f));
      out.b(k, f) = b;
      out.energy[f] += std::norm(b);
    }
  }
  return out;
}

double power_at(const Numerators& nu, double mu) {
  double p = 0.0;
  for (std::size_t f = 0; f < nu.d.size(); ++f) {
    if (nu.energy[f] == 0.0) continue;
    const double den = mu + nu.d[f];
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    p += nu.energy[f] / (den * den);
  }
  return p;
}

ComplexMatrix evaluate(const Numerators& nu, double mu) {
  ComplexMatrix v(nu.b.rows(), nu.b.cols());
  for (std::size_t f = 0; f < nu.d.size(); ++f) {
    const double den = mu + nu.d[f];
    if (den == 0.0) continue;  // only reached with zero energy in this RB
    for (std::size_t k = 0; k < nu.b.rows(); ++k) v(k, f) = nu.b(k, f) / den;
  }
  return v;
}

LagrangeSolve bisect(const Numerators& nu, double p_t) {
  if (!(p_t > 0.0)) throw std::invalid_argument("solve_mu: p_t must be positive");
  LagrangeSolve out;
  const double p0 = power_at(nu, 0.0);
  if (p0 <= p_t) {
    out.power_used = p0;
    return out;
  }
  double lo = 0.0;
  double hi = 1.0;
  double p_hi = power_at(nu, hi);
  int doublings = 0;
  while (p_hi > p_t) {
    lo = hi;
    hi *= 2.0;
    p_hi = power_at(nu, hi);
    if (++doublings > 2000) throw std::runtime_error("solve_mu: failed to bracket the multiplier");
  }
  // Keep the feasible side; stop well inside the 1e-8 * p_t contract.
  constexpr double kStopTol = 1e-12;
  int it = 0;
  while (it < 64 && p_t - p_hi > kStopTol * p_t) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double p_mid = power_at(nu, mid);
    if (p_mid > p_t) {
      lo = mid;
    } else {
      hi = mid;
      p_hi = p_mid;
    }
    ++it;
  }
  out.mu = hi;
  out.power_used = p_hi;
  out.iterations = it;
  return out;
}

}  // namespace

ComplexMatrix ap_closed_form(const ApUpdateTerms& terms, const ComplexMatrix& v_prev_ap, double mu) {
  if (!(mu >= 0.0)) throw std::domain_error("ap_closed_form: mu must be nonnegative");
  const Numerators nu = numerators(terms, v_prev_ap);
  for (double d : nu.d)
    if (mu + d == 0.0) throw std::domain_error("ap_closed_form: mu + d is zero (degenerate RB)");
  return evaluate(nu, mu);
}

LagrangeSolve solve_mu(const ApUpdateTerms& terms, const ComplexMatrix& v_prev_ap, double p_t) {
  return bisect(numerators(terms, v_prev_ap), p_t);
}

ApUpdate ap_best_response(const ApUpdateTerms& terms, const ComplexMatrix& v_prev_ap, double p_t) {
  const Numerators nu = numerators(terms, v_prev_ap);
  ApUpdate out;
  out.lagrange = bisect(nu, p_t);
  out.v = evaluate(nu, out.lagrange.mu);
  return out;
}

double default_outer_tolerance(std::size_t n_aps, double p_t) {
  return 1e-3 * std::sqrt(static_cast<double>(n_aps) * p_t);
}

double default_inner_tolerance(std::size_t n_aps, double p_t) {
  return 1e-6 * std::sqrt(static_cast<double>(n_aps) * p_t);
}

WmmseResult centralized_wmmse(const ChannelRealization& ch, const DecisionTensor& v0, double p_t,
                              const WmmseConfig& cfg) {
  require(v0.v.same_shape(ch.h), "centralized_wmmse: initial decision shape mismatch");
  const std::size_t N = ch.n_aps(), K = ch.n_ues(), F = ch.n_rbs();
  const double tol = cfg.tolerance > 0.0 ? cfg.tolerance : default_outer_tolerance(N, p_t);
  const double inner_tol =
      cfg.inner_tolerance > 0.0 ? cfg.inner_tolerance : default_inner_tolerance(N, p_t);

  WmmseResult res;
  res.v = v0;
  res.initial.sr_per_subcarrier = sum_rate_per_subcarrier(ch, v0);
  res.initial.surrogate = mmse_surrogate(ch, v0);

  DecisionTensor best = v0;
  double best_sr = res.initial.sr_per_subcarrier;

  DecisionTensor& v = res.v;
  for (std::size_t t = 1; t <= cfg.max_iterations; ++t) {
    const UeCoefficients coeffs = mmse_coefficients(ch, v);
    const DecisionTensor v_prev = v;

    std::size_t sweeps = 0;
    while (sweeps < cfg.max_inner_sweeps) {
      ++sweeps;
      const DecisionTensor sweep_start = v;
      ComplexTensor3 g = effective_gains(ch.h, v);
      for (std::size_t n = 0; n < N; ++n) {
        const ApUpdate upd = ap_best_response(ap_terms_direct(ch, coeffs, n, g), v.ap(n), p_t);
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t f = 0; f < F; ++f) {
            const cplx delta = upd.v(k, f) - v.v(n, k, f);
            if (delta == 0.0) continue;
            for (std::size_t j = 0; j < K; ++j) g(j, f, k) += ch.h(n, j, f) * delta;
          }
        v.set_ap(n, upd.v);
      }
      if (frobenius_distance(v.v, sweep_start.v) <= inner_tol) break;
    }

    WmmseIteration row;
    row.iteration = t;
    row.sr_per_subcarrier = sum_rate_per_subcarrier(ch, v);
    row.objective = weighted_mse_objective(ch, v, coeffs);
    row.surrogate = mmse_surrogate(ch, v);
    row.decision_change = frobenius_distance(v.v, v_prev.v);
    row.inner_sweeps = sweeps;
    res.trace.push_back(row);
    res.iterations = t;

    if (row.sr_per_subcarrier > best_sr) {
      best_sr = row.sr_per_subcarrier;
      best = v;
    }
    if (row.decision_change <= tol) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) res.v = best;
  return res;
}

}  // namespace cellfree
