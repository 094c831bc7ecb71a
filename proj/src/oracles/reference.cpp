#include "cellfree/oracles/reference.hpp"

#include <algorithm>
#include <cmath>

#include "cellfree/wmmse.hpp"

namespace cellfree::oracle {

ComplexTensor3 naive_effective_gains(const ComplexTensor3& h, const DecisionTensor& v) {
  const std::size_t N = h.dim0(), K = h.dim1(), F = h.dim2();
  ComplexTensor3 g(K, F, K);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t kp = 0; kp < K; ++kp) {
        cplx s = 0.0;
        for (std::size_t n = 0; n < N; ++n) s += h(n, k, f) * v.v(n, kp, f);
        g(k, f, kp) = s;
      }
  return g;
}

double scalar_sinr(const ChannelRealization& ch, const DecisionTensor& v, std::size_t k, std::size_t f) {
  double signal = 0.0, interference = 0.0;
  for (std::size_t j = 0; j < ch.n_ues(); ++j) {
    cplx s = 0.0;
    for (std::size_t n = 0; n < ch.n_aps(); ++n) s += ch.h(n, k, f) * v.v(n, j, f);
    (j == k ? signal : interference) += std::abs(s) * std::abs(s);
  }
  return signal / (interference + ch.noise_power_w(k, f));
}

namespace {

// Gains with AP `ap` replaced by x.
ComplexTensor3 gains_with(const LocalProblem& p, const ComplexMatrix& x) {
  const auto& h = p.ch->h;
  const std::size_t N = h.dim0(), K = h.dim1(), F = h.dim2();
  ComplexTensor3 g(K, F, K);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t kp = 0; kp < K; ++kp) {
        cplx s = 0.0;
        for (std::size_t n = 0; n < N; ++n) s += h(n, k, f) * (n == p.ap ? x(kp, f) : p.base->v(n, kp, f));
        g(k, f, kp) = s;
      }
  return g;
}

ComplexMatrix project(const ComplexMatrix& x, double p_t) {
  double e = 0.0;
  for (const cplx& z : x.flat()) e += std::norm(z);
  if (e <= p_t) return x;
  ComplexMatrix out = x;
  const double s = std::sqrt(p_t / e);
  for (auto& z : out.flat()) z *= s;
  return out;
}

}  // namespace

double LocalProblem::objective(const ComplexMatrix& x) const {
  const ComplexTensor3 g = gains_with(*this, x);
  const std::size_t K = g.dim0(), F = g.dim1();
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f) {
      const cplx u = coeffs->u(k, f);
      double e = std::norm(u) * ch->noise_power_w(k, f);
      for (std::size_t j = 0; j < K; ++j) e += std::norm(u * g(k, f, j) - (j == k ? 1.0 : 0.0));
      total += coeffs->w(k, f) * e;
    }
  return total;
}

ComplexMatrix LocalProblem::gradient(const ComplexMatrix& x) const {
  const ComplexTensor3 g = gains_with(*this, x);
  const std::size_t K = g.dim0(), F = g.dim1();
  ComplexMatrix grad(K, F);
  for (std::size_t kp = 0; kp < K; ++kp)
    for (std::size_t f = 0; f < F; ++f) {
      cplx s = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const cplx u = coeffs->u(k, f);
        const cplx resid = u * g(k, f, kp) - (k == kp ? 1.0 : 0.0);
        s += coeffs->w(k, f) * resid * std::conj(u * ch->h(ap, k, f));
      }
      grad(kp, f) = 2.0 * s;
    }
  return grad;
}

ComplexMatrix LocalProblem::finite_difference_gradient(const ComplexMatrix& x, double step) const {
  ComplexMatrix grad(x.rows(), x.cols());
  ComplexMatrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const cplx orig = x.flat()[i];
    probe.flat()[i] = orig + step;
    const double re_plus = objective(probe);
    probe.flat()[i] = orig - step;
    const double re_minus = objective(probe);
    probe.flat()[i] = orig + cplx(0.0, step);
    const double im_plus = objective(probe);
    probe.flat()[i] = orig - cplx(0.0, step);
    const double im_minus = objective(probe);
    probe.flat()[i] = orig;
    grad.flat()[i] = {(re_plus - re_minus) / (2.0 * step), (im_plus - im_minus) / (2.0 * step)};
  }
  return grad;
}

ConvexSolve projected_gradient(const LocalProblem& p, std::size_t max_iterations, double step_tolerance) {
  const std::size_t K = p.ch->n_ues(), F = p.ch->n_rbs();
  ComplexMatrix x = project(p.base->ap(p.ap), p.p_t);
  ComplexMatrix y = x;
  double fx = p.objective(x);
  double lipschitz = 1.0;
  double momentum = 1.0;

  ConvexSolve out;
  std::size_t it = 0;
  for (; it < max_iterations; ++it) {
    const ComplexMatrix gy = p.gradient(y);
    const double fy = p.objective(y);
    ComplexMatrix next(K, F);
    // Backtracking on the quadratic upper bound.
    for (int bt = 0; bt < 80; ++bt) {
      for (std::size_t i = 0; i < next.size(); ++i)
        next.flat()[i] = y.flat()[i] - gy.flat()[i] / lipschitz;
      next = project(next, p.p_t);
      double lin = 0.0, quad = 0.0;
      for (std::size_t i = 0; i < next.size(); ++i) {
        const cplx d = next.flat()[i] - y.flat()[i];
        lin += (std::conj(gy.flat()[i]) * d).real();
        quad += std::norm(d);
      }
      if (p.objective(next) <= fy + lin + 0.5 * lipschitz * quad + 1e-15 * std::abs(fy)) break;
      lipschitz *= 2.0;
    }
    const double f_next = p.objective(next);
    double step = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) step += std::norm(next.flat()[i] - x.flat()[i]);
    step = std::sqrt(step);

    if (f_next > fx) {
      // Restart momentum from the last accepted point.
      momentum = 1.0;
      y = x;
      continue;
    }
    const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    for (std::size_t i = 0; i < y.size(); ++i)
      y.flat()[i] = next.flat()[i] + ((momentum - 1.0) / m_next) * (next.flat()[i] - x.flat()[i]);
    momentum = m_next;
    x = next;
    fx = f_next;
    if (step <= step_tolerance * (1.0 + std::sqrt(p.p_t))) break;
  }
  out.x = x;
  out.objective = fx;
  out.iterations = it;
  return out;
}

double kkt_residual(const LocalProblem& p, const ComplexMatrix& x, double mu, double fd_step) {
  const ComplexMatrix g = p.finite_difference_gradient(x, fd_step);
  double r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) r += std::norm(g.flat()[i] + 2.0 * mu * x.flat()[i]);
  return std::sqrt(r);
}

RandomInstance random_instance(CounterRng& rng, std::size_t max_aps, std::size_t max_ues,
                               std::size_t max_rbs) {
  auto pick = [&rng](std::size_t hi) {
    return 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi));
  };
  const std::size_t N = std::min(pick(max_aps), max_aps);
  const std::size_t K = std::min(pick(max_ues), max_ues);
  const std::size_t F = std::min(pick(max_rbs), max_rbs);

  ComplexTensor3 h(N, K, F);
  for (auto& x : h.flat()) x = rng.complex_normal();
  const double noise = 0.05 + rng.uniform();

  RandomInstance inst{ChannelRealization::from_channels(std::move(h), noise), DecisionTensor(N, K, F), {}, 0.0};
  inst.p_t = 0.1 + 2.0 * rng.uniform();
  for (std::size_t n = 0; n < N; ++n) {
    double e = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t f = 0; f < F; ++f) {
        inst.base.v(n, k, f) = rng.complex_normal();
        e += std::norm(inst.base.v(n, k, f));
      }
    const double s = std::sqrt(inst.p_t * rng.uniform() / e);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t f = 0; f < F; ++f) inst.base.v(n, k, f) *= s;
  }

  if (rng.uniform() < 0.5) {
    inst.coeffs = mmse_coefficients(inst.ch, inst.base);
  } else {
    inst.coeffs = UeCoefficients{ComplexMatrix(K, F), RealMatrix(K, F)};
    for (auto& u : inst.coeffs.u.flat()) u = rng.complex_normal(4.0);
    for (auto& w : inst.coeffs.w.flat()) w = 0.5 + 2.0 * rng.uniform();
  }
  return inst;
}

}  // namespace cellfree::oracle
