#include "cellfree/ota.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cellfree {

PilotBook PilotBook::dft(std::size_t n_ues) {
  require(n_ues >= 1, "PilotBook::dft: need at least one UE");
  PilotBook book;
  book.pilots = ComplexMatrix(n_ues, n_ues);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_ues));
  for (std::size_t k = 0; k < n_ues; ++k)
    for (std::size_t t = 0; t < n_ues; ++t) {
      // Reduce k * t mod K first so the phase stays exact for large K.
      const double phase = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n_ues) /
                           static_cast<double>(n_ues);
      book.pilots(k, t) = std::polar(scale, phase);
    }
  return book;
}

void PilotBook::validate(std::size_t n_ues) const {
  if (pilots.rows() != n_ues) throw ConfigError("pilot book must hold one sequence per UE");
  if (length() < n_ues) throw ConfigError("pilot length tau must be >= number of UEs");
  if (!(eta_d > 0.0) || !(eta_u > 0.0)) throw ConfigError("pilot scalings must be positive");
  for (std::size_t k = 0; k < n_ues; ++k)
    for (std::size_t j = k; j < n_ues; ++j) {
      cplx ip = 0.0;
      for (std::size_t t = 0; t < length(); ++t) ip += std::conj(pilots(k, t)) * pilots(j, t);
      if (j == k && std::abs(ip.real() - 1.0) > 1e-12) throw ConfigError("pilots must have unit norm");
      if (j != k && std::abs(ip) > 1e-12) throw ConfigError("pilots must be pairwise orthogonal");
    }
}

double downlink_scaling(const DecisionTensor& v, double p_t) {
  double worst = 0.0;
  for (std::size_t m = 0; m < v.n_aps(); ++m) worst = std::max(worst, v.ap_power(m));
  if (worst <= p_t) return 1.0;
  return std::sqrt(p_t / worst);
}

namespace {

// Unscaled uplink pilot energy of UE k on RB f across the three subcarriers.
double ue_rb_energy(const UeCoefficients& c, const ComplexTensor3& rx, std::size_t k, std::size_t f) {
  const double w = c.w(k, f);
  const double u2 = std::norm(c.u(k, f));
  double y2 = 0.0;
  for (std::size_t t = 0; t < rx.dim2(); ++t) y2 += std::norm(rx(k, f, t));
  return w * w * u2 + w * u2 + w * w * u2 * u2 * y2;
}

}  // namespace

double uplink_scaling(const UeCoefficients& c, const ComplexTensor3& rx, double p_ue) {
  double worst = 0.0;
  for (std::size_t k = 0; k < c.u.rows(); ++k) {
    double e = 0.0;
    for (std::size_t f = 0; f < c.u.cols(); ++f) e += ue_rb_energy(c, rx, k, f);
    worst = std::max(worst, e);
  }
  if (!(worst > 0.0) || !std::isfinite(worst)) return 1.0;
  return std::sqrt(p_ue / worst);
}

double downlink_pilot_energy(const DecisionTensor& v, const PilotBook& book, std::size_t ap) {
  double e = 0.0;
  for (std::size_t f = 0; f < v.n_rbs(); ++f)
    for (std::size_t t = 0; t < book.length(); ++t) {
      cplx x = 0.0;
      for (std::size_t k = 0; k < v.n_ues(); ++k) x += v.v(ap, k, f) * book.pilots(k, t);
      e += std::norm(book.eta_d * x);
    }
  return e;
}

double uplink_pilot_energy(const UeCoefficients& c, const ComplexTensor3& rx, const PilotBook& book,
                           std::size_t ue) {
  double e = 0.0;
  for (std::size_t f = 0; f < c.u.cols(); ++f) e += ue_rb_energy(c, rx, ue, f);
  return book.eta_u * book.eta_u * e;
}

DownlinkResult downlink_phase(const ChannelRealization& ch, const DecisionTensor& v,
                              const PilotBook& book, const PilotNoiseConfig& noise, CounterRng& rng) {
  const std::size_t K = ch.n_ues(), F = ch.n_rbs(), tau = book.length();
  book.validate(K);
  require(v.v.same_shape(ch.h), "downlink_phase: decision shape mismatch");

  const ComplexTensor3 g = effective_gains(ch.h, v);
  DownlinkResult out{ComplexTensor3(K, F, tau), ComplexTensor3(K, F, K), RealMatrix(K, F)};
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t t = 0; t < tau; ++t) {
        cplx y = 0.0;
        for (std::size_t j = 0; j < K; ++j) y += g(k, f, j) * book.pilots(j, t);
        y *= book.eta_d;
        if (noise.enabled) y += rng.complex_normal(noise.downlink_variance_w);
        out.received(k, f, t) = y;
      }

  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t j = 0; j < K; ++j) {
        cplx ip = 0.0;
        for (std::size_t t = 0; t < tau; ++t) ip += std::conj(book.pilots(j, t)) * out.received(k, f, t);
        out.gain_estimates(k, f, j) = ip / book.eta_d;
      }
      double resid = 0.0;
      const cplx own = out.gain_estimates(k, f, k);
      for (std::size_t t = 0; t < tau; ++t)
        resid += std::norm(out.received(k, f, t) - book.eta_d * own * book.pilots(k, t));
      out.interference_power(k, f) = resid / (book.eta_d * book.eta_d);
    }
  return out;
}

UeCoefficients ue_coefficient_update(const DownlinkResult& dl, const RealMatrix& noise) {
  const std::size_t K = dl.gain_estimates.dim0(), F = dl.gain_estimates.dim1();
  require(noise.rows() == K && noise.cols() == F, "ue_coefficient_update: noise shape mismatch");
  UeCoefficients c{ComplexMatrix(K, F), RealMatrix(K, F)};
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f) {
      const cplx g = dl.gain_estimates(k, f, k);
      const double interference = dl.interference_power(k, f);
      const cplx u = std::conj(g) / (std::norm(g) + interference + noise(k, f));
      const double eps = std::norm(u * g - 1.0) + std::norm(u) * (interference + noise(k, f));
      c.u(k, f) = u;
      c.w(k, f) = 1.0 / std::max(eps, kMseFloor);
    }
  return c;
}

std::vector<ApUpdateTerms> uplink_phase(const ChannelRealization& ch, const UeCoefficients& c,
                                        const ComplexTensor3& rx, const PilotBook& book,
                                        const PilotNoiseConfig& noise, CounterRng& rng,
                                        std::span<const std::size_t> aps) {
  const std::size_t N = ch.n_aps(), K = ch.n_ues(), F = ch.n_rbs(), tau = book.length();
  book.validate(K);
  require(rx.dim0() == K && rx.dim1() == F && rx.dim2() == tau, "uplink_phase: received-signal shape mismatch");

  std::vector<ApUpdateTerms> out(N);
  std::vector<cplx> z1(tau), z2(tau), z3(tau);
  for (std::size_t n : aps) {
    require(n < N, "uplink_phase: AP index out of range");
    ApUpdateTerms t{ComplexMatrix(K, F), std::vector<double>(F, 0.0), ComplexMatrix(K, F)};
    for (std::size_t f = 0; f < F; ++f) {
      std::fill(z1.begin(), z1.end(), cplx{});
      std::fill(z2.begin(), z2.end(), cplx{});
      std::fill(z3.begin(), z3.end(), cplx{});
      for (std::size_t j = 0; j < K; ++j) {
        const cplx h = ch.h(n, j, f);
        const double w = c.w(j, f);
        const cplx u = c.u(j, f);
        const cplx x1 = book.eta_u * w * u;
        const cplx x2 = book.eta_u * std::sqrt(w) * u;
        const double x3 = book.eta_u * w * std::norm(u);
        for (std::size_t s = 0; s < tau; ++s) {
          z1[s] += h * x1 * book.pilots(j, s);
          z2[s] += h * x2 * book.pilots(j, s);
          z3[s] += h * x3 * std::conj(rx(j, f, s));
        }
      }
      if (noise.enabled) {
        for (auto* z : {&z1, &z2, &z3})
          for (auto& x : *z) x += rng.complex_normal(noise.uplink_variance_w);
      }
      double e2 = 0.0;
      for (std::size_t s = 0; s < tau; ++s) e2 += std::norm(z2[s]);
      t.d[f] = e2 / (book.eta_u * book.eta_u);
      for (std::size_t k = 0; k < K; ++k) {
        cplx ia = 0.0, im = 0.0;
        for (std::size_t s = 0; s < tau; ++s) {
          ia += std::conj(book.pilots(k, s)) * z1[s];
          // conj(y) lives in the span of conjugated pilots.
          im += book.pilots(k, s) * z3[s];
        }
        t.a(k, f) = ia / book.eta_u;
        t.m(k, f) = im / (book.eta_u * book.eta_d);
      }
    }
    out[n] = std::move(t);
  }
  return out;
}

OtaReport ota_round(const ChannelRealization& ch, const DecisionTensor& v_current,
                    UeCoefficients& coeffs, bool refresh_ue_coefficients, const OtaPowers& powers,
                    const PilotNoiseConfig& noise, CounterRng& rng,
                    std::span<const std::size_t> aps) {
  OtaReport rep;
  rep.book = PilotBook::dft(ch.n_ues());
  rep.book.eta_d = downlink_scaling(v_current, powers.p_t);
  DownlinkResult dl = downlink_phase(ch, v_current, rep.book, noise, rng);
  if (refresh_ue_coefficients) coeffs = ue_coefficient_update(dl, ch.noise_power_w);
  rep.book.eta_u = uplink_scaling(coeffs, dl.received, powers.p_ue);
  rep.terms = uplink_phase(ch, coeffs, dl.received, rep.book, noise, rng, aps);
  rep.ue_gains = std::move(dl.gain_estimates);
  rep.interference_power = std::move(dl.interference_power);
  return rep;
}

OverheadCounts& OverheadCounts::operator+=(const OverheadCounts& o) {
  dl_phases += o.dl_phases;
  ul_phases += o.ul_phases;
  dl_pilot_symbols += o.dl_pilot_symbols;
  ul_pilot_symbols += o.ul_pilot_symbols;
  return *this;
}

OverheadCounts phase_pair_overhead(std::size_t tau, std::size_t n_rbs) {
  return OverheadCounts{1, 1, tau * n_rbs, 3 * tau * n_rbs};
}

OverheadCounts overhead_for_iterations(std::size_t steps, std::size_t iterations, std::size_t tau,
                                       std::size_t n_rbs) {
  OverheadCounts one = phase_pair_overhead(tau, n_rbs);
  const std::size_t m = steps * iterations;
  return OverheadCounts{m * one.dl_phases, m * one.ul_phases, m * one.dl_pilot_symbols,
                        m * one.ul_pilot_symbols};
}

}  // namespace cellfree
