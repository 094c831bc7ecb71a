#include "cellfree/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace cellfree {

ComplexMatrix DecisionTensor::ap(std::size_t n) const {
  ComplexMatrix out(n_ues(), n_rbs());
  for (std::size_t k = 0; k < n_ues(); ++k)
    for (std::size_t f = 0; f < n_rbs(); ++f) out(k, f) = v(n, k, f);
  return out;
}

void DecisionTensor::set_ap(std::size_t n, const ComplexMatrix& slice) {
  require(slice.rows() == n_ues() && slice.cols() == n_rbs(), "set_ap: slice shape mismatch");
  for (std::size_t k = 0; k < n_ues(); ++k)
    for (std::size_t f = 0; f < n_rbs(); ++f) v(n, k, f) = slice(k, f);
}

double DecisionTensor::ap_power(std::size_t n) const {
  double p = 0.0;
  for (std::size_t k = 0; k < n_ues(); ++k)
    for (std::size_t f = 0; f < n_rbs(); ++f) p += std::norm(v(n, k, f));
  return p;
}

ComplexTensor3 effective_gains(const ComplexTensor3& h, const DecisionTensor& v) {
  require(h.same_shape(v.v), "effective_gains: channel and decision shapes differ");
  const std::size_t N = h.dim0(), K = h.dim1(), F = h.dim2();
  ComplexTensor3 g(K, F, K);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t f = 0; f < F; ++f) {
        const cplx hn = h(n, k, f);
        for (std::size_t kp = 0; kp < K; ++kp) g(k, f, kp) += hn * v.v(n, kp, f);
      }
  return g;
}

RealMatrix sinr_from_gains(const ComplexTensor3& g, const RealMatrix& noise) {
  const std::size_t K = g.dim0(), F = g.dim1();
  require(noise.rows() == K && noise.cols() == F, "sinr: noise shape mismatch");
  RealMatrix out(K, F);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f) {
      double interference = 0.0;
      for (std::size_t j = 0; j < K; ++j)
        if (j != k) interference += std::norm(g(k, f, j));
      out(k, f) = std::norm(g(k, f, k)) / (interference + noise(k, f));
    }
  return out;
}

RealMatrix sinr(const ChannelRealization& ch, const DecisionTensor& v) {
  return sinr_from_gains(effective_gains(ch.h, v), ch.noise_power_w);
}

double sum_rate_per_subcarrier(const ChannelRealization& ch, const DecisionTensor& v) {
  const RealMatrix snr = sinr(ch, v);
  double sr = 0.0;
  for (double s : snr.flat()) sr += std::log2(1.0 + s);
  return sr;
}

double sum_rate(const ChannelRealization& ch, const DecisionTensor& v) {
  return static_cast<double>(ch.subcarriers_per_rb) * sum_rate_per_subcarrier(ch, v);
}

RealMatrix mse_from_gains(const ComplexTensor3& g, const RealMatrix& noise, const ComplexMatrix& u) {
  const std::size_t K = g.dim0(), F = g.dim1();
  require(u.rows() == K && u.cols() == F, "mse: coefficient shape mismatch");
  RealMatrix out(K, F);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t f = 0; f < F; ++f) {
      const cplx uk = u(k, f);
      double e = std::norm(uk * g(k, f, k) - 1.0) + std::norm(uk) * noise(k, f);
      for (std::size_t j = 0; j < K; ++j)
        if (j != k) e += std::norm(uk * g(k, f, j));
      out(k, f) = e;
    }
  return out;
}

RealMatrix mse(const ChannelRealization& ch, const DecisionTensor& v, const UeCoefficients& c) {
  return mse_from_gains(effective_gains(ch.h, v), ch.noise_power_w, c.u);
}

double weighted_mse_objective(const ChannelRealization& ch, const DecisionTensor& v,
                              const UeCoefficients& c) {
  const RealMatrix e = mse(ch, v, c);
  require(c.w.same_shape(e), "weighted_mse_objective: weight shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) s += c.w.flat()[i] * e.flat()[i];
  return s;
}

double max_power_ratio(const DecisionTensor& v, double p_t) {
  double worst = 0.0;
  for (std::size_t n = 0; n < v.n_aps(); ++n) worst = std::max(worst, v.ap_power(n) / p_t);
  return worst;
}

bool power_feasible(const DecisionTensor& v, double p_t, double rel_tol) {
  return max_power_ratio(v, p_t) <= 1.0 + rel_tol;
}

}  // namespace cellfree
