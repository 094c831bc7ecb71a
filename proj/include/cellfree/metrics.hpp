#pragma once

#include "cellfree/array.hpp"
#include "cellfree/scenario.hpp"

namespace cellfree {

/// RB-allocation weights v(n, k, f). |v|^2 is the power AP n spends on UE k
/// in RB f; the per-AP slice V_n is the K x F matrix for AP n.
struct DecisionTensor {
  ComplexTensor3 v;

  DecisionTensor() = default;
  DecisionTensor(std::size_t n_aps, std::size_t n_ues, std::size_t n_rbs)
      : v(n_aps, n_ues, n_rbs) {}
  explicit DecisionTensor(ComplexTensor3 values) : v(std::move(values)) {}

  std::size_t n_aps() const { return v.dim0(); }
  std::size_t n_ues() const { return v.dim1(); }
  std::size_t n_rbs() const { return v.dim2(); }

  ComplexMatrix ap(std::size_t n) const;
  void set_ap(std::size_t n, const ComplexMatrix& slice);
  /// ||V_n||_F^2
  double ap_power(std::size_t n) const;

  friend bool operator==(const DecisionTensor&, const DecisionTensor&) = default;
};

/// Receiving coefficients U(k, f) and MSE weights w(k, f) held by the UEs.
struct UeCoefficients {
  ComplexMatrix u;
  RealMatrix w;
};

/// G(k, f, k') = sum_n h(n, k, f) v(n, k', f): gain of UE k from the stream of
/// UE k' on RB f.
ComplexTensor3 effective_gains(const ComplexTensor3& h, const DecisionTensor& v);

/// SINR from effective gains; every rate-type metric goes through here.
RealMatrix sinr_from_gains(const ComplexTensor3& gains, const RealMatrix& noise_power_w);
RealMatrix sinr(const ChannelRealization& ch, const DecisionTensor& v);

/// C * sum_{k,f} log2(1 + SINR).
double sum_rate(const ChannelRealization& ch, const DecisionTensor& v);
/// Sum rate on one subcarrier of each RB (SR / C), the reported figure of merit.
double sum_rate_per_subcarrier(const ChannelRealization& ch, const DecisionTensor& v);

RealMatrix mse_from_gains(const ComplexTensor3& gains, const RealMatrix& noise_power_w,
                          const ComplexMatrix& u);
RealMatrix mse(const ChannelRealization& ch, const DecisionTensor& v, const UeCoefficients& coeffs);

/// sum_{k,f} w(k, f) * mse(k, f).
double weighted_mse_objective(const ChannelRealization& ch, const DecisionTensor& v,
                              const UeCoefficients& coeffs);

/// max_n ||V_n||_F^2 / p_t.
double max_power_ratio(const DecisionTensor& v, double p_t);
/// ||V_n||_F^2 <= p_t * (1 + rel_tol) for every AP.
bool power_feasible(const DecisionTensor& v, double p_t, double rel_tol = 1e-8);

}  // namespace cellfree
