#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cellfree/array.hpp"
#include "cellfree/metrics.hpp"
#include "cellfree/rng.hpp"
#include "cellfree/scenario.hpp"
#include "cellfree/wmmse.hpp"

// Over-the-air exchange: APs and UEs share optimization state through
// precoded pilots only. Downlink pilots let each UE measure the gain
// snapshot; three uplink pilots (subcarriers f1, f2, f3 of every RB) let each
// AP measure its own a, d and m terms. Uplink channels equal downlink ones.
namespace cellfree {

/// Orthonormal pilot rows s_k (length tau) plus the downlink/uplink scalings.
struct PilotBook {
  ComplexMatrix pilots;  // (k, tau)
  double eta_d = 1.0;
  double eta_u = 1.0;

  std::size_t length() const { return pilots.cols(); }
  /// Rows of the K x K unitary DFT matrix, tau = K.
  static PilotBook dft(std::size_t n_ues);
  /// Throws ConfigError on tau < K, non-unit norms, non-orthogonal rows or
  /// nonpositive scalings.
  void validate(std::size_t n_ues) const;
};

/// i.i.d. complex AWGN per received pilot symbol. Off by default.
struct PilotNoiseConfig {
  bool enabled = false;
  double downlink_variance_w = 0.0;  // at each UE
  double uplink_variance_w = 0.0;    // at each AP
};

struct DownlinkResult {
  ComplexTensor3 received;        // y(k, f, tau), eta_d included
  ComplexTensor3 gain_estimates;  // (k, f, k'), estimates of the gain snapshot
  RealMatrix interference_power;  // (k, f), estimate of sum_{j != k} |G~(k, f, j)|^2
};

/// All APs transmit eta_d * sum_k v(m, k, f) s_k on RB f; UE k matched-filters
/// with every pilot. `v_current` is the freshness mix the caller assembled.
DownlinkResult downlink_phase(const ChannelRealization& ch, const DecisionTensor& v_current,
                              const PilotBook& book, const PilotNoiseConfig& noise,
                              CounterRng& rng);

/// Receiver and weight update at the UEs from estimated gains: the MMSE
/// receiver, its MSE, and the floored reciprocal.
UeCoefficients ue_coefficient_update(const DownlinkResult& dl, const RealMatrix& noise_power_w);

/// UE k sends eta_u w U s_k on f1, eta_u sqrt(w) U s_k on f2 and
/// eta_u w |U|^2 conj(y_k) on f3. Each AP in `aps` estimates
/// a = <s_k, z1> / eta_u, d = ||z2||^2 / eta_u^2 and
/// m = <conj(s_k), z3> / (eta_u eta_d). Entries for APs not listed stay empty.
std::vector<ApUpdateTerms> uplink_phase(const ChannelRealization& ch, const UeCoefficients& coeffs,
                                        const ComplexTensor3& ue_received, const PilotBook& book,
                                        const PilotNoiseConfig& noise, CounterRng& rng,
                                        std::span<const std::size_t> aps);

/// 1 when every ||V_m||_F^2 <= p_t, else sqrt(p_t) / max_m ||V_m||_F.
double downlink_scaling(const DecisionTensor& v_current, double p_t);
/// sqrt(p_ue / max_k e_k), e_k being UE k's unscaled pilot energy over f1, f2,
/// f3 and all RBs; 1 if no UE transmits anything.
double uplink_scaling(const UeCoefficients& coeffs, const ComplexTensor3& ue_received, double p_ue);

/// Energy AP m radiates in one downlink phase.
double downlink_pilot_energy(const DecisionTensor& v_current, const PilotBook& book, std::size_t ap);
/// Energy UE k radiates in one uplink phase.
double uplink_pilot_energy(const UeCoefficients& coeffs, const ComplexTensor3& ue_received,
                           const PilotBook& book, std::size_t ue);

/// What the APs and UEs learned in one time step.
struct OtaReport {
  std::vector<ApUpdateTerms> terms;  // by AP index; empty for APs not updating
  ComplexTensor3 ue_gains;
  RealMatrix interference_power;
  PilotBook book;                    // with the scalings that were used
};

struct OtaPowers {
  double p_t = 1.0;
  double p_ue = 1.0;
};

/// One time step of the exchange: downlink, optional UE coefficient refresh
/// (written back to `coeffs`), then uplink for `aps`.
OtaReport ota_round(const ChannelRealization& ch, const DecisionTensor& v_current,
                    UeCoefficients& coeffs, bool refresh_ue_coefficients, const OtaPowers& powers,
                    const PilotNoiseConfig& noise, CounterRng& rng,
                    std::span<const std::size_t> aps);

struct OverheadCounts {
  std::size_t dl_phases = 0;
  std::size_t ul_phases = 0;
  std::size_t dl_pilot_symbols = 0;  // tau per RB per phase
  std::size_t ul_pilot_symbols = 0;  // 3 tau per RB per phase (f1, f2, f3)

  OverheadCounts& operator+=(const OverheadCounts& o);
  friend bool operator==(const OverheadCounts&, const OverheadCounts&) = default;
};

/// Cost of one downlink + uplink phase pair.
OverheadCounts phase_pair_overhead(std::size_t tau, std::size_t n_rbs);
/// Cost of `iterations` full iterations with `time_steps_per_iteration` phase
/// pairs each (N sequential, Q clustered, 1 parallel).
OverheadCounts overhead_for_iterations(std::size_t time_steps_per_iteration, std::size_t iterations,
                                       std::size_t tau, std::size_t n_rbs);

}  // namespace cellfree
