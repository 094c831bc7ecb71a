#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellfree/array.hpp"

namespace cellfree {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Cluster = std::vector<std::size_t>;

/// Splits APs 0..n-1 into q contiguous groups of near-equal size.
std::vector<Cluster> contiguous_clusters(std::size_t n_aps, std::size_t q);
std::vector<Cluster> singleton_clusters(std::size_t n_aps);

/// Static description of a cell-free network: node counts, geometry, radio
/// parameters and the AP clustering used by the cluster-wise variant.
/// Defaults are the 16-AP / 8-UE / 11-RB reference setup.
struct Scenario {
  std::size_t n_aps = 16;
  std::size_t n_ues = 8;
  std::size_t n_rbs = 11;
  std::size_t subcarriers_per_rb = 12;
  double area_side_m = 300.0;
  double ap_height_m = 10.0;
  double ue_height_m = 0.0;
  double min_distance_m = 0.0;
  double carrier_freq_ghz = 2.0;
  double bandwidth_hz = 10e6;
  double subcarrier_spacing_hz = 60e3;
  double noise_figure_db = 7.0;
  double p_ap_dbm = 25.0;
  double p_ue_dbm = 23.0;
  std::vector<Cluster> clusters = contiguous_clusters(16, 4);
  std::uint64_t seed = 1;

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;

  double p_ap_w() const;
  double p_ue_w() const;

  /// 16 APs, 8 UEs, 11 RBs, Q = 4 clusters of 4.
  static Scenario reference();
  /// Small profile for fast runs: 8 APs, 4 UEs, 4 RBs, Q = 4.
  static Scenario desk();
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// One drop: channels h(n, k, f), large-scale pathloss in dB (n, k) and the
/// per-(k, f) noise power. Immutable after construction.
struct ChannelRealization {
  ComplexTensor3 h;           // (n, k, f)
  RealMatrix beta_db;         // (n, k) pathloss, h = sqrt(10^(-beta/10)) * h_small
  RealMatrix noise_power_w;   // (k, f)
  std::vector<Point2> ap_positions;
  std::vector<Point2> ue_positions;
  std::size_t subcarriers_per_rb = 1;

  std::size_t n_aps() const { return h.dim0(); }
  std::size_t n_ues() const { return h.dim1(); }
  std::size_t n_rbs() const { return h.dim2(); }

  /// Wraps explicit channels with uniform noise (tests and imported datasets).
  static ChannelRealization from_channels(ComplexTensor3 h, double noise_power_w,
                                          std::size_t subcarriers_per_rb = 1);
};

/// 3GPP NLoS urban-microcell pathloss in dB. Throws std::domain_error for
/// distance_m <= 0.
double pathloss_db(double distance_m, double carrier_freq_ghz);

/// Per-RB noise power: -174 + 10 log10(B) + NF - 10 log10(F) dBm.
double noise_power_dbm(const Scenario& scenario);

/// Deterministic in (scenario.seed, drop_index).
ChannelRealization generate_drop(const Scenario& scenario, std::uint64_t drop_index);

/// Key-value config: one `key = value` per line, `#` comments. Clusters are
/// written as `clusters = 0 1 | 2 3` or via `n_clusters = Q` (contiguous).
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);
void write_scenario(const Scenario& scenario, std::ostream& out);
std::string scenario_to_string(const Scenario& scenario);
/// FNV-1a of the canonical serialization, as 16 hex digits.
std::string scenario_hash(const Scenario& scenario);

}  // namespace cellfree
