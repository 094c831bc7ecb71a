#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellfree/array.hpp"
#include "cellfree/metrics.hpp"
#include "cellfree/scenario.hpp"

// Interface between the simulator and an external trainer for the
// distributed learned policy: per-AP input features, output post-processing,
// and the dataset / decision file formats (see docs/dataset_format.md).
namespace cellfree {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input of one AP's sub-network: R = conj(a - m) and B = 1_K d (every row
/// equals the per-RB d vector).
struct ApFeatures {
  ComplexMatrix r;  // (k, f)
  RealMatrix b;     // (k, f)

  friend bool operator==(const ApFeatures&, const ApFeatures&) = default;
};

/// Features every AP acquires from one parallel exchange: gain snapshot
/// G~ = sum_n h v_prev (all decisions stale), UE coefficients as given.
std::vector<ApFeatures> ddm_features(const ChannelRealization& ch, const DecisionTensor& v_prev,
                                     const UeCoefficients& coeffs);
/// Same, with the UEs' MMSE coefficients computed from v_prev.
std::vector<ApFeatures> ddm_step_features(const ChannelRealization& ch, const DecisionTensor& v_prev);

/// Scale raw to ||.||_F^2 = p_t, then gamma * v_prev + (1 - gamma) * scaled.
/// A zero raw output skips the scaling and yields gamma * v_prev.
ComplexMatrix postprocess_decision(const ComplexMatrix& raw, const ComplexMatrix& v_prev_ap,
                                   double gamma, double p_t);

struct DdmRunConfig {
  std::size_t steps = 2;  // L
  double gamma = 0.5;

  void validate() const;
  /// 0.5 for L <= 2, 0.7 for L >= 3.
  static DdmRunConfig with_default_gamma(std::size_t steps);
};

inline constexpr const char* kDatasetSchema = "cellfree.ddm.dataset";
inline constexpr const char* kDecisionSchema = "cellfree.ddm.decisions";
inline constexpr int kSchemaVersion = 1;

/// One drop as stored in the dataset: channels, noise, the initial decisions
/// V(0) and the step-1 features computed from them.
struct FeatureRecord {
  std::uint64_t drop_id = 0;
  std::size_t step = 1;
  std::uint64_t seed = 0;
  std::string scenario_hash;
  ComplexTensor3 h;             // (n, k, f)
  RealMatrix noise_power_w;     // (k, f)
  DecisionTensor v_prev;        // (n, k, f)
  std::vector<ApFeatures> features;  // per AP

  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct DatasetHeader {
  Scenario scenario;
  std::string scenario_hash;
  std::size_t n_drops = 0;
  DdmRunConfig run;
};

struct Dataset {
  DatasetHeader header;
  std::vector<FeatureRecord> records;

  ChannelRealization channel(std::size_t index) const;
};

FeatureRecord make_feature_record(const Scenario& scenario, std::uint64_t drop_id);

std::string encode_header(const DatasetHeader& header);
std::string encode_record(const FeatureRecord& record);
FeatureRecord decode_record(const std::string& line);

/// One JSON object per line: a header, then one record per drop 0..n_drops-1.
void export_dataset(const Scenario& scenario, std::size_t n_drops, const DdmRunConfig& run,
                    const std::string& path);
Dataset load_dataset(const std::string& path);

struct DecisionEntry {
  std::uint64_t drop_id = 0;
  std::size_t ap = 0;
  ComplexMatrix v;  // (k, f)
};

std::string encode_decision(const DecisionEntry& entry);
void write_decisions(const std::string& path, const std::vector<DecisionEntry>& entries);
/// Splits a full decision tensor into per-AP entries.
std::vector<DecisionEntry> decision_entries(std::uint64_t drop_id, const DecisionTensor& v);
/// Decisions keyed by drop. Throws DatasetError on schema or shape problems
/// and when some (drop, AP) pair of the dataset is absent; the message lists
/// the incomplete drops.
std::map<std::uint64_t, DecisionTensor> load_decisions(const std::string& path, const Dataset& dataset);

struct DropEvaluation {
  std::uint64_t drop_id = 0;
  double sr_per_subcarrier = 0.0;
  double max_power_ratio = 0.0;
};

struct EvaluationReport {
  std::vector<DropEvaluation> drops;
  double mean_sr_per_subcarrier = 0.0;
  std::size_t power_violations = 0;  // APs above p_t * (1 + 1e-6)
};

EvaluationReport evaluate_decisions(const Dataset& dataset,
                                    const std::map<std::uint64_t, DecisionTensor>& decisions);
EvaluationReport import_decisions(const Dataset& dataset, const std::string& path);

}  // namespace cellfree
