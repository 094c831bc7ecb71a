#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cellfree/ddm_bridge.hpp"
#include "cellfree/distributed.hpp"
#include "cellfree/scenario.hpp"

namespace cellfree {

enum class Algorithm { kCentralized, kSwmmse, kCswmmse, kPwmmse };
enum class Mode { kGenie, kOtaNoiseless, kOtaNoisy };

std::string to_string(Algorithm a);
std::string to_string(Mode m);
/// Accepts cen, swmmse, cswmmse, pwmmse. Throws ConfigError otherwise.
Algorithm parse_algorithm(const std::string& name);
/// Accepts genie, ota, ota-noiseless, ota-noisy.
Mode parse_mode(const std::string& name);

struct ExperimentSpec {
  Scenario scenario = Scenario::desk();
  std::vector<Algorithm> algorithms = {Algorithm::kCentralized, Algorithm::kSwmmse, Algorithm::kCswmmse,
                                       Algorithm::kPwmmse};
  std::size_t drops = 20;
  Mode mode = Mode::kOtaNoiseless;
  std::string output_dir = "results";
  std::size_t max_iterations = 1000;
  /// Outer stop for every algorithm: ||V(t) - V(t-1)||_F <= factor * sqrt(N p_t).
  double tolerance_factor = 1e-4;
  /// Worker threads; 0 reads CELLFREE_WORKERS, then the hardware count.
  std::size_t workers = 0;

  /// Throws ConfigError unless drops >= 1 and algorithms is nonempty.
  void validate() const;
};

/// CELLFREE_WORKERS if set and positive, else the hardware thread count.
std::size_t worker_count(std::size_t requested = 0);

/// Runs job(i) for i in [0, count) on a pool of `workers` threads.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job);

struct TraceRow {
  std::size_t iteration = 0;
  double sr_per_subcarrier = 0.0;
  double objective = 0.0;
  double decision_change = 0.0;
  OverheadCounts overhead;  // cumulative
};

struct AlgorithmOutcome {
  Algorithm algorithm = Algorithm::kCentralized;
  std::uint64_t drop = 0;
  bool ok = false;
  std::string error;
  double sr_per_subcarrier = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double max_power_ratio = 0.0;
  OverheadCounts overhead;
  std::vector<TraceRow> trace;
  DecisionTensor v;
};

struct AlgorithmSettings {
  Mode mode = Mode::kOtaNoiseless;
  std::size_t max_iterations = 1000;
  double tolerance_factor = 1e-4;
  std::size_t max_time_steps = 0;  // distributed variants only; 0 = unlimited
  std::uint64_t noise_seed = 0;
};

/// Exchange settings of a mode. ota-noisy draws pilot noise at the thermal
/// noise power of the scenario on both links.
ExchangeConfig exchange_for(const Scenario& scenario, Mode mode);

/// One algorithm on one drop from the given V(0). Never throws: failures
/// land in `error` with ok = false.
AlgorithmOutcome run_algorithm(Algorithm algorithm, const Scenario& scenario, const ChannelRealization& ch,
                               const DecisionTensor& v0, std::uint64_t drop, const AlgorithmSettings& settings);

struct CompareResult {
  std::vector<Algorithm> algorithms;
  std::vector<std::vector<AlgorithmOutcome>> per_drop;  // [drop][algorithm]

  /// Mean SR/C over drops where the algorithm succeeded.
  double mean_sr(Algorithm a) const;
  std::size_t failures(Algorithm a) const;
};

/// Every algorithm on shared drops and shared V(0).
CompareResult run_compare(const ExperimentSpec& spec);

/// summary.csv, <alg>_sr.csv, <alg>_convergence.csv, <alg>_overhead.csv,
/// traces/drop_NNNN.csv, drops.jsonl and decisions/<alg>.jsonl.
void write_compare_outputs(const ExperimentSpec& spec, const CompareResult& result);

/// SR/C of numerical algorithms stopped after L time steps, started from the
/// dataset's V(0). Rows: (algorithm, L, drop, SR/C).
struct TruncatedRow {
  Algorithm algorithm = Algorithm::kPwmmse;
  std::size_t steps = 0;
  std::uint64_t drop = 0;
  double sr_per_subcarrier = 0.0;
};

std::vector<TruncatedRow> run_truncated(const Dataset& dataset, const std::vector<Algorithm>& algorithms,
                                        const std::vector<std::size_t>& steps, Mode mode, std::size_t workers = 0);

/// Mean SR/C per (algorithm, L) from truncated rows.
double mean_truncated_sr(const std::vector<TruncatedRow>& rows, Algorithm a, std::size_t steps);

void write_truncated_csv(const std::string& path, const std::vector<TruncatedRow>& rows);
void write_evaluation_csv(const std::string& path, const EvaluationReport& report);

}  // namespace cellfree
