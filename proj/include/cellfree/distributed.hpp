#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cellfree/metrics.hpp"
#include "cellfree/ota.hpp"
#include "cellfree/rng.hpp"
#include "cellfree/scenario.hpp"
#include "cellfree/wmmse.hpp"

namespace cellfree {

enum class Variant { kSequential, kParallel, kClustered };
enum class ExchangeMode { kGenie, kOta };

std::string to_string(Variant v);
std::string to_string(ExchangeMode m);

/// gamma(t) = constant, or 1 - 1 / (1 + rate * t)^exponent (diminishing).
struct StepSizeRule {
  enum class Kind { kConstant, kDiminishing };
  Kind kind = Kind::kConstant;
  double value = 0.0;
  double rate = 0.5;
  double exponent = 0.6;

  double operator()(std::size_t t) const;

  static StepSizeRule constant(double gamma);
  static StepSizeRule diminishing(double rate = 0.5, double exponent = 0.6);
};

/// Which APs update together, in which order, and how strongly each update
/// is damped. Groups run in order; all APs in a group update in one time step.
struct UpdateSchedule {
  Variant variant = Variant::kSequential;
  std::vector<Cluster> groups;
  StepSizeRule step_size;

  /// Singleton groups in ascending AP order, gamma = 0.
  static UpdateSchedule sequential(std::size_t n_aps);
  /// One group holding every AP, diminishing gamma.
  static UpdateSchedule parallel(std::size_t n_aps);
  /// Groups are the given clusters in order. The default step size follows
  /// the group structure, so Q = N matches sequential and Q = 1 matches
  /// parallel.
  static UpdateSchedule clustered(std::vector<Cluster> clusters);

  /// Throws ConfigError unless groups partition 0..n_aps-1 and gamma(t) in [0, 1).
  void validate(std::size_t n_aps) const;
  /// Index of the group containing `ap`.
  std::size_t group_of(std::size_t ap) const;
};

/// Damping of the clustered schedule when 1 < Q < N.
inline constexpr double kClusteredStepSize = 0.1;

/// Step size used when a schedule does not override it: 0 for singleton
/// groups, diminishing for a single group, kClusteredStepSize otherwise.
StepSizeRule default_step_size(const std::vector<Cluster>& groups);

struct IterationRecord {
  std::size_t iteration = 0;
  Variant variant = Variant::kSequential;
  double sr_per_subcarrier = 0.0;
  double objective = 0.0;  // weighted MSE with this iteration's U, w
  double decision_change = 0.0;
  std::size_t time_steps = 0;  // cumulative
  OverheadCounts overhead;     // cumulative
};

/// Mutable state of a distributed run. `v` mixes fresh decisions (groups
/// already visited in iteration t) and stale ones; `v_prev` is V(t-1).
struct IterationState {
  DecisionTensor v;
  DecisionTensor v_prev;
  UeCoefficients coeffs;
  std::size_t t = 0;
  std::size_t next_group = 0;
  bool ue_refresh_pending = true;
  std::size_t time_steps = 0;
  OverheadCounts overhead;
  std::vector<IterationRecord> history;

  /// Starts iteration t + 1 from the current decisions.
  void begin_iteration();
};

IterationState initial_state(const DecisionTensor& v0);

/// Decisions the APs hold while group `group` updates: fresh for earlier
/// groups, V(t-1) for this group and later ones.
DecisionTensor assemble_current(const IterationState& state, const UpdateSchedule& schedule,
                                std::size_t group);

/// Gain snapshot (k, f, k') seen by `ap` in its time step.
ComplexTensor3 assemble_g_tilde(const ChannelRealization& ch, const IterationState& state,
                                const UpdateSchedule& schedule, std::size_t ap);

struct ExchangeConfig {
  ExchangeMode mode = ExchangeMode::kOta;
  PilotNoiseConfig noise;
  double p_t = 1.0;
  double p_ue = 1.0;
};

/// Runs the exchange for group `state.next_group`, updates every AP of the
/// group in closed form, blends with gamma(t) and advances next_group.
/// Decisions of other APs are untouched.
void time_step(const ChannelRealization& ch, IterationState& state, const UpdateSchedule& schedule,
               const ExchangeConfig& exchange, CounterRng& rng);

struct RunConfig {
  std::size_t max_iterations = 500;
  /// Stop when ||V(t) - V(t-1)||_F <= tolerance. 0 selects 1e-3 sqrt(N p_t).
  double tolerance = 0.0;
  /// Hard budget on time steps (0 = unlimited). A budget that ends inside
  /// an iteration still records that partial iteration.
  std::size_t max_time_steps = 0;
  ExchangeConfig exchange;
  std::uint64_t noise_seed = 0;
  std::uint64_t noise_drop = 0;
};

struct RunResult {
  DecisionTensor v;
  std::vector<IterationRecord> trace;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t time_steps = 0;
  OverheadCounts overhead;
};

/// Algorithm driver shared by SWMMSE, PWMMSE and C-SWMMSE. Without
/// convergence (and without a time-step budget) the best-rate iterate is
/// returned with converged = false.
RunResult run(const ChannelRealization& ch, const UpdateSchedule& schedule, const RunConfig& config,
              const DecisionTensor& v0);

/// Totals from a recorded trace.
OverheadCounts overhead_accounting(const std::vector<IterationRecord>& trace);

/// i.i.d. complex Gaussian entries scaled so every ||V_n||_F^2 = p_t / 2.
DecisionTensor random_initial_decisions(std::size_t n_aps, std::size_t n_ues, std::size_t n_rbs,
                                        double p_t, CounterRng& rng);
/// Initializer stream of a scenario drop.
DecisionTensor initial_decisions(const Scenario& scenario, std::uint64_t drop_index);

}  // namespace cellfree
