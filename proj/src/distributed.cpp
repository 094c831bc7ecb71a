#include "cellfree/distributed.hpp"

#include <algorithm>
#include <cmath>

namespace cellfree {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kSequential: return "swmmse";
    case Variant::kParallel: return "pwmmse";
    case Variant::kClustered: return "cswmmse";
  }
  return "unknown";
}

std::string to_string(ExchangeMode m) {
  return m == ExchangeMode::kGenie ? "genie" : "ota";
}

double StepSizeRule::operator()(std::size_t t) const {
  if (kind == Kind::kConstant) return value;
  return 1.0 - 1.0 / std::pow(1.0 + rate * static_cast<double>(t), exponent);
}

StepSizeRule StepSizeRule::constant(double gamma) {
  StepSizeRule r;
  r.kind = Kind::kConstant;
  r.value = gamma;
  return r;
}

StepSizeRule StepSizeRule::diminishing(double rate, double exponent) {
  StepSizeRule r;
  r.kind = Kind::kDiminishing;
  r.rate = rate;
  r.exponent = exponent;
  return r;
}

StepSizeRule default_step_size(const std::vector<Cluster>& groups) {
  const bool all_singletons =
      std::all_of(groups.begin(), groups.end(), [](const Cluster& c) { return c.size() == 1; });
  if (all_singletons) return StepSizeRule::constant(0.0);
  if (groups.size() == 1) return StepSizeRule::diminishing();
  return StepSizeRule::constant(kClusteredStepSize);
}

UpdateSchedule UpdateSchedule::sequential(std::size_t n_aps) {
  UpdateSchedule s;
  s.variant = Variant::kSequential;
  s.groups = singleton_clusters(n_aps);
  s.step_size = default_step_size(s.groups);
  return s;
}

UpdateSchedule UpdateSchedule::parallel(std::size_t n_aps) {
  UpdateSchedule s;
  s.variant = Variant::kParallel;
  s.groups = contiguous_clusters(n_aps, 1);
  s.step_size = default_step_size(s.groups);
  return s;
}

UpdateSchedule UpdateSchedule::clustered(std::vector<Cluster> clusters) {
  UpdateSchedule s;
  s.variant = Variant::kClustered;
  s.groups = std::move(clusters);
  s.step_size = default_step_size(s.groups);
  return s;
}

void UpdateSchedule::validate(std::size_t n_aps) const {
  std::vector<int> seen(n_aps, 0);
  for (const auto& g : groups) {
    if (g.empty()) throw ConfigError("schedule: empty group");
    for (std::size_t ap : g) {
      if (ap >= n_aps) throw ConfigError("schedule: AP index out of range");
      if (seen[ap]++) throw ConfigError("schedule: AP scheduled twice");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw ConfigError("schedule: every AP must be scheduled");
  if (variant == Variant::kSequential && groups.size() != n_aps)
    throw ConfigError("schedule: sequential requires singleton groups");
  if (variant == Variant::kParallel && groups.size() != 1)
    throw ConfigError("schedule: parallel requires a single group");
  if (step_size.kind == StepSizeRule::Kind::kConstant) {
    if (!(step_size.value >= 0.0 && step_size.value < 1.0))
      throw ConfigError("schedule: step size must lie in [0, 1)");
  } else if (!(step_size.rate > 0.0 && step_size.exponent > 0.0)) {
    throw ConfigError("schedule: diminishing step size needs positive rate and exponent");
  }
}

std::size_t UpdateSchedule::group_of(std::size_t ap) const {
  for (std::size_t q = 0; q < groups.size(); ++q)
    if (std::find(groups[q].begin(), groups[q].end(), ap) != groups[q].end()) return q;
  throw std::invalid_argument("group_of: AP not scheduled");
}

void IterationState::begin_iteration() {
  ++t;
  v_prev = v;
  next_group = 0;
  ue_refresh_pending = true;
}

IterationState initial_state(const DecisionTensor& v0) {
  IterationState s;
  s.v = v0;
  s.v_prev = v0;
  return s;
}

DecisionTensor assemble_current(const IterationState& state, const UpdateSchedule& schedule,
                                std::size_t group) {
  DecisionTensor out = state.v_prev;
  for (std::size_t q = 0; q < group && q < schedule.groups.size(); ++q)
    for (std::size_t m : schedule.groups[q]) out.set_ap(m, state.v.ap(m));
  return out;
}

ComplexTensor3 assemble_g_tilde(const ChannelRealization& ch, const IterationState& state,
                                const UpdateSchedule& schedule, std::size_t ap) {
  const std::size_t q = schedule.variant == Variant::kParallel ? 0 : schedule.group_of(ap);
  return effective_gains(ch.h, assemble_current(state, schedule, q));
}

void time_step(const ChannelRealization& ch, IterationState& state, const UpdateSchedule& schedule,
               const ExchangeConfig& ex, CounterRng& rng) {
  const std::size_t q = state.next_group;
  require(q < schedule.groups.size(), "time_step: iteration already complete");
  const Cluster& group = schedule.groups[q];
  const DecisionTensor current = assemble_current(state, schedule, q);

  std::vector<ApUpdateTerms> terms;
  if (ex.mode == ExchangeMode::kGenie) {
    if (state.ue_refresh_pending) state.coeffs = mmse_coefficients(ch, current);
    const ComplexTensor3 g = effective_gains(ch.h, current);
    terms.resize(ch.n_aps());
    for (std::size_t n : group) terms[n] = ap_terms_direct(ch, state.coeffs, n, g);
  } else {
    OtaReport rep = ota_round(ch, current, state.coeffs, state.ue_refresh_pending,
                              OtaPowers{ex.p_t, ex.p_ue}, ex.noise, rng, group);
    terms = std::move(rep.terms);
  }
  state.ue_refresh_pending = false;

  const double gamma = schedule.step_size(state.t);
  for (std::size_t n : group) {
    const ComplexMatrix prev = state.v_prev.ap(n);
    const ApUpdate upd = ap_best_response(terms[n], prev, ex.p_t);
    ComplexMatrix blended = upd.v;
    if (gamma != 0.0) {
      for (std::size_t i = 0; i < blended.size(); ++i)
        blended.flat()[i] = gamma * prev.flat()[i] + (1.0 - gamma) * upd.v.flat()[i];
    }
    state.v.set_ap(n, blended);
  }

  state.overhead += phase_pair_overhead(ch.n_ues(), ch.n_rbs());
  ++state.time_steps;
  ++state.next_group;
}

RunResult run(const ChannelRealization& ch, const UpdateSchedule& schedule, const RunConfig& cfg,
              const DecisionTensor& v0) {
  schedule.validate(ch.n_aps());
  require(v0.v.same_shape(ch.h), "run: initial decision shape mismatch");
  const double tol =
      cfg.tolerance > 0.0 ? cfg.tolerance : default_outer_tolerance(ch.n_aps(), cfg.exchange.p_t);

  IterationState state = initial_state(v0);
  CounterRng rng(cfg.noise_seed, cfg.noise_drop, Stream::kPilotNoise);

  RunResult res;
  DecisionTensor best = v0;
  double best_sr = sum_rate_per_subcarrier(ch, v0);
  bool budget_hit = false;

  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    state.begin_iteration();
    while (state.next_group < schedule.groups.size()) {
      if (cfg.max_time_steps != 0 && state.time_steps >= cfg.max_time_steps) {
        budget_hit = true;
        break;
      }
      time_step(ch, state, schedule, cfg.exchange, rng);
    }
    if (state.next_group == 0) break;

    IterationRecord row;
    row.iteration = state.t;
    row.variant = schedule.variant;
    row.sr_per_subcarrier = sum_rate_per_subcarrier(ch, state.v);
    row.objective = weighted_mse_objective(ch, state.v, state.coeffs);
    row.decision_change = frobenius_distance(state.v.v, state.v_prev.v);
    row.time_steps = state.time_steps;
    row.overhead = state.overhead;
    state.history.push_back(row);

    if (budget_hit) break;
    if (row.sr_per_subcarrier > best_sr) {
      best_sr = row.sr_per_subcarrier;
      best = state.v;
    }
    if (row.decision_change <= tol) {
      res.converged = true;
      break;
    }
    if (cfg.max_time_steps != 0 && state.time_steps >= cfg.max_time_steps) {
      budget_hit = true;
      break;
    }
  }

  res.v = (res.converged || budget_hit) ? state.v : best;
  res.trace = std::move(state.history);
  res.iterations = res.trace.size();
  res.time_steps = state.time_steps;
  res.overhead = state.overhead;
  return res;
}

OverheadCounts overhead_accounting(const std::vector<IterationRecord>& trace) {
  return trace.empty() ? OverheadCounts{} : trace.back().overhead;
}

DecisionTensor random_initial_decisions(std::size_t n_aps, std::size_t n_ues, std::size_t n_rbs,
                                        double p_t, CounterRng& rng) {
  require(p_t > 0.0, "random_initial_decisions: p_t must be positive");
  DecisionTensor v(n_aps, n_ues, n_rbs);
  for (auto& x : v.v.flat()) x = rng.complex_normal();
  for (std::size_t n = 0; n < n_aps; ++n) {
    const double p = v.ap_power(n);
    const double scale = std::sqrt(0.5 * p_t / p);
    for (std::size_t k = 0; k < n_ues; ++k)
      for (std::size_t f = 0; f < n_rbs; ++f) v.v(n, k, f) *= scale;
  }
  return v;
}

DecisionTensor initial_decisions(const Scenario& s, std::uint64_t drop_index) {
  CounterRng rng(s.seed, drop_index, Stream::kInitialDecisions);
  return random_initial_decisions(s.n_aps, s.n_ues, s.n_rbs, s.p_ap_w(), rng);
}

}  // namespace cellfree
