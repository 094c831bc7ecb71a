#include "cellfree/oracles/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "cellfree/distributed.hpp"
#include "cellfree/metrics.hpp"
#include "cellfree/oracles/reference.hpp"
#include "cellfree/ota.hpp"
#include "cellfree/rng.hpp"
#include "cellfree/scenario.hpp"

namespace cellfree::oracle {
namespace {

constexpr std::uint64_t kOracleDropBase = 1u << 20;

double relative_error(const ComplexMatrix& est, const ComplexMatrix& ref) {
  return frobenius_distance(est, ref) / std::max(std::sqrt(squared_norm(ref)), 1e-300);
}

double relative_error(const std::vector<double>& est, const std::vector<double>& ref) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    diff += (est[i] - ref[i]) * (est[i] - ref[i]);
    norm += ref[i] * ref[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-300);
}

double relative_error(const ComplexTensor3& est, const ComplexTensor3& ref) {
  return frobenius_distance(est, ref) / std::max(std::sqrt(squared_norm(ref)), 1e-300);
}

double relative_error(const RealMatrix& est, const RealMatrix& ref) {
  return frobenius_distance(est, ref) / std::max(std::sqrt(squared_norm(ref)), 1e-300);
}

struct SolvedInstance {
  RandomInstance inst;
  std::size_t ap = 0;
  ApUpdate update;
};

SolvedInstance solve_instance(std::uint64_t seed, std::size_t i, const ApUpdateFn& update) {
  CounterRng rng(seed, kOracleDropBase + i, Stream::kFading);
  SolvedInstance s{random_instance(rng), 0, {}};
  s.ap = static_cast<std::size_t>(rng.uniform() * static_cast<double>(s.inst.ch.n_aps()));
  const ComplexTensor3 g = effective_gains(s.inst.ch.h, s.inst.base);
  const ApUpdateTerms terms = ap_terms_direct(s.inst.ch, s.inst.coeffs, s.ap, g);
  s.update = update(terms, s.inst.base.ap(s.ap), s.inst.p_t);
  return s;
}

SuiteResult finish(SuiteResult r) {
  r.passed = r.cases > 0 && r.worst <= r.threshold;
  return r;
}

void compare_traces(const RunResult& a, const RunResult& b, double& worst) {
  if (a.trace.size() != b.trace.size()) {
    worst = std::max(worst, 1.0);
    return;
  }
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); };
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    worst = std::max(worst, rel(a.trace[i].sr_per_subcarrier, b.trace[i].sr_per_subcarrier));
    worst = std::max(worst, rel(a.trace[i].objective, b.trace[i].objective));
    worst = std::max(worst, rel(a.trace[i].decision_change, b.trace[i].decision_change));
  }
  worst = std::max(worst, frobenius_distance(a.v.v, b.v.v) / std::max(1e-300, std::sqrt(squared_norm(b.v.v))));
}

Scenario suite_scenario(std::uint64_t seed) {
  Scenario s = Scenario::desk();
  s.seed = seed;
  return s;
}

}  // namespace

SuiteResult check_closed_form_objective(std::uint64_t seed, std::size_t instances, const ApUpdateFn& update) {
  SuiteResult r{"closed_form_vs_convex", false, 0, 0.0, 1e-6, ""};
  for (std::size_t i = 0; i < instances; ++i) {
    const SolvedInstance s = solve_instance(seed, i, update);
    const LocalProblem p{&s.inst.ch, &s.inst.base, &s.inst.coeffs, s.ap, s.inst.p_t};
    const ConvexSolve pg = projected_gradient(p);
    const double f_cf = p.objective(s.update.v);
    double gap = std::abs(f_cf - pg.objective) / std::max(std::abs(pg.objective), 1e-300);
    if (squared_norm(s.update.v) > s.inst.p_t * (1.0 + 1e-8)) gap = std::max(gap, 1.0);
    if (gap > r.worst) {
      r.worst = gap;
      std::ostringstream os;
      os << "instance " << i << ": closed form " << f_cf << ", oracle " << pg.objective;
      r.detail = os.str();
    }
    ++r.cases;
  }
  return finish(r);
}

SuiteResult check_kkt(std::uint64_t seed, std::size_t instances, const ApUpdateFn& update) {
  SuiteResult r{"kkt_residual", false, 0, 0.0, 1e-6, ""};
  for (std::size_t i = 0; i < instances; ++i) {
    const SolvedInstance s = solve_instance(seed, i, update);
    const LocalProblem p{&s.inst.ch, &s.inst.base, &s.inst.coeffs, s.ap, s.inst.p_t};
    const double norm_v = std::sqrt(squared_norm(s.update.v));
    const double res = kkt_residual(p, s.update.v, s.update.lagrange.mu) / (1.0 + norm_v);
    if (res > r.worst) {
      r.worst = res;
      std::ostringstream os;
      os << "instance " << i << ": mu " << s.update.lagrange.mu;
      r.detail = os.str();
    }
    ++r.cases;
  }
  return finish(r);
}

SuiteResult check_ota_fidelity(std::uint64_t seed, std::size_t instances) {
  SuiteResult r{"ota_fidelity", false, 0, 0.0, 1e-9, ""};
  for (std::size_t i = 0; i < instances; ++i) {
    CounterRng rng(seed, kOracleDropBase + i, Stream::kFading);
    RandomInstance inst = random_instance(rng);
    const std::size_t N = inst.ch.n_aps();
    std::vector<std::size_t> aps(N);
    for (std::size_t n = 0; n < N; ++n) aps[n] = n;
    const ComplexTensor3 g = naive_effective_gains(inst.ch.h, inst.base);

    CounterRng noise_rng(seed, i, Stream::kPilotNoise);
    const OtaPowers powers{inst.p_t, 0.5 + rng.uniform()};
    const double worst_before = r.worst;

    // Fixed coefficients: AP-side terms and UE-side gains.
    UeCoefficients fixed = inst.coeffs;
    const OtaReport rep = ota_round(inst.ch, inst.base, fixed, false, powers, {}, noise_rng, aps);
    r.worst = std::max(r.worst, relative_error(rep.ue_gains, g));
    for (std::size_t n = 0; n < N; ++n) {
      const ApUpdateTerms ref = ap_terms_direct(inst.ch, inst.coeffs, n, g);
      r.worst = std::max(r.worst, relative_error(rep.terms[n].a, ref.a));
      r.worst = std::max(r.worst, relative_error(rep.terms[n].d, ref.d));
      r.worst = std::max(r.worst, relative_error(rep.terms[n].m, ref.m));
    }

    // Refreshed coefficients at the UEs.
    UeCoefficients refreshed = inst.coeffs;
    ota_round(inst.ch, inst.base, refreshed, true, powers, {}, noise_rng, aps);
    const UeCoefficients genie = mmse_coefficients(inst.ch, inst.base);
    r.worst = std::max(r.worst, relative_error(refreshed.u, genie.u));
    r.worst = std::max(r.worst, relative_error(refreshed.w, genie.w));

    if (r.worst > worst_before) r.detail = "instance " + std::to_string(i);
    ++r.cases;
  }
  return finish(r);
}

SuiteResult check_degeneracy(std::uint64_t seed, std::size_t drops, std::size_t iterations) {
  SuiteResult r{"degeneracy_equivalence", false, 0, 0.0, 1e-12, ""};
  const Scenario sc = suite_scenario(seed);
  RunConfig cfg;
  cfg.max_iterations = iterations;
  cfg.exchange.mode = ExchangeMode::kOta;
  cfg.exchange.p_t = sc.p_ap_w();
  cfg.exchange.p_ue = sc.p_ue_w();
  cfg.noise_seed = seed;
  for (std::size_t d = 0; d < drops; ++d) {
    const ChannelRealization ch = generate_drop(sc, d);
    const DecisionTensor v0 = initial_decisions(sc, d);
    cfg.noise_drop = d;
    const RunResult sw = run(ch, UpdateSchedule::sequential(sc.n_aps), cfg, v0);
    const RunResult cs_n = run(ch, UpdateSchedule::clustered(singleton_clusters(sc.n_aps)), cfg, v0);
    const RunResult pw = run(ch, UpdateSchedule::parallel(sc.n_aps), cfg, v0);
    const RunResult cs_1 = run(ch, UpdateSchedule::clustered(contiguous_clusters(sc.n_aps, 1)), cfg, v0);
    const double before = r.worst;
    compare_traces(cs_n, sw, r.worst);
    compare_traces(cs_1, pw, r.worst);
    if (r.worst > before) r.detail = "drop " + std::to_string(d);
    ++r.cases;
  }
  return finish(r);
}

SuiteResult check_surrogate_monotone(std::uint64_t seed, std::size_t drops, std::size_t iterations) {
  SuiteResult r{"surrogate_monotone", false, 0, 0.0, 1e-8, ""};
  const Scenario sc = suite_scenario(seed);
  WmmseConfig cfg;
  cfg.max_iterations = iterations;
  cfg.tolerance = 1e-300;
  for (std::size_t d = 0; d < drops; ++d) {
    const ChannelRealization ch = generate_drop(sc, d);
    const WmmseResult res = centralized_wmmse(ch, initial_decisions(sc, d), sc.p_ap_w(), cfg);
    double prev = res.initial.surrogate;
    for (const auto& row : res.trace) {
      const double rise = (row.surrogate - prev) / std::max(1.0, std::abs(prev));
      if (rise > r.worst) {
        r.worst = rise;
        r.detail = "drop " + std::to_string(d) + ", iteration " + std::to_string(row.iteration);
      }
      prev = row.surrogate;
    }
    ++r.cases;
  }
  return finish(r);
}

SuiteResult check_sequential_descent(std::uint64_t seed, std::size_t drops, std::size_t iterations) {
  SuiteResult r{"sequential_descent", false, 0, 0.0, 1e-8, ""};
  const Scenario sc = suite_scenario(seed);
  const UpdateSchedule schedule = UpdateSchedule::sequential(sc.n_aps);
  ExchangeConfig ex;
  ex.mode = ExchangeMode::kGenie;
  ex.p_t = sc.p_ap_w();
  ex.p_ue = sc.p_ue_w();
  for (std::size_t d = 0; d < drops; ++d) {
    const ChannelRealization ch = generate_drop(sc, d);
    IterationState state = initial_state(initial_decisions(sc, d));
    CounterRng rng(seed, d, Stream::kPilotNoise);
    for (std::size_t it = 0; it < iterations; ++it) {
      state.begin_iteration();
      double prev = -1.0;
      while (state.next_group < schedule.groups.size()) {
        time_step(ch, state, schedule, ex, rng);
        // The first step also fixes this iteration's U, w.
        if (state.next_group == 1) prev = weighted_mse_objective(ch, state.v_prev, state.coeffs);
        const double obj = weighted_mse_objective(ch, state.v, state.coeffs);
        const double rise = (obj - prev) / std::max(1.0, std::abs(prev));
        if (rise > r.worst) {
          r.worst = rise;
          r.detail = "drop " + std::to_string(d) + ", iteration " + std::to_string(state.t);
        }
        prev = obj;
      }
    }
    ++r.cases;
  }
  return finish(r);
}

std::vector<SuiteResult> run_validation(std::uint64_t seed) {
  return {
      check_closed_form_objective(seed, 40),
      check_kkt(seed, 40),
      check_ota_fidelity(seed, 30),
      check_degeneracy(seed, 2, 15),
      check_surrogate_monotone(seed, 2, 20),
      check_sequential_descent(seed, 2, 10),
  };
}

std::string verdict_json(const std::vector<SuiteResult>& results, std::uint64_t seed) {
  nlohmann::json out;
  bool all = !results.empty();
  out["seed"] = seed;
  out["suites"] = nlohmann::json::array();
  for (const auto& s : results) {
    all = all && s.passed;
    out["suites"].push_back({{"name", s.name},
                             {"passed", s.passed},
                             {"cases", s.cases},
                             {"worst", s.worst},
                             {"threshold", s.threshold},
                             {"detail", s.detail}});
  }
  out["passed"] = all;
  return out.dump(2);
}

}  // namespace cellfree::oracle
