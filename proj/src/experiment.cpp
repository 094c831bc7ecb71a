#include "cellfree/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "cellfree/units.hpp"
#include "cellfree/wmmse.hpp"

namespace cellfree {

namespace fs = std::filesystem;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kCentralized: return "cen";
    case Algorithm::kSwmmse: return "swmmse";
    case Algorithm::kCswmmse: return "cswmmse";
    case Algorithm::kPwmmse: return "pwmmse";
  }
  return "unknown";
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kGenie: return "genie";
    case Mode::kOtaNoiseless: return "ota-noiseless";
    case Mode::kOtaNoisy: return "ota-noisy";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::kCentralized, Algorithm::kSwmmse, Algorithm::kCswmmse, Algorithm::kPwmmse})
    if (name == to_string(a)) return a;
  throw ConfigError("unknown algorithm: " + name);
}

Mode parse_mode(const std::string& name) {
  if (name == "genie") return Mode::kGenie;
  if (name == "ota" || name == "ota-noiseless") return Mode::kOtaNoiseless;
  if (name == "ota-noisy") return Mode::kOtaNoisy;
  throw ConfigError("unknown mode: " + name);
}

void ExperimentSpec::validate() const {
  scenario.validate();
  if (drops < 1) throw ConfigError("experiment: drops must be >= 1");
  if (algorithms.empty()) throw ConfigError("experiment: algorithm list is empty");
  if (max_iterations < 1) throw ConfigError("experiment: max_iterations must be >= 1");
  if (!(tolerance_factor > 0.0)) throw ConfigError("experiment: tolerance_factor must be positive");
}

std::size_t worker_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CELLFREE_WORKERS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job) {
  workers = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          job(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ExchangeConfig exchange_for(const Scenario& scenario, Mode mode) {
  ExchangeConfig ex;
  ex.mode = mode == Mode::kGenie ? ExchangeMode::kGenie : ExchangeMode::kOta;
  ex.p_t = scenario.p_ap_w();
  ex.p_ue = scenario.p_ue_w();
  if (mode == Mode::kOtaNoisy) {
    const double sigma2 = units::dbm_to_watt(noise_power_dbm(scenario));
    ex.noise.enabled = true;
    ex.noise.downlink_variance_w = sigma2;
    ex.noise.uplink_variance_w = sigma2;
  }
  return ex;
}

namespace {

UpdateSchedule schedule_for(Algorithm a, const Scenario& s) {
  switch (a) {
    case Algorithm::kSwmmse: return UpdateSchedule::sequential(s.n_aps);
    case Algorithm::kCswmmse: return UpdateSchedule::clustered(s.clusters);
    case Algorithm::kPwmmse: return UpdateSchedule::parallel(s.n_aps);
    case Algorithm::kCentralized: break;
  }
  throw ConfigError("centralized WMMSE has no update schedule");
}

std::string csv_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::ofstream open_csv(const fs::path& path, const std::string& header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << header << "\n";
  return out;
}

std::string drop_name(std::uint64_t drop) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "drop_%04llu.csv", static_cast<unsigned long long>(drop));
  return buf;
}

}  // namespace

AlgorithmOutcome run_algorithm(Algorithm algorithm, const Scenario& scenario, const ChannelRealization& ch,
                               const DecisionTensor& v0, std::uint64_t drop, const AlgorithmSettings& settings) {
  AlgorithmOutcome out;
  out.algorithm = algorithm;
  out.drop = drop;
  try {
    const double p_t = scenario.p_ap_w();
    const double tol = settings.tolerance_factor * std::sqrt(static_cast<double>(scenario.n_aps) * p_t);
    if (algorithm == Algorithm::kCentralized) {
      WmmseConfig cfg;
      cfg.max_iterations = settings.max_iterations;
      cfg.tolerance = tol;
      const WmmseResult res = centralized_wmmse(ch, v0, p_t, cfg);
      out.v = res.v;
      out.iterations = res.iterations;
      out.converged = res.converged;
      for (const auto& row : res.trace)
        out.trace.push_back({row.iteration, row.sr_per_subcarrier, row.objective, row.decision_change, {}});
    } else {
      RunConfig cfg;
      cfg.max_iterations = settings.max_iterations;
      cfg.tolerance = tol;
      cfg.max_time_steps = settings.max_time_steps;
      cfg.exchange = exchange_for(scenario, settings.mode);
      cfg.noise_seed = settings.noise_seed;
      cfg.noise_drop = drop;
      const RunResult res = run(ch, schedule_for(algorithm, scenario), cfg, v0);
      out.v = res.v;
      out.iterations = res.iterations;
      out.converged = res.converged;
      out.overhead = res.overhead;
      for (const auto& row : res.trace)
        out.trace.push_back(
            {row.iteration, row.sr_per_subcarrier, row.objective, row.decision_change, row.overhead});
    }
    out.sr_per_subcarrier = sum_rate_per_subcarrier(ch, out.v);
    out.max_power_ratio = max_power_ratio(out.v, p_t);
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

double CompareResult::mean_sr(Algorithm a) const {
  const auto idx = std::find(algorithms.begin(), algorithms.end(), a) - algorithms.begin();
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : per_drop) {
    if (static_cast<std::size_t>(idx) >= row.size() || !row[idx].ok) continue;
    sum += row[idx].sr_per_subcarrier;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::size_t CompareResult::failures(Algorithm a) const {
  const auto idx = std::find(algorithms.begin(), algorithms.end(), a) - algorithms.begin();
  std::size_t n = 0;
  for (const auto& row : per_drop)
    if (static_cast<std::size_t>(idx) >= row.size() || !row[idx].ok) ++n;
  return n;
}

CompareResult run_compare(const ExperimentSpec& spec) {
  spec.validate();
  CompareResult res;
  res.algorithms = spec.algorithms;
  res.per_drop.resize(spec.drops);
  AlgorithmSettings settings;
  settings.mode = spec.mode;
  settings.max_iterations = spec.max_iterations;
  settings.tolerance_factor = spec.tolerance_factor;
  settings.noise_seed = spec.scenario.seed;
  parallel_for(spec.drops, worker_count(spec.workers), [&](std::size_t d) {
    auto& row = res.per_drop[d];
    try {
      const ChannelRealization ch = generate_drop(spec.scenario, d);
      const DecisionTensor v0 = initial_decisions(spec.scenario, d);
      for (Algorithm a : spec.algorithms) row.push_back(run_algorithm(a, spec.scenario, ch, v0, d, settings));
    } catch (const std::exception& e) {
      row.clear();
      for (Algorithm a : spec.algorithms) {
        AlgorithmOutcome o;
        o.algorithm = a;
        o.drop = d;
        o.error = e.what();
        row.push_back(std::move(o));
      }
    }
  });
  return res;
}

void write_compare_outputs(const ExperimentSpec& spec, const CompareResult& result) {
  const fs::path root(spec.output_dir);
  fs::create_directories(root / "traces");
  fs::create_directories(root / "decisions");

  auto summary = open_csv(root / "summary.csv",
                          "algorithm,mode,drops,failures,mean_sr_per_subcarrier,mean_iterations,"
                          "converged_fraction,mean_dl_phases,mean_ul_phases,max_power_ratio");
  for (std::size_t ai = 0; ai < result.algorithms.size(); ++ai) {
    const Algorithm a = result.algorithms[ai];
    const std::string name = to_string(a);
    auto sr = open_csv(root / (name + "_sr.csv"), "drop,sr_per_subcarrier,status");
    auto conv = open_csv(root / (name + "_convergence.csv"), "drop,iterations,converged");
    auto ovh = open_csv(root / (name + "_overhead.csv"),
                        "drop,dl_phases,ul_phases,dl_pilot_symbols,ul_pilot_symbols");
    double iters = 0.0, conv_count = 0.0, dl = 0.0, ul = 0.0, worst_power = 0.0;
    std::size_t ok = 0;
    std::vector<DecisionEntry> entries;
    for (const auto& row : result.per_drop) {
      const AlgorithmOutcome& o = row.at(ai);
      if (!o.ok) {
        sr << o.drop << ",nan,\"error: " << o.error << "\"\n";
        continue;
      }
      sr << o.drop << "," << csv_number(o.sr_per_subcarrier) << ",ok\n";
      conv << o.drop << "," << o.iterations << "," << (o.converged ? 1 : 0) << "\n";
      ovh << o.drop << "," << o.overhead.dl_phases << "," << o.overhead.ul_phases << ","
          << o.overhead.dl_pilot_symbols << "," << o.overhead.ul_pilot_symbols << "\n";
      ++ok;
      iters += static_cast<double>(o.iterations);
      conv_count += o.converged ? 1.0 : 0.0;
      dl += static_cast<double>(o.overhead.dl_phases);
      ul += static_cast<double>(o.overhead.ul_phases);
      worst_power = std::max(worst_power, o.max_power_ratio);
      const auto e = decision_entries(o.drop, o.v);
      entries.insert(entries.end(), e.begin(), e.end());
    }
    const double denom = ok ? static_cast<double>(ok) : 1.0;
    summary << name << "," << to_string(spec.mode) << "," << result.per_drop.size() << ","
            << result.per_drop.size() - ok << "," << csv_number(result.mean_sr(a)) << ","
            << csv_number(iters / denom) << "," << csv_number(conv_count / denom) << ","
            << csv_number(dl / denom) << "," << csv_number(ul / denom) << "," << csv_number(worst_power) << "\n";
    write_decisions((root / "decisions" / (name + ".jsonl")).string(), entries);
  }

  for (std::size_t d = 0; d < result.per_drop.size(); ++d) {
    auto trace = open_csv(root / "traces" / drop_name(d),
                          "iteration,variant,SR_per_subcarrier,objective,decision_change,dl_phases,ul_phases");
    for (const auto& o : result.per_drop[d]) {
      for (const auto& r : o.trace)
        trace << r.iteration << "," << to_string(o.algorithm) << "," << csv_number(r.sr_per_subcarrier) << ","
              << csv_number(r.objective) << "," << csv_number(r.decision_change) << ","
              << r.overhead.dl_phases << "," << r.overhead.ul_phases << "\n";
    }
  }

  // Channels and V(0) of every drop, so stored decisions can be re-scored.
  export_dataset(spec.scenario, result.per_drop.size(), DdmRunConfig::with_default_gamma(2),
                 (root / "drops.jsonl").string());
}

std::vector<TruncatedRow> run_truncated(const Dataset& dataset, const std::vector<Algorithm>& algorithms,
                                        const std::vector<std::size_t>& steps, Mode mode, std::size_t workers) {
  for (Algorithm a : algorithms)
    if (a == Algorithm::kCentralized) throw ConfigError("truncated runs need a distributed algorithm");
  for (std::size_t l : steps)
    if (l < 1) throw ConfigError("truncated runs need L >= 1");

  const std::size_t per_drop = algorithms.size() * steps.size();
  std::vector<TruncatedRow> rows(dataset.records.size() * per_drop);
  const Scenario& sc = dataset.header.scenario;
  parallel_for(dataset.records.size(), worker_count(workers), [&](std::size_t i) {
    const auto& rec = dataset.records[i];
    const ChannelRealization ch = dataset.channel(i);
    std::size_t slot = i * per_drop;
    for (Algorithm a : algorithms)
      for (std::size_t l : steps) {
        AlgorithmSettings settings;
        settings.mode = mode;
        settings.max_iterations = l;
        settings.max_time_steps = l;
        settings.noise_seed = sc.seed;
        const AlgorithmOutcome o = run_algorithm(a, sc, ch, rec.v_prev, rec.drop_id, settings);
        if (!o.ok) throw std::runtime_error("drop " + std::to_string(rec.drop_id) + ": " + o.error);
        rows[slot++] = TruncatedRow{a, l, rec.drop_id, o.sr_per_subcarrier};
      }
  });
  return rows;
}

double mean_truncated_sr(const std::vector<TruncatedRow>& rows, Algorithm a, std::size_t steps) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows)
    if (r.algorithm == a && r.steps == steps) {
      sum += r.sr_per_subcarrier;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

void write_truncated_csv(const std::string& path, const std::vector<TruncatedRow>& rows) {
  auto out = open_csv(path, "algorithm,steps,drop,sr_per_subcarrier");
  for (const auto& r : rows)
    out << to_string(r.algorithm) << "," << r.steps << "," << r.drop << "," << csv_number(r.sr_per_subcarrier)
        << "\n";
}

void write_evaluation_csv(const std::string& path, const EvaluationReport& report) {
  auto out = open_csv(path, "drop,sr_per_subcarrier,max_power_ratio");
  for (const auto& d : report.drops)
    out << d.drop_id << "," << csv_number(d.sr_per_subcarrier) << "," << csv_number(d.max_power_ratio) << "\n";
}

}  // namespace cellfree
