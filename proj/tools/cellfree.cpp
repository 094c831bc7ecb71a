#include <cstdint>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cellfree/ddm_bridge.hpp"
#include "cellfree/experiment.hpp"
#include "cellfree/oracles/validation.hpp"
#include "cellfree/scenario.hpp"

namespace {

using namespace cellfree;

struct ScenarioFlags {
  std::string path;
  std::optional<std::uint64_t> seed;
  bool reference_scale = false;

  void add(CLI::App* app) {
    app->add_option("--scenario", path, "Scenario file (key = value lines)")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Override the scenario seed");
    app->add_flag("--reference-scale", reference_scale, "16 APs, 8 UEs, 11 RBs, Q = 4 instead of the desk profile");
  }

  Scenario resolve() const {
    Scenario s = !path.empty() ? load_scenario(path) : reference_scale ? Scenario::reference() : Scenario::desk();
    if (seed) s.seed = *seed;
    s.validate();
    return s;
  }
};

std::vector<Algorithm> parse_algorithms(const std::vector<std::string>& names) {
  std::vector<Algorithm> out;
  for (const auto& n : names) out.push_back(parse_algorithm(n));
  return out;
}

int cmd_compare(const ScenarioFlags& sf, std::optional<std::size_t> drops, const std::string& mode,
                const std::vector<std::string>& algorithms, const std::string& out, std::size_t max_iterations,
                double tolerance) {
  ExperimentSpec spec;
  spec.scenario = sf.resolve();
  spec.drops = drops ? *drops : (sf.reference_scale ? 100 : 20);
  spec.mode = parse_mode(mode);
  spec.algorithms = parse_algorithms(algorithms);
  spec.output_dir = out;
  spec.max_iterations = max_iterations;
  spec.tolerance_factor = tolerance;
  spec.validate();

  const CompareResult res = run_compare(spec);
  write_compare_outputs(spec, res);

  std::cout << "algorithm  mean SR/C  failures\n";
  for (Algorithm a : spec.algorithms)
    std::cout << std::left << std::setw(10) << to_string(a) << " " << std::setw(10) << std::setprecision(6)
              << res.mean_sr(a) << " " << res.failures(a) << "\n";
  std::cout << "results written to " << spec.output_dir << "\n";
  return 0;
}

int cmd_ddm_export(const ScenarioFlags& sf, std::optional<std::size_t> drops, std::size_t steps,
                   std::optional<double> gamma, const std::string& out) {
  const Scenario s = sf.resolve();
  DdmRunConfig run = DdmRunConfig::with_default_gamma(steps);
  if (gamma) run.gamma = *gamma;
  const std::size_t n = drops ? *drops : 20;
  const auto parent = std::filesystem::path(out).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  export_dataset(s, n, run, out);
  std::cout << "exported " << n << " drops to " << out << " (scenario " << scenario_hash(s) << ")\n";
  return 0;
}

int cmd_ddm_eval(const std::string& dataset_path, const std::string& decisions_path,
                 const std::vector<std::size_t>& truncate, const std::vector<std::string>& algorithms,
                 const std::string& mode, const std::string& out) {
  const Dataset ds = load_dataset(dataset_path);
  std::filesystem::create_directories(out);
  const auto root = std::filesystem::path(out);

  if (!decisions_path.empty()) {
    const EvaluationReport rep = import_decisions(ds, decisions_path);
    write_evaluation_csv((root / "ddm_sr.csv").string(), rep);
    std::cout << "imported decisions: mean SR/C " << rep.mean_sr_per_subcarrier << ", power violations "
              << rep.power_violations << "\n";
  }
  if (!truncate.empty()) {
    const auto algs = parse_algorithms(algorithms);
    const auto rows = run_truncated(ds, algs, truncate, parse_mode(mode));
    write_truncated_csv((root / "truncated_sr.csv").string(), rows);
    for (Algorithm a : algs)
      for (std::size_t l : truncate)
        std::cout << to_string(a) << " L=" << l << ": mean SR/C " << mean_truncated_sr(rows, a, l) << "\n";
  }
  return 0;
}

int cmd_validate(std::uint64_t seed) {
  const auto results = oracle::run_validation(seed);
  std::cout << oracle::verdict_json(results, seed) << "\n";
  for (const auto& r : results)
    if (!r.passed) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-free RB allocation: WMMSE variants, over-the-air exchange and learned-policy data"};
  app.require_subcommand(1);

  ScenarioFlags cmp_sf;
  std::optional<std::size_t> cmp_drops;
  std::string cmp_mode = "ota-noiseless";
  std::vector<std::string> cmp_algs = {"cen", "swmmse", "cswmmse", "pwmmse"};
  std::string cmp_out = "results";
  std::size_t cmp_iters = 1000;
  double cmp_tol = 1e-4;
  auto* compare = app.add_subcommand("compare", "Run algorithms on shared drops and write CSV results");
  cmp_sf.add(compare);
  compare->add_option("--drops", cmp_drops, "Number of drops (20 desk, 100 reference-scale)");
  compare->add_option("--mode", cmp_mode, "genie | ota-noiseless | ota-noisy");
  compare->add_option("--algorithms", cmp_algs, "cen swmmse cswmmse pwmmse")->delimiter(',');
  compare->add_option("--out", cmp_out, "Output directory");
  compare->add_option("--max-iterations", cmp_iters, "Iteration cap per algorithm")->check(CLI::PositiveNumber);
  compare->add_option("--tolerance", cmp_tol, "Stop when ||V(t) - V(t-1)||_F <= tolerance * sqrt(N p_t)")
      ->check(CLI::PositiveNumber);

  ScenarioFlags exp_sf;
  std::optional<std::size_t> exp_drops;
  std::size_t exp_steps = 2;
  std::optional<double> exp_gamma;
  std::string exp_out = "dataset.jsonl";
  auto* ddm_export = app.add_subcommand("ddm-export", "Write channels, V(0) and step-1 features per drop");
  exp_sf.add(ddm_export);
  ddm_export->add_option("--drops", exp_drops, "Number of drops (default 20)");
  ddm_export->add_option("--steps", exp_steps, "Time steps L of the learned policy")->check(CLI::PositiveNumber);
  ddm_export->add_option("--gamma", exp_gamma, "Blend factor (default 0.5 for L <= 2, else 0.7)");
  ddm_export->add_option("--out", exp_out, "Dataset path");

  std::string ev_dataset, ev_decisions, ev_mode = "ota-noiseless", ev_out = "results";
  std::vector<std::size_t> ev_truncate;
  std::vector<std::string> ev_algs = {"swmmse", "cswmmse", "pwmmse"};
  auto* ddm_eval = app.add_subcommand("ddm-eval", "Score imported decisions and truncated numerical baselines");
  ddm_eval->add_option("--dataset", ev_dataset, "Dataset written by ddm-export")->required()->check(CLI::ExistingFile);
  ddm_eval->add_option("--decisions", ev_decisions, "Decision file to score")->check(CLI::ExistingFile);
  ddm_eval->add_option("--truncate", ev_truncate, "Time-step budgets L for the numerical baselines")
      ->delimiter(',');
  ddm_eval->add_option("--algorithms", ev_algs, "swmmse cswmmse pwmmse")->delimiter(',');
  ddm_eval->add_option("--mode", ev_mode, "genie | ota-noiseless | ota-noisy");
  ddm_eval->add_option("--out", ev_out, "Output directory");

  std::uint64_t val_seed = 7;
  auto* validate = app.add_subcommand("validate", "Run the oracle suites and print a JSON verdict");
  validate->add_option("--seed", val_seed, "Seed of the random instances");

  CLI11_PARSE(app, argc, argv);

  try {
    if (compare->parsed()) return cmd_compare(cmp_sf, cmp_drops, cmp_mode, cmp_algs, cmp_out, cmp_iters, cmp_tol);
    if (ddm_export->parsed()) return cmd_ddm_export(exp_sf, exp_drops, exp_steps, exp_gamma, exp_out);
    if (ddm_eval->parsed()) {
      if (ev_decisions.empty() && ev_truncate.empty()) {
        std::cerr << "ddm-eval: nothing to do; pass --decisions and/or --truncate\n";
        return 2;
      }
      return cmd_ddm_eval(ev_dataset, ev_decisions, ev_truncate, ev_algs, ev_mode, ev_out);
    }
    if (validate->parsed()) return cmd_validate(val_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
