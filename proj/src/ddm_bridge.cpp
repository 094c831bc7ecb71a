#include "cellfree/ddm_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cellfree/codec.hpp"
#include "cellfree/distributed.hpp"
#include "cellfree/wmmse.hpp"
#include "json.hpp"

namespace cellfree {

using nlohmann::json;

std::vector<ApFeatures> ddm_features(const ChannelRealization& ch, const DecisionTensor& v_prev,
                                     const UeCoefficients& c) {
  require(v_prev.v.same_shape(ch.h), "ddm_features: decision shape mismatch");
  const std::size_t N = ch.n_aps(), K = ch.n_ues(), F = ch.n_rbs();
  const ComplexTensor3 g = effective_gains(ch.h, v_prev);

  std::vector<ApFeatures> out(N, ApFeatures{ComplexMatrix(K, F), RealMatrix(K, F)});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t f = 0; f < F; ++f) {
      double d = 0.0;
      for (std::size_t k = 0; k < K; ++k) d += c.w(k, f) * std::norm(ch.h(n, k, f)) * std::norm(c.u(k, f));
      for (std::size_t k = 0; k < K; ++k) {
        const cplx a = ch.h(n, k, f) * c.w(k, f) * c.u(k, f);
        // Own-stream term plus the sum over the other UEs.
        cplx m = ch.h(n, k, f) * c.w(k, f) * std::norm(c.u(k, f)) * std::conj(g(k, f, k));
        for (std::size_t j = 0; j < K; ++j)
          if (j != k) m += ch.h(n, j, f) * c.w(j, f) * std::norm(c.u(j, f)) * std::conj(g(j, f, k));
        out[n].r(k, f) = std::conj(a - m);
        out[n].b(k, f) = d;
      }
    }
  }
  return out;
}

std::vector<ApFeatures> ddm_step_features(const ChannelRealization& ch, const DecisionTensor& v_prev) {
  return ddm_features(ch, v_prev, mmse_coefficients(ch, v_prev));
}

ComplexMatrix postprocess_decision(const ComplexMatrix& raw, const ComplexMatrix& v_prev_ap,
                                   double gamma, double p_t) {
  require(raw.same_shape(v_prev_ap), "postprocess_decision: shape mismatch");
  require(gamma >= 0.0 && gamma < 1.0, "postprocess_decision: gamma must lie in [0, 1)");
  require(p_t > 0.0, "postprocess_decision: p_t must be positive");
  for (const cplx& x : raw.flat())
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
      throw std::invalid_argument("postprocess_decision: raw output is not finite");

  const double norm = std::sqrt(squared_norm(raw));
  const double scale = norm > 0.0 ? std::sqrt(p_t) / norm : 0.0;
  ComplexMatrix out(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < raw.size(); ++i)
    out.flat()[i] = gamma * v_prev_ap.flat()[i] + (1.0 - gamma) * scale * raw.flat()[i];
  return out;
}

void DdmRunConfig::validate() const {
  if (steps < 1) throw ConfigError("DDM steps must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("DDM gamma must lie in [0, 1)");
}

DdmRunConfig DdmRunConfig::with_default_gamma(std::size_t steps) {
  return DdmRunConfig{steps, steps <= 2 ? 0.5 : 0.7};
}

ChannelRealization Dataset::channel(std::size_t index) const {
  const FeatureRecord& r = records.at(index);
  ChannelRealization ch;
  ch.h = r.h;
  ch.noise_power_w = r.noise_power_w;
  ch.beta_db = RealMatrix(r.h.dim0(), r.h.dim1(), 0.0);
  ch.ap_positions.resize(r.h.dim0());
  ch.ue_positions.resize(r.h.dim1());
  ch.subcarriers_per_rb = header.scenario.subcarriers_per_rb;
  return ch;
}

FeatureRecord make_feature_record(const Scenario& s, std::uint64_t drop_id) {
  const ChannelRealization ch = generate_drop(s, drop_id);
  FeatureRecord r;
  r.drop_id = drop_id;
  r.step = 1;
  r.seed = s.seed;
  r.scenario_hash = scenario_hash(s);
  r.h = ch.h;
  r.noise_power_w = ch.noise_power_w;
  r.v_prev = initial_decisions(s, drop_id);
  r.features = ddm_step_features(ch, r.v_prev);
  return r;
}

namespace {

json array_json(std::vector<std::size_t> shape, const std::vector<double>& values) {
  return json{{"shape", shape}, {"dtype", "<f8"}, {"data", codec::pack_f64_le(values)}};
}

std::vector<double> interleave(std::span<const cplx> values) {
  std::vector<double> out;
  out.reserve(values.size() * 2);
  for (const cplx& x : values) {
    out.push_back(x.real());
    out.push_back(x.imag());
  }
  return out;
}

std::vector<double> read_array(const json& arrays, const char* name,
                               const std::vector<std::size_t>& expected_shape) {
  if (!arrays.contains(name)) throw DatasetError(std::string("missing array '") + name + "'");
  const json& a = arrays.at(name);
  if (a.value("dtype", "") != "<f8") throw DatasetError(std::string("array '") + name + "' is not <f8");
  const auto shape = a.at("shape").get<std::vector<std::size_t>>();
  if (shape != expected_shape) throw DatasetError(std::string("array '") + name + "' has unexpected shape");
  std::vector<double> values = codec::unpack_f64_le(a.at("data").get<std::string>());
  std::size_t count = 1;
  for (std::size_t d : shape) count *= d;
  if (values.size() != count) throw DatasetError(std::string("array '") + name + "' payload size mismatch");
  return values;
}

void check_schema(const json& j, const char* schema) {
  if (j.value("schema", "") != schema)
    throw DatasetError(std::string("schema mismatch: expected ") + schema);
  if (j.value("version", -1) != kSchemaVersion)
    throw DatasetError("unsupported schema version " + std::to_string(j.value("version", -1)));
}

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw DatasetError("line " + std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace

std::string encode_header(const DatasetHeader& h) {
  json j{{"schema", kDatasetSchema},
         {"version", kSchemaVersion},
         {"kind", "header"},
         {"scenario", scenario_to_string(h.scenario)},
         {"scenario_hash", h.scenario_hash},
         {"n_drops", h.n_drops},
         {"steps", h.run.steps},
         {"gamma", h.run.gamma}};
  return j.dump();
}

std::string encode_record(const FeatureRecord& r) {
  const std::size_t N = r.h.dim0(), K = r.h.dim1(), F = r.h.dim2();
  require(r.features.size() == N, "encode_record: one feature set per AP expected");
  std::vector<double> rr, bb;
  rr.reserve(N * K * F * 2);
  bb.reserve(N * K * F);
  for (const auto& ap : r.features) {
    const auto re = interleave(ap.r.flat());
    rr.insert(rr.end(), re.begin(), re.end());
    bb.insert(bb.end(), ap.b.flat().begin(), ap.b.flat().end());
  }
  const std::vector<double> noise(r.noise_power_w.flat().begin(), r.noise_power_w.flat().end());
  json arrays{{"h", array_json({N, K, F, 2}, interleave(r.h.flat()))},
              {"noise_power_w", array_json({K, F}, noise)},
              {"v_prev", array_json({N, K, F, 2}, interleave(r.v_prev.v.flat()))},
              {"r", array_json({N, K, F, 2}, rr)},
              {"b", array_json({N, K, F}, bb)}};
  json j{{"schema", kDatasetSchema},
         {"version", kSchemaVersion},
         {"kind", "drop"},
         {"drop_id", r.drop_id},
         {"step", r.step},
         {"seed", r.seed},
         {"scenario_hash", r.scenario_hash},
         {"shape", {{"n_aps", N}, {"n_ues", K}, {"n_rbs", F}}},
         {"arrays", arrays}};
  return j.dump();
}

FeatureRecord decode_record(const std::string& line) {
  const json j = parse_line(line, 0);
  check_schema(j, kDatasetSchema);
  if (j.value("kind", "") != "drop") throw DatasetError("expected a drop record");
  FeatureRecord r;
  try {
    r.drop_id = j.at("drop_id").get<std::uint64_t>();
    r.step = j.at("step").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.scenario_hash = j.at("scenario_hash").get<std::string>();
    const std::size_t N = j.at("shape").at("n_aps").get<std::size_t>();
    const std::size_t K = j.at("shape").at("n_ues").get<std::size_t>();
    const std::size_t F = j.at("shape").at("n_rbs").get<std::size_t>();
    const json& a = j.at("arrays");

    auto complex_tensor = [&](const char* name) {
      const auto vals = read_array(a, name, {N, K, F, 2});
      ComplexTensor3 t(N, K, F);
      for (std::size_t i = 0; i < t.size(); ++i) t.flat()[i] = {vals[2 * i], vals[2 * i + 1]};
      return t;
    };
    r.h = complex_tensor("h");
    r.v_prev = DecisionTensor(complex_tensor("v_prev"));
    const auto noise = read_array(a, "noise_power_w", {K, F});
    r.noise_power_w = RealMatrix(K, F);
    std::copy(noise.begin(), noise.end(), r.noise_power_w.flat().begin());

    const ComplexTensor3 rt = complex_tensor("r");
    const auto bv = read_array(a, "b", {N, K, F});
    r.features.assign(N, ApFeatures{ComplexMatrix(K, F), RealMatrix(K, F)});
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t f = 0; f < F; ++f) {
          r.features[n].r(k, f) = rt(n, k, f);
          r.features[n].b(k, f) = bv[(n * K + k) * F + f];
        }
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed drop record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DatasetError(std::string("malformed drop record: ") + e.what());
  }
  return r;
}

void export_dataset(const Scenario& s, std::size_t n_drops, const DdmRunConfig& run,
                    const std::string& path) {
  s.validate();
  run.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot open dataset for writing: " + path);
  out << encode_header(DatasetHeader{s, scenario_hash(s), n_drops, run}) << "\n";
  for (std::size_t d = 0; d < n_drops; ++d) out << encode_record(make_feature_record(s, d)) << "\n";
  if (!out) throw DatasetError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open dataset: " + path);
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!have_header) {
      const json j = parse_line(line, line_no);
      check_schema(j, kDatasetSchema);
      if (j.value("kind", "") != "header") throw DatasetError("dataset must start with a header record");
      std::istringstream cfg(j.at("scenario").get<std::string>());
      try {
        ds.header.scenario = parse_scenario(cfg);
      } catch (const ConfigError& e) {
        throw DatasetError(std::string("bad scenario in header: ") + e.what());
      }
      ds.header.scenario_hash = j.at("scenario_hash").get<std::string>();
      ds.header.n_drops = j.at("n_drops").get<std::size_t>();
      ds.header.run.steps = j.at("steps").get<std::size_t>();
      ds.header.run.gamma = j.at("gamma").get<double>();
      have_header = true;
      continue;
    }
    FeatureRecord r = decode_record(line);
    if (r.scenario_hash != ds.header.scenario_hash)
      throw DatasetError("line " + std::to_string(line_no) + ": scenario hash differs from header");
    ds.records.push_back(std::move(r));
  }
  if (!have_header) throw DatasetError("empty dataset: " + path);
  if (ds.records.size() != ds.header.n_drops) {
    std::set<std::uint64_t> present;
    for (const auto& r : ds.records) present.insert(r.drop_id);
    std::string missing;
    for (std::uint64_t d = 0; d < ds.header.n_drops; ++d)
      if (!present.count(d)) missing += (missing.empty() ? "" : ", ") + std::to_string(d);
    throw DatasetError("dataset holds " + std::to_string(ds.records.size()) + " of " +
                       std::to_string(ds.header.n_drops) + " drops; missing: " + missing);
  }
  return ds;
}

std::string encode_decision(const DecisionEntry& e) {
  json j{{"schema", kDecisionSchema},
         {"version", kSchemaVersion},
         {"drop_id", e.drop_id},
         {"ap", e.ap},
         {"v", array_json({e.v.rows(), e.v.cols(), 2}, interleave(e.v.flat()))}};
  return j.dump();
}

void write_decisions(const std::string& path, const std::vector<DecisionEntry>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot open decisions for writing: " + path);
  for (const auto& e : entries) out << encode_decision(e) << "\n";
  if (!out) throw DatasetError("write failed: " + path);
}

std::vector<DecisionEntry> decision_entries(std::uint64_t drop_id, const DecisionTensor& v) {
  std::vector<DecisionEntry> out;
  for (std::size_t n = 0; n < v.n_aps(); ++n) out.push_back(DecisionEntry{drop_id, n, v.ap(n)});
  return out;
}

std::map<std::uint64_t, DecisionTensor> load_decisions(const std::string& path, const Dataset& ds) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open decisions: " + path);
  const std::size_t N = ds.header.scenario.n_aps, K = ds.header.scenario.n_ues,
                    F = ds.header.scenario.n_rbs;

  std::set<std::uint64_t> known;
  for (const auto& r : ds.records) known.insert(r.drop_id);

  std::map<std::uint64_t, DecisionTensor> out;
  std::map<std::uint64_t, std::vector<bool>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse_line(line, line_no);
    check_schema(j, kDecisionSchema);
    std::uint64_t drop = 0;
    std::size_t ap = 0;
    std::vector<double> vals;
    try {
      drop = j.at("drop_id").get<std::uint64_t>();
      ap = j.at("ap").get<std::size_t>();
      json arrays{{"v", j.at("v")}};
      vals = read_array(arrays, "v", {K, F, 2});
    } catch (const json::exception& e) {
      throw DatasetError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw DatasetError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!known.count(drop))
      throw DatasetError("line " + std::to_string(line_no) + ": unknown drop " + std::to_string(drop));
    if (ap >= N) throw DatasetError("line " + std::to_string(line_no) + ": AP index out of range");
    auto [it, inserted] = out.try_emplace(drop, N, K, F);
    auto& flags = seen[drop];
    if (flags.empty()) flags.assign(N, false);
    if (flags[ap])
      throw DatasetError("line " + std::to_string(line_no) + ": duplicate entry for drop " +
                         std::to_string(drop) + " AP " + std::to_string(ap));
    flags[ap] = true;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t f = 0; f < F; ++f)
        it->second.v(ap, k, f) = {vals[2 * (k * F + f)], vals[2 * (k * F + f) + 1]};
  }

  std::string missing;
  for (std::uint64_t d : known) {
    auto s = seen.find(d);
    const bool complete =
        s != seen.end() && std::all_of(s->second.begin(), s->second.end(), [](bool b) { return b; });
    if (!complete) missing += (missing.empty() ? "" : ", ") + std::to_string(d);
  }
  if (!missing.empty()) throw DatasetError("decisions missing for drops: " + missing);
  return out;
}

EvaluationReport evaluate_decisions(const Dataset& ds,
                                    const std::map<std::uint64_t, DecisionTensor>& decisions) {
  EvaluationReport rep;
  const double p_t = ds.header.scenario.p_ap_w();
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& rec = ds.records[i];
    auto it = decisions.find(rec.drop_id);
    if (it == decisions.end()) throw DatasetError("no decisions for drop " + std::to_string(rec.drop_id));
    const ChannelRealization ch = ds.channel(i);
    DropEvaluation e{rec.drop_id, sum_rate_per_subcarrier(ch, it->second),
                     max_power_ratio(it->second, p_t)};
    for (std::size_t n = 0; n < it->second.n_aps(); ++n)
      if (it->second.ap_power(n) > p_t * (1.0 + 1e-6)) ++rep.power_violations;
    rep.mean_sr_per_subcarrier += e.sr_per_subcarrier;
    rep.drops.push_back(e);
  }
  if (!rep.drops.empty()) rep.mean_sr_per_subcarrier /= static_cast<double>(rep.drops.size());
  return rep;
}

EvaluationReport import_decisions(const Dataset& ds, const std::string& path) {
  return evaluate_decisions(ds, load_decisions(path, ds));
}

}  // namespace cellfree
