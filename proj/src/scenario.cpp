#include "cellfree/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cellfree/rng.hpp"
#include "cellfree/units.hpp"

namespace cellfree {

std::vector<Cluster> contiguous_clusters(std::size_t n_aps, std::size_t q) {
  if (q == 0 || q > n_aps) throw ConfigError("cluster count must be in [1, n_aps]");
  std::vector<Cluster> out(q);
  const std::size_t base = n_aps / q;
  const std::size_t extra = n_aps % q;
  std::size_t next = 0;
  for (std::size_t c = 0; c < q; ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    for (std::size_t i = 0; i < len; ++i) out[c].push_back(next++);
  }
  return out;
}

std::vector<Cluster> singleton_clusters(std::size_t n_aps) {
  return contiguous_clusters(n_aps, n_aps);
}

void Scenario::validate() const {
  if (n_aps < 1 || n_ues < 1 || n_rbs < 1) throw ConfigError("n_aps, n_ues, n_rbs must be >= 1");
  if (subcarriers_per_rb < 3)
    throw ConfigError("subcarriers_per_rb must be >= 3 (three uplink pilot subcarriers per RB)");
  for (double v : {area_side_m, ap_height_m, carrier_freq_ghz, bandwidth_hz,
                   subcarrier_spacing_hz}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("geometry and frequencies must be positive");
  }
  if (!std::isfinite(p_ap_dbm) || !std::isfinite(p_ue_dbm) || !std::isfinite(noise_figure_db))
    throw ConfigError("powers must be finite");
  if (ue_height_m < 0.0 || min_distance_m < 0.0) throw ConfigError("heights and distances must be >= 0");
  if (ue_height_m >= ap_height_m && min_distance_m <= 0.0)
    throw ConfigError("ue_height_m must be below ap_height_m unless min_distance_m > 0");
  std::vector<int> seen(n_aps, 0);
  for (const auto& c : clusters) {
    if (c.empty()) throw ConfigError("empty cluster");
    for (std::size_t ap : c) {
      if (ap >= n_aps) throw ConfigError("cluster references AP index out of range");
      if (seen[ap]++) throw ConfigError("AP " + std::to_string(ap) + " appears in two clusters");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw ConfigError("clusters must cover every AP");
}

double Scenario::p_ap_w() const { return units::dbm_to_watt(p_ap_dbm); }
double Scenario::p_ue_w() const { return units::dbm_to_watt(p_ue_dbm); }

Scenario Scenario::reference() { return Scenario{}; }

Scenario Scenario::desk() {
  Scenario s;
  s.n_aps = 8;
  s.n_ues = 4;
  s.n_rbs = 4;
  s.clusters = contiguous_clusters(8, 4);
  return s;
}

ChannelRealization ChannelRealization::from_channels(ComplexTensor3 h, double noise_power_w,
                                                     std::size_t subcarriers_per_rb) {
  require(noise_power_w > 0.0, "noise power must be positive");
  ChannelRealization ch;
  ch.beta_db = RealMatrix(h.dim0(), h.dim1(), 0.0);
  ch.noise_power_w = RealMatrix(h.dim1(), h.dim2(), noise_power_w);
  ch.ap_positions.resize(h.dim0());
  ch.ue_positions.resize(h.dim1());
  ch.subcarriers_per_rb = subcarriers_per_rb;
  ch.h = std::move(h);
  return ch;
}

double pathloss_db(double distance_m, double carrier_freq_ghz) {
  if (!(distance_m > 0.0)) throw std::domain_error("pathloss_db: distance must be positive");
  if (!(carrier_freq_ghz > 0.0)) throw std::domain_error("pathloss_db: carrier frequency must be positive");
  return 36.7 * std::log10(distance_m) + 22.7 + 26.0 * std::log10(carrier_freq_ghz);
}

double noise_power_dbm(const Scenario& s) {
  return -174.0 + 10.0 * std::log10(s.bandwidth_hz) + s.noise_figure_db -
         10.0 * std::log10(static_cast<double>(s.n_rbs));
}

ChannelRealization generate_drop(const Scenario& s, std::uint64_t drop_index) {
  s.validate();
  const std::size_t n = s.n_aps, k = s.n_ues, f = s.n_rbs;

  ChannelRealization ch;
  ch.subcarriers_per_rb = s.subcarriers_per_rb;

  CounterRng pos_rng(s.seed, drop_index, Stream::kPositions);
  ch.ap_positions.resize(n);
  ch.ue_positions.resize(k);
  for (auto& p : ch.ap_positions) {
    p.x = pos_rng.uniform() * s.area_side_m;
    p.y = pos_rng.uniform() * s.area_side_m;
  }
  for (auto& p : ch.ue_positions) {
    p.x = pos_rng.uniform() * s.area_side_m;
    p.y = pos_rng.uniform() * s.area_side_m;
  }

  const double dz = s.ap_height_m - s.ue_height_m;
  ch.beta_db = RealMatrix(n, k);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t u = 0; u < k; ++u) {
      const double dx = ch.ap_positions[a].x - ch.ue_positions[u].x;
      const double dy = ch.ap_positions[a].y - ch.ue_positions[u].y;
      const double d = std::max(std::sqrt(dx * dx + dy * dy + dz * dz), s.min_distance_m);
      ch.beta_db(a, u) = pathloss_db(d, s.carrier_freq_ghz);
    }
  }

  CounterRng fading_rng(s.seed, drop_index, Stream::kFading);
  ch.h = ComplexTensor3(n, k, f);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t u = 0; u < k; ++u) {
      const double amp = std::sqrt(units::db_to_linear(-ch.beta_db(a, u)));
      for (std::size_t r = 0; r < f; ++r) ch.h(a, u, r) = amp * fading_rng.complex_normal();
    }
  }

  ch.noise_power_w = RealMatrix(k, f, units::dbm_to_watt(noise_power_dbm(s)));
  return ch;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<Cluster> parse_clusters(const std::string& v) {
  std::vector<Cluster> out;
  std::stringstream groups(v);
  std::string group;
  while (std::getline(groups, group, '|')) {
    std::stringstream items(group);
    Cluster c;
    std::string tok;
    while (items >> tok) {
      std::size_t used = 0;
      long long x = -1;
      try {
        x = std::stoll(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || x < 0) throw ConfigError("bad AP index in clusters: '" + tok + "'");
      c.push_back(static_cast<std::size_t>(x));
    }
    out.push_back(std::move(c));
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T x{};
  is >> x;
  std::string rest;
  if (is.fail() || (is >> rest)) throw ConfigError("bad value for '" + key + "': '" + v + "'");
  return x;
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
  Scenario s;
  bool explicit_clusters = false;
  std::size_t n_clusters = 0;

  std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters;
  auto size_field = [&](std::size_t Scenario::*field) {
    return [&s, field](const std::string& k, const std::string& v) {
      const long long x = parse_number<long long>(k, v);
      if (x < 0) throw ConfigError("'" + k + "' must be nonnegative");
      s.*field = static_cast<std::size_t>(x);
    };
  };
  auto real_field = [&](double Scenario::*field) {
    return [&s, field](const std::string& k, const std::string& v) {
      s.*field = parse_number<double>(k, v);
    };
  };
  setters["n_aps"] = size_field(&Scenario::n_aps);
  setters["n_ues"] = size_field(&Scenario::n_ues);
  setters["n_rbs"] = size_field(&Scenario::n_rbs);
  setters["subcarriers_per_rb"] = size_field(&Scenario::subcarriers_per_rb);
  setters["area_side_m"] = real_field(&Scenario::area_side_m);
  setters["ap_height_m"] = real_field(&Scenario::ap_height_m);
  setters["ue_height_m"] = real_field(&Scenario::ue_height_m);
  setters["min_distance_m"] = real_field(&Scenario::min_distance_m);
  setters["carrier_freq_ghz"] = real_field(&Scenario::carrier_freq_ghz);
  setters["bandwidth_hz"] = real_field(&Scenario::bandwidth_hz);
  setters["subcarrier_spacing_hz"] = real_field(&Scenario::subcarrier_spacing_hz);
  setters["noise_figure_db"] = real_field(&Scenario::noise_figure_db);
  setters["p_ap_dbm"] = real_field(&Scenario::p_ap_dbm);
  setters["p_ue_dbm"] = real_field(&Scenario::p_ue_dbm);
  setters["seed"] = [&s](const std::string& k, const std::string& v) {
    s.seed = parse_number<std::uint64_t>(k, v);
  };
  setters["clusters"] = [&](const std::string&, const std::string& v) {
    s.clusters = parse_clusters(v);
    explicit_clusters = true;
  };
  setters["n_clusters"] = [&](const std::string& k, const std::string& v) {
    n_clusters = parse_number<std::size_t>(k, v);
  };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second(key, value);
  }

  if (explicit_clusters && n_clusters != 0)
    throw ConfigError("give either 'clusters' or 'n_clusters', not both");
  if (!explicit_clusters) {
    const std::size_t q = n_clusters != 0 ? n_clusters : std::min<std::size_t>(4, s.n_aps);
    if (s.n_aps == 0) throw ConfigError("n_aps must be >= 1");
    s.clusters = contiguous_clusters(s.n_aps, q);
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  return parse_scenario(in);
}

void write_scenario(const Scenario& s, std::ostream& out) {
  out << scenario_to_string(s);
}

std::string scenario_to_string(const Scenario& s) {
  std::ostringstream o;
  auto real = [&o](const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    o << key << " = " << buf << "\n";
  };
  o << "n_aps = " << s.n_aps << "\n";
  o << "n_ues = " << s.n_ues << "\n";
  o << "n_rbs = " << s.n_rbs << "\n";
  o << "subcarriers_per_rb = " << s.subcarriers_per_rb << "\n";
  real("area_side_m", s.area_side_m);
  real("ap_height_m", s.ap_height_m);
  real("ue_height_m", s.ue_height_m);
  real("min_distance_m", s.min_distance_m);
  real("carrier_freq_ghz", s.carrier_freq_ghz);
  real("bandwidth_hz", s.bandwidth_hz);
  real("subcarrier_spacing_hz", s.subcarrier_spacing_hz);
  real("noise_figure_db", s.noise_figure_db);
  real("p_ap_dbm", s.p_ap_dbm);
  real("p_ue_dbm", s.p_ue_dbm);
  o << "clusters =";
  for (std::size_t c = 0; c < s.clusters.size(); ++c) {
    if (c) o << " |";
    for (std::size_t ap : s.clusters[c]) o << " " << ap;
  }
  o << "\n";
  o << "seed = " << s.seed << "\n";
  return o.str();
}

std::string scenario_hash(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : scenario_to_string(s)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cellfree
