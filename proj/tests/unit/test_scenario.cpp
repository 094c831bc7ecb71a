#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cellfree/scenario.hpp"
#include "cellfree/units.hpp"
#include "helpers.hpp"

using namespace cellfree;

TEST_SUITE("scenario") {
  TEST_CASE("reference defaults") {
    const Scenario s = Scenario::reference();
    CHECK(s.n_aps == 16);
    CHECK(s.n_ues == 8);
    CHECK(s.n_rbs == 11);
    CHECK(s.clusters.size() == 4);
    CHECK(s.p_ap_dbm == 25.0);
    CHECK(s.p_ue_dbm == 23.0);
    CHECK_NOTHROW(s.validate());
  }

  TEST_CASE("pathloss values") {
    CHECK(pathloss_db(100.0, 2.0) == doctest::Approx(103.9267798873).epsilon(1e-12));
    CHECK(pathloss_db(10.0, 2.0) == doctest::Approx(67.2267798873).epsilon(1e-12));
    CHECK(pathloss_db(1.0, 1.0) == doctest::Approx(22.7).epsilon(1e-14));
    CHECK_THROWS_AS(pathloss_db(0.0, 2.0), std::domain_error);
    CHECK_THROWS_AS(pathloss_db(-1.0, 2.0), std::domain_error);
  }

  TEST_CASE("noise power") {
    Scenario s;
    CHECK(noise_power_dbm(s) == doctest::Approx(-107.4139268516).epsilon(1e-12));
    s.bandwidth_hz = 1.0;
    s.noise_figure_db = 0.0;
    s.n_rbs = 1;
    s.clusters = contiguous_clusters(16, 4);
    CHECK(noise_power_dbm(s) == doctest::Approx(-174.0));
    Scenario a, b;
    b.n_rbs = 22;
    CHECK(noise_power_dbm(a) - noise_power_dbm(b) == doctest::Approx(10.0 * std::log10(2.0)));
  }

  TEST_CASE("drop determinism and shape") {
    const Scenario s = Scenario::reference();
    const ChannelRealization a = generate_drop(s, 4), b = generate_drop(s, 4), c = generate_drop(s, 5);
    CHECK(a.h == b.h);
    CHECK(a.beta_db == b.beta_db);
    CHECK_FALSE(a.h == c.h);
    CHECK(a.h.size() == 16 * 8 * 11);
    CHECK(a.noise_power_w.rows() == 8);
    CHECK(a.noise_power_w.cols() == 11);
    CHECK(a.noise_power_w(0, 0) == doctest::Approx(units::dbm_to_watt(noise_power_dbm(s))));
    for (const auto& p : a.ap_positions) {
      CHECK(p.x >= 0.0);
      CHECK(p.x <= s.area_side_m);
    }
  }

  TEST_CASE("small-scale fading statistics") {
    const Scenario s = Scenario::reference();
    double power = 0.0;
    cplx cross = 0.0;
    std::size_t samples = 0, pairs = 0;
    for (std::uint64_t d = 0; samples < 100000; ++d) {
      const ChannelRealization ch = generate_drop(s, d);
      cplx prev = 0.0;
      bool have_prev = false;
      for (std::size_t n = 0; n < s.n_aps; ++n)
        for (std::size_t k = 0; k < s.n_ues; ++k) {
          const double amp = std::sqrt(units::db_to_linear(-ch.beta_db(n, k)));
          for (std::size_t f = 0; f < s.n_rbs; ++f) {
            const cplx z = ch.h(n, k, f) / amp;
            power += std::norm(z);
            ++samples;
            if (have_prev) {
              cross += z * std::conj(prev);
              ++pairs;
            }
            prev = z;
            have_prev = true;
          }
        }
    }
    CHECK(power / static_cast<double>(samples) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(cross) / static_cast<double>(pairs) < 3.0 / std::sqrt(static_cast<double>(pairs)));
  }

  TEST_CASE("parse with explicit clusters") {
    std::istringstream in(
        "# tiny\n"
        "n_aps = 4\n"
        "n_ues = 2   # two users\n"
        "n_rbs = 3\n"
        "clusters = 0 1 | 2 3\n"
        "seed = 42\n");
    const Scenario s = parse_scenario(in);
    CHECK(s.n_aps == 4);
    CHECK(s.n_ues == 2);
    CHECK(s.n_rbs == 3);
    CHECK(s.seed == 42);
    REQUIRE(s.clusters.size() == 2);
    CHECK(s.clusters[1] == Cluster{2, 3});
  }

  TEST_CASE("parse with cluster count and defaults") {
    std::istringstream a("n_aps = 6\nn_clusters = 3\n");
    CHECK(parse_scenario(a).clusters == contiguous_clusters(6, 3));
    std::istringstream b("n_aps = 2\n");
    CHECK(parse_scenario(b).clusters.size() == 2);
    std::istringstream empty("");
    CHECK(scenario_to_string(parse_scenario(empty)) == scenario_to_string(Scenario::reference()));
  }

  TEST_CASE("parse errors") {
    auto parse = [](const std::string& text) {
      std::istringstream in(text);
      return parse_scenario(in);
    };
    CHECK_THROWS_AS(parse("bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("n_aps 4\n"), ConfigError);
    CHECK_THROWS_AS(parse("n_aps = four\n"), ConfigError);
    CHECK_THROWS_AS(parse("n_aps = 4\nclusters = 0 1 | 2 3\nn_clusters = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse("n_aps = 4\nclusters = 0 1 | 1 2 3\n"), ConfigError);
    CHECK_THROWS_AS(parse("n_aps = 4\nclusters = 0 1 | 2\n"), ConfigError);
    CHECK_THROWS_AS(parse("n_aps = 4\nclusters = 0 1 | 2 7\n"), ConfigError);
    CHECK_THROWS_AS(parse("n_aps = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("subcarriers_per_rb = 2\n"), ConfigError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/file.cfg"), ConfigError);
  }

  TEST_CASE("serialization round trip and hash") {
    Scenario s = testing::tiny_scenario(11);
    s.p_ap_dbm = 20.5;
    std::istringstream in(scenario_to_string(s));
    const Scenario back = parse_scenario(in);
    CHECK(scenario_to_string(back) == scenario_to_string(s));
    CHECK(scenario_hash(back) == scenario_hash(s));
    CHECK(scenario_hash(s).size() == 16);
    Scenario other = s;
    other.seed = 12;
    CHECK(scenario_hash(other) != scenario_hash(s));
  }

  TEST_CASE("cluster helpers") {
    CHECK(contiguous_clusters(5, 2) == std::vector<Cluster>{{0, 1, 2}, {3, 4}});
    CHECK(singleton_clusters(3) == std::vector<Cluster>{{0}, {1}, {2}});
    CHECK_THROWS_AS(contiguous_clusters(3, 0), ConfigError);
    CHECK_THROWS_AS(contiguous_clusters(3, 4), ConfigError);
  }

  TEST_CASE("from_channels") {
    ComplexTensor3 h(2, 1, 1, cplx(1.0, 0.0));
    const ChannelRealization ch = ChannelRealization::from_channels(h, 0.5);
    CHECK(ch.noise_power_w(0, 0) == 0.5);
    CHECK(ch.n_aps() == 2);
    CHECK_THROWS(ChannelRealization::from_channels(h, 0.0));
  }
}
