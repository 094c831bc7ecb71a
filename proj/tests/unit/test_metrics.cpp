#include <doctest.h>

#include <cmath>

#include "cellfree/metrics.hpp"
#include "cellfree/oracles/reference.hpp"
#include "cellfree/wmmse.hpp"
#include "helpers.hpp"

using namespace cellfree;
using namespace cellfree::testing;

TEST_SUITE("metrics") {
  TEST_CASE("effective gains") {
    const ComplexTensor3 h = random_channels(3, 2, 2, 1);
    CHECK(squared_norm(effective_gains(h, DecisionTensor(3, 2, 2))) == 0.0);

    const ComplexTensor3 h1 = random_channels(1, 2, 3, 2);
    DecisionTensor ones(1, 2, 3);
    for (auto& x : ones.v.flat()) x = 1.0;
    const ComplexTensor3 g1 = effective_gains(h1, ones);
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t f = 0; f < 3; ++f)
        for (std::size_t kp = 0; kp < 2; ++kp) CHECK(g1(k, f, kp) == h1(0, k, f));

    const DecisionTensor v = random_decisions(3, 2, 2, 3);
    CHECK(frobenius_distance(effective_gains(h, v), oracle::naive_effective_gains(h, v)) < 1e-14);
    CHECK_THROWS(effective_gains(h, DecisionTensor(2, 2, 2)));
  }

  TEST_CASE("sinr trivial cases") {
    ComplexTensor3 g(1, 1, 1, cplx(1.0, 0.0));
    CHECK(sinr_from_gains(g, RealMatrix(1, 1, 1.0))(0, 0) == doctest::Approx(1.0));
    g(0, 0, 0) = 0.0;
    CHECK(sinr_from_gains(g, RealMatrix(1, 1, 1.0))(0, 0) == 0.0);
  }

  TEST_CASE("sinr against scalar evaluation") {
    const auto ch = ChannelRealization::from_channels(random_channels(3, 2, 2, 4), 0.3);
    const DecisionTensor v = random_decisions(3, 2, 2, 5);
    const RealMatrix s = sinr(ch, v);
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t f = 0; f < 2; ++f)
        CHECK(s(k, f) == doctest::Approx(oracle::scalar_sinr(ch, v, k, f)).epsilon(1e-13));
  }

  TEST_CASE("sum rate") {
    // K = F = 1, C = 12, SINR = 3 -> 12 * log2(4) = 24.
    ComplexTensor3 h(1, 1, 1, cplx(std::sqrt(3.0), 0.0));
    const auto ch = ChannelRealization::from_channels(h, 1.0, 12);
    DecisionTensor v(1, 1, 1);
    v.v(0, 0, 0) = 1.0;
    CHECK(sum_rate(ch, v) == doctest::Approx(24.0));
    CHECK(sum_rate_per_subcarrier(ch, v) == doctest::Approx(2.0));
    CHECK(sum_rate(ch, DecisionTensor(1, 1, 1)) == 0.0);

    const auto ch2 = ChannelRealization::from_channels(random_channels(3, 2, 2, 6), 0.2, 12);
    const DecisionTensor v2 = random_decisions(3, 2, 2, 7);
    double expected = 0.0;
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t f = 0; f < 2; ++f) expected += std::log2(1.0 + oracle::scalar_sinr(ch2, v2, k, f));
    CHECK(sum_rate(ch2, v2) == doctest::Approx(12.0 * expected).epsilon(1e-13));
  }

  TEST_CASE("phase invariance") {
    const auto ch = ChannelRealization::from_channels(random_channels(3, 3, 2, 8), 0.1);
    DecisionTensor v = random_decisions(3, 3, 2, 9);
    const double before = sum_rate(ch, v);
    // A common phase per (k', f) stream leaves every |G| unchanged.
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t f = 0; f < 2; ++f) v.v(n, k, f) *= std::polar(1.0, 0.3 + k + 2.0 * f);
    CHECK(sum_rate(ch, v) == doctest::Approx(before).epsilon(1e-13));
  }

  TEST_CASE("single-user rate grows with power") {
    const auto ch = ChannelRealization::from_channels(random_channels(2, 1, 2, 10), 0.5);
    const DecisionTensor v = random_decisions(2, 1, 2, 11);
    double prev = -1.0;
    for (double scale : {0.1, 0.5, 1.0, 2.0, 10.0}) {
      DecisionTensor s = v;
      for (auto& x : s.v.flat()) x *= scale;
      const double r = sum_rate(ch, s);
      CHECK(r > prev);
      prev = r;
    }
  }

  TEST_CASE("mse values") {
    const auto ch = ChannelRealization::from_channels(random_channels(2, 2, 2, 12), 0.5);
    const DecisionTensor zero(2, 2, 2);
    UeCoefficients c{ComplexMatrix(2, 2, 0.0), RealMatrix(2, 2, 1.0)};
    const RealMatrix silent = mse(ch, random_decisions(2, 2, 2, 13), c);
    for (double e : silent.flat()) CHECK(e == doctest::Approx(1.0));
    c.u = ComplexMatrix(2, 2, 1.0);
    const RealMatrix off = mse(ch, zero, c);
    for (double e : off.flat()) CHECK(e == doctest::Approx(1.5));
  }

  TEST_CASE("mmse receiver attains 1 / (1 + sinr)") {
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
      const auto ch = ChannelRealization::from_channels(random_channels(3, 3, 2, seed), 0.3);
      const DecisionTensor v = random_decisions(3, 3, 2, seed + 100);
      const UeCoefficients c{update_u(ch, v), RealMatrix(3, 2, 1.0)};
      const RealMatrix e = mse(ch, v, c);
      const RealMatrix s = sinr(ch, v);
      for (std::size_t i = 0; i < e.size(); ++i)
        CHECK(e.flat()[i] == doctest::Approx(1.0 / (1.0 + s.flat()[i])).epsilon(1e-12));
    }
  }

  TEST_CASE("weighted objective") {
    const auto ch = ChannelRealization::from_channels(random_channels(2, 2, 3, 30), 0.4);
    const DecisionTensor v = random_decisions(2, 2, 3, 31);
    UeCoefficients c{update_u(ch, v), RealMatrix(2, 3, 1.0)};
    double plain = 0.0;
    const RealMatrix eps = mse(ch, v, c);
    for (double e : eps.flat()) plain += e;
    CHECK(weighted_mse_objective(ch, v, c) == doctest::Approx(plain));
    const double base = weighted_mse_objective(ch, v, c);
    for (auto& w : c.w.flat()) w *= 2.0;
    CHECK(weighted_mse_objective(ch, v, c) == doctest::Approx(2.0 * base));

    CounterRng rng(1, 2, Stream::kFading);
    for (auto& w : c.w.flat()) w = 0.5 + rng.uniform();
    const oracle::LocalProblem p{&ch, &v, &c, 0, 1.0};
    CHECK(weighted_mse_objective(ch, v, c) == doctest::Approx(p.objective(v.ap(0))).epsilon(1e-13));
  }

  TEST_CASE("power checks") {
    DecisionTensor v(2, 1, 2);
    v.v(0, 0, 0) = 1.0;
    v.v(1, 0, 1) = cplx(0.0, 2.0);
    CHECK(v.ap_power(1) == doctest::Approx(4.0));
    CHECK(max_power_ratio(v, 2.0) == doctest::Approx(2.0));
    CHECK_FALSE(power_feasible(v, 2.0));
    CHECK(power_feasible(v, 4.0));
    CHECK(power_feasible(v, 4.0 / (1.0 + 1e-9)));
  }

  TEST_CASE("decision slices") {
    DecisionTensor v = random_decisions(3, 2, 2, 40);
    const ComplexMatrix s = v.ap(1);
    CHECK(s(1, 0) == v.v(1, 1, 0));
    ComplexMatrix z(2, 2);
    v.set_ap(2, z);
    CHECK(v.ap_power(2) == 0.0);
    CHECK_THROWS(v.set_ap(0, ComplexMatrix(3, 2)));
  }
}
