#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cellfree/ota.hpp"
#include "cellfree/oracles/reference.hpp"
#include "helpers.hpp"

using namespace cellfree;
using namespace cellfree::testing;

namespace {

std::vector<std::size_t> all_aps(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

double rel(const ComplexMatrix& a, const ComplexMatrix& b) {
  return frobenius_distance(a, b) / std::max(1e-300, std::sqrt(squared_norm(b)));
}

}  // namespace

TEST_SUITE("ota") {
  TEST_CASE("dft pilot book") {
    const PilotBook b = PilotBook::dft(4);
    CHECK(b.length() == 4);
    CHECK_NOTHROW(b.validate(4));
    CHECK_THROWS_AS(b.validate(5), ConfigError);
    PilotBook bad = b;
    bad.pilots(1, 0) *= 2.0;
    CHECK_THROWS_AS(bad.validate(4), ConfigError);
    bad = b;
    bad.eta_u = 0.0;
    CHECK_THROWS_AS(bad.validate(4), ConfigError);
  }

  TEST_CASE("noiseless downlink recovers gains and interference") {
    const auto ch = ChannelRealization::from_channels(random_channels(3, 3, 2, 1), 0.2);
    const DecisionTensor v = random_decisions(3, 3, 2, 2, 0.4);
    PilotBook book = PilotBook::dft(3);
    book.eta_d = 0.7;
    CounterRng rng(1, 0, Stream::kPilotNoise);
    const DownlinkResult dl = downlink_phase(ch, v, book, {}, rng);
    const ComplexTensor3 g = oracle::naive_effective_gains(ch.h, v);
    CHECK(frobenius_distance(dl.gain_estimates, g) <= 1e-12 * std::sqrt(squared_norm(g)));
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t f = 0; f < 2; ++f) {
        double interference = 0.0;
        for (std::size_t j = 0; j < 3; ++j)
          if (j != k) interference += std::norm(g(k, f, j));
        CHECK(dl.interference_power(k, f) == doctest::Approx(interference).epsilon(1e-10));
      }

    const DownlinkResult zero = downlink_phase(ch, DecisionTensor(3, 3, 2), book, {}, rng);
    CHECK(squared_norm(zero.gain_estimates) == 0.0);
    CHECK(squared_norm(zero.interference_power) == 0.0);
  }

  TEST_CASE("downlink estimate noise variance") {
    const auto ch = ChannelRealization::from_channels(random_channels(2, 2, 1, 3), 0.1);
    const DecisionTensor v = random_decisions(2, 2, 1, 4, 0.5);
    PilotBook book = PilotBook::dft(2);
    book.eta_d = 0.8;
    const ComplexTensor3 g = effective_gains(ch.h, v);
    // Pilot SNR 20 dB relative to the mean received gain power.
    const double sigma2 = 0.01 * squared_norm(g) / static_cast<double>(g.size()) * book.eta_d * book.eta_d;
    const PilotNoiseConfig noise{true, sigma2, 0.0};
    CounterRng rng(5, 0, Stream::kPilotNoise);
    const int trials = 10000;
    double err = 0.0;
    for (int i = 0; i < trials; ++i) {
      const DownlinkResult dl = downlink_phase(ch, v, book, noise, rng);
      err += std::norm(dl.gain_estimates(0, 0, 1) - g(0, 0, 1));
    }
    const double predicted = sigma2 / (book.eta_d * book.eta_d);
    CHECK(err / trials == doctest::Approx(predicted).epsilon(0.1));
  }

  TEST_CASE("ue coefficient update from estimates") {
    DownlinkResult dl;
    dl.gain_estimates = ComplexTensor3(1, 1, 1, cplx(2.0, 0.0));
    dl.interference_power = RealMatrix(1, 1, 0.0);
    const UeCoefficients c = ue_coefficient_update(dl, RealMatrix(1, 1, 2.0));
    CHECK(std::abs(c.u(0, 0) - 1.0 / 3.0) < 1e-15);
    CHECK(c.w(0, 0) == doctest::Approx(3.0));

    dl.gain_estimates(0, 0, 0) = 0.0;
    const UeCoefficients z = ue_coefficient_update(dl, RealMatrix(1, 1, 2.0));
    CHECK(z.u(0, 0) == cplx(0.0, 0.0));
    CHECK(z.w(0, 0) == doctest::Approx(1.0));

    const auto ch = ChannelRealization::from_channels(random_channels(3, 2, 2, 6), 0.3);
    const DecisionTensor v = random_decisions(3, 2, 2, 7);
    CounterRng rng(1, 0, Stream::kPilotNoise);
    const DownlinkResult est = downlink_phase(ch, v, PilotBook::dft(2), {}, rng);
    const UeCoefficients ota = ue_coefficient_update(est, ch.noise_power_w);
    const UeCoefficients genie = mmse_coefficients(ch, v);
    CHECK(rel(ota.u, genie.u) < 1e-12);
    CHECK(frobenius_distance(ota.w, genie.w) < 1e-10 * std::sqrt(squared_norm(genie.w)));
  }

  TEST_CASE("noiseless uplink matches genie terms") {
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
      const auto ch = ChannelRealization::from_channels(random_channels(3, 3, 2, seed), 0.2);
      const DecisionTensor v = random_decisions(3, 3, 2, seed + 50, 0.3);
      UeCoefficients c = mmse_coefficients(ch, v);
      const auto aps = all_aps(3);
      CounterRng rng(seed, 0, Stream::kPilotNoise);
      const OtaReport rep = ota_round(ch, v, c, false, {1.0, 0.2}, {}, rng, aps);
      const ComplexTensor3 g = effective_gains(ch.h, v);
      for (std::size_t n = 0; n < 3; ++n) {
        const ApUpdateTerms ref = ap_terms_direct(ch, c, n, g);
        CHECK(rel(rep.terms[n].a, ref.a) < 1e-9);
        CHECK(rel(rep.terms[n].m, ref.m) < 1e-9);
        for (std::size_t f = 0; f < 2; ++f) CHECK(rep.terms[n].d[f] == doctest::Approx(ref.d[f]).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("uplink special cases") {
    const auto ch = ChannelRealization::from_channels(random_channels(2, 1, 2, 21), 0.2);
    const DecisionTensor v = random_decisions(2, 1, 2, 22);
    PilotBook book = PilotBook::dft(1);
    CounterRng rng(2, 0, Stream::kPilotNoise);
    const DownlinkResult dl = downlink_phase(ch, v, book, {}, rng);
    const auto aps = all_aps(2);

    UeCoefficients unit{ComplexMatrix(1, 2, 1.0), RealMatrix(1, 2, 1.0)};
    const auto terms = uplink_phase(ch, unit, dl.received, book, {}, rng, aps);
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t f = 0; f < 2; ++f) CHECK(std::abs(terms[n].a(0, f) - ch.h(n, 0, f)) < 1e-14);

    UeCoefficients silent{ComplexMatrix(1, 2, 1.0), RealMatrix(1, 2, 0.0)};
    const auto zero = uplink_phase(ch, silent, dl.received, book, {}, rng, aps);
    for (const auto& t : zero) {
      CHECK(squared_norm(t.a) == 0.0);
      CHECK(squared_norm(t.m) == 0.0);
      for (double d : t.d) CHECK(d == 0.0);
    }

    // Only listed APs are filled in.
    const std::vector<std::size_t> one{1};
    const auto partial = uplink_phase(ch, unit, dl.received, book, {}, rng, one);
    CHECK(partial.size() == 2);
    CHECK(partial[0].a.size() == 0);
    CHECK(partial[1].a.size() == 2);
  }

  TEST_CASE("uplink scaling does not change noiseless estimates") {
    const auto ch = ChannelRealization::from_channels(random_channels(2, 2, 2, 30), 0.2);
    const DecisionTensor v = random_decisions(2, 2, 2, 31);
    const UeCoefficients c = mmse_coefficients(ch, v);
    PilotBook book = PilotBook::dft(2);
    CounterRng rng(3, 0, Stream::kPilotNoise);
    const DownlinkResult dl = downlink_phase(ch, v, book, {}, rng);
    const auto aps = all_aps(2);
    const auto a = uplink_phase(ch, c, dl.received, book, {}, rng, aps);
    book.eta_u = 0.013;
    const auto b = uplink_phase(ch, c, dl.received, book, {}, rng, aps);
    for (std::size_t n = 0; n < 2; ++n) {
      CHECK(rel(b[n].a, a[n].a) < 1e-12);
      CHECK(rel(b[n].m, a[n].m) < 1e-12);
    }
  }

  TEST_CASE("noisy estimates keep d nonnegative") {
    const auto ch = ChannelRealization::from_channels(random_channels(2, 2, 2, 40), 0.2);
    const DecisionTensor v = random_decisions(2, 2, 2, 41);
    UeCoefficients c = mmse_coefficients(ch, v);
    CounterRng rng(4, 0, Stream::kPilotNoise);
    const PilotNoiseConfig noise{true, 1.0, 1.0};
    for (int i = 0; i < 100; ++i) {
      const OtaReport rep = ota_round(ch, v, c, true, {1.0, 1.0}, noise, rng, all_aps(2));
      for (const auto& t : rep.terms)
        for (double d : t.d) CHECK(d >= 0.0);
      for (double w : c.w.flat()) CHECK(w > 0.0);
    }
  }

  TEST_CASE("pilot transmissions respect power limits") {
    const auto ch = ChannelRealization::from_channels(random_channels(3, 2, 2, 50), 0.2);
    DecisionTensor v = random_decisions(3, 2, 2, 51, 2.0);  // above the limit
    const double p_t = 0.5, p_ue = 0.1;
    UeCoefficients c = mmse_coefficients(ch, v);
    CounterRng rng(5, 0, Stream::kPilotNoise);
    const OtaReport rep = ota_round(ch, v, c, true, {p_t, p_ue}, {}, rng, all_aps(3));
    CHECK(rep.book.eta_d < 1.0);
    for (std::size_t m = 0; m < 3; ++m) CHECK(downlink_pilot_energy(v, rep.book, m) <= p_t * (1.0 + 1e-12));
    CounterRng rng2(5, 0, Stream::kPilotNoise);
    const DownlinkResult dl = downlink_phase(ch, v, rep.book, {}, rng2);
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(uplink_pilot_energy(c, dl.received, rep.book, k) <= p_ue * (1.0 + 1e-12));

    DecisionTensor small = random_decisions(3, 2, 2, 52, 0.01);
    CHECK(downlink_scaling(small, p_t) == 1.0);
  }

  TEST_CASE("overhead counts") {
    const OverheadCounts one = phase_pair_overhead(8, 11);
    CHECK(one.dl_phases == 1);
    CHECK(one.ul_phases == 1);
    CHECK(one.dl_pilot_symbols == 88);
    CHECK(one.ul_pilot_symbols == 264);
    CHECK(overhead_for_iterations(16, 10, 8, 11).dl_phases == 160);
    CHECK(overhead_for_iterations(16, 10, 8, 11).ul_phases == 160);
    CHECK(overhead_for_iterations(1, 10, 8, 11).dl_phases == 10);
    CHECK(overhead_for_iterations(4, 10, 8, 11).ul_phases == 40);
    OverheadCounts sum;
    for (int i = 0; i < 4; ++i) sum += one;
    CHECK(sum == overhead_for_iterations(4, 1, 8, 11));
  }
}
