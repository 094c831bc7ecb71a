#include <doctest.h>

#include <string>

#include "cellfree/oracles/reference.hpp"
#include "cellfree/oracles/validation.hpp"
#include "helpers.hpp"

using namespace cellfree;

namespace {

ApUpdate flipped_interference(const ApUpdateTerms& terms, const ComplexMatrix& v_prev, double p_t) {
  ApUpdateTerms t = terms;
  for (auto& x : t.m.flat()) x = -x;
  return ap_best_response(t, v_prev, p_t);
}

}  // namespace

TEST_SUITE("oracles") {
  TEST_CASE("analytic gradient matches finite differences") {
    CounterRng rng(31, 0, Stream::kPositions);
    for (int i = 0; i < 10; ++i) {
      const oracle::RandomInstance inst = oracle::random_instance(rng);
      const UeCoefficients coeffs = inst.coeffs;
      const oracle::LocalProblem p{&inst.ch, &inst.base, &coeffs, 0, inst.p_t};
      const ComplexMatrix x = inst.base.ap(0);
      const ComplexMatrix g = p.gradient(x);
      const ComplexMatrix fd = p.finite_difference_gradient(x, 1e-6);
      CHECK(frobenius_distance(g, fd) <= 1e-5 * (1.0 + std::sqrt(squared_norm(g))));
    }
  }

  TEST_CASE("suites pass on the reference implementation") {
    for (const auto& r : {oracle::check_closed_form_objective(3, 10), oracle::check_kkt(3, 10),
                          oracle::check_ota_fidelity(3, 10)}) {
      INFO(r.name << ": " << r.detail);
      CHECK(r.passed);
      CHECK(r.cases == 10);
    }
  }

  TEST_CASE("a sign flip in the interference term is caught") {
    const auto obj = oracle::check_closed_form_objective(3, 20, flipped_interference);
    const auto kkt = oracle::check_kkt(3, 20, flipped_interference);
    CHECK_FALSE(obj.passed);
    CHECK_FALSE(kkt.passed);
    CHECK(kkt.worst > 1e3 * kkt.threshold);
  }

  TEST_CASE("verdict is stable across seeds") {
    const auto a = oracle::run_validation(7);
    const auto b = oracle::run_validation(8);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      INFO(a[i].name);
      CHECK(a[i].passed);
      CHECK(a[i].passed == b[i].passed);
      CHECK(a[i].name == b[i].name);
    }
    const std::string j = oracle::verdict_json(a, 7);
    CHECK(j.find("\"passed\": false") == std::string::npos);
  }
}
