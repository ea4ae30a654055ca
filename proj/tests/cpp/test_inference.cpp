#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hte/errors.hpp"
#include "hte/inference.hpp"
#include "hte/parallel.hpp"
#include "hte/simulation.hpp"

using namespace hte;

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.6448536269514722) == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(normal_cdf(-1.6448536269514722) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(normal_cdf(8.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(normal_cdf(-8.0) < 1e-14);
  // symmetry to machine precision
  for (double x = 0.0; x < 5.0; x += 0.37)
    CHECK(normal_cdf(x) + normal_cdf(-x) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("test results carry consistent p-values and decisions") {
  DgpConfig dc;
  dc.clusters = 60;
  auto s = gen_dgp(dc, 31);
  TestConfig cfg;
  cfg.grid_points = 40;
  cfg.alpha = 0.05;
  const TestPair pair = run_both_tests(s, cfg);
  for (const TestResult* r : {&pair.s1, &pair.s2}) {
    CHECK(r->p_value ==
          doctest::Approx(1.0 - normal_cdf(r->statistic.studentized))
              .epsilon(1e-12));
    CHECK(r->reject == (r->p_value <= cfg.alpha));
  }
  CHECK(pair.s1.hypothesis == Hypothesis::ExposureCte);
  CHECK(pair.s2.hypothesis == Hypothesis::PretreatmentCte);

  // the shared-plumbing path agrees with the single-test entry points
  const TestResult r1 = s1_test(s, cfg);
  const TestResult r2 = s2_test(s, cfg);
  CHECK(r1.statistic.studentized == pair.s1.statistic.studentized);
  CHECK(r2.statistic.studentized == pair.s2.statistic.studentized);
}

TEST_CASE("holm step-down on the worked examples") {
  {
    auto r = holm(0.60, 0.70, 0.05);
    CHECK_FALSE(r.reject[0]);
    CHECK_FALSE(r.reject[1]);
    CHECK(r.classification == HeterogeneitySource::CteBoth);
  }
  {
    auto r = holm(0.01, 0.03, 0.05);
    CHECK(r.reject[0]);
    CHECK(r.reject[1]);
    CHECK(r.classification == HeterogeneitySource::HteBoth);
  }
  {
    auto r = holm(0.02, 0.20, 0.05);
    CHECK(r.reject[0]);
    CHECK_FALSE(r.reject[1]);
    CHECK(r.classification == HeterogeneitySource::HteExposureOnly);
  }
  {
    auto r = holm(0.20, 0.02, 0.05);
    CHECK_FALSE(r.reject[0]);
    CHECK(r.reject[1]);
    CHECK(r.classification == HeterogeneitySource::HtePretreatmentOnly);
  }
  {
    // the smaller p is tested at alpha/2: 0.03 > 0.025 stops everything
    auto r = holm(0.03, 0.04, 0.05);
    CHECK_FALSE(r.reject[0]);
    CHECK_FALSE(r.reject[1]);
  }
  CHECK_THROWS_AS(holm(-0.1, 0.5, 0.05), DataError);
  CHECK_THROWS_AS(holm(0.1, 0.5, 1.5), DataError);
}

TEST_CASE("holm monotonicity in the p-values") {
  const double alpha = 0.05;
  Rng rng(101, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double p1 = rng.uniform01(), p2 = rng.uniform01();
    const auto base = holm(p1, p2, alpha);
    const double q1 = p1 * rng.uniform01();
    const auto lower1 = holm(q1, p2, alpha);
    // lowering a p-value never converts a rejection into a non-rejection
    if (base.reject[0]) CHECK(lower1.reject[0]);
    if (base.reject[1]) CHECK(lower1.reject[1]);
    const double q2 = p2 * rng.uniform01();
    const auto lower2 = holm(p1, q2, alpha);
    if (base.reject[0]) CHECK(lower2.reject[0]);
    if (base.reject[1]) CHECK(lower2.reject[1]);
  }
}

TEST_CASE("holm controls the familywise error rate under independence") {
  const double alpha = 0.05;
  const int trials = 40000;
  Rng rng(2024, 1);
  int any_rejection = 0;
  for (int i = 0; i < trials; ++i) {
    const auto r = holm(rng.uniform01(), rng.uniform01(), alpha);
    any_rejection += (r.reject[0] || r.reject[1]);
  }
  CHECK(static_cast<double>(any_rejection) / trials <= alpha + 0.02);
}

TEST_CASE("holm ties go to the exposure hypothesis") {
  auto r = holm(0.02, 0.02, 0.05);
  CHECK(r.reject[0]);
  CHECK(r.reject[1]);
  auto r2 = holm(0.03, 0.03, 0.05);
  // 0.03 > alpha/2, exposure ranked first, neither rejected
  CHECK_FALSE(r2.reject[0]);
  CHECK_FALSE(r2.reject[1]);
}
