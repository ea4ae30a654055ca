#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hte/bootstrap.hpp"
#include "hte/errors.hpp"
#include "hte/simulation.hpp"

using namespace hte;

namespace {

DgpConfig small_dgp() {
  DgpConfig cfg;
  cfg.clusters = 40;
  cfg.cluster_size = 10;
  return cfg;
}

TestConfig fast_test_config() {
  TestConfig cfg;
  cfg.grid_points = 25;
  return cfg;
}

}  // namespace

TEST_CASE("bootstrap draws replay identically across worker counts") {
  auto s = gen_dgp(small_dgp(), 3);
  const TestConfig tc = fast_test_config();
  BootstrapConfig bc;
  bc.reps = 16;
  bc.seed = 99;
  bc.workers = 1;
  const auto one = pairs_cluster_bootstrap_s1(s, tc, bc);
  bc.workers = 4;
  const auto four = pairs_cluster_bootstrap_s1(s, tc, bc);
  CHECK(one.draws == four.draws);
  CHECK(one.p_value == four.p_value);
  CHECK(one.observed == four.observed);

  bc.workers = 1;
  const auto w1 = wild_cluster_bootstrap_s2(s, tc, bc);
  bc.workers = 4;
  const auto w4 = wild_cluster_bootstrap_s2(s, tc, bc);
  CHECK(w1.draws == w4.draws);

  bc.seed = 100;
  const auto other = pairs_cluster_bootstrap_s1(s, tc, bc);
  CHECK(other.draws != one.draws);
}

TEST_CASE("pairs bootstrap with degenerate outcomes") {
  auto base = gen_dgp(small_dgp(), 5);
  std::vector<double> zeros(base.num_units(), 0.0);
  auto s = base.with_outcomes(zeros);
  const TestConfig tc = fast_test_config();
  BootstrapConfig bc;
  bc.reps = 1;
  bc.seed = 7;
  const auto r = pairs_cluster_bootstrap_s1(s, tc, bc);
  // T* is zero up to rounding, so every draw is -a1 of its pseudo-sample
  CHECK(r.observed < 0.0);
  for (double d : r.draws) {
    CHECK(d < 0.0);
    CHECK(std::abs(d - r.observed) < 0.5);
  }
  CHECK((r.p_value == 0.0 || r.p_value == 1.0));
  const auto again = pairs_cluster_bootstrap_s1(s, tc, bc);
  CHECK(again.p_value == r.p_value);
}

TEST_CASE("forced +1 Rademacher draws reproduce the observed statistic") {
  auto s = gen_dgp(small_dgp(), 8);
  const TestConfig tc = fast_test_config();
  BootstrapConfig bc;
  bc.reps = 3;
  bc.seed = 1;
  bc.force_rademacher = 1;
  const auto r = wild_cluster_bootstrap_s2(s, tc, bc);
  for (double d : r.draws) CHECK(d == r.observed);
  // strict inequality in the p-value count: no draw exceeds the observed
  CHECK(r.p_value == 0.0);

  BootstrapConfig bc1 = bc;
  bc1.add_one_correction = true;
  const auto r1 = wild_cluster_bootstrap_s2(s, tc, bc1);
  CHECK(r1.p_value == doctest::Approx(1.0 / 4.0).epsilon(1e-15));
}

TEST_CASE("restricted mean fit with huge bandwidth equals cell means") {
  auto s = gen_dgp(small_dgp(), 11);
  const auto kernel_fit = restricted_mean_fit(s, fixed_bandwidth(1e9, 1));
  const auto plain_fit = restricted_mean_fit(s, fixed_bandwidth(0.2, 1), true);
  REQUIRE(kernel_fit.size() == static_cast<std::size_t>(s.num_units()));
  for (int i = 0; i < s.num_units(); ++i)
    CHECK(kernel_fit[i] == doctest::Approx(plain_fit[i]).epsilon(1e-12));
  // constant within each (pi, t) cell
  for (int i = 1; i < s.num_units(); ++i)
    if (s.level_of(i) == s.level_of(0) && s.t()[i] == s.t()[0])
      CHECK(kernel_fit[i] == kernel_fit[0]);
}

TEST_CASE("restricted mean fit hand oracle") {
  // six units, one level pair, finite bandwidth
  std::vector<std::string> key{"a", "a", "a", "b", "b", "b"};
  std::vector<double> y{1.0, 2.0, 4.0, 0.5, 1.5, 3.5};
  std::vector<int> t{1, 1, 0, 1, 0, 0};
  std::vector<double> x{0.40, 0.60, 0.50, 0.45, 0.55, 0.52};
  std::vector<double> pi{0.3, 0.3, 0.3, 0.6, 0.6, 0.6};
  auto s = ClusteredSample::from_columns(key, y, t, x, 1, pi);
  const double h = 0.4;
  const auto fit = restricted_mean_fit(s, fixed_bandwidth(h, 1));

  const double x_bar = (0.40 + 0.60 + 0.50 + 0.45 + 0.55 + 0.52) / 6.0;
  auto kern = [&](double xi) {
    const double u = (x_bar - xi) / h;
    return std::abs(u) <= 0.5 ? 1.5 * (1 - 4 * u * u) : 0.0;
  };
  // cell (pi=0.3, t=1) holds units 0 and 1
  const double expect01 =
      (y[0] * kern(x[0]) + y[1] * kern(x[1])) / (kern(x[0]) + kern(x[1]));
  CHECK(fit[0] == doctest::Approx(expect01).epsilon(1e-14));
  CHECK(fit[1] == fit[0]);
  // singleton cell (pi=0.3, t=0) reproduces its own outcome
  CHECK(fit[2] == doctest::Approx(y[2]).epsilon(1e-14));
}

TEST_CASE("restricted mean fit fails when a cell has no kernel mass") {
  // level 0.3 lives far left, level 0.6 far right; the mean sits between
  std::vector<std::string> key;
  std::vector<double> y, x, pi;
  std::vector<int> t;
  for (int c = 0; c < 6; ++c)
    for (int i = 0; i < 4; ++i) {
      key.push_back("c" + std::to_string(c));
      const bool low = c % 2;
      x.push_back(low ? 0.05 + 0.01 * i : 0.95 - 0.01 * i);
      y.push_back(1.0);
      t.push_back(i % 2);
      pi.push_back(low ? 0.3 : 0.6);
    }
  auto s = ClusteredSample::from_columns(key, y, t, x, 1, pi);
  CHECK_THROWS_AS(restricted_mean_fit(s, fixed_bandwidth(0.1, 1)),
                  NumericError);
}

TEST_CASE("wild bootstrap preserves cluster structure and design columns") {
  auto s = gen_dgp(small_dgp(), 13);
  const TestConfig tc = fast_test_config();
  const auto fit = restricted_mean_fit(s, tc.resolve_bandwidth(s));
  // flipped outcomes stay within the fitted-residual reflection
  std::vector<double> y_minus(s.num_units());
  for (int i = 0; i < s.num_units(); ++i) y_minus[i] = 2.0 * fit[i] - s.y()[i];
  BootstrapConfig bc;
  bc.reps = 2;
  bc.seed = 17;
  bc.force_rademacher = -1;
  const auto r = wild_cluster_bootstrap_s2(s, tc, bc);
  const auto manual = s.with_outcomes(y_minus);
  // recompute the statistic on the manually flipped sample
  BootstrapConfig bc_plus;
  bc_plus.reps = 1;
  bc_plus.seed = 17;
  bc_plus.force_rademacher = 1;
  const auto manual_run = wild_cluster_bootstrap_s2(manual, tc, bc_plus);
  CHECK(r.draws[0] == doctest::Approx(manual_run.observed).epsilon(1e-12));
}

TEST_CASE("empirical p-value counts strict exceedances") {
  auto s = gen_dgp(small_dgp(), 21);
  const TestConfig tc = fast_test_config();
  BootstrapConfig bc;
  bc.reps = 25;
  bc.seed = 5;
  const auto r = pairs_cluster_bootstrap_s1(s, tc, bc);
  int exceed = 0;
  for (double d : r.draws)
    if (d > r.observed) ++exceed;
  CHECK(r.p_value ==
        doctest::Approx(double(exceed) / r.reps_completed).epsilon(1e-15));
  CHECK(r.reps_completed + r.reps_failed == bc.reps);
  CHECK(r.p_value >= 0.0);
  CHECK(r.p_value <= 1.0);
}

TEST_CASE("bootstrap rejects invalid configuration") {
  auto s = gen_dgp(small_dgp(), 23);
  const TestConfig tc = fast_test_config();
  BootstrapConfig bc;
  bc.reps = 0;
  CHECK_THROWS_AS(pairs_cluster_bootstrap_s1(s, tc, bc), DataError);
}
