#pragma once

#include <array>
#include <string>

#include "hte/test_statistics.hpp"

namespace hte {

// Standard normal CDF, accurate to ~1e-15 (erfc based).
double normal_cdf(double x);

enum class Hypothesis { ExposureCte, PretreatmentCte };

std::string hypothesis_name(Hypothesis h);

struct TestResult {
  Hypothesis hypothesis;
  StatisticDecomposition statistic;
  double p_value = 1.0;
  double level = 0.05;
  bool reject = false;
  enum class Method { Asymptotic, Bootstrap } method = Method::Asymptotic;
};

// One-sided tests: S = (T - a)/sigma, p = 1 - Phi(S), reject iff p <= alpha.
TestResult s1_test(const ClusteredSample& sample, const TestConfig& config);
TestResult s2_test(const ClusteredSample& sample, const TestConfig& config);

// Shared plumbing when both statistics are needed on one dataset: build the
// estimator/grid once and evaluate both tests.
struct TestPair {
  TestResult s1;
  TestResult s2;
};
TestPair run_both_tests(const ClusteredSample& sample,
                        const TestConfig& config);

enum class HeterogeneitySource {
  CteBoth,
  HteExposureOnly,
  HtePretreatmentOnly,
  HteBoth,
};

std::string heterogeneity_source_name(HeterogeneitySource s);

struct MtpResult {
  // p-values in hypothesis order {H_Pi, H_X}.
  std::array<double, 2> p_values{1.0, 1.0};
  std::array<bool, 2> reject{false, false};
  double alpha = 0.05;
  HeterogeneitySource classification = HeterogeneitySource::CteBoth;
};

// Holm step-down over the two hypotheses: smaller p tested at alpha/2,
// then the larger at alpha. Ties broken in favor of H_Pi.
MtpResult holm(double p_exposure, double p_pretreatment, double alpha);

}  // namespace hte
