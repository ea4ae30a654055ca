#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hte/test_statistics.hpp"

namespace hte {

struct BootstrapConfig {
  int reps = 399;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: hardware concurrency
  // Empirical p uses the strict count B^-1 sum 1(S*_b > S_obs); the
  // (count+1)/(B+1) small-sample form is available behind this flag.
  bool add_one_correction = false;
  // Overlap-violating resamples are retried once; beyond this failure
  // fraction the run aborts.
  double max_failed_fraction = 0.05;
  // Restricted mean fit: plain (pi, t) cell means instead of the kernel
  // weighted fit at the covariate mean.
  bool restricted_cell_means = false;
  // Diagnostic hook: force every Rademacher draw to +1 or -1 (0 = random).
  int force_rademacher = 0;
};

struct BootstrapResult {
  double observed = 0.0;  // T - a on the original data, unscaled
  std::vector<double> draws;
  double p_value = 1.0;
  int reps_completed = 0;
  int reps_failed = 0;
};

// Progress hook, called with (completed, total). May be empty.
using ProgressFn = std::function<void(int, int)>;

// Pairs cluster bootstrap with the exposure-constancy null imposed: per
// level k, C_k clusters are drawn with replacement from the pooled sample
// and relabeled to exposure pi_k. C_k is the observed cluster count at
// level k. The resampled statistic is T*_1 - a*_1 (no studentization).
BootstrapResult pairs_cluster_bootstrap_s1(const ClusteredSample& sample,
                                           const TestConfig& test_config,
                                           const BootstrapConfig& config,
                                           const ProgressFn& progress = {});

// Restricted conditional mean fit under the covariate-constancy null:
// Nadaraya-Watson within each (pi, t) cell evaluated at the covariate
// mean. With cell_means = true the kernel is dropped and plain cell means
// are used instead.
std::vector<double> restricted_mean_fit(const ClusteredSample& sample,
                                        const Bandwidth& h,
                                        bool cell_means = false);

// Wild cluster bootstrap with the covariate-constancy null imposed:
// cluster residuals from the restricted fit are flipped by one Rademacher
// draw per cluster. The resampled statistic is T*_2 - a*_2.
BootstrapResult wild_cluster_bootstrap_s2(const ClusteredSample& sample,
                                          const TestConfig& test_config,
                                          const BootstrapConfig& config,
                                          const ProgressFn& progress = {});

}  // namespace hte
