#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "hte/kernel.hpp"
#include "hte/sample.hpp"

namespace hte {

struct CateEstimate {
  double value = 0.0;
  double p1_hat = 0.0;
  double p0_hat = 0.0;
  // Units with nonzero kernel weight in each arm.
  int support1 = 0;
  int support0 = 0;
};

// Counters for numerical guards tripped during estimation. Well-conditioned
// data should leave all of them at zero.
struct EstimatorDiagnostics {
  std::int64_t rho2_floor_hits = 0;
  std::int64_t corr_clamps = 0;
};

// Pooled (working independence) kernel estimators at a bandwidth. The
// sample is shared read-only; evaluation is safe from multiple threads.
class KernelEstimator {
 public:
  KernelEstimator(const ClusteredSample& sample, Bandwidth h);

  const ClusteredSample& sample() const { return sample_; }
  const Bandwidth& bandwidth() const { return h_; }

  // (1/(N h^d)) sum_i 1(Pi_i = pi_level) 1(T_i = t) K((x - X_i)/h).
  double propensity(std::span<const double> x, int level, int t) const;

  // Hajek-type CATE estimate; throws NumericError if either propensity
  // cell vanishes at x.
  CateEstimate cate(std::span<const double> x, int level) const;

  // Single-sum and double-sum second-moment terms of the variance
  // estimator. mu2 is the exact O(m^2) double sum over the kernel window.
  double mu1(std::span<const double> x, int level) const;
  double mu2(std::span<const double> x, int level) const;

  // rho2 = (mu1 - mu2) * int K^2, floored at a tiny multiple of Var(Y)
  // (the asymptotic variance is strictly positive; finite samples can dip
  // below zero).
  double rho2(std::span<const double> x, int level) const;

  // Piecewise correlation estimator between scaled CATE differences for
  // exposure index tuples (i,j) and (k,l) at lag t. rho2_i/rho2_j are the
  // precomputed rho2 values at x for levels i and j (only the shared level
  // enters; pass both to cover the four one-shared-index cases).
  // conv_ratio_t is conv_ratio(t). Result clamped to [-1, 1].
  double corr_tuple(double conv_ratio_t, int i, int j, int k, int l,
                    std::span<const double> rho2_at_x) const;

  // 1 / sqrt(rho2(x, pi_k) + rho2(x, pi_j)): the inverse scaled standard
  // error of the CATE difference across exposures (cluster-level form,
  // cross covariance zero).
  double weight1(std::span<const double> x, int level_k, int level_j) const;

  // Variance of the scaled CATE difference across covariate points,
  // including the within-bandwidth covariance correction when enabled:
  //   rho2(x) + rho2(x')
  //     - 2 sqrt(rho2(x) rho2(x')) 1(t in [-1,1]^d) conv_ratio(t),
  // t = (x - x')/h. The symmetric factor keeps the radicand nonnegative
  // for any pair of variances; it equals the asymptotic form as x' -> x.
  // With use_abs_cov = true the correction factor is g(conv_ratio(t))
  // instead. With the correction disabled entirely it is the plain sum.
  double rho2_pair(std::span<const double> x, std::span<const double> x_prime,
                   int level, bool covariance_correction,
                   bool use_abs_cov = false) const;

  // 1 / sqrt(rho2_pair); throws NumericError on a nonpositive radicand.
  double weight2(std::span<const double> x, std::span<const double> x_prime,
                 int level, bool covariance_correction = true,
                 bool use_abs_cov = false) const;

  // Number of units of (level, t) with nonzero kernel weight at x; the
  // grid-point retention rule checks this against a mass floor.
  int cell_support(std::span<const double> x, int level, int t) const;

  EstimatorDiagnostics diagnostics() const;

 private:
  struct Window {
    const int* begin;
    const int* end;
  };
  // Units of a level whose first coordinate lies within the kernel support
  // around x0 (all units of the level when d = 0 pruning is unavailable).
  Window window(double x0, int level) const;
  double kernel_at(std::span<const double> x, int unit) const;

  const ClusteredSample& sample_;
  Bandwidth h_;
  double inv_nhd_;
  double rho2_floor_;
  std::vector<std::vector<int>> level_units_;  // sorted by first coordinate
  std::vector<std::vector<double>> level_x0_;  // first coordinate, sorted
  mutable std::atomic<std::int64_t> rho2_floor_hits_{0};
  mutable std::atomic<std::int64_t> corr_clamps_{0};
};

// Covariance of |sqrt(1-rho^2) Z1 + rho Z2| and |Z2| for independent
// standard normals: (2/pi) (sqrt(1-rho^2) + rho asin(rho) - 1).
double gaussian_abs_cov(double rho);

}  // namespace hte
