#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hte/bootstrap.hpp"
#include "hte/sample.hpp"
#include "hte/test_statistics.hpp"

namespace hte {

// Data generating process for the size/power experiments:
//   Y = (tau(X, Pi) + U1) T + U0 (1 - T),  U_t ~ N(0, error_sd^2),
// X uniform on [0,1]^d with within-cluster correlation via a Gaussian
// copula, one treatment vector of mean pi_k per cluster.
struct DgpConfig {
  int clusters = 150;
  int cluster_size = 10;
  std::vector<double> exposure_levels = {0.3, 0.4, 0.5, 0.6};
  double beta0 = 1.0;
  double beta1 = 0.0;
  enum class CateForm { Linear, CosineNonlinear, LinearMultiX };
  CateForm cate_form = CateForm::Linear;
  double error_sd = 0.1;
  double x_correlation = 0.2;             // within-cluster copula weight
  int d = 1;

  double cate(const double* x, double pi) const;
};

ClusteredSample gen_dgp(const DgpConfig& config, std::uint64_t seed,
                        std::uint64_t stream = 0);

enum class StatKind { S1, S2 };
enum class MethodKind { Asymptotic, Bootstrap };

struct PowerCell {
  double beta = 0.0;
  std::vector<double> rejection;  // one per nominal level
};

struct PowerTable {
  StatKind stat;
  MethodKind method;
  std::vector<double> levels;
  std::vector<PowerCell> rows;
  int reps = 0;
  std::uint64_t seed = 0;
  int dropped_reps = 0;
};

struct SimulationConfig {
  DgpConfig dgp;
  TestConfig test;
  StatKind stat = StatKind::S1;
  MethodKind method = MethodKind::Asymptotic;
  std::vector<double> betas = {0.0};  // values of the varied coefficient
  std::vector<double> levels = {0.01, 0.05, 0.10};
  int reps = 1000;
  int bootstrap_reps = 399;
  std::uint64_t seed = 1;
  int workers = 0;
  // The varied coefficient is beta1 for S1 rows and beta0 for S2 rows,
  // with the other fixed to the null-side value (beta0=1 resp. beta1=1).
};

PowerTable rejection_probabilities(const SimulationConfig& config);

// Per-rep detail for one DGP setting: p-values (and rejections at one
// level) over Monte Carlo replications.
struct McPvalues {
  std::vector<double> p_values;
  int dropped_reps = 0;
};
McPvalues mc_pvalues(const DgpConfig& dgp, const TestConfig& test,
                     StatKind stat, MethodKind method, int reps,
                     int bootstrap_reps, std::uint64_t seed, int workers);

// OLS of Y on (1, T, X, Pi, T*X, T*Pi) with cluster-robust (Liang-Zeger,
// CR1 small-sample factor) covariance.
struct ParametricResult {
  std::vector<std::string> names;
  std::vector<double> coef;
  std::vector<double> se;
  std::vector<double> t_stat;
  std::vector<double> p_value;  // two-sided normal
  // Wald test that both interaction coefficients are zero.
  double interaction_wald = 0.0;
  double interaction_p = 1.0;
  int n = 0;
  int clusters = 0;
};

ParametricResult ols_cluster_comparison(const ClusteredSample& sample);

std::string power_table_csv(const PowerTable& table);
std::string power_table_long_csv(const PowerTable& table);

}  // namespace hte
