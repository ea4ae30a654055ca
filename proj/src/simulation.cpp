#include "hte/simulation.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "hte/errors.hpp"
#include "hte/inference.hpp"
#include "hte/parallel.hpp"

namespace hte {

double DgpConfig::cate(const double* x, double pi) const {
  switch (cate_form) {
    case CateForm::Linear:
      return beta0 * x[0] + beta1 * pi;
    case CateForm::CosineNonlinear:
      // 3.142 as printed, not pi.
      return 30.0 * std::cos(2.0 * 3.142 * x[0]) * (pi * pi - pi);
    case CateForm::LinearMultiX: {
      double sum = 0.0;
      for (int j = 0; j < d; ++j) sum += x[j];
      return beta0 * sum + beta1 * pi;
    }
  }
  return 0.0;
}

ClusteredSample gen_dgp(const DgpConfig& config, std::uint64_t seed,
                        std::uint64_t stream) {
  const int C = config.clusters;
  const int nc = config.cluster_size;
  const int K = static_cast<int>(config.exposure_levels.size());
  const int d = config.d;
  if (C < 2 || nc < 1 || K < 2) throw DataError("dgp: invalid configuration");
  if (!(config.x_correlation >= 0.0 && config.x_correlation < 1.0))
    throw DataError("dgp: x_correlation must lie in [0, 1)");

  std::vector<int> ones_of(K);
  for (int k = 0; k < K; ++k) {
    const double target = config.exposure_levels[k] * nc;
    const double rounded = std::round(target);
    if (std::abs(target - rounded) > 1e-9 * nc)
      throw DataError("dgp: exposure level " +
                      std::to_string(config.exposure_levels[k]) +
                      " is not a feasible mean of " + std::to_string(nc) +
                      " binary treatments");
    ones_of[k] = static_cast<int>(rounded);
  }

  Rng rng(seed, stream);
  const double w_shared = std::sqrt(config.x_correlation);
  const double w_own = std::sqrt(1.0 - config.x_correlation);

  const int N = C * nc;
  std::vector<std::string> key(N);
  std::vector<double> y(N), x(static_cast<std::size_t>(N) * d), pi(N);
  std::vector<int> t(N);
  std::vector<int> t_c(nc);
  std::vector<double> shared(d);

  int u = 0;
  for (int c = 0; c < C; ++c) {
    const int k = rng.below(K);
    const double pi_k = config.exposure_levels[k];

    std::fill(t_c.begin(), t_c.end(), 0);
    std::fill(t_c.begin(), t_c.begin() + ones_of[k], 1);
    for (int i = nc - 1; i > 0; --i) std::swap(t_c[i], t_c[rng.below(i + 1)]);

    for (int j = 0; j < d; ++j) shared[j] = rng.normal();

    for (int i = 0; i < nc; ++i, ++u) {
      key[u] = "c" + std::to_string(c + 1);
      for (int j = 0; j < d; ++j) {
        const double z = rng.normal();
        x[u * d + j] = normal_cdf(w_shared * shared[j] + w_own * z);
      }
      const double u1 = rng.normal() * config.error_sd;
      const double u0 = rng.normal() * config.error_sd;
      const double tau = config.cate(&x[u * d], pi_k);
      t[u] = t_c[i];
      y[u] = t_c[i] ? tau + u1 : u0;
      pi[u] = pi_k;
    }
  }
  return ClusteredSample::from_columns(key, y, t, x, d, pi);
}

McPvalues mc_pvalues(const DgpConfig& dgp, const TestConfig& test,
                     StatKind stat, MethodKind method, int reps,
                     int bootstrap_reps, std::uint64_t seed, int workers) {
  if (reps < 1) throw DataError("mc: reps must be >= 1");
  McPvalues out;
  out.p_values.assign(reps, std::numeric_limits<double>::quiet_NaN());

  parallel_for(reps, workers, [&](int r) {
    try {
      const ClusteredSample sample = gen_dgp(dgp, seed, r);
      if (method == MethodKind::Asymptotic) {
        const TestResult res =
            stat == StatKind::S1 ? s1_test(sample, test) : s2_test(sample, test);
        out.p_values[r] = res.p_value;
      } else {
        BootstrapConfig bc;
        bc.reps = bootstrap_reps;
        bc.seed = mix64(seed, r);
        bc.workers = 1;  // replications already saturate the pool
        const BootstrapResult res =
            stat == StatKind::S1
                ? pairs_cluster_bootstrap_s1(sample, test, bc)
                : wild_cluster_bootstrap_s2(sample, test, bc);
        out.p_values[r] = res.p_value;
      }
    } catch (const NumericError&) {
      // dropped replication, counted below
    }
  });

  std::vector<double> kept;
  kept.reserve(reps);
  for (double p : out.p_values)
    if (!std::isnan(p)) kept.push_back(p);
  out.dropped_reps = reps - static_cast<int>(kept.size());
  if (out.dropped_reps > 0.02 * reps)
    throw NumericError("mc: " + std::to_string(out.dropped_reps) + "/" +
                       std::to_string(reps) + " replications failed");
  out.p_values = std::move(kept);
  return out;
}

PowerTable rejection_probabilities(const SimulationConfig& config) {
  PowerTable table;
  table.stat = config.stat;
  table.method = config.method;
  table.levels = config.levels;
  table.reps = config.reps;
  table.seed = config.seed;

  for (std::size_t row = 0; row < config.betas.size(); ++row) {
    DgpConfig dgp = config.dgp;
    if (config.stat == StatKind::S1)
      dgp.beta1 = config.betas[row];
    else
      dgp.beta0 = config.betas[row];

    const McPvalues mc =
        mc_pvalues(dgp, config.test, config.stat, config.method, config.reps,
                   config.bootstrap_reps, mix64(config.seed, 7777 + row),
                   config.workers);
    table.dropped_reps += mc.dropped_reps;

    PowerCell cell;
    cell.beta = config.betas[row];
    for (double level : config.levels) {
      int rejections = 0;
      for (double p : mc.p_values)
        if (p <= level) ++rejections;
      cell.rejection.push_back(static_cast<double>(rejections) /
                               mc.p_values.size());
    }
    table.rows.push_back(std::move(cell));
  }
  return table;
}

ParametricResult ols_cluster_comparison(const ClusteredSample& sample) {
  if (sample.dim() != 1)
    throw DataError("ols comparison: requires a single covariate");
  if (!sample.exposures_set())
    throw DataError("ols comparison: exposures not set");
  const int N = sample.num_units();
  const int C = sample.num_clusters();
  const int P = 6;
  if (N <= P) throw DataError("ols comparison: too few observations");

  Eigen::MatrixXd X(N, P);
  Eigen::VectorXd y(N);
  for (int i = 0; i < N; ++i) {
    const double ti = sample.t()[i];
    const double xi = sample.x_at(i, 0);
    const double pii = sample.pi()[i];
    X(i, 0) = 1.0;
    X(i, 1) = ti;
    X(i, 2) = xi;
    X(i, 3) = pii;
    X(i, 4) = ti * xi;
    X(i, 5) = ti * pii;
    y(i) = sample.y()[i];
  }

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < P)
    throw NumericError("ols comparison: design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * beta;

  const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(P, P);
  for (int c = 0; c < C; ++c) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(P);
    for (int i = sample.cluster_begin(c); i < sample.cluster_end(c); ++i)
      g += X.row(i).transpose() * resid(i);
    meat += g * g.transpose();
  }
  // CR1 small-sample factor.
  const double q = (double(C) / (C - 1)) * (double(N - 1) / (N - P));
  const Eigen::MatrixXd V = q * bread * meat * bread;

  ParametricResult out;
  out.names = {"(Intercept)", "T", "X", "Pi", "T:X", "T:Pi"};
  out.n = N;
  out.clusters = C;
  for (int j = 0; j < P; ++j) {
    out.coef.push_back(beta(j));
    out.se.push_back(std::sqrt(V(j, j)));
    out.t_stat.push_back(beta(j) / out.se.back());
    out.p_value.push_back(2.0 * (1.0 - normal_cdf(std::abs(out.t_stat.back()))));
  }

  const Eigen::Vector2d b_int(beta(4), beta(5));
  const Eigen::Matrix2d v_int = V.block<2, 2>(4, 4);
  out.interaction_wald = b_int.transpose() * v_int.inverse() * b_int;
  // chi-squared with two degrees of freedom
  out.interaction_p = std::exp(-out.interaction_wald / 2.0);
  return out;
}

namespace {

std::string stat_name(StatKind s) { return s == StatKind::S1 ? "S1" : "S2"; }
std::string method_name(MethodKind m) {
  return m == MethodKind::Asymptotic ? "asymptotic" : "bootstrap";
}

}  // namespace

std::string power_table_csv(const PowerTable& table) {
  std::ostringstream os;
  os << "beta";
  for (double level : table.levels) os << ",level_" << level;
  os << "\n";
  for (const auto& row : table.rows) {
    os << row.beta;
    for (double r : row.rejection) os << "," << r;
    os << "\n";
  }
  return os.str();
}

std::string power_table_long_csv(const PowerTable& table) {
  std::ostringstream os;
  os << "stat,method,beta,level,rejection\n";
  for (const auto& row : table.rows)
    for (std::size_t i = 0; i < table.levels.size(); ++i)
      os << stat_name(table.stat) << "," << method_name(table.method) << ","
         << row.beta << "," << table.levels[i] << "," << row.rejection[i]
         << "\n";
  return os.str();
}

}  // namespace hte
