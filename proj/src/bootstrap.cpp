#include "hte/bootstrap.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "hte/errors.hpp"
#include "hte/parallel.hpp"

namespace hte {

namespace {

enum class Which { T1, T2 };

// T - a on a (pseudo-)sample, everything recomputed from scratch exactly
// as for the observed statistic; the standard error is omitted.
double raw_minus_bias(const ClusteredSample& sample, const TestConfig& config,
                      Which which) {
  sample.validate();
  overlap_check(sample);
  const Bandwidth h = config.resolve_bandwidth(sample);
  const Grid grid = build_grid(sample, config.grid_points, config.lo_percentile,
                               config.hi_percentile, config.grid_seed);
  const KernelEstimator est(sample, h);
  const GridCache cache = build_grid_cache(est, grid, config.mass_floor);
  const int K = sample.num_levels();
  if (which == Which::T1)
    return t1_stat(est, grid, cache).raw - bias_a1(grid, h, K);
  return t2_stat(est, grid, cache, config).raw - bias_a2(grid, h, K);
}

// Shared rep loop: run `draw_stat(rep_stream)` per rep with one retry on
// numerical failure, then assemble the empirical p-value.
BootstrapResult run_reps(
    double observed, const BootstrapConfig& config,
    const std::function<double(std::mt19937_64&)>& draw_stat,
    const ProgressFn& progress) {
  if (config.reps < 1) throw DataError("bootstrap: reps must be >= 1");
  const int B = config.reps;
  std::vector<double> draws(B, std::numeric_limits<double>::quiet_NaN());
  std::atomic<int> done{0};

  parallel_for(B, config.workers, [&](int b) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      auto rng = rng_stream(config.seed,
                            static_cast<std::uint64_t>(b) +
                                static_cast<std::uint64_t>(attempt) * B);
      try {
        draws[b] = draw_stat(rng);
        break;
      } catch (const NumericError&) {
        // retried once, then left as a failed rep
      }
    }
    if (progress) progress(done.fetch_add(1) + 1, B);
  });

  BootstrapResult out;
  out.observed = observed;
  out.draws = std::move(draws);
  int exceed = 0;
  for (double v : out.draws) {
    if (std::isnan(v)) {
      ++out.reps_failed;
      continue;
    }
    ++out.reps_completed;
    if (v > observed) ++exceed;
  }
  if (out.reps_completed == 0 ||
      out.reps_failed > config.max_failed_fraction * B) {
    std::ostringstream os;
    os << "bootstrap: " << out.reps_failed << "/" << B
       << " resamples failed (overlap or degenerate statistics)";
    throw NumericError(os.str());
  }
  if (config.add_one_correction)
    out.p_value = (exceed + 1.0) / (out.reps_completed + 1.0);
  else
    out.p_value = static_cast<double>(exceed) / out.reps_completed;
  return out;
}

}  // namespace

BootstrapResult pairs_cluster_bootstrap_s1(const ClusteredSample& sample,
                                           const TestConfig& test_config,
                                           const BootstrapConfig& config,
                                           const ProgressFn& progress) {
  sample.validate();
  overlap_check(sample);
  const double observed = raw_minus_bias(sample, test_config, Which::T1);

  const int C = sample.num_clusters();
  const int K = sample.num_levels();
  // C_k: clusters observed at level k. Unit-level exposures are reduced to
  // the cluster's leading unit for this count.
  std::vector<int> level_count(K, 0);
  for (int c = 0; c < C; ++c)
    level_count[sample.level_of(sample.cluster_begin(c))]++;

  auto draw_stat = [&](std::mt19937_64& rng) {
    std::vector<int> picks;
    std::vector<double> pis;
    for (int k = 0; k < K; ++k) {
      const double pi_k = sample.exposure_levels()[k];
      for (int c = 0; c < level_count[k]; ++c) {
        // bounded draw from the pooled clusters, rejection sampled
        std::uint64_t bound = (~std::uint64_t{0} / C) * C;
        std::uint64_t u;
        do {
          u = rng();
        } while (u >= bound);
        picks.push_back(static_cast<int>(u % C));
        pis.push_back(pi_k);
      }
    }
    const ClusteredSample pseudo =
        ClusteredSample::resample_clusters(sample, picks, pis);
    return raw_minus_bias(pseudo, test_config, Which::T1);
  };
  return run_reps(observed, config, draw_stat, progress);
}

std::vector<double> restricted_mean_fit(const ClusteredSample& sample,
                                        const Bandwidth& h, bool cell_means) {
  if (!sample.exposures_set())
    throw DataError("restricted fit: exposures not set");
  const int N = sample.num_units();
  const int d = sample.dim();
  const int K = sample.num_levels();

  std::vector<double> x_bar(d, 0.0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < d; ++j) x_bar[j] += sample.x_at(i, j);
  for (double& v : x_bar) v /= N;

  std::vector<double> wsum(2 * K, 0.0), ysum(2 * K, 0.0);
  for (int i = 0; i < N; ++i) {
    double w = 1.0;
    if (!cell_means) {
      for (int j = 0; j < d; ++j)
        w *= eval_kernel1((x_bar[j] - sample.x_at(i, j)) / h.h[j]);
      if (w == 0.0) continue;
    }
    const int cell = sample.level_of(i) * 2 + sample.t()[i];
    wsum[cell] += w;
    ysum[cell] += w * sample.y()[i];
  }
  std::vector<double> cell_mean(2 * K);
  for (int k = 0; k < K; ++k)
    for (int t = 0; t <= 1; ++t) {
      const int cell = k * 2 + t;
      if (wsum[cell] <= 0.0) {
        std::ostringstream os;
        os << "restricted fit: no kernel mass in cell (pi="
           << sample.exposure_levels()[k] << ", t=" << t
           << ") at the covariate mean";
        throw NumericError(os.str());
      }
      cell_mean[cell] = ysum[cell] / wsum[cell];
    }

  std::vector<double> fitted(N);
  for (int i = 0; i < N; ++i)
    fitted[i] = cell_mean[sample.level_of(i) * 2 + sample.t()[i]];
  return fitted;
}

BootstrapResult wild_cluster_bootstrap_s2(const ClusteredSample& sample,
                                          const TestConfig& test_config,
                                          const BootstrapConfig& config,
                                          const ProgressFn& progress) {
  sample.validate();
  overlap_check(sample);
  const double observed = raw_minus_bias(sample, test_config, Which::T2);

  const Bandwidth h = test_config.resolve_bandwidth(sample);
  const std::vector<double> fitted =
      restricted_mean_fit(sample, h, config.restricted_cell_means);

  const int C = sample.num_clusters();
  const int N = sample.num_units();

  auto draw_stat = [&](std::mt19937_64& rng) {
    std::vector<double> y_star(N);
    for (int c = 0; c < C; ++c) {
      int v;
      if (config.force_rademacher != 0)
        v = config.force_rademacher > 0 ? 1 : -1;
      else
        v = (rng() & 1) ? 1 : -1;
      for (int i = sample.cluster_begin(c); i < sample.cluster_end(c); ++i) {
        // v=+1 reproduces Y exactly; v=-1 reflects it about the fit.
        y_star[i] = v > 0 ? sample.y()[i] : 2.0 * fitted[i] - sample.y()[i];
      }
    }
    const ClusteredSample pseudo = sample.with_outcomes(y_star);
    return raw_minus_bias(pseudo, test_config, Which::T2);
  };
  return run_reps(observed, config, draw_stat, progress);
}

}  // namespace hte
