#include "hte/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hte/errors.hpp"

namespace hte {

double gaussian_abs_cov(double rho) {
  if (std::abs(rho) > 1.0)
    throw NumericError("gaussian_abs_cov: |rho| > 1");
  const double s = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  return (2.0 / std::numbers::pi) * (s + rho * std::asin(rho) - 1.0);
}

KernelEstimator::KernelEstimator(const ClusteredSample& sample, Bandwidth h)
    : sample_(sample), h_(std::move(h)) {
  if (!sample_.exposures_set())
    throw DataError("estimator: exposures not set");
  if (h_.dim() != sample_.dim())
    throw DataError("estimator: bandwidth dimension mismatch");
  for (double hj : h_.h)
    if (!(hj > 0.0)) throw DataError("estimator: bandwidth must be positive");

  const int N = sample_.num_units();
  inv_nhd_ = 1.0 / (N * h_.volume());
  rho2_floor_ = std::max(1e-12 * sample_.y_variance(), 1e-300);

  const int K = sample_.num_levels();
  level_units_.resize(K);
  level_x0_.resize(K);
  for (int i = 0; i < N; ++i) level_units_[sample_.level_of(i)].push_back(i);
  for (int k = 0; k < K; ++k) {
    auto& units = level_units_[k];
    std::sort(units.begin(), units.end(), [&](int a, int b) {
      return sample_.x_at(a, 0) < sample_.x_at(b, 0);
    });
    level_x0_[k].reserve(units.size());
    for (int u : units) level_x0_[k].push_back(sample_.x_at(u, 0));
  }
}

KernelEstimator::Window KernelEstimator::window(double x0, int level) const {
  const auto& xs = level_x0_[level];
  const auto& units = level_units_[level];
  // K((x - X)/h) vanishes outside |x - X| <= h/2.
  const double half = 0.5 * h_.h[0];
  const auto lo = std::lower_bound(xs.begin(), xs.end(), x0 - half);
  const auto hi = std::upper_bound(xs.begin(), xs.end(), x0 + half);
  const int b = static_cast<int>(lo - xs.begin());
  const int e = static_cast<int>(hi - xs.begin());
  return {units.data() + b, units.data() + e};
}

double KernelEstimator::kernel_at(std::span<const double> x, int unit) const {
  const int d = sample_.dim();
  double prod = 1.0;
  for (int j = 0; j < d; ++j) {
    prod *= eval_kernel1((x[j] - sample_.x_at(unit, j)) / h_.h[j]);
    if (prod == 0.0) return 0.0;
  }
  return prod;
}

namespace {

// Windowed sums per treatment arm at one evaluation point.
struct CellSums {
  double w[2] = {0.0, 0.0};   // sum of kernel weights
  double sy[2] = {0.0, 0.0};  // sum of Y * weight
  double sy2[2] = {0.0, 0.0};  // sum of Y^2 * weight
  int n[2] = {0, 0};          // units with nonzero weight
};

}  // namespace

double KernelEstimator::propensity(std::span<const double> x, int level,
                                   int t) const {
  double sum = 0.0;
  const auto win = window(x[0], level);
  for (const int* it = win.begin; it != win.end; ++it) {
    if (sample_.t()[*it] != t) continue;
    sum += kernel_at(x, *it);
  }
  return sum * inv_nhd_;
}

CateEstimate KernelEstimator::cate(std::span<const double> x,
                                   int level) const {
  CellSums s;
  const auto win = window(x[0], level);
  for (const int* it = win.begin; it != win.end; ++it) {
    const double k = kernel_at(x, *it);
    if (k == 0.0) continue;
    const int arm = sample_.t()[*it];
    s.w[arm] += k;
    s.sy[arm] += sample_.y()[*it] * k;
    s.n[arm] += 1;
  }
  if (s.w[1] <= 0.0 || s.w[0] <= 0.0) {
    std::ostringstream os;
    os << "cate: empty propensity cell at x=" << x[0]
       << " (pi=" << sample_.exposure_levels()[level]
       << ", t=" << (s.w[1] <= 0.0 ? 1 : 0) << ")";
    throw NumericError(os.str());
  }
  CateEstimate out;
  out.p1_hat = s.w[1] * inv_nhd_;
  out.p0_hat = s.w[0] * inv_nhd_;
  // Hajek form: the 1/(N h^d) factors cancel against the P_t denominators.
  out.value = s.sy[1] / s.w[1] - s.sy[0] / s.w[0];
  out.support1 = s.n[1];
  out.support0 = s.n[0];
  return out;
}

double KernelEstimator::mu1(std::span<const double> x, int level) const {
  CellSums s;
  const auto win = window(x[0], level);
  for (const int* it = win.begin; it != win.end; ++it) {
    const double k = kernel_at(x, *it);
    if (k == 0.0) continue;
    const int arm = sample_.t()[*it];
    const double y = sample_.y()[*it];
    s.w[arm] += k;
    s.sy2[arm] += y * y * k;
  }
  double total = 0.0;
  for (int arm = 0; arm <= 1; ++arm) {
    if (s.w[arm] <= 0.0)
      throw NumericError("mu1: empty propensity cell");
    const double pt = s.w[arm] * inv_nhd_;
    total += s.sy2[arm] / (pt * pt);
  }
  return total * inv_nhd_;
}

double KernelEstimator::mu2(std::span<const double> x, int level) const {
  CellSums s;
  const auto win = window(x[0], level);
  for (const int* it = win.begin; it != win.end; ++it) {
    const double k = kernel_at(x, *it);
    if (k == 0.0) continue;
    const int arm = sample_.t()[*it];
    s.w[arm] += k;
    s.sy[arm] += sample_.y()[*it] * k;
  }
  // The double sum over (i, j) factorizes into the square of the single
  // weighted sum per arm; this equals the O(N^2) loop exactly.
  double total = 0.0;
  for (int arm = 0; arm <= 1; ++arm) {
    if (s.w[arm] <= 0.0)
      throw NumericError("mu2: empty propensity cell");
    const double pt = s.w[arm] * inv_nhd_;
    total += s.sy[arm] * s.sy[arm] / (pt * pt * pt);
  }
  return total * inv_nhd_ * inv_nhd_;
}

double KernelEstimator::rho2(std::span<const double> x, int level) const {
  CellSums s;
  const auto win = window(x[0], level);
  for (const int* it = win.begin; it != win.end; ++it) {
    const double k = kernel_at(x, *it);
    if (k == 0.0) continue;
    const int arm = sample_.t()[*it];
    const double y = sample_.y()[*it];
    s.w[arm] += k;
    s.sy[arm] += y * k;
    s.sy2[arm] += y * y * k;
  }
  double mu1 = 0.0, mu2 = 0.0;
  for (int arm = 0; arm <= 1; ++arm) {
    if (s.w[arm] <= 0.0) {
      std::ostringstream os;
      os << "rho2: empty propensity cell at x=" << x[0]
         << " (pi=" << sample_.exposure_levels()[level] << ", t=" << arm
         << ")";
      throw NumericError(os.str());
    }
    const double pt = s.w[arm] * inv_nhd_;
    mu1 += s.sy2[arm] / (pt * pt);
    mu2 += s.sy[arm] * s.sy[arm] / (pt * pt * pt);
  }
  mu1 *= inv_nhd_;
  mu2 *= inv_nhd_ * inv_nhd_;
  double v = (mu1 - mu2) * kernel_l2(sample_.dim());
  if (v < rho2_floor_) {
    v = rho2_floor_;
    rho2_floor_hits_.fetch_add(1, std::memory_order_relaxed);
  }
  return v;
}

double KernelEstimator::corr_tuple(double conv_ratio_t, int i, int j, int k,
                                   int l,
                                   std::span<const double> rho2_at_x) const {
  double r;
  if (i == k && j == l) {
    r = conv_ratio_t;
  } else if (i == l && j == k) {
    r = -conv_ratio_t;
  } else if (i == k || i == l || j == k || j == l) {
    const double denom = std::sqrt((rho2_at_x[i] + rho2_at_x[j]) *
                                   (rho2_at_x[k] + rho2_at_x[l]));
    double num;
    double sign;
    if (j == k) {  // shared level pi_j, crossed slots
      num = rho2_at_x[j];
      sign = -1.0;
    } else if (i == l) {  // shared level pi_i, crossed slots
      num = rho2_at_x[i];
      sign = -1.0;
    } else if (j == l) {  // shared level pi_j, same slots
      num = rho2_at_x[j];
      sign = 1.0;
    } else {  // i == k: shared level pi_i, same slots
      num = rho2_at_x[i];
      sign = 1.0;
    }
    r = sign * (num / denom) * conv_ratio_t;
  } else {
    r = 0.0;
  }
  if (r > 1.0 || r < -1.0) {
    corr_clamps_.fetch_add(1, std::memory_order_relaxed);
    r = std::clamp(r, -1.0, 1.0);
  }
  return r;
}

double KernelEstimator::weight1(std::span<const double> x, int level_k,
                                int level_j) const {
  const double radicand = rho2(x, level_k) + rho2(x, level_j);
  if (!(radicand > 0.0))
    throw NumericError("weight1: nonpositive variance sum");
  return 1.0 / std::sqrt(radicand);
}

double KernelEstimator::rho2_pair(std::span<const double> x,
                                  std::span<const double> x_prime, int level,
                                  bool covariance_correction,
                                  bool use_abs_cov) const {
  const double rx = rho2(x, level);
  const double rxp = rho2(x_prime, level);
  double v = rx + rxp;
  if (covariance_correction) {
    const int d = sample_.dim();
    bool inside = true;
    double cr = 1.0;
    for (int j = 0; j < d; ++j) {
      const double tj = (x[j] - x_prime[j]) / h_.h[j];
      if (std::abs(tj) > 1.0) {
        inside = false;
        break;
      }
      cr *= conv_ratio1(tj);
    }
    if (inside) {
      const double factor = use_abs_cov ? gaussian_abs_cov(cr) : cr;
      v -= 2.0 * std::sqrt(rx * rxp) * factor;
    }
  }
  return v;
}

double KernelEstimator::weight2(std::span<const double> x,
                                std::span<const double> x_prime, int level,
                                bool covariance_correction,
                                bool use_abs_cov) const {
  const double radicand =
      rho2_pair(x, x_prime, level, covariance_correction, use_abs_cov);
  if (!(radicand > 0.0)) {
    std::ostringstream os;
    os << "weight2: nonpositive radicand " << radicand << " at x=" << x[0]
       << ", x'=" << x_prime[0]
       << " (pi=" << sample_.exposure_levels()[level] << ")";
    throw NumericError(os.str());
  }
  return 1.0 / std::sqrt(radicand);
}

int KernelEstimator::cell_support(std::span<const double> x, int level,
                                  int t) const {
  int count = 0;
  const auto win = window(x[0], level);
  for (const int* it = win.begin; it != win.end; ++it) {
    if (sample_.t()[*it] != t) continue;
    if (kernel_at(x, *it) > 0.0) ++count;
  }
  return count;
}

EstimatorDiagnostics KernelEstimator::diagnostics() const {
  EstimatorDiagnostics d;
  d.rho2_floor_hits = rho2_floor_hits_.load(std::memory_order_relaxed);
  d.corr_clamps = corr_clamps_.load(std::memory_order_relaxed);
  return d;
}

}  // namespace hte
