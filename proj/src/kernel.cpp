#include "hte/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "hte/errors.hpp"
#include "hte/sample.hpp"

namespace hte {

namespace {

constexpr int kGaussOrder = 64;

struct GaussRule {
  std::array<double, kGaussOrder> node;
  std::array<double, kGaussOrder> weight;
};

// Nodes/weights for Legendre-Gauss on [-1, 1] via Newton on P_n.
GaussRule make_gauss_rule() {
  GaussRule rule{};
  const int n = kGaussOrder;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.node[i] = -x;
    rule.node[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weight[i] = w;
    rule.weight[n - 1 - i] = w;
  }
  return rule;
}

const GaussRule& gauss_rule() {
  static const GaussRule rule = make_gauss_rule();
  return rule;
}

constexpr double kKernelL2PerCoord = 1.2;  // int K1^2 for the quartic kernel

}  // namespace

double eval_kernel1(double u) {
  if (std::abs(u) > 0.5) return 0.0;
  const double v = 2.0 * u;
  return 1.5 * (1.0 - v * v);
}

double eval_kernel(std::span<const double> u) {
  double prod = 1.0;
  for (double uj : u) {
    prod *= eval_kernel1(uj);
    if (prod == 0.0) return 0.0;
  }
  return prod;
}

double kernel_l2(int d) {
  if (d < 1) throw NumericError("kernel_l2: dimension must be >= 1");
  double v = 1.0;
  for (int j = 0; j < d; ++j) v *= kKernelL2PerCoord;
  return v;
}

double kernel_convolution1(double t) {
  // even in t; evaluate on |t| so the symmetry holds bitwise
  t = std::abs(t);
  if (t >= 1.0) return 0.0;
  const double a = -0.5;
  const double b = 0.5 - t;
  const GaussRule& rule = gauss_rule();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < kGaussOrder; ++i) {
    const double xi = mid + half * rule.node[i];
    sum += rule.weight[i] * eval_kernel1(xi) * eval_kernel1(xi + t);
  }
  // quadrature may overshoot the exact value at t = 0 by an ulp; the
  // Cauchy-Schwarz bound is |conv| <= int K^2
  return std::min(half * sum, kKernelL2PerCoord);
}

double kernel_convolution(std::span<const double> t) {
  double prod = 1.0;
  for (double tj : t) {
    prod *= kernel_convolution1(tj);
    if (prod == 0.0) return 0.0;
  }
  return prod;
}

double conv_ratio1(double t) {
  // Quadrature can overshoot |1| by an ulp at t = 0; the ratio feeds
  // correlation formulas and must stay inside [-1, 1].
  return std::clamp(kernel_convolution1(t) / kKernelL2PerCoord, -1.0, 1.0);
}

double conv_ratio(std::span<const double> t) {
  double prod = 1.0;
  for (double tj : t) {
    prod *= conv_ratio1(tj);
    if (prod == 0.0) return 0.0;
  }
  return prod;
}

double Bandwidth::volume() const {
  double v = 1.0;
  for (double hj : h) v *= hj;
  return v;
}

bool Bandwidth::scalar() const {
  for (double hj : h)
    if (hj != h.front()) return false;
  return true;
}

Bandwidth bandwidth(const ClusteredSample& sample, const BandwidthRule& rule) {
  const int C = sample.num_clusters();
  const int N = sample.num_units();
  const int d = sample.dim();
  if (C < 2) throw DataError("bandwidth: need at least 2 clusters");
  if (rule.kappa_h <= 0.0) throw DataError("bandwidth: kappa_h must be > 0");
  const double base =
      rule.base == BandwidthRule::Base::Clusters ? double(C) : double(N);
  const double rate = std::pow(base, rule.exponent);

  std::vector<double> sds(d);
  for (int j = 0; j < d; ++j) {
    sds[j] = sample.x_stddev(j);
    if (!(sds[j] > 0.0))
      throw DataError("bandwidth: covariate " + std::to_string(j) +
                      " has zero variance");
  }

  Bandwidth out;
  out.h.resize(d);
  if (rule.per_coordinate) {
    for (int j = 0; j < d; ++j) out.h[j] = rule.kappa_h * sds[j] * rate;
  } else {
    double mean_sd = 0.0;
    for (double s : sds) mean_sd += s;
    mean_sd /= d;
    for (int j = 0; j < d; ++j) out.h[j] = rule.kappa_h * mean_sd * rate;
  }
  return out;
}

Bandwidth fixed_bandwidth(double h, int d) {
  if (!(h > 0.0)) throw DataError("bandwidth must be positive");
  Bandwidth out;
  out.h.assign(static_cast<std::size_t>(d), h);
  return out;
}

}  // namespace hte
