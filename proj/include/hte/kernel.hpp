#pragma once

#include <span>
#include <vector>

namespace hte {

class ClusteredSample;

// Quartic (biweight-style) kernel on [-1/2, 1/2]:
//   K1(u) = 1.5 * (1 - (2u)^2) * 1{|u| <= 0.5}
// Multivariate kernels are products of K1 over coordinates.
double eval_kernel1(double u);
double eval_kernel(std::span<const double> u);

// L2 norm of the product kernel, (int K1^2)^d. Per coordinate the value is
// exactly 1.2.
double kernel_l2(int d);

// Self-convolution int K(xi) K(xi + t) dxi. Zero once any |t_j| >= 1.
// Evaluated by Gauss-Legendre on the support overlap, which is exact for
// the degree-4 integrand.
double kernel_convolution1(double t);
double kernel_convolution(std::span<const double> t);

// Convolution scaled by the L2 norm; this is the correlation that enters
// every variance formula and always lies in [-1, 1].
double conv_ratio1(double t);
double conv_ratio(std::span<const double> t);

struct BandwidthRule {
  double kappa_h = 3.0;
  // Exponent base: the rule is kappa_h * s_X * C^exponent by default; the
  // unit-count variant swaps C for N.
  enum class Base { Clusters, Units };
  Base base = Base::Clusters;
  double exponent = -2.0 / 7.0;
  // One scalar bandwidth from the average per-coordinate sd (default), or a
  // per-coordinate vector from per-coordinate sds.
  bool per_coordinate = false;
};

// Bandwidth vector, one entry per covariate coordinate. A scalar rule
// produces d equal entries.
struct Bandwidth {
  std::vector<double> h;

  int dim() const { return static_cast<int>(h.size()); }
  // prod_j h_j, the h^d factor of the estimators.
  double volume() const;
  bool scalar() const;
};

Bandwidth bandwidth(const ClusteredSample& sample, const BandwidthRule& rule);

// Explicit bandwidth helper for configs that pin h directly.
Bandwidth fixed_bandwidth(double h, int d);

}  // namespace hte
