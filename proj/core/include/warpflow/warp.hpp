#pragma once

#include <utility>
#include <variant>
#include <vector>

namespace warpflow {

// Value of the warp function and its first two derivatives at one angle.
struct WarpJet {
  double h = 0.0;
  double dh = 0.0;
  double ddh = 0.0;
};

// Trigonometric polynomial a0 + sum_k (a_k cos k t + b_k sin k t).
struct FourierSeries {
  double a0 = 0.0;
  std::vector<std::pair<double, double>> ab;  // (a_k, b_k), k = 1..

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
};

// Sphere-like warp h(t) = sin t * exp((1 - x^2) r(x)), x = cos t, with r a
// real polynomial. The sin prefactor closes both poles exactly (h(0) = 0,
// h'(0) = 1, h(pi) = 0, h'(pi) = -1) for any r.
struct SphereWarp {
  std::vector<double> r_coeffs;  // r(x) = sum_k r_coeffs[k] x^k; empty = round sphere

  WarpJet eval(double t) const;
};

// Ring-like warp h = exp(P) with P a Fourier polynomial; positive for any P.
struct RingLogWarp {
  FourierSeries log_h;

  WarpJet eval(double t) const;
};

// Ring-like warp with h given directly as a Fourier polynomial. Positivity is
// a property of the coefficients and is validated when the manifold is built.
struct RingWarp {
  FourierSeries h;

  WarpJet eval(double t) const;
};

// Flat unit circle, h == 1.
struct CircleWarp {
  WarpJet eval(double) const { return {1.0, 0.0, 0.0}; }
};

using Warp = std::variant<SphereWarp, RingLogWarp, RingWarp, CircleWarp>;

WarpJet warp_eval(const Warp& w, double t);

}  // namespace warpflow
