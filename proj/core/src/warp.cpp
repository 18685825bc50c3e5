#include "warpflow/warp.hpp"

#include <cmath>

namespace warpflow {

double FourierSeries::value(double t) const {
  double v = a0;
  for (std::size_t k = 0; k < ab.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    v += ab[k].first * std::cos(kk * t) + ab[k].second * std::sin(kk * t);
  }
  return v;
}

double FourierSeries::d1(double t) const {
  double v = 0.0;
  for (std::size_t k = 0; k < ab.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    v += kk * (-ab[k].first * std::sin(kk * t) + ab[k].second * std::cos(kk * t));
  }
  return v;
}

double FourierSeries::d2(double t) const {
  double v = 0.0;
  for (std::size_t k = 0; k < ab.size(); ++k) {
    const double kk = static_cast<double>(k + 1);
    v -= kk * kk * (ab[k].first * std::cos(kk * t) + ab[k].second * std::sin(kk * t));
  }
  return v;
}

namespace {

// Horner evaluation of r, r', r'' at x.
void poly_jet(const std::vector<double>& c, double x, double& r, double& dr, double& ddr) {
  r = dr = ddr = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) {
    ddr = ddr * x + 2.0 * dr;
    dr = dr * x + r;
    r = r * x + c[i];
  }
}

}  // namespace

WarpJet SphereWarp::eval(double t) const {
  const double s = std::sin(t);
  const double x = std::cos(t);
  if (r_coeffs.empty()) return {s, x, -s};

  double r, dr, ddr;
  poly_jet(r_coeffs, x, r, dr, ddr);

  // phi(t) = (1 - x^2) r(x) = s^2 r; derivatives in t via x' = -s.
  const double omx2 = s * s;
  const double phi = omx2 * r;
  const double dphi = s * (2.0 * x * r - omx2 * dr);
  const double ddphi = x * (2.0 * x * r - omx2 * dr) - omx2 * (2.0 * r + 4.0 * x * dr - omx2 * ddr);

  const double e = std::exp(phi);
  WarpJet j;
  j.h = s * e;
  j.dh = e * (x + s * dphi);
  j.ddh = e * (-s + 2.0 * x * dphi + s * dphi * dphi + s * ddphi);
  return j;
}

WarpJet RingLogWarp::eval(double t) const {
  const double p = log_h.value(t);
  const double dp = log_h.d1(t);
  const double ddp = log_h.d2(t);
  const double h = std::exp(p);
  return {h, dp * h, (ddp + dp * dp) * h};
}

WarpJet RingWarp::eval(double t) const { return {h.value(t), h.d1(t), h.d2(t)}; }

WarpJet warp_eval(const Warp& w, double t) {
  return std::visit([t](const auto& ww) { return ww.eval(t); }, w);
}

}  // namespace warpflow
