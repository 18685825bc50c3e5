#include "warpflow/parameters.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace warpflow {

double two_star(int d) {
  if (d <= 0) throw std::invalid_argument("dimension must be positive");
  if (d <= 2) return std::numeric_limits<double>::infinity();
  return 2.0 * d / (d - 2.0);
}

double two_sharp(int d) {
  if (d < 2) throw std::invalid_argument("two_sharp needs d >= 2");
  return (2.0 * d * d + 1.0) / ((d - 1.0) * (d - 1.0));
}

double theta_choice(double p, int d) {
  if (d < 2) throw std::invalid_argument("theta_choice needs d >= 2");
  if (p <= 1.0 || p >= two_star(d)) throw std::invalid_argument("p out of (1, 2*)");
  return (d - 1.0) * (d - 1.0) * (p - 1.0) / (d * (d + 2.0) + p - 1.0);
}

double beta_choice(double p, int d, std::optional<double> theta) {
  if (d < 2) throw std::invalid_argument("beta_choice needs d >= 2");
  if (p <= 1.0 || p >= two_star(d)) throw std::invalid_argument("p out of (1, 2*)");
  if (d == 2 && p == 5.0) {
    const double th = theta.value_or(kThetaDefault52);
    if (th <= 1.0 / 3.0 || th >= 1.0)
      throw std::invalid_argument("(p, d) = (5, 2) needs theta in (1/3, 1)");
    return std::sqrt(th / (3.0 * th - 1.0));
  }
  return (d + 2.0) / (d + 3.0 - p);
}

double mu_coefficient(double beta, double theta, double p, int d) {
  if (theta <= 0.0) throw std::invalid_argument("mu needs theta > 0");
  const double ratio = (d - 1.0) / (d + 2.0);
  const double a = ratio * ratio * (p - 1.0) * (p - 1.0) / theta - (p - 2.0);
  const double b = -2.0 * (d + 3.0 - p) / (d + 2.0);
  return a * beta * beta + b * beta + 1.0;
}

double mu_d1(double beta, double p) {
  return beta * (p - 1.0) / 3.0 + (1.0 + beta * (p - 2.0)) * (beta - 1.0);
}

std::pair<double, double> beta_pm(double p) {
  if (p <= 1.0 || p == 2.0) throw std::invalid_argument("beta_pm needs p in (1,2) or (2,inf)");
  const double root = std::sqrt((p - 1.0) * (p + 2.0));
  const double denom = 3.0 * (p - 2.0);
  return {(p - 4.0 + root) / denom, (p - 4.0 - root) / denom};
}

BetaInterval beta_interval_relaxed(double p, int d, double theta) {
  const double theta_c = theta_choice(p, d);
  if (!(theta > theta_c && theta < 1.0))
    throw std::invalid_argument("relaxed theta must lie strictly between theta_choice and 1");

  const double ratio = (d - 1.0) / (d + 2.0);
  const double a = ratio * ratio * (p - 1.0) * (p - 1.0) / theta - (p - 2.0);
  const double b = -2.0 * (d + 3.0 - p) / (d + 2.0);
  constexpr double c = 1.0;

  BetaInterval out;
  if (a == 0.0) {
    if (b == 0.0) return out;  // mu == 1 everywhere
    const double root = -c / b;
    out.empty = false;
    if (b < 0.0) {
      out.lo = root;
      out.hi = std::numeric_limits<double>::infinity();
    } else {
      out.lo = -std::numeric_limits<double>::infinity();
      out.hi = root;
    }
    return out;
  }

  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    if (a > 0.0) return out;  // mu > 0 for all beta
    // downward parabola with no real root cannot happen with c = 1 > 0
    return out;
  }
  const double sq = std::sqrt(disc);
  const double r1 = (-b - sq) / (2.0 * a);
  const double r2 = (-b + sq) / (2.0 * a);
  const double lo = std::min(r1, r2);
  const double hi = std::max(r1, r2);
  const double beta_extremal = -b / (2.0 * a);

  out.empty = false;
  if (a > 0.0) {
    // mu <= 0 exactly between the roots
    out.lo = lo;
    out.hi = hi;
    return out;
  }
  // opens downward: { mu <= 0 } is two rays; keep the component containing
  // the extremal-beta side that the canonical choice lives on (beta has the
  // sign of -b, i.e. of (d+3-p)).
  if (beta_extremal >= 0.0 || -b / (d + 2.0) > 0.0) {
    out.lo = hi;
    out.hi = std::numeric_limits<double>::infinity();
  } else {
    out.lo = -std::numeric_limits<double>::infinity();
    out.hi = lo;
  }
  return out;
}

double q_coefficient(const ParameterSet& params) {
  if (params.theta <= 0.0) throw std::invalid_argument("q_coefficient needs theta > 0");
  return (params.d - 1.0) / (params.d + 2.0) * (params.kappa + params.beta - 1.0) / params.theta;
}

double q_coefficient_choice(double p, int d) {
  const double theta = theta_choice(p, d);
  return (d - 1.0) * (p - 1.0) / (theta * (d + 3.0 - p));
}

double spectral_bound(double p, double lambda1, double lambda2_log_sobolev) {
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("spectral_bound needs p in (1,2)");
  if (lambda2_log_sobolev <= 0.0) throw std::invalid_argument("log-Sobolev constant must be positive");
  const double eta = p - 1.0;
  const double alpha = lambda1 / lambda2_log_sobolev;
  // 1 - eta^alpha via expm1/log for accuracy when eta -> 1
  const double denom = -std::expm1(alpha * std::log(eta));
  return lambda1 * (1.0 - eta) / denom;
}

ParameterSet make_flow_parameters(int d, double p, double lambda,
                                  std::optional<double> beta_override,
                                  std::optional<double> theta_override) {
  ParameterSet ps;
  ps.d = d;
  ps.p = p;
  ps.lambda = lambda;
  if (d == 1) {
    ps.theta = 0.0;
    ps.beta = beta_override ? *beta_override : beta_pm(p).first;
  } else {
    ps.theta = theta_override ? *theta_override
                              : ((d == 2 && p == 5.0) ? kThetaDefault52 : theta_choice(p, d));
    ps.beta = beta_override ? *beta_override : beta_choice(p, d, ps.theta);
  }
  ps.kappa = 1.0 + ps.beta * (p - 2.0);
  ps.flow_compatible = true;
  return ps;
}

}  // namespace warpflow
