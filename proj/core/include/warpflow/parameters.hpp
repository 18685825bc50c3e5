#pragma once

#include <optional>
#include <utility>

namespace warpflow {

// Exponent/coefficient bundle for the diffusion flow and the variational
// machinery. kappa = 1 + beta (p - 2) is what makes int u^{beta p} a
// conserved quantity of the flow; flow_compatible records that the relation
// holds for the stored values.
struct ParameterSet {
  int d = 2;
  double p = 3.0;
  double theta = 0.0;
  double beta = 0.0;
  double kappa = 0.0;
  double lambda = 0.0;
  bool flow_compatible = false;
};

// Critical exponent 2d/(d-2); +infinity for d = 1, 2.
double two_star(int d);
// (2 d^2 + 1)/(d - 1)^2, the upper exponent reachable with beta = 1.
double two_sharp(int d);

// theta = (d-1)^2 (p-1) / (d (d+2) + p - 1).
double theta_choice(double p, int d);

// beta = (d+2)/(d+3-p); the degenerate pair (p, d) = (5, 2) instead needs an
// explicit theta in (1/3, 1) and returns sqrt(theta/(3 theta - 1)).
double beta_choice(double p, int d, std::optional<double> theta = std::nullopt);

// Default theta for the (5, 2) branch: midpoint of the admissible (1/3, 1).
inline constexpr double kThetaDefault52 = 2.0 / 3.0;

// mu(beta) = (theta^{-1} ((d-1)/(d+2))^2 (p-1)^2 - (p-2)) beta^2
//            - 2 ((d+3-p)/(d+2)) beta + 1; zero at the canonical choices.
double mu_coefficient(double beta, double theta, double p, int d);

// d = 1 analogue: mu = (1/3) beta (p-1) + (1 + beta (p-2)) (beta - 1).
double mu_d1(double beta, double p);

// Roots (beta_+, beta_-) = (p-4 +- sqrt((p-1)(p+2))) / (3 (p-2)); p != 2.
std::pair<double, double> beta_pm(double p);

// Connected component of { mu(.) <= 0 } containing the extremal beta, for a
// relaxed theta strictly between theta_choice and 1. hi may be +infinity when
// the quadratic opens downward; empty when no admissible beta exists.
struct BetaInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = true;
};
BetaInterval beta_interval_relaxed(double p, int d, double theta);

// Scalar coefficient of the rank-one correction inside Q^theta:
// (1/theta) ((d-1)/(d+2)) (kappa + beta - 1).
double q_coefficient(const ParameterSet& params);
// Same with the canonical theta/beta: (d-1)(p-1) / (theta (d+3-p)).
double q_coefficient_choice(double p, int d);

// Interpolation estimate lambda1 (1-eta)/(1-eta^alpha), alpha = lambda1 /
// lambda2_log_sobolev, eta = p-1; valid for p in (1,2).
double spectral_bound(double p, double lambda1, double lambda2_log_sobolev);

// Canonical flow parameters for (d, p, lambda): theta/beta from the choice
// formulas (or beta_plus when d = 1), kappa from the conservation relation.
ParameterSet make_flow_parameters(int d, double p, double lambda,
                                  std::optional<double> beta_override = std::nullopt,
                                  std::optional<double> theta_override = std::nullopt);

}  // namespace warpflow
