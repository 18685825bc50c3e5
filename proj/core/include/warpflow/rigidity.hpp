#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "warpflow/flow.hpp"
#include "warpflow/manifold.hpp"
#include "warpflow/nonlinearity.hpp"

namespace warpflow {

// A Newton-converged solution of -Lap v + lambda/(p-2) (v - v^{p-1}) = 0.
struct EllipticSolution {
  double lambda = 0.0;
  RadialField v;
  double residual_norm = 0.0;  // sup norm, re-checked outside the Newton loop
  double deviation = 0.0;      // ||v - 1||_inf
  bool constant_branch = false;
  int newton_iterations = 0;
};

// Damped Newton iteration from v0; the linearization uses the same stencils
// as the flow. Throws on divergence or loss of positivity.
EllipticSolution solve_elliptic(const WarpedManifold& m, double p, double lambda,
                                const RadialField& v0, double tol = 1e-10, int max_iters = 60);

struct BranchPoint {
  double lambda = 0.0;
  double deviation = 0.0;
  double residual = 0.0;
  bool constant_branch = true;
};

struct ContinuationResult {
  std::vector<BranchPoint> points;        // ascending in lambda
  std::vector<RadialField> profiles;      // matching points
  bool complete = true;
  std::string note;
};

// Secant-predictor / Newton-corrector walk of the nonconstant branch that
// bifurcates from v = 1 at lambda_1, over `steps` evenly spaced lambdas in
// [lambda_from, lambda_to]. Requested lambdas at or below lambda_1 fall back
// to the constant solution.
ContinuationResult continuation(const WarpedManifold& m, double p, double lambda_from,
                                double lambda_to, int steps);

struct ProbeResult {
  bool all_constant = true;
  int nonconstant_count = 0;
  int failed_starts = 0;
  double max_deviation = 0.0;
  std::vector<EllipticSolution> solutions;
};

// Multistart rigidity probe at fixed lambda: eigenmode bumps of both signs
// and several amplitudes plus random fields. Absence of nonconstant
// solutions is evidence, not proof.
ProbeResult rigidity_probe(const WarpedManifold& m, double p, double lambda, int starts = 20,
                           unsigned seed = 20240101);

// Q[v] = (p-2) ||grad v||_2^2 / (||v||_p^2 - ||v||_2^2); positive on both
// sides of p = 2, undefined at constants.
double quotient_q(const WarpedManifold& m, double p, const RadialField& v);

// Admissibility of a general nonlinearity for the rigidity theorem:
//   (f'(v) - (p-1) f(v)/v) / (p-2) <= 0 on [lo, hi],
// dense sampling with local refinement around sign changes.
bool general_f_check(const Nonlinearity& f, double p, double lo, double hi, int samples = 2001);

struct RemainderResult {
  double value = 0.0;                // R[v]
  double flow_integral = 0.0;        // beta^2 int_0^inf [...] dt
  double nonlinearity_integral = 0.0;
  double corollary_lhs = 0.0;
  double slack = 0.0;                // corollary_lhs - 2 value
  FlowStatus status = FlowStatus::MaxTimeReached;
};

// Integral remainder of the interpolation inequality at lambda equal to the
// supplied improved-constant estimate, computed by running the flow from
// v^{1/beta} and time-integrating the decay identity (trapezoid over every
// accepted step). Throws if the run does not converge.
RemainderResult remainder(const WarpedManifold& m, double p, const RadialField& v,
                          double lambda_star_q_value, double t_max, const FlowControls& controls,
                          const Nonlinearity* general = nullptr);

// Branch CSV: lambda,deviation,residual,branch
void write_branch_csv(std::ostream& os, const ContinuationResult& branch);
// Two-column profile file: theta,v
void write_profile(std::ostream& os, const WarpedManifold& m, const RadialField& v);

}  // namespace warpflow
