#pragma once

#include <string>

#include "warpflow/manifold.hpp"

namespace warpflow {

// Multistart controls shared by all quotient minimizers. Starts are seeded
// with near-constant eigenmode bumps 1 + eps v_k plus random low-mode
// combinations; deterministic for a fixed seed.
struct OptimizerControls {
  int starts = 32;
  int low_modes = 8;
  int coarse_iterations = 300;   // spectral (low-mode) stage
  int fine_iterations = 1500;    // full-grid stage
  double rel_tol = 1e-10;        // relative decrease threshold ...
  int tol_window = 50;           // ... over this many iterations
  unsigned seed = 12345;
  int threads = 0;               // 0 = hardware concurrency
};

struct OptimizerOutcome {
  double value = 0.0;
  Eigen::ArrayXd minimizer;  // field values (u or v) of the best start
  bool stagnated = false;    // best start hit its iteration cap
  int best_start = -1;
  long iterations = 0;       // total across starts
  std::string note;
};

// Upper bound for the improved rigidity constant: infimum over positive
// radial u of
//   [(1-theta) int (Lap u)^2 + theta d/(d-1) int (||Q u||^2 + Ric(gu,gu))]
//     / int |grad u|^2,
// theta and the Q coefficient from the canonical choice at (p, d).
OptimizerOutcome lambda_star_q(const WarpedManifold& m, double p, const OptimizerControls& c = {});

// Same machinery for rho_star = d/(d-1) inf int (||Q u||^2 + Ric) / int |grad u|^2.
OptimizerOutcome rho_star(const WarpedManifold& m, double p, const OptimizerControls& c = {});

// Best interpolation constant: inf over positive radial v of
//   (p-2) ||grad v||_2^2 / (||v||_p^2 - ||v||_2^2).
OptimizerOutcome best_lambda(const WarpedManifold& m, double p, const OptimizerControls& c = {});

// Best constant in the logarithmic Sobolev inequality
//   (1/2) L int v^2 log(v^2/||v||_2^2) <= ||grad v||_2^2.
OptimizerOutcome log_sobolev_lambda2(const WarpedManifold& m, const OptimizerControls& c = {});

// Quotient values at explicit fields (the objectives the optimizers descend).
double lambda_star_q_quotient(const WarpedManifold& m, double p, const RadialField& u);
double rho_star_quotient(const WarpedManifold& m, double p, const RadialField& u);
double log_sobolev_quotient(const WarpedManifold& m, const RadialField& v);

}  // namespace warpflow
