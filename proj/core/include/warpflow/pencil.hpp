#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <vector>

#include "warpflow/manifold.hpp"

namespace warpflow {

// Symmetric quadratic forms of the weighted Sturm-Liouville problem on the
// profile grid. K is the Dirichlet form assembled from the staggered
// first derivative with half-node weights (summation by parts, kernel =
// constants), M the lumped mass, N2 the form int (Lap u)^2, R the Ricci form
// int Ric(grad u, grad u) on the same staggered layout.
struct PencilForms {
  Eigen::SparseMatrix<double> dirichlet;   // K
  Eigen::SparseMatrix<double> mass;        // M = diag(sigma)
  Eigen::SparseMatrix<double> laplacian2;  // N2
  Eigen::SparseMatrix<double> ricci;       // R
  double ricci_half_min = 0.0;             // min of radial Ricci at half nodes
};

PencilForms assemble_pencil_forms(const WarpedManifold& m);

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;  // M-normalized, sigma-mean-zero
  int iterations = 0;
};

// Lowest positive eigenvalue of -Lap via deflated inverse power iteration on
// (K, M); relative Rayleigh convergence to rel_tol.
double lambda1(const WarpedManifold& m, double rel_tol = 1e-10);
EigenPair lambda1_mode(const WarpedManifold& m, double rel_tol = 1e-10);

// First `count` nonconstant eigenpairs of (K, M), ascending.
std::vector<EigenPair> low_eigenmodes(const WarpedManifold& m, int count, double rel_tol = 1e-10);

// lambda_star: smallest eigenvalue of the pencil
//   (1-theta) int (Lap u)^2 + theta d/(d-1) int Ric(grad u, grad u)
//   over int |grad u|^2, restricted to sigma-mean-zero fields, theta from the
//   canonical choice at (p, d). Needs d >= 2.
double lambda_star(const WarpedManifold& m, double p, double rel_tol = 1e-8);

// Rayleigh quotient of the lambda_star pencil at an explicit field.
double lambda_star_quotient(const WarpedManifold& m, double p, const RadialField& u);

// Rayleigh quotient of the lambda1 pencil at an explicit field.
double lambda1_quotient(const WarpedManifold& m, const RadialField& u);

}  // namespace warpflow
