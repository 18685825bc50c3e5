#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace warpflow {

enum class Topology { SphereLike, RingLike, Circle };

// Uniform midpoint-shifted grid over the profile coordinate: x_j = (j+1/2) dx.
// Sphere-like grids cover [0, pi] and never evaluate the poles; ring-like
// grids cover [0, 2*pi) periodically; the flat circle uses the unit-length
// parametrization [0, 1).
struct Grid {
  Topology topology = Topology::SphereLike;
  int n = 0;
  double length = 0.0;
  double dx = 0.0;
  Eigen::ArrayXd nodes;

  bool periodic() const { return topology != Topology::SphereLike; }

  static Grid make(Topology topology, int n);
};

// 4th-order central first/second differences. Ghost values are even
// reflections across the poles for sphere-like grids and periodic wraps
// otherwise. Reflection is exact for smooth radial profiles: they extend
// evenly across both poles.
Eigen::ArrayXd d1_apply(const Grid& g, const Eigen::ArrayXd& u);
Eigen::ArrayXd d2_apply(const Grid& g, const Eigen::ArrayXd& u);

Eigen::SparseMatrix<double> d1_matrix(const Grid& g);
Eigen::SparseMatrix<double> d2_matrix(const Grid& g);

// 4th-order staggered first derivative sampled at half nodes x = j dx.
// Rows run j = 0..n for sphere-like grids (j = 0 and j = n sit on the poles)
// and j = 0..n-1 with wraparound for periodic grids. Backs the
// summation-by-parts Dirichlet forms of the eigenvalue pencils.
Eigen::SparseMatrix<double> staggered_d1_matrix(const Grid& g);
Eigen::ArrayXd half_nodes(const Grid& g);

// Compensated (Kahan) sum; keeps quadrature drift at O(eps) independent of n.
double kahan_sum(const Eigen::ArrayXd& v);
double kahan_dot(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b);

}  // namespace warpflow
