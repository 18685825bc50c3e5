#pragma once

#include <Eigen/Core>
#include <string>

#include "warpflow/grid.hpp"
#include "warpflow/warp.hpp"

namespace warpflow {

// Closed-form description of a rotationally symmetric compact manifold,
// reduced to its 1D warp profile.
struct ProfileSpec {
  Topology topology = Topology::SphereLike;
  int dim = 2;
  Warp warp = SphereWarp{};
  int grid_size = 512;
  std::string name;  // original spec string when parsed from the mini-language

  static ProfileSpec sphere(int dim, int grid_size, std::vector<double> r_coeffs = {});
  static ProfileSpec ring_log(int dim, int grid_size, FourierSeries log_h);
  static ProfileSpec ring_direct(int dim, int grid_size, FourierSeries h);
  static ProfileSpec circle(int grid_size);
};

class WarpedManifold;

// Scalar profile on a manifold grid. Derivatives come from the grid stencils
// and are computed once at construction; instances are immutable afterwards.
class RadialField {
 public:
  RadialField() = default;
  RadialField(const Grid& grid, Eigen::ArrayXd values);

  const Eigen::ArrayXd& values() const { return values_; }
  const Eigen::ArrayXd& d1() const { return d1_; }
  const Eigen::ArrayXd& d2() const { return d2_; }
  double min() const { return min_; }
  bool positive() const { return min_ > 0.0; }
  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

 private:
  Eigen::ArrayXd values_, d1_, d2_;
  double min_ = 0.0;
};

// Pointwise Hessian data of a radial function in the orthonormal frame:
//   ||H u||^2 = (u'')^2 + (d-1) ((h'/h) u')^2
//   A        = u'' - (h'/h) u'
//   ||L u||^2 = ((d-1)/d) A^2        (trace-free part)
struct HessianInvariants {
  Eigen::ArrayXd h_norm_sq;
  Eigen::ArrayXd l_norm_sq;
  Eigen::ArrayXd radial_gap;  // A
};

// Discretized warped-product manifold with normalized volume. Immutable after
// construction; every operation below is a pure function of its inputs.
class WarpedManifold {
 public:
  static WarpedManifold build(const ProfileSpec& spec);

  const ProfileSpec& spec() const { return spec_; }
  const Grid& grid() const { return grid_; }
  int dim() const { return spec_.dim; }
  int size() const { return grid_.n; }

  const Eigen::ArrayXd& h() const { return h_; }
  const Eigen::ArrayXd& dh() const { return dh_; }
  const Eigen::ArrayXd& ddh() const { return ddh_; }
  const Eigen::ArrayXd& sigma() const { return sigma_; }
  const Eigen::ArrayXd& ricci_radial() const { return ricci_radial_; }
  const Eigen::ArrayXd& ricci_tangential() const { return ricci_tangential_; }
  // (d-1) h'/h at the nodes; the radial Laplacian drift coefficient.
  const Eigen::ArrayXd& drift() const { return drift_; }
  // Z with sigma = h^{d-1} dx / Z (endpoint-corrected); consumers assembling
  // their own quadratures against the normalized measure must divide by this.
  double measure_normalizer() const { return normalizer_; }

  RadialField field(Eigen::ArrayXd values) const { return RadialField(grid_, std::move(values)); }
  RadialField constant_field(double c) const;

  double integrate(const Eigen::ArrayXd& f) const;
  double integrate(const RadialField& f) const { return integrate(f.values()); }
  double lp_norm(const RadialField& u, double p) const;
  double dirichlet_energy(const RadialField& u) const;

  RadialField laplacian(const RadialField& u) const;
  Eigen::ArrayXd laplacian_values(const Eigen::ArrayXd& d1, const Eigen::ArrayXd& d2) const;

  HessianInvariants hessian_invariants(const RadialField& u) const;
  Eigen::ArrayXd ricci_quadratic(const RadialField& u) const;
  double rho() const;

  // Pointwise ||Q^theta u||^2 = ((d-1)/d) (A - c (u')^2/u)^2 for a positive
  // field; c = 0 recovers the trace-free Hessian norm.
  Eigen::ArrayXd q_norm_sq(const RadialField& u, double c) const;

  // Integrated Bochner identity defect:
  //   int (Lap u)^2 - d/(d-1) int [ ||L u||^2 + Ric(grad u, grad u) ]
  double bochner_residual(const RadialField& u) const;

  // Integrated cross-term identity defect; for d = 1 the identity is
  //   int u'' |u'|^2/u = (1/3) int |u'|^4/u^2.
  double cross_term_residual(const RadialField& u) const;

 private:
  ProfileSpec spec_;
  Grid grid_;
  Eigen::ArrayXd h_, dh_, ddh_, sigma_, ricci_radial_, ricci_tangential_, drift_;
  double normalizer_ = 1.0;
};

}  // namespace warpflow
