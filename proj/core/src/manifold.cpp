#include "warpflow/manifold.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace warpflow {

namespace {
constexpr double kPoleClosureTol = 1e-10;
}

ProfileSpec ProfileSpec::sphere(int dim, int grid_size, std::vector<double> r_coeffs) {
  ProfileSpec s;
  s.topology = Topology::SphereLike;
  s.dim = dim;
  s.warp = SphereWarp{std::move(r_coeffs)};
  s.grid_size = grid_size;
  s.name = "sphere:d=" + std::to_string(dim);
  return s;
}

ProfileSpec ProfileSpec::ring_log(int dim, int grid_size, FourierSeries log_h) {
  ProfileSpec s;
  s.topology = Topology::RingLike;
  s.dim = dim;
  s.warp = RingLogWarp{std::move(log_h)};
  s.grid_size = grid_size;
  s.name = "ring:d=" + std::to_string(dim);
  return s;
}

ProfileSpec ProfileSpec::ring_direct(int dim, int grid_size, FourierSeries h) {
  ProfileSpec s;
  s.topology = Topology::RingLike;
  s.dim = dim;
  s.warp = RingWarp{std::move(h)};
  s.grid_size = grid_size;
  s.name = "ring:d=" + std::to_string(dim);
  return s;
}

ProfileSpec ProfileSpec::circle(int grid_size) {
  ProfileSpec s;
  s.topology = Topology::Circle;
  s.dim = 1;
  s.warp = CircleWarp{};
  s.grid_size = grid_size;
  s.name = "circle";
  return s;
}

RadialField::RadialField(const Grid& grid, Eigen::ArrayXd values)
    : values_(std::move(values)) {
  if (values_.size() != grid.n) throw std::invalid_argument("field length does not match grid");
  d1_ = d1_apply(grid, values_);
  d2_ = d2_apply(grid, values_);
  min_ = values_.minCoeff();
}

WarpedManifold WarpedManifold::build(const ProfileSpec& spec) {
  switch (spec.topology) {
    case Topology::SphereLike:
      if (spec.dim < 2) throw std::invalid_argument("sphere-like profiles need d >= 2");
      if (!std::holds_alternative<SphereWarp>(spec.warp))
        throw std::invalid_argument("sphere-like topology requires a sphere warp");
      break;
    case Topology::RingLike:
      if (spec.dim < 2)
        throw std::invalid_argument("ring-like profiles need d >= 2 (use circle for d = 1)");
      if (std::holds_alternative<SphereWarp>(spec.warp) || std::holds_alternative<CircleWarp>(spec.warp))
        throw std::invalid_argument("ring-like topology requires a Fourier warp");
      break;
    case Topology::Circle:
      if (spec.dim != 1) throw std::invalid_argument("circle means d = 1");
      break;
  }

  WarpedManifold m;
  m.spec_ = spec;
  m.grid_ = Grid::make(spec.topology, spec.grid_size);
  const int n = m.grid_.n;
  const int d = spec.dim;

  m.h_.resize(n);
  m.dh_.resize(n);
  m.ddh_.resize(n);
  for (int j = 0; j < n; ++j) {
    const WarpJet w = warp_eval(spec.warp, m.grid_.nodes[j]);
    m.h_[j] = w.h;
    m.dh_[j] = w.dh;
    m.ddh_[j] = w.ddh;
  }
  if (m.h_.minCoeff() <= 0.0) throw std::invalid_argument("warp function is not positive in the interior");

  if (spec.topology == Topology::SphereLike) {
    const WarpJet w0 = warp_eval(spec.warp, 0.0);
    const WarpJet w1 = warp_eval(spec.warp, m.grid_.length);
    if (std::abs(w0.h) > kPoleClosureTol || std::abs(w0.dh - 1.0) > kPoleClosureTol ||
        std::abs(w1.h) > kPoleClosureTol || std::abs(w1.dh + 1.0) > kPoleClosureTol) {
      throw std::invalid_argument("pole closure violated: need h(0) = h(pi) = 0, h'(0) = 1, h'(pi) = -1");
    }
  }

  // Midpoint weights h^{d-1} dx. On sphere-like grids the weight function is
  // odd at the poles when d is even, which degrades the plain midpoint rule
  // to O(dx^2); fold the Euler-Maclaurin endpoint terms
  //   (dx^2/24) [g' ] - (7 dx^4/5760) [g''']
  // into the six nodes nearest each pole (one-sided degree-5 derivative
  // stencils), keeping integrate() a single weighted sum.
  Eigen::ArrayXd w = m.h_.pow(double(d - 1)) * m.grid_.dx;
  if (spec.topology == Topology::SphereLike) {
    constexpr int kStencil = 6;
    Eigen::MatrixXd vand(kStencil, kStencil);
    for (int mm = 0; mm < kStencil; ++mm)
      for (int k = 0; k < kStencil; ++k) vand(mm, k) = std::pow(k + 0.5, mm);
    Eigen::VectorXd rhs1 = Eigen::VectorXd::Zero(kStencil);
    rhs1[1] = 1.0;
    Eigen::VectorXd rhs3 = Eigen::VectorXd::Zero(kStencil);
    rhs3[3] = 6.0;
    const Eigen::VectorXd a1 = vand.fullPivLu().solve(rhs1);
    const Eigen::VectorXd a3 = vand.fullPivLu().solve(rhs3);
    const double dx = m.grid_.dx;
    for (int k = 0; k < kStencil; ++k) {
      const double c = -(dx / 24.0) * a1[k] + (7.0 * dx / 5760.0) * a3[k];
      w[k] += c * std::pow(m.h_[k], double(d - 1));
      w[n - 1 - k] += c * std::pow(m.h_[n - 1 - k], double(d - 1));
    }
  }
  if (w.minCoeff() <= 0.0) throw std::invalid_argument("quadrature weights lost positivity");
  m.normalizer_ = kahan_sum(w);
  m.sigma_ = w / m.normalizer_;

  if (d >= 2) {
    m.ricci_radial_ = -(d - 1) * m.ddh_ / m.h_;
    m.ricci_tangential_ = -m.ddh_ / m.h_ + (d - 2) * (1.0 - m.dh_.square()) / m.h_.square();
  } else {
    m.ricci_radial_ = Eigen::ArrayXd::Zero(n);
    m.ricci_tangential_ = Eigen::ArrayXd::Zero(n);
  }
  m.drift_ = (d - 1) * m.dh_ / m.h_;
  return m;
}

RadialField WarpedManifold::constant_field(double c) const {
  return RadialField(grid_, Eigen::ArrayXd::Constant(grid_.n, c));
}

double WarpedManifold::integrate(const Eigen::ArrayXd& f) const { return kahan_dot(f, sigma_); }

double WarpedManifold::lp_norm(const RadialField& u, double p) const {
  if (p < 1.0) throw std::invalid_argument("lp_norm needs p >= 1");
  return std::pow(integrate(u.values().abs().pow(p)), 1.0 / p);
}

double WarpedManifold::dirichlet_energy(const RadialField& u) const {
  return integrate(u.d1().square());
}

Eigen::ArrayXd WarpedManifold::laplacian_values(const Eigen::ArrayXd& d1, const Eigen::ArrayXd& d2) const {
  if (dim() == 1) return d2;
  return d2 + drift_ * d1;
}

RadialField WarpedManifold::laplacian(const RadialField& u) const {
  return RadialField(grid_, laplacian_values(u.d1(), u.d2()));
}

HessianInvariants WarpedManifold::hessian_invariants(const RadialField& u) const {
  const int d = dim();
  if (d < 2) throw std::invalid_argument("trace-free Hessian undefined for d = 1; handle separately");
  HessianInvariants out;
  const Eigen::ArrayXd tangential = (dh_ / h_) * u.d1();
  out.h_norm_sq = u.d2().square() + (d - 1) * tangential.square();
  out.radial_gap = u.d2() - tangential;
  out.l_norm_sq = (double(d - 1) / d) * out.radial_gap.square();
  return out;
}

Eigen::ArrayXd WarpedManifold::ricci_quadratic(const RadialField& u) const {
  return ricci_radial_ * u.d1().square();
}

double WarpedManifold::rho() const {
  if (dim() == 1) return 0.0;
  return std::min(ricci_radial_.minCoeff(), ricci_tangential_.minCoeff());
}

Eigen::ArrayXd WarpedManifold::q_norm_sq(const RadialField& u, double c) const {
  const int d = dim();
  if (d < 2) throw std::invalid_argument("Q tensor undefined for d = 1");
  if (!u.positive()) throw std::invalid_argument("Q tensor needs a positive field");
  const Eigen::ArrayXd a = u.d2() - (dh_ / h_) * u.d1();
  const Eigen::ArrayXd q = a - c * u.d1().square() / u.values();
  return (double(d - 1) / d) * q.square();
}

double WarpedManifold::bochner_residual(const RadialField& u) const {
  const int d = dim();
  if (d < 2) throw std::invalid_argument("Bochner identity needs d >= 2");
  const Eigen::ArrayXd lap = laplacian_values(u.d1(), u.d2());
  const HessianInvariants inv = hessian_invariants(u);
  const double lhs = integrate(lap.square());
  const double rhs = (double(d) / (d - 1)) * (integrate(inv.l_norm_sq) + integrate(ricci_quadratic(u)));
  return lhs - rhs;
}

double WarpedManifold::cross_term_residual(const RadialField& u) const {
  if (!u.positive()) throw std::invalid_argument("cross-term identity needs a positive field");
  const Eigen::ArrayXd grad_sq_over_u = u.d1().square() / u.values();
  const Eigen::ArrayXd quartic = grad_sq_over_u.square();  // |u'|^4 / u^2
  if (dim() == 1) {
    return integrate(u.d2() * grad_sq_over_u) - integrate(quartic) / 3.0;
  }
  const int d = dim();
  const Eigen::ArrayXd lap = laplacian_values(u.d1(), u.d2());
  const Eigen::ArrayXd a = u.d2() - (dh_ / h_) * u.d1();
  // [L u] . [grad u ⊗ grad u / u] in the radial frame
  const Eigen::ArrayXd contraction = (double(d - 1) / d) * a * grad_sq_over_u;
  const double lhs = integrate(lap * grad_sq_over_u);
  const double rhs =
      (double(d) / (d + 2)) * integrate(quartic) - (2.0 * d / (d + 2)) * integrate(contraction);
  return lhs - rhs;
}

}  // namespace warpflow
