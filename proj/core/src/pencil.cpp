#include "warpflow/pencil.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "warpflow/parameters.hpp"

namespace warpflow {

namespace {

Eigen::SparseMatrix<double> diagonal(const Eigen::ArrayXd& v) {
  Eigen::SparseMatrix<double> m(v.size(), v.size());
  m.reserve(Eigen::VectorXi::Constant(v.size(), 1));
  for (Eigen::Index i = 0; i < v.size(); ++i) m.insert(i, i) = v[i];
  m.makeCompressed();
  return m;
}

void project_mean_zero(Eigen::VectorXd& x, const Eigen::ArrayXd& sigma) {
  const double mean = (x.array() * sigma).sum();
  x.array() -= mean;
}

// Inverse power iteration for the smallest eigenvalue of the symmetric pencil
// (A, B) on the sigma-mean-zero subspace. Both A and B must annihilate
// constants; the shared kernel is pinned by a corner bump A(0,0) += gamma,
// which leaves the mean-zero problem untouched (solutions of the pinned
// system carry the gauge x_0 = 0 and are re-projected anyway).
EigenPair smallest_pencil_eigenpair(const Eigen::SparseMatrix<double>& a,
                                    const Eigen::SparseMatrix<double>& b,
                                    const Eigen::ArrayXd& sigma, double shift0, double rel_tol,
                                    const std::vector<Eigen::VectorXd>& deflate,
                                    const Eigen::VectorXd& seed, int max_iters = 500) {
  const Eigen::Index n = a.rows();
  double scale = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
      scale = std::max(scale, std::abs(it.value()));
  const double gamma = std::max(scale, 1.0);

  double shift = shift0;
  auto factor = [&](double s) {
    Eigen::SparseMatrix<double> sys = a;
    if (s != 0.0) sys -= (s * b).eval();
    sys.coeffRef(0, 0) += gamma;
    auto lu = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu->compute(sys);
    if (lu->info() != Eigen::Success) throw std::runtime_error("pencil factorization failed");
    return lu;
  };
  auto lu = factor(shift);

  auto b_orthogonalize = [&](Eigen::VectorXd& x) {
    project_mean_zero(x, sigma);
    for (const auto& w : deflate) {
      const double c = w.dot(b * x);
      x -= c * w;
    }
  };

  Eigen::VectorXd x = seed.size() == n ? seed : Eigen::VectorXd::Random(n);
  b_orthogonalize(x);
  double xbx = x.dot(b * x);
  if (xbx <= 0.0) throw std::runtime_error("pencil iteration started in the null space");
  x /= std::sqrt(xbx);

  double rayleigh = x.dot(a * x) / x.dot(b * x);
  int it = 0;
  int since_refactor = 0;
  for (; it < max_iters; ++it) {
    Eigen::VectorXd rhs = b * x;
    Eigen::VectorXd y = lu->solve(rhs);
    b_orthogonalize(y);
    const double yby = y.dot(b * y);
    if (!(yby > 0.0) || !y.allFinite()) throw std::runtime_error("pencil iteration broke down");
    y /= std::sqrt(yby);
    const double next = y.dot(a * y) / y.dot(b * y);
    const double diff = std::abs(next - rayleigh);
    x = y;
    rayleigh = next;
    if (diff <= rel_tol * std::max(std::abs(rayleigh), 1e-12)) break;
    // refresh the shift once the estimate has settled a little
    if (++since_refactor >= 8) {
      const double margin = 0.05 * std::max(std::abs(rayleigh - shift), 1e-10);
      const double proposed = rayleigh - margin;
      if (proposed > shift) {
        shift = proposed;
        lu = factor(shift);
      }
      since_refactor = 0;
    }
  }
  if (it >= max_iters) throw std::runtime_error("pencil inverse iteration did not converge");

  EigenPair out;
  out.value = rayleigh;
  out.vector = x;
  out.iterations = it + 1;
  return out;
}

// Seed with a component on the k-th mode family: trigonometric waves of
// increasing frequency (deflation removes whatever already converged).
Eigen::VectorXd mode_seed(const WarpedManifold& m, int k) {
  const auto& nodes = m.grid().nodes;
  Eigen::VectorXd s(nodes.size());
  if (m.grid().periodic()) {
    const double freq = (k / 2 + 1) * 2.0 * 3.14159265358979323846 / m.grid().length;
    for (Eigen::Index j = 0; j < nodes.size(); ++j)
      s[j] = (k % 2 == 0) ? std::cos(freq * nodes[j]) : std::sin(freq * nodes[j]);
  } else {
    for (Eigen::Index j = 0; j < nodes.size(); ++j) s[j] = std::cos((k + 1) * nodes[j]);
  }
  return s;
}

}  // namespace

PencilForms assemble_pencil_forms(const WarpedManifold& m) {
  const Grid& g = m.grid();
  const int d = m.dim();
  PencilForms f;

  f.mass = diagonal(m.sigma());

  // half-node weights h(x)^{d-1} dx / Z with the same normalizer as sigma
  const double z = m.measure_normalizer();
  const Eigen::ArrayXd x_half = half_nodes(g);
  Eigen::ArrayXd w_half(x_half.size());
  Eigen::ArrayXd ricci_half = Eigen::ArrayXd::Zero(x_half.size());
  for (Eigen::Index j = 0; j < x_half.size(); ++j) {
    const WarpJet jet = warp_eval(m.spec().warp, x_half[j]);
    w_half[j] = std::pow(jet.h, double(d - 1)) * g.dx / z;
    if (d >= 2) {
      if (jet.h > 0.0) {
        ricci_half[j] = -(d - 1) * jet.ddh / jet.h;
      } else {
        w_half[j] = 0.0;  // pole: zero weight, Ricci value irrelevant
      }
    }
  }
  f.ricci_half_min = (d >= 2) ? ricci_half.minCoeff() : 0.0;

  const Eigen::SparseMatrix<double> grad = staggered_d1_matrix(g);
  f.dirichlet = grad.transpose() * diagonal(w_half) * grad;
  f.dirichlet.makeCompressed();

  Eigen::SparseMatrix<double> lap = d2_matrix(g);
  if (d >= 2) lap = (lap + diagonal(m.drift()) * d1_matrix(g)).eval();
  f.laplacian2 = lap.transpose() * f.mass * lap;
  f.laplacian2.makeCompressed();

  if (d >= 2) {
    f.ricci = grad.transpose() * diagonal(w_half * ricci_half) * grad;
    f.ricci.makeCompressed();
  } else {
    f.ricci.resize(g.n, g.n);
  }
  return f;
}

double lambda1(const WarpedManifold& m, double rel_tol) { return lambda1_mode(m, rel_tol).value; }

EigenPair lambda1_mode(const WarpedManifold& m, double rel_tol) {
  const PencilForms f = assemble_pencil_forms(m);
  return smallest_pencil_eigenpair(f.dirichlet, f.mass, m.sigma(), 0.0, rel_tol, {},
                                   mode_seed(m, 0));
}

std::vector<EigenPair> low_eigenmodes(const WarpedManifold& m, int count, double rel_tol) {
  const PencilForms f = assemble_pencil_forms(m);
  std::vector<EigenPair> modes;
  std::vector<Eigen::VectorXd> deflate;
  for (int k = 0; k < count; ++k) {
    EigenPair pair = smallest_pencil_eigenpair(f.dirichlet, f.mass, m.sigma(), 0.0, rel_tol,
                                               deflate, mode_seed(m, k));
    deflate.push_back(pair.vector);
    modes.push_back(std::move(pair));
  }
  return modes;
}

double lambda_star(const WarpedManifold& m, double p, double rel_tol) {
  const int d = m.dim();
  if (d < 2) throw std::invalid_argument("lambda_star needs d >= 2");
  const double theta = theta_choice(p, d);
  const PencilForms f = assemble_pencil_forms(m);
  const double cr = theta * d / (d - 1.0);
  Eigen::SparseMatrix<double> a = (1.0 - theta) * f.laplacian2 + cr * f.ricci;

  // guaranteed lower bound: N2 >= 0 and R >= min(ricci) K in form sense
  const double bound = cr * std::min(f.ricci_half_min, 0.0);
  const double shift0 = bound - 0.1 * std::max(1.0, std::abs(bound));
  EigenPair pair =
      smallest_pencil_eigenpair(a, f.dirichlet, m.sigma(), shift0, rel_tol, {}, mode_seed(m, 0));
  return pair.value;
}

double lambda_star_quotient(const WarpedManifold& m, double p, const RadialField& u) {
  const int d = m.dim();
  if (d < 2) throw std::invalid_argument("lambda_star needs d >= 2");
  const double theta = theta_choice(p, d);
  const Eigen::ArrayXd lap = m.laplacian_values(u.d1(), u.d2());
  const double num = (1.0 - theta) * m.integrate(lap.square()) +
                     theta * d / (d - 1.0) * m.integrate(m.ricci_quadratic(u));
  const double den = m.dirichlet_energy(u);
  if (den <= 0.0) throw std::invalid_argument("quotient undefined for constant fields");
  return num / den;
}

double lambda1_quotient(const WarpedManifold& m, const RadialField& u) {
  const double mean = m.integrate(u);
  const double den = m.integrate((u.values() - mean).square());
  if (den <= 0.0) throw std::invalid_argument("quotient undefined for constant fields");
  return m.dirichlet_energy(u) / den;
}

}  // namespace warpflow
