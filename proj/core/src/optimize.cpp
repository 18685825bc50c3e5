#include "warpflow/optimize.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "warpflow/parameters.hpp"
#include "warpflow/pencil.hpp"

namespace warpflow {

namespace {

using Eigen::ArrayXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shared discrete context for the quotient objectives. Dirichlet energies go
// through the staggered summation-by-parts form: the collocated central
// first difference annihilates the grid's sawtooth mode, which would puncture
// any quotient whose numerator or denominator is a plain Sum sigma (D1 v)^2.
struct QuotientContext {
  const WarpedManifold* m = nullptr;
  const PencilForms* forms = nullptr;
  SpMat d1, d2;
  ArrayXd sigma, hr, drift, ric;
  int d = 0;

  QuotientContext(const WarpedManifold& man, const PencilForms& f)
      : m(&man),
        forms(&f),
        d1(d1_matrix(man.grid())),
        d2(d2_matrix(man.grid())),
        sigma(man.sigma()),
        hr(man.dh() / man.h()),
        drift(man.drift()),
        ric(man.ricci_radial()),
        d(man.dim()) {}

  ArrayXd apply_d1(const ArrayXd& x) const { return (d1 * x.matrix()).array(); }
  ArrayXd apply_d2(const ArrayXd& x) const { return (d2 * x.matrix()).array(); }
  ArrayXd apply_d1t(const ArrayXd& x) const { return (d1.transpose() * x.matrix()).array(); }
  ArrayXd apply_d2t(const ArrayXd& x) const { return (d2.transpose() * x.matrix()).array(); }

  double dirichlet(const ArrayXd& v, ArrayXd* grad = nullptr) const {
    const Eigen::VectorXd kv = forms->dirichlet * v.matrix();
    if (grad) *grad = 2.0 * kv.array();
    return v.matrix().dot(kv);
  }
};

// Objective evaluated on psi = log(field); returns +inf outside the domain.
using PsiObjective = std::function<double(const ArrayXd& psi, ArrayXd* grad)>;

// Curvature-improved quotient with numerator
//   c_delta int (Lap u)^2 + c_q int q^2 + c_r int Ric (u')^2,
// q = A - c_coef (u')^2/u, over the Dirichlet energy.
PsiObjective make_q_objective(const QuotientContext& ctx, double c_delta, double c_q, double c_r,
                              double c_coef) {
  return [&ctx, c_delta, c_q, c_r, c_coef](const ArrayXd& psi, ArrayXd* grad) -> double {
    const ArrayXd u = psi.exp();
    if (!u.allFinite()) return kInf;
    const ArrayXd du = ctx.apply_d1(u);
    const ArrayXd ddu = ctx.apply_d2(u);
    const ArrayXd lap = ddu + ctx.drift * du;
    const ArrayXd du_over_u = du / u;
    const ArrayXd w = du_over_u * du;  // (u')^2 / u
    const ArrayXd q = ddu - ctx.hr * du - c_coef * w;

    ArrayXd gden;
    const double den = ctx.dirichlet(u, grad ? &gden : nullptr);
    if (!(den > 0.0)) return kInf;
    const double num = c_delta * (ctx.sigma * lap.square()).sum() +
                       c_q * (ctx.sigma * q.square()).sum() +
                       c_r * (ctx.sigma * ctx.ric * du.square()).sum();
    const double value = num / den;
    if (!std::isfinite(value)) return kInf;

    if (grad) {
      const ArrayXd zl = ctx.sigma * lap;
      ArrayXd gn = 2.0 * c_delta * (ctx.apply_d2t(zl) + ctx.apply_d1t(ctx.drift * zl));
      const ArrayXd zq = ctx.sigma * q;
      gn += 2.0 * c_q *
            (ctx.apply_d2t(zq) - ctx.apply_d1t(ctx.hr * zq) -
             c_coef * (ctx.apply_d1t(2.0 * du_over_u * zq) - du_over_u.square() * zq));
      gn += 2.0 * c_r * ctx.apply_d1t(ctx.sigma * ctx.ric * du);
      *grad = u * (gn * den - num * gden) / (den * den);
    }
    return value;
  };
}

// (p-2) ||grad v||^2 / (||v||_p^2 - ||v||_2^2) on v = exp(psi).
PsiObjective make_interpolation_objective(const QuotientContext& ctx, double p) {
  return [&ctx, p](const ArrayXd& psi, ArrayXd* grad) -> double {
    const ArrayXd v = psi.exp();
    if (!v.allFinite()) return kInf;
    ArrayXd gnum;
    const double num = ctx.dirichlet(v, grad ? &gnum : nullptr);
    const double sp = (ctx.sigma * (p * psi).exp()).sum();  // int v^p
    const double s2 = (ctx.sigma * v.square()).sum();
    const double sp2p = std::pow(sp, 2.0 / p);
    const double den = sp2p - s2;
    const double scale = std::max({sp2p, s2, 1e-300});
    if (std::abs(den) < 1e-13 * scale) return kInf;  // degenerate near constants
    const double value = (p - 2.0) * num / den;
    if (!std::isfinite(value) || value < 0.0) return kInf;

    if (grad) {
      const ArrayXd gd =
          2.0 * std::pow(sp, 2.0 / p - 1.0) * ctx.sigma * ((p - 1.0) * psi).exp() -
          2.0 * ctx.sigma * v;
      *grad = v * (p - 2.0) * (gnum * den - num * gd) / (den * den);
    }
    return value;
  };
}

// ||grad v||^2 / ((1/2) int v^2 log(v^2 / ||v||_2^2)) on v = exp(psi).
PsiObjective make_log_sobolev_objective(const QuotientContext& ctx) {
  return [&ctx](const ArrayXd& psi, ArrayXd* grad) -> double {
    const ArrayXd v = psi.exp();
    if (!v.allFinite()) return kInf;
    const ArrayXd v2 = v.square();
    ArrayXd gnum;
    const double num = ctx.dirichlet(v, grad ? &gnum : nullptr);
    const double s2 = (ctx.sigma * v2).sum();
    const double entropy = (ctx.sigma * v2 * 2.0 * psi).sum();  // int v^2 log v^2
    const double den = 0.5 * (entropy - s2 * std::log(s2));
    if (!(den > 1e-13 * s2)) return kInf;  // Jensen: zero only at constants
    const double value = num / den;
    if (!std::isfinite(value)) return kInf;

    if (grad) {
      const ArrayXd gd = ctx.sigma * v * (2.0 * psi - std::log(s2));
      *grad = v * (gnum * den - num * gd) / (den * den);
    }
    return value;
  };
}

void remove_constant_component(ArrayXd& g) { g -= g.mean(); }

struct DescentReport {
  double value = kInf;
  ArrayXd psi;
  bool hit_cap = false;
  int iterations = 0;
};

// Armijo backtracking descent along the (possibly preconditioned) gradient.
// `project` removes the exact scale-invariance direction; only meaningful
// when the variables are the grid values of psi.
template <typename DirectionFn>
DescentReport descend(const PsiObjective& obj, ArrayXd psi, int max_iters, double rel_tol,
                      int tol_window, bool project, DirectionFn precondition) {
  DescentReport rep;
  ArrayXd grad(psi.size());
  double value = obj(psi, &grad);
  if (!std::isfinite(value)) {
    rep.value = kInf;
    rep.psi = psi;
    return rep;
  }
  double alpha = 1.0;
  double window_best = value;
  int window_count = 0;
  int it = 0;
  for (; it < max_iters; ++it) {
    if (project) remove_constant_component(grad);
    ArrayXd dir = precondition(grad);
    if (project) remove_constant_component(dir);
    const double slope = (grad * dir).sum();
    if (!(slope > 0.0)) break;  // not a descent direction: converged/roundoff

    double a = alpha;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      const ArrayXd trial = psi - a * dir;
      const double tv = obj(trial, nullptr);
      if (std::isfinite(tv) && tv <= value - 1e-4 * a * slope) {
        psi = trial;
        value = tv;
        accepted = true;
        break;
      }
      a *= 0.5;
    }
    if (!accepted) break;
    alpha = std::min(a * 2.0, 1e6);

    value = obj(psi, &grad);
    if (++window_count >= tol_window) {
      if (window_best - value <= rel_tol * std::max(std::abs(value), 1e-14)) break;
      window_best = value;
      window_count = 0;
    }
  }
  rep.value = value;
  rep.psi = std::move(psi);
  rep.hit_cap = (it >= max_iters);
  rep.iterations = it;
  return rep;
}

struct MultistartProblem {
  const WarpedManifold* m = nullptr;
  const PencilForms* forms = nullptr;
  PsiObjective objective;
};

OptimizerOutcome run_multistart(const MultistartProblem& prob, const OptimizerControls& c) {
  const WarpedManifold& m = *prob.m;
  const PencilForms& forms = *prob.forms;
  const int n = m.size();

  const SpMat km = forms.dirichlet + forms.mass;
  Eigen::SparseLU<SpMat> smoother;
  smoother.compute(km);
  if (smoother.info() != Eigen::Success) throw std::runtime_error("Sobolev preconditioner failed");

  // Eigenmode basis for seeds and the coarse stage. The raw staggered-pencil
  // eigenvectors carry a pole boundary-layer wiggle that the collocated
  // (Lap u)^2 quadrature amplifies by 1/dx^2; one H1 smoothing pass removes it.
  const int n_modes = std::max(1, c.low_modes);
  const std::vector<EigenPair> modes = low_eigenmodes(m, n_modes);
  Eigen::MatrixXd v_modes(n, n_modes);      // M-orthonormalized, smoothed
  Eigen::MatrixXd v_modes_sup(n, n_modes);  // sup-normalized copies for seeding
  {
    std::vector<Eigen::VectorXd> smoothed;
    for (int k = 0; k < n_modes; ++k) {
      Eigen::VectorXd v = smoother.solve(forms.mass * modes[k].vector);
      // M-orthogonalize against constants and previous smoothed modes
      v.array() -= (v.array() * m.sigma()).sum();
      for (const auto& w : smoothed) v -= w.dot(forms.mass * v) * w;
      v /= std::sqrt(v.dot(forms.mass * v));
      smoothed.push_back(v);
      v_modes.col(k) = v;
      v_modes_sup.col(k) = v / v.cwiseAbs().maxCoeff();
    }
  }
  const Eigen::MatrixXd mode_projector = v_modes.transpose() * forms.mass;

  // near-constant upper bounds 1 + eps v_1
  std::vector<ArrayXd> cap_fields;
  for (double eps : {1e-2, 1e-3}) cap_fields.push_back((1.0 + eps * v_modes_sup.col(0).array()).log());

  // seeds
  std::vector<ArrayXd> seeds;
  seeds.reserve(c.starts);
  const double eps_levels[2] = {0.05, 0.2};
  for (int k = 0; k < n_modes && static_cast<int>(seeds.size()) < c.starts; ++k) {
    for (double eps : eps_levels) {
      if (static_cast<int>(seeds.size()) >= c.starts) break;
      seeds.push_back((1.0 + eps * v_modes_sup.col(k).array()).log());
    }
  }
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (static_cast<int>(seeds.size()) < c.starts) {
    ArrayXd psi = ArrayXd::Zero(n);
    for (int k = 0; k < n_modes; ++k) {
      psi += (0.25 / (k + 1)) * gauss(rng) * v_modes_sup.col(k).array();
    }
    seeds.push_back(std::move(psi));
  }

  auto run_one = [&](const ArrayXd& seed,
                     const Eigen::SparseLU<SpMat>& sobolev) -> DescentReport {
    // stage A: low-mode coefficients
    Eigen::VectorXd a = mode_projector * seed.matrix();
    PsiObjective coarse = [&](const ArrayXd& coeff, ArrayXd* grad) -> double {
      const ArrayXd psi = (v_modes * coeff.matrix()).array();
      if (!grad) return prob.objective(psi, nullptr);
      ArrayXd gpsi(n);
      const double val = prob.objective(psi, &gpsi);
      if (std::isfinite(val)) *grad = (v_modes.transpose() * gpsi.matrix()).array();
      return val;
    };
    DescentReport ra = descend(coarse, a.array(), c.coarse_iterations, c.rel_tol, c.tol_window,
                               /*project=*/false, [](const ArrayXd& g) { return g; });
    ArrayXd psi = (v_modes * ra.psi.matrix()).array();
    if (!std::isfinite(ra.value)) psi = seed;

    // stage B: full grid with H1 gradient
    DescentReport rb = descend(
        prob.objective, std::move(psi), c.fine_iterations, c.rel_tol, c.tol_window,
        /*project=*/true,
        [&sobolev](const ArrayXd& g) -> ArrayXd { return sobolev.solve(g.matrix()).array(); });
    rb.iterations += ra.iterations;
    return rb;
  };

  // parallel over starts, deterministic reduction by (value, index)
  const int n_threads = c.threads > 0 ? c.threads
                                      : std::max(1u, std::thread::hardware_concurrency());
  std::vector<DescentReport> reports(seeds.size());
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    try {
      Eigen::SparseLU<SpMat> sobolev;
      sobolev.compute(km);
      if (sobolev.info() != Eigen::Success)
        throw std::runtime_error("Sobolev preconditioner failed");
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= static_cast<int>(seeds.size())) return;
        reports[i] = run_one(seeds[i], sobolev);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  OptimizerOutcome out;
  out.value = kInf;
  for (int i = 0; i < static_cast<int>(reports.size()); ++i) {
    out.iterations += reports[i].iterations;
    if (reports[i].value < out.value) {
      out.value = reports[i].value;
      out.minimizer = reports[i].psi.exp();
      out.stagnated = reports[i].hit_cap;
      out.best_start = i;
    }
  }
  for (const ArrayXd& psi : cap_fields) {
    const double v = prob.objective(psi, nullptr);
    if (v < out.value) {
      out.value = v;
      out.minimizer = psi.exp();
      out.stagnated = false;
      out.best_start = -1;  // near-constant cap
    }
  }
  if (!std::isfinite(out.value)) throw std::runtime_error("quotient minimization found no feasible point");
  out.note = "multistart projected gradient, " + std::to_string(seeds.size()) + " starts, " +
             std::to_string(out.iterations) + " total iterations" +
             (out.best_start < 0 ? ", near-constant cap active" : "") +
             (out.stagnated ? ", best start hit iteration cap" : "");
  return out;
}

}  // namespace

OptimizerOutcome lambda_star_q(const WarpedManifold& m, double p, const OptimizerControls& c) {
  if (m.dim() < 2) throw std::invalid_argument("lambda_star_q needs d >= 2");
  const int d = m.dim();
  const double theta = theta_choice(p, d);
  const PencilForms forms = assemble_pencil_forms(m);
  QuotientContext ctx(m, forms);
  MultistartProblem prob;
  prob.m = &m;
  prob.forms = &forms;
  // (theta d/(d-1)) ||Q||^2 = theta q^2 in the radial frame
  prob.objective = make_q_objective(ctx, 1.0 - theta, theta, theta * d / (d - 1.0),
                                    q_coefficient_choice(p, d));
  return run_multistart(prob, c);
}

OptimizerOutcome rho_star(const WarpedManifold& m, double p, const OptimizerControls& c) {
  if (m.dim() < 2) throw std::invalid_argument("rho_star needs d >= 2");
  const int d = m.dim();
  const PencilForms forms = assemble_pencil_forms(m);
  QuotientContext ctx(m, forms);
  MultistartProblem prob;
  prob.m = &m;
  prob.forms = &forms;
  prob.objective =
      make_q_objective(ctx, 0.0, 1.0, double(d) / (d - 1.0), q_coefficient_choice(p, d));
  return run_multistart(prob, c);
}

OptimizerOutcome best_lambda(const WarpedManifold& m, double p, const OptimizerControls& c) {
  if (p <= 1.0 || p == 2.0 || p >= two_star(m.dim()))
    throw std::invalid_argument("best_lambda needs p in (1,2) or (2,2*)");
  const PencilForms forms = assemble_pencil_forms(m);
  QuotientContext ctx(m, forms);
  MultistartProblem prob;
  prob.m = &m;
  prob.forms = &forms;
  prob.objective = make_interpolation_objective(ctx, p);
  return run_multistart(prob, c);
}

OptimizerOutcome log_sobolev_lambda2(const WarpedManifold& m, const OptimizerControls& c) {
  const PencilForms forms = assemble_pencil_forms(m);
  QuotientContext ctx(m, forms);
  MultistartProblem prob;
  prob.m = &m;
  prob.forms = &forms;
  prob.objective = make_log_sobolev_objective(ctx);
  return run_multistart(prob, c);
}

double lambda_star_q_quotient(const WarpedManifold& m, double p, const RadialField& u) {
  if (!u.positive()) throw std::invalid_argument("quotient needs a positive field");
  const int d = m.dim();
  const double theta = theta_choice(p, d);
  const PencilForms forms = assemble_pencil_forms(m);
  QuotientContext ctx(m, forms);
  const PsiObjective obj = make_q_objective(ctx, 1.0 - theta, theta * (d - 1.0) / d,
                                            theta * d / (d - 1.0), q_coefficient_choice(p, d));
  return obj(u.values().log(), nullptr);
}

double rho_star_quotient(const WarpedManifold& m, double p, const RadialField& u) {
  if (!u.positive()) throw std::invalid_argument("quotient needs a positive field");
  const int d = m.dim();
  const PencilForms forms = assemble_pencil_forms(m);
  QuotientContext ctx(m, forms);
  const PsiObjective obj = make_q_objective(ctx, 0.0, (d - 1.0) / d * (double(d) / (d - 1.0)),
                                            double(d) / (d - 1.0), q_coefficient_choice(p, d));
  return obj(u.values().log(), nullptr);
}

double log_sobolev_quotient(const WarpedManifold& m, const RadialField& v) {
  if (!v.positive()) throw std::invalid_argument("quotient needs a positive field");
  const PencilForms forms = assemble_pencil_forms(m);
  QuotientContext ctx(m, forms);
  const PsiObjective obj = make_log_sobolev_objective(ctx);
  return obj(v.values().log(), nullptr);
}

}  // namespace warpflow
