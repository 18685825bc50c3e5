#include "warpflow/rigidity.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

#include "warpflow/parameters.hpp"
#include "warpflow/pencil.hpp"

namespace warpflow {

namespace {

using Eigen::ArrayXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kConstantBranchTol = 1e-6;

SpMat laplacian_matrix(const WarpedManifold& m) {
  SpMat lap = d2_matrix(m.grid());
  if (m.dim() >= 2) {
    SpMat d1 = d1_matrix(m.grid());
    Eigen::SparseMatrix<double> drift(m.size(), m.size());
    drift.reserve(Eigen::VectorXi::Constant(m.size(), 1));
    for (int i = 0; i < m.size(); ++i) drift.insert(i, i) = m.drift()[i];
    lap = (lap + drift * d1).eval();
  }
  return lap;
}

ArrayXd elliptic_residual(const WarpedManifold& m, double p, double lambda, const RadialField& v) {
  const ArrayXd lap = m.laplacian_values(v.d1(), v.d2());
  return -lap + lambda / (p - 2.0) * (v.values() - v.values().pow(p - 1.0));
}

void check_p_lambda(const WarpedManifold& m, double p, double lambda) {
  if (p <= 1.0 || p == 2.0 || p >= two_star(m.dim()))
    throw std::invalid_argument("elliptic solver needs p in (1,2) or (2,2*)");
  if (lambda <= 0.0) throw std::invalid_argument("elliptic solver needs lambda > 0");
}

}  // namespace

EllipticSolution solve_elliptic(const WarpedManifold& m, double p, double lambda,
                                const RadialField& v0, double tol, int max_iters) {
  check_p_lambda(m, p, lambda);
  if (!v0.positive()) throw std::invalid_argument("initial guess must be positive");

  const int n = m.size();
  const SpMat lap = laplacian_matrix(m);

  RadialField v = v0;
  ArrayXd res = elliptic_residual(m, p, lambda, v);
  double res_norm = res.abs().maxCoeff();
  int it = 0;
  for (; it < max_iters && res_norm >= tol; ++it) {
    const ArrayXd diag = lambda / (p - 2.0) * (1.0 - (p - 1.0) * v.values().pow(p - 2.0));
    SpMat jac = -lap;
    for (int i = 0; i < n; ++i) jac.coeffRef(i, i) += diag[i];
    Eigen::SparseLU<SpMat> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success) throw std::runtime_error("Newton linearization is singular");
    const Eigen::VectorXd delta = lu.solve(-res.matrix());

    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      ArrayXd trial = v.values() + step * delta.array();
      if (trial.minCoeff() > 0.0) {
        RadialField tv(m.grid(), trial);
        const ArrayXd tres = elliptic_residual(m, p, lambda, tv);
        const double tnorm = tres.abs().maxCoeff();
        if (tnorm <= (1.0 - 1e-4 * step) * res_norm) {
          v = std::move(tv);
          res = tres;
          res_norm = tnorm;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) throw std::runtime_error("Newton line search failed (divergence or positivity loss)");
  }
  if (res_norm >= tol) throw std::runtime_error("Newton iteration did not converge");

  EllipticSolution sol;
  sol.lambda = lambda;
  sol.residual_norm = elliptic_residual(m, p, lambda, v).abs().maxCoeff();  // independent recheck
  sol.deviation = (v.values() - 1.0).abs().maxCoeff();
  sol.constant_branch = sol.deviation < kConstantBranchTol;
  sol.newton_iterations = it;
  sol.v = std::move(v);
  return sol;
}

ContinuationResult continuation(const WarpedManifold& m, double p, double lambda_from,
                                double lambda_to, int steps) {
  check_p_lambda(m, p, std::min(lambda_from, lambda_to));
  if (steps < 2) throw std::invalid_argument("continuation needs at least 2 steps");

  const EigenPair mode = lambda1_mode(m);
  const double l1 = mode.value;
  Eigen::VectorXd v1 = mode.vector;
  v1 /= v1.cwiseAbs().maxCoeff();

  std::vector<double> lambdas(steps);
  const double lo = std::min(lambda_from, lambda_to), hi = std::max(lambda_from, lambda_to);
  for (int i = 0; i < steps; ++i)
    lambdas[i] = lo + (hi - lo) * (steps == 1 ? 0.0 : double(i) / (steps - 1));

  ContinuationResult out;
  out.points.resize(steps);
  out.profiles.resize(steps);

  // below the bifurcation: the constant is the only located branch
  int first_above = steps;
  for (int i = 0; i < steps; ++i) {
    if (lambdas[i] > l1 + 1e-9) {
      first_above = i;
      break;
    }
    RadialField seed(m.grid(), (1.0 + 0.1 * v1.array()));
    EllipticSolution sol = solve_elliptic(m, p, lambdas[i], seed);
    out.points[i] = {lambdas[i], sol.deviation, sol.residual_norm, sol.constant_branch};
    out.profiles[i] = std::move(sol.v);
  }

  // seed the nonconstant branch just above lambda_1, then walk outward
  RadialField prev, prev2;
  double prev_lambda = 0.0, prev2_lambda = 0.0;
  for (int i = first_above; i < steps; ++i) {
    const double target = lambdas[i];
    RadialField guess;
    if (prev.size() == 0) {
      // pitchfork amplitude guess; try a few until a nonconstant solve sticks
      bool seeded = false;
      for (double amp : {0.05, 0.1, 0.2, 0.4, 0.6}) {
        RadialField seed(m.grid(), (1.0 + amp * v1.array()));
        try {
          EllipticSolution sol = solve_elliptic(m, p, target, seed);
          if (!sol.constant_branch) {
            out.points[i] = {target, sol.deviation, sol.residual_norm, false};
            out.profiles[i] = sol.v;
            prev = std::move(sol.v);
            prev_lambda = target;
            seeded = true;
            break;
          }
        } catch (const std::runtime_error&) {
        }
      }
      if (!seeded) {
        // no nonconstant solution located; fall back to the constant branch
        RadialField seed(m.grid(), (1.0 + 0.1 * v1.array()));
        EllipticSolution sol = solve_elliptic(m, p, target, seed);
        out.points[i] = {target, sol.deviation, sol.residual_norm, sol.constant_branch};
        out.profiles[i] = std::move(sol.v);
      }
      continue;
    }

    // secant prediction from the last two branch points
    ArrayXd predicted = prev.values();
    if (prev2.size() > 0 && prev_lambda != prev2_lambda) {
      const double w = (target - prev_lambda) / (prev_lambda - prev2_lambda);
      predicted = prev.values() + w * (prev.values() - prev2.values());
    }
    predicted = predicted.max(1e-8);

    bool corrected = false;
    double lam = target;
    for (int halving = 0; halving < 6 && !corrected; ++halving) {
      try {
        EllipticSolution sol = solve_elliptic(m, p, lam, RadialField(m.grid(), predicted));
        if (lam == target) {
          out.points[i] = {target, sol.deviation, sol.residual_norm, sol.constant_branch};
          out.profiles[i] = sol.v;
          prev2 = std::move(prev);
          prev2_lambda = prev_lambda;
          prev = std::move(sol.v);
          prev_lambda = target;
          corrected = true;
        } else {
          // intermediate solve to shorten the secant leap
          prev2 = std::move(prev);
          prev2_lambda = prev_lambda;
          prev = std::move(sol.v);
          prev_lambda = lam;
          predicted = prev.values();
          lam = target;
        }
      } catch (const std::runtime_error&) {
        lam = 0.5 * (prev_lambda + lam);  // halve the step toward the last good point
        predicted = prev.values();
      }
    }
    if (!corrected) {
      out.complete = false;
      out.note = "continuation aborted near lambda = " + std::to_string(target) +
                 " (fold or Newton failure)";
      out.points.resize(i);
      out.profiles.resize(i);
      break;
    }
  }
  return out;
}

ProbeResult rigidity_probe(const WarpedManifold& m, double p, double lambda, int starts,
                           unsigned seed) {
  check_p_lambda(m, p, lambda);
  const int n_modes = 5;
  const std::vector<EigenPair> modes = low_eigenmodes(m, n_modes);

  std::vector<ArrayXd> seeds;
  for (int k = 0; k < n_modes && static_cast<int>(seeds.size()) < starts; ++k) {
    Eigen::VectorXd v = modes[k].vector;
    v /= v.cwiseAbs().maxCoeff();
    for (double amp : {0.1, 0.3}) {
      for (double sign : {1.0, -1.0}) {
        if (static_cast<int>(seeds.size()) >= starts) break;
        seeds.push_back(1.0 + sign * amp * v.array());
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (static_cast<int>(seeds.size()) < starts) {
    ArrayXd f = ArrayXd::Zero(m.size());
    for (int k = 0; k < n_modes; ++k) {
      Eigen::VectorXd v = modes[k].vector;
      v /= v.cwiseAbs().maxCoeff();
      f += (0.15 / (k + 1)) * gauss(rng) * v.array();
    }
    seeds.push_back((1.0 + f).max(0.2));
  }

  ProbeResult out;
  for (const ArrayXd& s : seeds) {
    try {
      EllipticSolution sol = solve_elliptic(m, p, lambda, RadialField(m.grid(), s));
      out.max_deviation = std::max(out.max_deviation, sol.deviation);
      if (!sol.constant_branch) ++out.nonconstant_count;
      out.solutions.push_back(std::move(sol));
    } catch (const std::runtime_error&) {
      ++out.failed_starts;
    }
  }
  out.all_constant = out.nonconstant_count == 0 && out.failed_starts == 0;
  return out;
}

double quotient_q(const WarpedManifold& m, double p, const RadialField& v) {
  if (p == 2.0) throw std::invalid_argument("quotient undefined at p = 2");
  const double num = (p - 2.0) * m.integrate(v.d1().square());
  const double lp2 = std::pow(m.integrate(v.values().abs().pow(p)), 2.0 / p);
  const double l22 = m.integrate(v.values().square());
  const double den = lp2 - l22;
  if (std::abs(den) < 1e-14 * std::max({lp2, l22, 1e-300}))
    throw std::invalid_argument("quotient undefined for constant fields");
  return num / den;
}

bool general_f_check(const Nonlinearity& f, double p, double lo, double hi, int samples) {
  if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("need 0 < lo < hi");
  if (samples < 2) throw std::invalid_argument("need at least 2 samples");
  if (std::abs(f.f(0.0)) > 1e-12) return false;  // hypothesis f(0) = 0

  auto expr = [&](double v) { return (f.df(v) - (p - 1.0) * f.f(v) / v) / (p - 2.0); };
  const double tol = 1e-12;

  double prev_v = lo, prev_e = expr(lo);
  if (prev_e > tol) return false;
  for (int i = 1; i < samples; ++i) {
    const double v = lo + (hi - lo) * double(i) / (samples - 1);
    const double e = expr(v);
    if (e > tol) return false;
    // refine where the expression approaches zero from below or wiggles
    if (e > -tol || prev_e > -tol || (e - prev_e) * (prev_e) < 0.0) {
      for (int j = 1; j < 64; ++j) {
        const double vv = prev_v + (v - prev_v) * double(j) / 64.0;
        if (expr(vv) > tol) return false;
      }
    }
    prev_v = v;
    prev_e = e;
  }
  return true;
}

RemainderResult remainder(const WarpedManifold& m, double p, const RadialField& v,
                          double lambda_star_q_value, double t_max, const FlowControls& controls,
                          const Nonlinearity* general) {
  if (!v.positive()) throw std::invalid_argument("remainder needs a positive field");
  const int d = m.dim();
  if (d < 2) throw std::invalid_argument("remainder integrand needs d >= 2");

  ParameterSet params = make_flow_parameters(d, p, lambda_star_q_value);
  const double theta = params.theta;
  const double c_coef = q_coefficient(params);
  const double cr = theta * d / (d - 1.0);

  RadialField u0(m.grid(), v.values().pow(1.0 / params.beta));

  // trapezoid accumulators over every accepted step
  double t_prev = 0.0;
  double flow_integrand_prev = 0.0;
  double nl_integrand_prev = 0.0;
  double flow_integral = 0.0;
  double nl_integral = 0.0;
  bool first = true;

  auto integrands = [&](const ArrayXd& psi, double& flow_part, double& nl_part) {
    const RadialField u(m.grid(), psi.exp());
    const ArrayXd lap = m.laplacian_values(u.d1(), u.d2());
    const double dirichlet = m.integrate(u.d1().square());
    flow_part = (1.0 - theta) * m.integrate(lap.square()) +
                cr * (m.integrate(m.q_norm_sq(u, c_coef)) + m.integrate(m.ricci_quadratic(u))) -
                lambda_star_q_value * dirichlet;
    if (general) {
      const ArrayXd vv = (params.beta * psi).exp();
      ArrayXd big_f(vv.size()), term(vv.size());
      const double bk1 = params.beta + params.kappa - 1.0;
      for (Eigen::Index i = 0; i < vv.size(); ++i) {
        big_f[i] = general->antiderivative(vv[i]);
        term[i] = bk1 * general->f(vv[i]) / vv[i] - params.beta * general->df(vv[i]);
      }
      const double pf = m.integrate(p * big_f);
      nl_part = std::pow(pf, 2.0 / p - 1.0) * m.integrate(term * u.d1().square());
    } else {
      // power law: the kappa identity cancels the integrand pointwise
      const ArrayXd vv = (params.beta * psi).exp();
      ArrayXd term(vv.size());
      const double bk1 = params.beta + params.kappa - 1.0;
      for (Eigen::Index i = 0; i < vv.size(); ++i)
        term[i] = bk1 * std::pow(vv[i], p - 2.0) - params.beta * (p - 1.0) * std::pow(vv[i], p - 2.0);
      const double mass = m.integrate(vv.pow(p));
      nl_part = std::pow(mass, 2.0 / p - 1.0) * m.integrate(term * u.d1().square());
    }
  };

  FlowObserver observer = [&](const FlowStepView& view) {
    double flow_part, nl_part;
    integrands(view.psi, flow_part, nl_part);
    if (first) {
      // account for the leg from t = 0 to the first accepted step
      flow_integral += 0.5 * (flow_integrand_prev + flow_part) * view.t;
      nl_integral += 0.5 * (nl_integrand_prev + nl_part) * view.t;
      first = false;
    } else {
      flow_integral += 0.5 * (flow_integrand_prev + flow_part) * (view.t - t_prev);
      nl_integral += 0.5 * (nl_integrand_prev + nl_part) * (view.t - t_prev);
    }
    t_prev = view.t;
    flow_integrand_prev = flow_part;
    nl_integrand_prev = nl_part;
  };

  // integrand at t = 0 for the first trapezoid leg
  integrands(u0.values().log(), flow_integrand_prev, nl_integrand_prev);

  FlowControls fc = controls;
  fc.sample_interval = std::max(controls.sample_interval, 1.0);  // observer does the work
  fc.with_identity_residuals = false;
  FlowTrace trace = run_flow(m, params, u0, t_max, fc, general, observer);
  if (trace.status != FlowStatus::Converged)
    throw std::runtime_error("remainder needs a converged flow run (got " +
                             std::string(to_string(trace.status)) + ")");

  RemainderResult out;
  out.status = trace.status;
  out.flow_integral = params.beta * params.beta * flow_integral;
  out.nonlinearity_integral = lambda_star_q_value / (p - 2.0) * nl_integral;
  out.value = out.flow_integral + out.nonlinearity_integral;

  // corollary left-hand side at the initial datum
  double pf0;
  if (general) {
    ArrayXd big_f(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) big_f[i] = general->antiderivative(v[i]);
    pf0 = m.integrate(p * big_f);
  } else {
    pf0 = m.integrate(v.values().pow(p));
  }
  out.corollary_lhs = m.integrate(v.d1().square()) -
                      lambda_star_q_value / (p - 2.0) *
                          (std::pow(pf0, 2.0 / p) - m.integrate(v.values().square()));
  out.slack = out.corollary_lhs - 2.0 * out.value;
  return out;
}

void write_branch_csv(std::ostream& os, const ContinuationResult& branch) {
  os << "lambda,deviation,residual,branch\n";
  char buf[256];
  for (const BranchPoint& b : branch.points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%s\n", b.lambda, b.deviation, b.residual,
                  b.constant_branch ? "constant" : "nonconstant");
    os << buf;
  }
}

void write_profile(std::ostream& os, const WarpedManifold& m, const RadialField& v) {
  os << "theta,v\n";
  char buf[128];
  for (int j = 0; j < m.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", m.grid().nodes[j], v[j]);
    os << buf;
  }
}

}  // namespace warpflow
