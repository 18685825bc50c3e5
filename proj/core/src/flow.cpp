#include "warpflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace warpflow {

namespace {

using Eigen::ArrayXd;

void require_flow_params(const ParameterSet& params) {
  if (!params.flow_compatible ||
      std::abs(params.kappa - (1.0 + params.beta * (params.p - 2.0))) > 1e-12)
    throw std::invalid_argument("parameters are not flow-compatible (kappa relation)");
}

void require_positive(const RadialField& u) {
  if (!u.positive()) throw std::invalid_argument("flow operations need a positive field");
}

// All per-state work of the integrator: RHS in psi = log u, quadratures,
// and the monitored functional.
struct FlowEngine {
  const WarpedManifold& m;
  ParameterSet params;
  const Nonlinearity* general = nullptr;
  double exp_coef;  // 2 - 2 beta
  double kp1;       // 1 + kappa

  FlowEngine(const WarpedManifold& man, const ParameterSet& ps, const Nonlinearity* gen)
      : m(man), params(ps), general(gen), exp_coef(2.0 - 2.0 * ps.beta), kp1(1.0 + ps.kappa) {
    require_flow_params(ps);
  }

  ArrayXd rhs(const ArrayXd& psi) const {
    const Grid& g = m.grid();
    const ArrayXd dpsi = d1_apply(g, psi);
    const ArrayXd ddpsi = d2_apply(g, psi);
    if (m.dim() == 1) return (exp_coef * psi).exp() * (ddpsi + kp1 * dpsi.square());
    return (exp_coef * psi).exp() * (ddpsi + m.drift() * dpsi + kp1 * dpsi.square());
  }

  double mass(const ArrayXd& psi) const { return m.integrate((params.beta * params.p * psi).exp()); }

  struct Quads {
    double mass, l2beta, dirichlet, functional, min_u, g_value, general_sign;
  };

  Quads quads(const ArrayXd& psi) const {
    const Grid& g = m.grid();
    Quads q{};
    const ArrayXd u = psi.exp();
    const RadialField uf(g, u);
    q.min_u = uf.min();
    q.mass = m.integrate((params.beta * params.p * psi).exp());
    q.l2beta = m.integrate((2.0 * params.beta * psi).exp());
    q.dirichlet = m.integrate(uf.d1().square());

    const ArrayXd v = (params.beta * psi).exp();
    const ArrayXd dv = d1_apply(g, v);
    const double grad_v = m.integrate(dv.square());
    if (general) {
      ArrayXd big_f(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) big_f[i] = general->antiderivative(v[i]);
      const double pf = m.integrate(params.p * big_f);
      q.functional = grad_v - params.lambda / (params.p - 2.0) *
                                   (std::pow(pf, 2.0 / params.p) - q.l2beta);
      ArrayXd sign_term(v.size());
      const double bk1 = params.beta + params.kappa - 1.0;
      for (Eigen::Index i = 0; i < v.size(); ++i)
        sign_term[i] = bk1 * general->f(v[i]) / v[i] - params.beta * general->df(v[i]);
      q.general_sign = params.beta / (params.p - 2.0) *
                       m.integrate(sign_term * uf.d1().square());
    } else {
      q.functional = grad_v + params.lambda / (params.p - 2.0) *
                                  (q.l2beta - std::pow(q.mass, 2.0 / params.p));
      q.general_sign = 0.0;
    }

    if (m.dim() >= 2) {
      const ArrayXd lap = m.laplacian_values(uf.d1(), uf.d2());
      const ArrayXd w = uf.d1().square() / u;
      q.g_value = m.integrate(params.theta * lap.square() +
                              (params.kappa + params.beta - 1.0) * lap * w +
                              params.kappa * (params.beta - 1.0) * w.square());
    } else {
      q.g_value = m.integrate(uf.d2().square());
    }
    return q;
  }

  // One Dormand-Prince 5(4) step; k1 must hold rhs(psi). FSAL: on acceptance
  // the last stage is rhs at the new state.
  ArrayXd step(const ArrayXd& psi, const ArrayXd& k1, double dt, ArrayXd& k_last,
               ArrayXd& err) const {
    const ArrayXd k2 = rhs(psi + dt * (1.0 / 5.0) * k1);
    const ArrayXd k3 = rhs(psi + dt * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    const ArrayXd k4 = rhs(psi + dt * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
    const ArrayXd k5 = rhs(psi + dt * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 +
                                       64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4));
    const ArrayXd k6 = rhs(psi + dt * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 +
                                       46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4 -
                                       5103.0 / 18656.0 * k5));
    ArrayXd next = psi + dt * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 -
                               2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6);
    k_last = rhs(next);
    err = dt * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4 -
                17253.0 / 339200.0 * k5 + 22.0 / 525.0 * k6 - 1.0 / 40.0 * k_last);
    return next;
  }
};

double error_norm(const ArrayXd& err, const ArrayXd& y0, const ArrayXd& y1, double tol) {
  const ArrayXd scale = tol + tol * y0.abs().max(y1.abs());
  return std::sqrt((err / scale).square().mean());
}

}  // namespace

const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Converged: return "converged";
    case FlowStatus::MaxTimeReached: return "maxTimeReached";
    case FlowStatus::PositivityFailure: return "positivityFailure";
    case FlowStatus::StepFailure: return "stepFailure";
  }
  return "unknown";
}

double functional_f(const WarpedManifold& m, const ParameterSet& params, const RadialField& u) {
  require_flow_params(params);
  require_positive(u);
  const RadialField v(m.grid(), u.values().pow(params.beta));
  const double grad_v = m.integrate(v.d1().square());
  const double l2b = m.integrate(u.values().pow(2.0 * params.beta));
  const double mass = m.integrate(u.values().pow(params.beta * params.p));
  return grad_v + params.lambda / (params.p - 2.0) * (l2b - std::pow(mass, 2.0 / params.p));
}

RadialField rhs_flow(const WarpedManifold& m, const ParameterSet& params, const RadialField& u) {
  require_flow_params(params);
  require_positive(u);
  const ArrayXd lap = m.laplacian_values(u.d1(), u.d2());
  const ArrayXd rhs = u.values().pow(2.0 - 2.0 * params.beta) *
                      (lap + params.kappa * u.d1().square() / u.values());
  return RadialField(m.grid(), rhs);
}

double mass_beta_p(const WarpedManifold& m, const RadialField& u, double beta, double p) {
  require_positive(u);
  return m.integrate(u.values().pow(beta * p));
}

FlowTrace run_flow(const WarpedManifold& m, const ParameterSet& params, const RadialField& u0,
                   double t_max, const FlowControls& controls, const Nonlinearity* general,
                   const FlowObserver& observer) {
  require_positive(u0);
  FlowEngine engine(m, params, general);
  FlowTrace trace;

  ArrayXd psi = u0.values().log();
  double t = 0.0;
  double dt = controls.dt_init;
  ArrayXd k1 = engine.rhs(psi);
  ArrayXd k4(psi.size()), err(psi.size());

  const double mass0 = engine.mass(psi);
  double mass_prev = mass0;
  trace.general_sign_min = std::numeric_limits<double>::quiet_NaN();

  auto sample = [&](double time) {
    FlowEngine::Quads q = engine.quads(psi);
    FlowSample s;
    s.t = time;
    s.functional = q.functional;
    s.mass = q.mass;
    s.l2beta = q.l2beta;
    s.dirichlet = q.dirichlet;
    s.min_u = q.min_u;
    s.g_value = q.g_value;
    s.dfdt_residual =
        controls.with_identity_residuals && !general
            ? dfdt_identity_residual(m, params, RadialField(m.grid(), psi.exp()),
                                     controls.micro_step)
            : 0.0;
    trace.samples.push_back(s);
    if (general) {
      trace.general_sign_min = std::isnan(trace.general_sign_min)
                                   ? q.general_sign
                                   : std::min(trace.general_sign_min, q.general_sign);
    }
    return q;
  };

  FlowEngine::Quads q0 = sample(0.0);
  if (q0.dirichlet < controls.convergence_tol) {
    trace.status = FlowStatus::Converged;
    trace.final_state = RadialField(m.grid(), psi.exp());
    return trace;
  }

  double next_sample = controls.sample_interval > 0 ? controls.sample_interval : 0.0;
  double err_prev = 1.0;
  char last_reject = 'e';
  bool done = false;

  while (!done) {
    if (trace.steps_accepted + trace.steps_rejected >= controls.max_steps) {
      trace.status = FlowStatus::StepFailure;
      break;
    }
    if (dt < controls.dt_min) {
      trace.status = last_reject == 'n' ? FlowStatus::PositivityFailure : FlowStatus::StepFailure;
      break;
    }
    const double dt_eff = std::min(dt, t_max - t);
    ArrayXd next = engine.step(psi, k1, dt_eff, k4, err);

    if (!next.allFinite() || !k4.allFinite()) {
      trace.rejections.push_back({t, dt_eff, 'n'});
      ++trace.steps_rejected;
      last_reject = 'n';
      dt = 0.25 * dt_eff;
      continue;
    }
    const double en = error_norm(err, psi, next, controls.step_tol);
    if (en > 1.0) {
      trace.rejections.push_back({t, dt_eff, 'e'});
      ++trace.steps_rejected;
      last_reject = 'e';
      dt = dt_eff * std::clamp(0.9 * std::pow(en, -1.0 / 5.0), 0.1, 0.7);
      continue;
    }
    const double mass_new = engine.mass(next);
    if (std::abs(mass_new - mass_prev) > controls.mass_step_tol * mass0) {
      trace.rejections.push_back({t, dt_eff, 'm'});
      ++trace.steps_rejected;
      last_reject = 'm';
      dt = 0.5 * dt_eff;
      continue;
    }

    // accepted
    t += dt_eff;
    psi.swap(next);
    k1.swap(k4);
    mass_prev = mass_new;
    trace.mass_drift_max = std::max(trace.mass_drift_max, std::abs(mass_new / mass0 - 1.0));
    ++trace.steps_accepted;
    if (observer) observer(FlowStepView{t, dt_eff, psi});

    const double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.7 / 5.0) *
                       std::pow(std::max(err_prev, 1e-10), 0.4 / 5.0);
    dt = dt_eff * std::clamp(fac, 0.2, 1.4);
    err_prev = std::max(en, 1e-10);

    const bool sample_due = controls.sample_interval <= 0.0 || t >= next_sample;
    double dirichlet_now = -1.0;
    if (sample_due) {
      const FlowEngine::Quads q = sample(t);
      dirichlet_now = q.dirichlet;
      if (controls.sample_interval > 0.0)
        while (next_sample <= t) next_sample += controls.sample_interval;
    } else {
      // cheap convergence probe without a full sample
      const ArrayXd u = psi.exp();
      dirichlet_now = m.integrate(d1_apply(m.grid(), u).square());
    }
    if (dirichlet_now < controls.convergence_tol) {
      trace.status = FlowStatus::Converged;
      done = true;
    } else if (t >= t_max) {
      trace.status = FlowStatus::MaxTimeReached;
      done = true;
    }
  }

  if (trace.samples.empty() || trace.samples.back().t < t) sample(t);
  trace.final_state = RadialField(m.grid(), psi.exp());
  return trace;
}

namespace {

// One fixed-size integrator step in each time direction around u.
void micro_probe(const FlowEngine& engine, const ArrayXd& psi, double delta, ArrayXd& plus,
                 ArrayXd& minus) {
  ArrayXd k1 = engine.rhs(psi);
  ArrayXd k4(psi.size()), err(psi.size());
  plus = engine.step(psi, k1, delta, k4, err);
  minus = engine.step(psi, k1, -delta, k4, err);
}

}  // namespace

double dfdt_identity_residual(const WarpedManifold& m, const ParameterSet& params,
                              const RadialField& u, double micro_step) {
  require_positive(u);
  FlowEngine engine(m, params, nullptr);
  const ArrayXd psi = u.values().log();
  ArrayXd plus, minus;
  micro_probe(engine, psi, micro_step, plus, minus);
  const double fd =
      (engine.quads(plus).functional - engine.quads(minus).functional) / (2.0 * micro_step);

  const ArrayXd lap = m.laplacian_values(u.d1(), u.d2());
  const ArrayXd w = u.d1().square() / u.values();
  const double integral = m.integrate(lap.square() +
                                      (params.kappa + params.beta - 1.0) * lap * w +
                                      params.kappa * (params.beta - 1.0) * w.square());
  const double dirichlet = m.integrate(u.d1().square());
  const double rhs = 2.0 * params.beta * params.beta * (params.lambda * dirichlet - integral);
  return fd - rhs;
}

double l2_identity_residual(const WarpedManifold& m, const ParameterSet& params,
                            const RadialField& u, double micro_step) {
  require_positive(u);
  FlowEngine engine(m, params, nullptr);
  const ArrayXd psi = u.values().log();
  ArrayXd plus, minus;
  micro_probe(engine, psi, micro_step, plus, minus);
  const double tb = 2.0 * params.beta;
  const double fd = (m.integrate((tb * plus).exp()) - m.integrate((tb * minus).exp())) /
                    (2.0 * micro_step);
  const double dirichlet = m.integrate(u.d1().square());
  return 0.5 * fd - params.beta * params.beta * (params.p - 2.0) * dirichlet;
}

GDecomposition g_decomposition(const WarpedManifold& m, const ParameterSet& params,
                               const RadialField& u, double check_tol) {
  require_flow_params(params);
  require_positive(u);
  if (m.dim() < 2) throw std::invalid_argument("G decomposition needs d >= 2");

  const int d = m.dim();
  const ArrayXd lap = m.laplacian_values(u.d1(), u.d2());
  const ArrayXd w = u.d1().square() / u.values();

  GDecomposition out;
  out.g_value = m.integrate(params.theta * lap.square() +
                            (params.kappa + params.beta - 1.0) * lap * w +
                            params.kappa * (params.beta - 1.0) * w.square());
  out.q_integral = m.integrate(m.q_norm_sq(u, q_coefficient(params)));
  out.ricci_integral = m.integrate(m.ricci_quadratic(u));
  const double mu = mu_coefficient(params.beta, params.theta, params.p, d);
  out.mu_times_quartic = mu * m.integrate(w.square());
  out.rhs_total =
      params.theta * d / (d - 1.0) * (out.q_integral + out.ricci_integral) - out.mu_times_quartic;
  out.mismatch = out.g_value - out.rhs_total;

  const double scale = std::max({std::abs(out.g_value), std::abs(out.rhs_total), 1e-30});
  if (std::abs(out.mismatch) > check_tol * scale)
    throw std::runtime_error("G decomposition mismatch beyond tolerance: discretization bug signal");
  return out;
}

double general_flow_functional(const WarpedManifold& m, const ParameterSet& params,
                               const Nonlinearity& f, const RadialField& u) {
  require_flow_params(params);
  require_positive(u);
  const RadialField v(m.grid(), u.values().pow(params.beta));
  const double grad_v = m.integrate(v.d1().square());
  const double l2b = m.integrate(v.values().square());
  ArrayXd big_f(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) big_f[i] = f.antiderivative(v[i]);
  const double pf = m.integrate(params.p * big_f);
  return grad_v - params.lambda / (params.p - 2.0) * (std::pow(pf, 2.0 / params.p) - l2b);
}

double general_sign_integral(const WarpedManifold& m, const ParameterSet& params,
                             const Nonlinearity& f, const RadialField& u) {
  require_flow_params(params);
  require_positive(u);
  const ArrayXd v = u.values().pow(params.beta);
  ArrayXd term(v.size());
  const double bk1 = params.beta + params.kappa - 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    term[i] = bk1 * f.f(v[i]) / v[i] - params.beta * f.df(v[i]);
  return params.beta / (params.p - 2.0) * m.integrate(term * u.d1().square());
}

void write_flow_csv(std::ostream& os, const FlowTrace& trace) {
  os << "t,F,mass,l2beta,dirichlet,min_u,dFdt_residual,g_value\n";
  char buf[512];
  for (const FlowSample& s : trace.samples) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.functional, s.mass,
                  s.l2beta, s.dirichlet, s.min_u, s.dfdt_residual, s.g_value);
    os << buf;
  }
}

}  // namespace warpflow
