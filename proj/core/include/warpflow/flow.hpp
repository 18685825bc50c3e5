#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include "warpflow/manifold.hpp"
#include "warpflow/nonlinearity.hpp"
#include "warpflow/parameters.hpp"

namespace warpflow {

enum class FlowStatus { Converged, MaxTimeReached, PositivityFailure, StepFailure };

const char* to_string(FlowStatus s);

struct FlowControls {
  double dt_init = 1e-8;
  double dt_min = 1e-14;
  double step_tol = 1e-8;          // embedded local error target (relative)
  double mass_step_tol = 1e-11;    // per-step relative drift of int u^{beta p}
  double convergence_tol = 1e-10;  // terminate when int |grad u|^2 falls below
  double sample_interval = 0.1;    // 0 = sample every accepted step
  double micro_step = 1e-6;        // dF/dt finite-difference probe
  bool with_identity_residuals = true;
  long max_steps = 200'000'000;
};

struct FlowSample {
  double t = 0.0;
  double functional = 0.0;  // F (or the general-nonlinearity functional)
  double mass = 0.0;        // int u^{beta p}
  double l2beta = 0.0;      // int u^{2 beta}
  double dirichlet = 0.0;   // int |grad u|^2
  double min_u = 0.0;
  double dfdt_residual = 0.0;
  double g_value = 0.0;  // integral G; for d = 1 this records int |u''|^2
};

struct RejectionEvent {
  double t = 0.0;
  double dt = 0.0;
  char reason = 'e';  // 'e' local error, 'm' mass drift, 'n' non-finite state
};

// Per-accepted-step view for observers (time quadratures, diagnostics).
struct FlowStepView {
  double t;
  double dt;
  const Eigen::ArrayXd& psi;  // log u
};
using FlowObserver = std::function<void(const FlowStepView&)>;

struct FlowTrace {
  std::vector<FlowSample> samples;
  std::vector<RejectionEvent> rejections;
  FlowStatus status = FlowStatus::MaxTimeReached;
  RadialField final_state;
  double mass_drift_max = 0.0;  // max_t |mass(t)/mass(0) - 1|
  double general_sign_min = 0.0;
  long steps_accepted = 0;
  long steps_rejected = 0;
};

// F[u] = int |grad(u^beta)|^2 + lambda/(p-2) [ int u^{2 beta} - (int u^{beta p})^{2/p} ].
double functional_f(const WarpedManifold& m, const ParameterSet& params, const RadialField& u);

// Pointwise u^{2-2 beta} (Lap u + kappa |grad u|^2 / u).
RadialField rhs_flow(const WarpedManifold& m, const ParameterSet& params, const RadialField& u);

double mass_beta_p(const WarpedManifold& m, const RadialField& u, double beta, double p);

// Integrate the flow from u0 in psi = log u with an embedded 2(3) pair,
// PI step control, and per-step mass/positivity guards. When `general` is
// set, the monitored functional is the general-nonlinearity one and
// general_sign_min tracks the sign certificate of d/dt int F(v).
FlowTrace run_flow(const WarpedManifold& m, const ParameterSet& params, const RadialField& u0,
                   double t_max, const FlowControls& controls,
                   const Nonlinearity* general = nullptr, const FlowObserver& observer = {});

// Centered finite-difference dF/dt along the flow (two integrator
// micro-steps) minus the closed-form derivative identity.
double dfdt_identity_residual(const WarpedManifold& m, const ParameterSet& params,
                              const RadialField& u, double micro_step = 1e-6);

// (1/2) d/dt int u^{2 beta} - beta^2 (p-2) int |grad u|^2, same probe.
double l2_identity_residual(const WarpedManifold& m, const ParameterSet& params,
                            const RadialField& u, double micro_step = 1e-6);

// Both routes through the completed-square decomposition of G.
struct GDecomposition {
  double g_value = 0.0;          // direct integral G[u]
  double q_integral = 0.0;       // int ||Q^theta u||^2
  double ricci_integral = 0.0;   // int Ric(grad u, grad u)
  double mu_times_quartic = 0.0; // mu int |grad u|^4/u^2
  double rhs_total = 0.0;
  double mismatch = 0.0;         // g_value - rhs_total
};
GDecomposition g_decomposition(const WarpedManifold& m, const ParameterSet& params,
                               const RadialField& u,
                               double check_tol = std::numeric_limits<double>::infinity());

// General-nonlinearity functional and the sign certificate integral.
double general_flow_functional(const WarpedManifold& m, const ParameterSet& params,
                               const Nonlinearity& f, const RadialField& u);
double general_sign_integral(const WarpedManifold& m, const ParameterSet& params,
                             const Nonlinearity& f, const RadialField& u);

// CSV with one row per sample; 17 significant digits.
void write_flow_csv(std::ostream& os, const FlowTrace& trace);

}  // namespace warpflow
