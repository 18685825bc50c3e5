#include "warpflow/constants.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "warpflow/output.hpp"
#include "warpflow/parameters.hpp"
#include "warpflow/pencil.hpp"

namespace warpflow {

namespace {

std::string richardson_note(double coarse, double fine) {
  // 4th-order stencils: eliminate the leading error term between N and 2N
  const double extrapolated = (16.0 * fine - coarse) / 15.0;
  return "Richardson(N,2N) = " + g17(extrapolated);
}

}  // namespace

double lv_threshold(const WarpedManifold& m, double p) {
  if (m.dim() < 2) throw std::invalid_argument("lv_threshold needs d >= 2");
  const double theta = theta_choice(p, m.dim());
  const double l1 = lambda1(m);
  return (1.0 - theta) * l1 + theta * m.dim() * m.rho() / (m.dim() - 1.0);
}

ConstantsReport estimates_chain(const WarpedManifold& m, double p, const OptimizerControls& oc,
                                const ChainOptions& opts) {
  ConstantsReport r;
  r.manifold = m.spec().name;
  r.d = m.dim();
  r.p = p;
  r.grid = m.size();

  WarpedManifold fine = [&] {
    ProfileSpec s2 = m.spec();
    s2.grid_size = 2 * m.size();
    return WarpedManifold::build(s2);
  }();

  {
    const EigenPair pair = lambda1_mode(m);
    r.lambda1.value = pair.value;
    r.lambda1.applicable = true;
    r.lambda1.note = "pencil inverse iteration, N=" + std::to_string(m.size()) + ", " +
                     std::to_string(pair.iterations) + " iters";
    if (opts.richardson)
      r.lambda1.note += "; " + richardson_note(pair.value, lambda1(fine));
  }

  if (m.dim() == 1) {
    r.rho.note = r.lv_threshold.note = r.lambda_star.note = r.lambda_star_q.note =
        r.rho_star.note = r.log_sobolev_lambda2.note = r.best_lambda_estimate.note =
            r.spectral_lower_bound.note = "not applicable for d = 1";
    return r;
  }

  r.rho.value = m.rho();
  r.rho.applicable = true;
  r.rho.note = "exact closed-form curvature, grid minimum";

  r.lv_threshold.value = lv_threshold(m, p);
  r.lv_threshold.applicable = true;
  r.lv_threshold.note = "(1-theta) lambda1 + theta d rho/(d-1), theta = " +
                        g17(theta_choice(p, m.dim()));

  {
    const double ls = lambda_star(m, p);
    r.lambda_star.value = ls;
    r.lambda_star.applicable = true;
    r.lambda_star.note = "pencil inverse iteration, N=" + std::to_string(m.size());
    if (opts.richardson) r.lambda_star.note += "; " + richardson_note(ls, lambda_star(fine, p));
  }

  if (opts.with_lambda_star_q) {
    const OptimizerOutcome o = lambda_star_q(m, p, oc);
    r.lambda_star_q.value = o.value;
    r.lambda_star_q.applicable = true;
    r.lambda_star_q.note = o.note + "; upper bound of the radial infimum";
  }
  if (opts.with_rho_star) {
    const OptimizerOutcome o = rho_star(m, p, oc);
    r.rho_star.value = o.value;
    r.rho_star.applicable = true;
    r.rho_star.note = o.note;
  }
  if (opts.with_best_lambda) {
    const OptimizerOutcome o = best_lambda(m, p, oc);
    r.best_lambda_estimate.value = o.value;
    r.best_lambda_estimate.applicable = true;
    r.best_lambda_estimate.note = o.note;
  }
  if (opts.with_log_sobolev) {
    const OptimizerOutcome o = log_sobolev_lambda2(m, oc);
    r.log_sobolev_lambda2.value = o.value;
    r.log_sobolev_lambda2.applicable = true;
    r.log_sobolev_lambda2.note = o.note;
    if (p > 1.0 && p < 2.0) {
      r.spectral_lower_bound.value = spectral_bound(p, r.lambda1.value, o.value);
      r.spectral_lower_bound.applicable = true;
      r.spectral_lower_bound.note = "lambda1 (1-eta)/(1-eta^alpha), alpha = lambda1/Lambda(2)";
    } else {
      r.spectral_lower_bound.note = "defined for p in (1,2) only";
    }
  }

  // chain check within combined tolerances
  const double scale = std::max(1.0, std::abs(r.lambda1.value));
  const double pencil_tol = 1e-6 * scale;
  const double optimizer_tol = 1e-3 * scale;
  auto record = [&](const std::string& what, double lhs, double rhs, double tol) {
    const double margin = rhs - lhs;
    std::ostringstream os;
    os << what << ": margin = " << g17(margin) << " (tol " << g17(tol) << ")";
    r.diagnostics.push_back(os.str());
    if (margin < -tol)
      throw ChainViolation("estimates chain violated: " + os.str() +
                           " - discretization or optimizer bug");
  };
  record("lvThreshold <= lambdaStar", r.lv_threshold.value, r.lambda_star.value, pencil_tol);
  if (r.lambda_star_q.applicable) {
    record("lambdaStar <= LambdaStar", r.lambda_star.value, r.lambda_star_q.value, optimizer_tol);
    record("LambdaStar <= lambda1", r.lambda_star_q.value, r.lambda1.value, optimizer_tol);
  }
  if (r.rho_star.applicable && r.lambda_star_q.applicable) {
    const double theta = theta_choice(p, m.dim());
    record("LambdaStar >= (1-theta) lambda1 + theta rhoStar",
           (1.0 - theta) * r.lambda1.value + theta * r.rho_star.value, r.lambda_star_q.value,
           optimizer_tol);
  }
  return r;
}

namespace {

void kv_entry(std::ostream& os, const char* key, const ConstantEntry& e) {
  os << key << "=" << (e.applicable ? g17(e.value) : "n/a") << "\n";
  if (!e.note.empty()) os << key << ".note=" << e.note << "\n";
}

std::string csv_value(const ConstantEntry& e) { return e.applicable ? g17(e.value) : "nan"; }

}  // namespace

void write_report_kv(std::ostream& os, const ConstantsReport& r) {
  os << "manifold=" << r.manifold << "\n";
  os << "d=" << r.d << "\n";
  os << "p=" << g17(r.p) << "\n";
  os << "N=" << r.grid << "\n";
  kv_entry(os, "lambda1", r.lambda1);
  kv_entry(os, "rho", r.rho);
  kv_entry(os, "lvThreshold", r.lv_threshold);
  kv_entry(os, "lambdaStar", r.lambda_star);
  kv_entry(os, "LambdaStar", r.lambda_star_q);
  kv_entry(os, "rhoStar", r.rho_star);
  kv_entry(os, "logSobolevLambda2", r.log_sobolev_lambda2);
  kv_entry(os, "bestLambdaEstimate", r.best_lambda_estimate);
  kv_entry(os, "spectralLowerBound", r.spectral_lower_bound);
  for (const std::string& d : r.diagnostics) os << "diagnostic=" << d << "\n";
}

std::string report_csv_header() {
  return "manifold,d,p,N,lambda1,rho,lvThreshold,lambdaStar,LambdaStar,rhoStar,"
         "logSobolevLambda2,bestLambdaEstimate";
}

std::string report_csv_row(const ConstantsReport& r) {
  std::ostringstream os;
  os << r.manifold << "," << r.d << "," << g17(r.p) << "," << r.grid << ","
     << csv_value(r.lambda1) << "," << csv_value(r.rho) << "," << csv_value(r.lv_threshold) << ","
     << csv_value(r.lambda_star) << "," << csv_value(r.lambda_star_q) << ","
     << csv_value(r.rho_star) << "," << csv_value(r.log_sobolev_lambda2) << ","
     << csv_value(r.best_lambda_estimate);
  return os.str();
}

}  // namespace warpflow
