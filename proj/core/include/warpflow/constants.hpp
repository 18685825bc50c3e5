#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "warpflow/manifold.hpp"
#include "warpflow/optimize.hpp"

namespace warpflow {

struct ConstantEntry {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool applicable = false;
  std::string note;
};

// Every scalar the chain of estimates produces for one (manifold, p).
struct ConstantsReport {
  std::string manifold;
  int d = 0;
  double p = 0.0;
  int grid = 0;
  ConstantEntry lambda1;
  ConstantEntry rho;
  ConstantEntry lv_threshold;
  ConstantEntry lambda_star;          // linear pencil constant
  ConstantEntry lambda_star_q;        // improved constant with the Q tensor
  ConstantEntry rho_star;
  ConstantEntry log_sobolev_lambda2;
  ConstantEntry best_lambda_estimate;
  ConstantEntry spectral_lower_bound;
  std::vector<std::string> diagnostics;
};

class ChainViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChainOptions {
  bool with_lambda_star_q = true;
  bool with_rho_star = true;
  bool with_best_lambda = true;
  bool with_log_sobolev = true;
  bool richardson = true;  // re-run pencils at 2N and extrapolate into the notes
};

// (1 - theta) lambda_1 + theta d rho/(d-1) at the canonical theta.
double lv_threshold(const WarpedManifold& m, double p);

// Assemble the full report and assert
//   lv_threshold <= lambda_star <= lambda_star_q <= lambda1
// within combined solver tolerances; throws ChainViolation beyond them.
ConstantsReport estimates_chain(const WarpedManifold& m, double p,
                                const OptimizerControls& oc = {}, const ChainOptions& opts = {});

// Flat key=value block, one entry per line plus .note lines.
void write_report_kv(std::ostream& os, const ConstantsReport& r);

// CSV row; documented column order.
std::string report_csv_header();
std::string report_csv_row(const ConstantsReport& r);

}  // namespace warpflow
