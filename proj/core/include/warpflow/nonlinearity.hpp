#pragma once

#include <functional>

namespace warpflow {

// Increasing nonlinearity f with f(0) = 0, its derivative, and the
// antiderivative F(v) = int_0^v f. `p` is the effective exponent the
// rigidity machinery compares f against; for a sum of powers this is the
// largest one (only then does the admissibility inequality hold).
struct Nonlinearity {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> antiderivative;
  double p = 0.0;
};

// f(v) = v^{p-1}, F(v) = v^p / p.
Nonlinearity power_law_nonlinearity(double p);

// f(v) = v^{p-1} + v^{q-1} with q > p; effective exponent q.
Nonlinearity power_sum_nonlinearity(double p, double q);

}  // namespace warpflow
