#include "warpflow/nonlinearity.hpp"

#include <cmath>
#include <stdexcept>

namespace warpflow {

Nonlinearity power_law_nonlinearity(double p) {
  if (p <= 1.0) throw std::invalid_argument("power law needs p > 1");
  Nonlinearity nl;
  nl.f = [p](double v) { return std::pow(v, p - 1.0); };
  nl.df = [p](double v) { return (p - 1.0) * std::pow(v, p - 2.0); };
  nl.antiderivative = [p](double v) { return std::pow(v, p) / p; };
  nl.p = p;
  return nl;
}

Nonlinearity power_sum_nonlinearity(double p, double q) {
  if (!(q > p && p > 1.0)) throw std::invalid_argument("power sum needs q > p > 1");
  Nonlinearity nl;
  nl.f = [p, q](double v) { return std::pow(v, p - 1.0) + std::pow(v, q - 1.0); };
  nl.df = [p, q](double v) {
    return (p - 1.0) * std::pow(v, p - 2.0) + (q - 1.0) * std::pow(v, q - 2.0);
  };
  nl.antiderivative = [p, q](double v) { return std::pow(v, p) / p + std::pow(v, q) / q; };
  nl.p = q;  // admissibility holds against the larger exponent
  return nl;
}

}  // namespace warpflow
