#pragma once

#include <cmath>
#include <numbers>

#include "panelsmc/errors.hpp"

namespace panelsmc {

inline constexpr double log_two_pi = 1.8378770664093454836;

// log N(x; mean, sd^2), sd > 0
inline double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * log_two_pi - std::log(sd) - 0.5 * z * z;
}

// Standard normal quantile (Acklam's rational approximation polished with one
// Halley step through erfc, accurate to ~1e-15).
double normal_quantile(double p);

// chi-square(1) quantile: the square of the normal quantile at (1+p)/2.
inline double chisq1_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must be in (0,1)");
  const double z = normal_quantile(0.5 * (1.0 + p));
  return z * z;
}

}  // namespace panelsmc
