#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace panelsmc {

struct SimplexOptions {
  std::size_t max_eval = 0;   // 0 -> 500 * dimension
  double rel_tol = 1e-8;      // relative spread of simplex function values
  double init_step = 0.1;     // initial simplex edge along each axis
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
  std::size_t n_eval = 0;
};

// Nelder-Mead minimization of f starting from x0.
SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> x0, const SimplexOptions& opts = {});

}  // namespace panelsmc
