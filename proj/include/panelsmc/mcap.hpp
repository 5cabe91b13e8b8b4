#pragma once

#include <span>
#include <string>
#include <vector>

#include "panelsmc/param.hpp"

namespace panelsmc {

// One evaluated profile point: full coefficient vector plus the replicated
// likelihood estimate at it.
struct ProfilePoint {
  ParamVector params;
  double loglik = 0.0;
  double loglik_se = 0.0;
};

struct McapOptions {
  double level = 0.95;
  double span = 0.75;           // fraction of points in each local fit
  std::size_t grid_size = 1000;
};

// Monte Carlo adjusted profile. The cutoff `delta` inflates the classical
// chi-square(1)/2 drop by the ratio of total (statistical + Monte Carlo)
// variance to statistical variance, so noisier profile evaluations give
// wider intervals.
struct McapResult {
  std::vector<double> grid;      // focal parameter evaluation grid
  std::vector<double> smoothed;  // smoothed profile log likelihood on the grid
  double mle = 0.0;              // argmax of the smoothed profile
  double se_stat = 0.0;          // from the local quadratic curvature
  double se_mc = 0.0;            // Monte Carlo error, on the parameter scale
  double se_total = 0.0;         // sqrt(se_stat^2 + se_mc^2)
  double delta = 0.0;            // cutoff below the smoothed maximum
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

// Smooths the (focal value, log likelihood) scatter by local quadratic
// regression with tricube weights over a `span` fraction of the points,
// evaluated on a uniform grid; fits a weighted quadratic around the grid
// argmax for the curvature and the Monte Carlo error of the maximizer; cuts
// the interval where the smoothed curve stays within `delta` of its maximum.
// Needs at least 5 distinct focal values. A non-concave local fit throws
// CurvatureError (try a wider span).
McapResult mcap(std::span<const double> focal_values, std::span<const double> logliks,
                const McapOptions& options = {});

McapResult mcap(std::span<const ProfilePoint> points, const std::string& focal,
                const McapOptions& options = {});

}  // namespace panelsmc
