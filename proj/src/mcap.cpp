#include "panelsmc/mcap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "panelsmc/errors.hpp"
#include "panelsmc/stats.hpp"

namespace panelsmc {

namespace {

struct LocalFit {
  double beta0 = 0.0;  // fitted value at the centre
  double beta1 = 0.0;  // slope at the centre, original x scale
  double beta2 = 0.0;  // quadratic coefficient, original x scale
  double half_width = 0.0;  // bandwidth h of the window
  // scaled-basis coefficient covariance (WLS, classical sigma^2 (X'WX)^-1)
  double var_b1 = 0.0, var_b2 = 0.0, cov_b12 = 0.0;
  double scaled_b1 = 0.0, scaled_b2 = 0.0;
};

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 invert3(const Mat3& a) {
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  if (det == 0.0 || !std::isfinite(det))
    throw CurvatureError("singular local fit; widen the span or add profile points");
  Mat3 inv;
  inv[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
  inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
  inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
  inv[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
  inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
  inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
  inv[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
  inv[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
  inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
  return inv;
}

// Weighted quadratic fit around x0: a span-sized window of nearest points,
// tricube weights, basis (1, t, t^2) with t = (x - x0)/h.
LocalFit local_quadratic(std::span<const double> xs, std::span<const double> ys, double x0,
                         double span, bool with_vcov) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(xs[a] - x0) < std::fabs(xs[b] - x0);
  });

  std::size_t k = std::max<std::size_t>(
      4, static_cast<std::size_t>(std::ceil(span * static_cast<double>(n))));
  k = std::min(k, n);

  double h = 0.0;
  std::vector<double> weight(n, 0.0);
  std::size_t active = 0;
  while (true) {
    h = std::fabs(xs[order[k - 1]] - x0);
    if (h == 0.0) {
      if (k == n)
        throw CurvatureError("all profile points share one focal value");
      ++k;
      continue;
    }
    // tricube, strictly inside the bandwidth; widen slightly if the boundary
    // zeroes leave too few active points
    const double hh = h * (k == n ? 1.0000001 : 1.0);
    active = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::fabs(xs[i] - x0);
      if (d < hh) {
        const double q = 1.0 - (d / hh) * (d / hh) * (d / hh);
        weight[i] = q * q * q;
        if (weight[i] > 0.0) ++active;
      } else {
        weight[i] = 0.0;
      }
    }
    if (active >= 4 || k == n) break;
    ++k;
  }
  if (active < 4) throw CurvatureError("too few distinct focal values in the local window");

  Mat3 a{};
  std::array<double, 3> rhs{};
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weight[i];
    if (w == 0.0) continue;
    const double t = (xs[i] - x0) / h;
    const double basis[3] = {1.0, t, t * t};
    for (int p = 0; p < 3; ++p) {
      rhs[p] += w * basis[p] * ys[i];
      for (int q = 0; q <= p; ++q) a[p][q] += w * basis[p] * basis[q];
    }
  }
  a[0][1] = a[1][0];
  a[0][2] = a[2][0];
  a[1][2] = a[2][1];

  const Mat3 a_inv = invert3(a);
  std::array<double, 3> beta{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) beta[i] += a_inv[i][j] * rhs[j];

  LocalFit fit;
  fit.beta0 = beta[0];
  fit.beta1 = beta[1] / h;
  fit.beta2 = beta[2] / (h * h);
  fit.half_width = h;
  fit.scaled_b1 = beta[1];
  fit.scaled_b2 = beta[2];

  if (with_vcov) {
    // homoskedastic noise smoothed with kernel weights: residual variance is
    // unweighted, the coefficient covariance is the sandwich
    // sigma^2 (X'WX)^-1 (X'W^2X) (X'WX)^-1
    double rss = 0.0;
    double n_active = 0.0;
    Mat3 b{};
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weight[i];
      if (w == 0.0) continue;
      const double t = (xs[i] - x0) / h;
      const double fitted = beta[0] + beta[1] * t + beta[2] * t * t;
      rss += (ys[i] - fitted) * (ys[i] - fitted);
      n_active += 1.0;
      const double basis[3] = {1.0, t, t * t};
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q <= p; ++q) b[p][q] += w * w * basis[p] * basis[q];
    }
    b[0][1] = b[1][0];
    b[0][2] = b[2][0];
    b[1][2] = b[2][1];
    const double sigma2 = rss / std::max(n_active - 3.0, 1.0);
    Mat3 sandwich{};
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) {
        double acc = 0.0;
        for (int s = 0; s < 3; ++s)
          for (int t2 = 0; t2 < 3; ++t2) acc += a_inv[p][s] * b[s][t2] * a_inv[t2][q];
        sandwich[p][q] = sigma2 * acc;
      }
    fit.var_b1 = sandwich[1][1];
    fit.var_b2 = sandwich[2][2];
    fit.cov_b12 = sandwich[1][2];
  }
  return fit;
}

}  // namespace

McapResult mcap(std::span<const double> focal_values, std::span<const double> logliks,
                const McapOptions& options) {
  const std::size_t n = focal_values.size();
  if (n != logliks.size()) throw ShapeError("focal values and log likelihoods differ in length");
  if (!(options.level > 0.0 && options.level < 1.0))
    throw DomainError("confidence level must be in (0,1)");
  if (!(options.span > 0.0 && options.span <= 1.0)) throw DomainError("span must be in (0,1]");
  if (options.grid_size < 10) throw DomainError("grid_size must be at least 10");
  {
    std::vector<double> distinct(focal_values.begin(), focal_values.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 5) throw DomainError("need at least 5 distinct focal values");
  }
  for (double y : logliks)
    if (!std::isfinite(y)) throw DomainError("log likelihoods must be finite");

  // centring the log likelihoods keeps every downstream quantity invariant
  // to vertical shifts of the profile
  double y_ref = -std::numeric_limits<double>::infinity();
  for (double y : logliks) y_ref = std::max(y_ref, y);
  std::vector<double> yc(logliks.begin(), logliks.end());
  for (double& y : yc) y -= y_ref;

  const auto [lo_it, hi_it] = std::minmax_element(focal_values.begin(), focal_values.end());
  const double x_lo = *lo_it, x_hi = *hi_it;

  McapResult res;
  res.grid.resize(options.grid_size);
  res.smoothed.resize(options.grid_size);
  const double step = (x_hi - x_lo) / static_cast<double>(options.grid_size - 1);
  std::vector<double> centred(options.grid_size);
  for (std::size_t g = 0; g < options.grid_size; ++g) {
    res.grid[g] = x_lo + static_cast<double>(g) * step;
    centred[g] = local_quadratic(focal_values, yc, res.grid[g], options.span, false).beta0;
    res.smoothed[g] = centred[g] + y_ref;
  }

  std::size_t mle_idx = 0;
  for (std::size_t g = 1; g < options.grid_size; ++g)
    if (centred[g] > centred[mle_idx]) mle_idx = g;  // ties keep the smaller focal value
  res.mle = res.grid[mle_idx];

  const LocalFit fit = local_quadratic(focal_values, yc, res.mle, options.span, true);
  const double curvature = -fit.beta2;
  if (!(curvature > 0.0))
    throw CurvatureError("local fit around the maximizer is not concave; widen the span");
  res.se_stat = 1.0 / std::sqrt(2.0 * curvature);

  // Monte Carlo se of the maximizer location: delta method on
  // x* = x0 - b1 / (2 b2) through the WLS covariance of the local fit
  {
    const double h = fit.half_width;
    const double b1 = fit.scaled_b1, b2 = fit.scaled_b2;
    const double d1 = -h / (2.0 * b2);
    const double d2 = h * b1 / (2.0 * b2 * b2);
    const double var =
        d1 * d1 * fit.var_b1 + d2 * d2 * fit.var_b2 + 2.0 * d1 * d2 * fit.cov_b12;
    res.se_mc = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  res.se_total = std::sqrt(res.se_stat * res.se_stat + res.se_mc * res.se_mc);
  res.delta = 0.5 * chisq1_quantile(options.level) * (res.se_total * res.se_total) /
              (res.se_stat * res.se_stat);

  // connected grid interval around the maximizer, crossings interpolated
  const double threshold = centred[mle_idx] - res.delta;
  res.ci_lo = res.grid.front();
  for (std::size_t g = mle_idx; g-- > 0;) {
    if (centred[g] < threshold) {
      const double frac = (threshold - centred[g]) / (centred[g + 1] - centred[g]);
      res.ci_lo = res.grid[g] + frac * (res.grid[g + 1] - res.grid[g]);
      break;
    }
  }
  res.ci_hi = res.grid.back();
  for (std::size_t g = mle_idx + 1; g < options.grid_size; ++g) {
    if (centred[g] < threshold) {
      const double frac = (centred[g - 1] - threshold) / (centred[g - 1] - centred[g]);
      res.ci_hi = res.grid[g - 1] + frac * (res.grid[g] - res.grid[g - 1]);
      break;
    }
  }
  return res;
}

McapResult mcap(std::span<const ProfilePoint> points, const std::string& focal,
                const McapOptions& options) {
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& p : points) {
    if (p.params.contains(focal)) {
      xs.push_back(p.params.get(focal));
    } else {
      // unit-specific focal: every unit carries the same profiled value
      bool found = false;
      for (std::size_t i = 0; i < p.params.size(); ++i)
        if (split_param_key(p.params.name_at(i)).first == focal) {
          xs.push_back(p.params.value_at(i));
          found = true;
          break;
        }
      if (!found) throw NameError("profile points carry no parameter '" + focal + "'");
    }
    ys.push_back(p.loglik);
  }
  return mcap(xs, ys, options);
}

}  // namespace panelsmc
