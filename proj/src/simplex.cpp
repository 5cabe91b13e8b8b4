#include "panelsmc/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "panelsmc/errors.hpp"

namespace panelsmc {

SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> x0, const SimplexOptions& opts) {
  const std::size_t dim = x0.size();
  if (dim == 0) throw DomainError("nelder_mead needs at least one coordinate");
  const std::size_t max_eval = opts.max_eval ? opts.max_eval : 500 * dim;

  const double alpha = 1.0, gamma = 2.0, beta = 0.5, delta = 0.5;

  std::vector<std::vector<double>> xs(dim + 1, std::vector<double>(x0.begin(), x0.end()));
  for (std::size_t i = 0; i < dim; ++i) xs[i + 1][i] += opts.init_step;

  SimplexResult res;
  std::vector<double> fs(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) {
    fs[i] = f(xs[i]);
    ++res.n_eval;
  }

  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);

  while (res.n_eval < max_eval) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    const std::size_t best = order.front(), worst = order.back();
    const std::size_t second_worst = order[dim - 1];

    const double spread = 2.0 * std::fabs(fs[worst] - fs[best]) /
                          (std::fabs(fs[worst]) + std::fabs(fs[best]) + 1e-300);
    if (spread < opts.rel_tol) {
      res.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += xs[i][d];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    for (std::size_t d = 0; d < dim; ++d) xr[d] = centroid[d] + alpha * (centroid[d] - xs[worst][d]);
    const double fr = f(xr);
    ++res.n_eval;

    if (fr < fs[best]) {
      for (std::size_t d = 0; d < dim; ++d) xe[d] = centroid[d] + gamma * (xr[d] - centroid[d]);
      const double fe = f(xe);
      ++res.n_eval;
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
    } else if (fr < fs[second_worst]) {
      xs[worst] = xr;
      fs[worst] = fr;
    } else {
      // contraction: outside if the reflected point improved on the worst
      const bool outside = fr < fs[worst];
      const auto& towards = outside ? xr : xs[worst];
      for (std::size_t d = 0; d < dim; ++d) xc[d] = centroid[d] + beta * (towards[d] - centroid[d]);
      const double fc = f(xc);
      ++res.n_eval;
      if (fc < std::min(fr, fs[worst])) {
        xs[worst] = xc;
        fs[worst] = fc;
      } else {
        // shrink towards the best vertex
        for (std::size_t i = 0; i <= dim; ++i) {
          if (i == best) continue;
          for (std::size_t d = 0; d < dim; ++d)
            xs[i][d] = xs[best][d] + delta * (xs[i][d] - xs[best][d]);
          fs[i] = f(xs[i]);
          ++res.n_eval;
        }
      }
    }
  }

  const std::size_t best =
      static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  res.x = xs[best];
  res.value = fs[best];
  return res;
}

}  // namespace panelsmc
