#include "panelsmc/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "panelsmc/errors.hpp"
#include "panelsmc/parallel.hpp"

namespace panelsmc {

std::vector<double> PanelFilterResult::unit_logliks() const {
  std::vector<double> out;
  out.reserve(unit_results.size());
  for (const auto& r : unit_results) out.push_back(r.loglik);
  return out;
}

std::vector<FilterDegeneracy> PanelFilterResult::warnings() const {
  std::vector<FilterDegeneracy> out;
  for (const auto& r : unit_results)
    out.insert(out.end(), r.warnings.begin(), r.warnings.end());
  return out;
}

void resample_multinomial(std::span<const double> weights, std::span<std::size_t> indices,
                          RngStream& rng) {
  const std::size_t n = weights.size();
  std::vector<double> cum(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += weights[i];
    cum[i] = total;
  }
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const double u = rng.uniform01() * total;
    indices[j] = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (indices[j] >= n) indices[j] = n - 1;
  }
}

void resample_systematic(std::span<const double> weights, std::span<std::size_t> indices,
                         RngStream& rng) {
  const std::size_t n = weights.size();
  const std::size_t j_out = indices.size();
  double total = 0.0;
  for (double w : weights) total += w;
  const double step = total / static_cast<double>(j_out);
  double point = rng.uniform01() * step;
  double cum = weights[0];
  std::size_t i = 0;
  for (std::size_t j = 0; j < j_out; ++j) {
    while (point > cum && i + 1 < n) cum += weights[++i];
    indices[j] = i;
    point += step;
  }
}

UnitFilterResult unit_particle_filter(const UnitModel& unit, std::span<const double> params,
                                      std::size_t n_particles, RngStream& rng,
                                      Resampler resampler, double tol) {
  if (n_particles < 2) throw DomainError("need at least 2 particles");
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  unit.validate();

  const std::size_t n_state = unit.n_states();
  const std::size_t n_obs = unit.n_obs();
  const std::size_t j_count = n_particles;
  const double log_tol = std::log(tol);

  UnitFilterResult res;
  res.n_particles = j_count;
  res.cond_loglik.resize(n_obs);
  res.ess.resize(n_obs);

  Matrix states(j_count, n_state);
  Matrix scratch(j_count, n_state);
  std::vector<double> logw(j_count), weights(j_count);
  std::vector<std::size_t> indices(j_count);

  for (std::size_t j = 0; j < j_count; ++j) unit.rinit(states.row(j), unit.t0, params, rng);

  double t_prev = unit.t0;
  for (std::size_t n = 0; n < n_obs; ++n) {
    const double t = unit.times[n];
    const auto obs = unit.data.row(n);

    double max_logw = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < j_count; ++j) {
      auto x = states.row(j);
      unit.rprocess(x, t_prev, t, params, rng);
      for (double v : x)
        if (!std::isfinite(v))
          throw FilterError("non-finite state in particle filter at step " + std::to_string(n + 1),
                            0, n);
      const double lw = unit.dmeasure(obs, x, t, params);
      if (std::isnan(lw))
        throw FilterError("dmeasure returned NaN at step " + std::to_string(n + 1), 0, n);
      logw[j] = lw;
      max_logw = std::max(max_logw, lw);
    }

    if (max_logw < log_tol) {
      // degenerate step: floor the conditional likelihood, resample uniformly
      res.cond_loglik[n] = log_tol;
      res.warnings.push_back({0, n});
      std::fill(weights.begin(), weights.end(), 1.0);
      res.ess[n] = static_cast<double>(j_count);
    } else {
      double sum_w = 0.0, sum_w2 = 0.0;
      for (std::size_t j = 0; j < j_count; ++j) {
        const double w = std::exp(logw[j] - max_logw);
        weights[j] = w;
        sum_w += w;
        sum_w2 += w * w;
      }
      res.cond_loglik[n] = max_logw + std::log(sum_w / static_cast<double>(j_count));
      res.ess[n] = sum_w * sum_w / sum_w2;
    }

    if (resampler == Resampler::multinomial)
      resample_multinomial(weights, indices, rng);
    else
      resample_systematic(weights, indices, rng);
    for (std::size_t j = 0; j < j_count; ++j) {
      const auto src = states.row(indices[j]);
      std::copy(src.begin(), src.end(), scratch.row(j).begin());
    }
    std::swap(states, scratch);
    t_prev = t;
  }

  res.loglik = 0.0;
  for (double c : res.cond_loglik) res.loglik += c;
  return res;
}

PanelFilterResult panel_particle_filter(const PanelModel& model, const ParamVector& params,
                                        std::size_t n_particles, std::uint64_t seed,
                                        Resampler resampler, double tol, unsigned threads,
                                        std::uint64_t replicate) {
  PanelFilterResult out;
  out.unit_results.resize(model.n_units());
  parallel_for(model.n_units(), threads, [&](std::size_t u) {
    const auto theta = model.unit_params(u, params);
    RngStream rng(seed, {rng_tag::pfilter, replicate, fnv1a64(model.spec().unit_names[u])});
    try {
      out.unit_results[u] = unit_particle_filter(model.unit(u), theta, n_particles, rng,
                                                 resampler, tol);
    } catch (const FilterError& e) {
      throw FilterError(std::string(e.what()) + " (unit " + std::to_string(u + 1) + ")", u,
                        e.step);
    }
    for (auto& w : out.unit_results[u].warnings) w.unit = u;
  });
  out.loglik = 0.0;
  for (const auto& r : out.unit_results) out.loglik += r.loglik;
  return out;
}

MeanEstimate log_mean_exp(std::span<const double> values, bool with_se) {
  const std::size_t n = values.size();
  if (n == 0) throw DomainError("log_mean_exp of an empty vector");
  const auto lme = [](std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s / static_cast<double>(v.size()));
  };

  MeanEstimate out;
  out.estimate = lme(values);
  if (with_se && n >= 2) {
    std::vector<double> loo(n);
    std::vector<double> rest(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t k = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) rest[k++] = values[j];
      loo[i] = lme(rest);
    }
    double mean_loo = 0.0;
    for (double v : loo) mean_loo += v;
    mean_loo /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
    out.se = std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return out;
}

MeanEstimate panel_log_mean_exp(const Matrix& unit_logliks, bool with_se) {
  const std::size_t n_rep = unit_logliks.rows();
  const std::size_t n_unit = unit_logliks.cols();
  if (n_rep == 0 || n_unit == 0) throw DomainError("panel_log_mean_exp of an empty matrix");

  const auto statistic = [&](std::size_t skip_row) {
    double total = 0.0;
    std::vector<double> col;
    col.reserve(n_rep);
    for (std::size_t u = 0; u < n_unit; ++u) {
      col.clear();
      for (std::size_t r = 0; r < n_rep; ++r)
        if (r != skip_row) col.push_back(unit_logliks(r, u));
      total += log_mean_exp(col).estimate;
    }
    return total;
  };

  MeanEstimate out;
  out.estimate = statistic(n_rep);  // out-of-range skip = use all rows
  if (with_se && n_rep >= 2) {
    std::vector<double> loo(n_rep);
    for (std::size_t r = 0; r < n_rep; ++r) loo[r] = statistic(r);
    double mean_loo = 0.0;
    for (double v : loo) mean_loo += v;
    mean_loo /= static_cast<double>(n_rep);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
    out.se = std::sqrt(ss * static_cast<double>(n_rep - 1) / static_cast<double>(n_rep));
  }
  return out;
}

}  // namespace panelsmc
