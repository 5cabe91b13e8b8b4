#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "panelsmc/model.hpp"

namespace panelsmc {

enum class Resampler { multinomial, systematic };

inline constexpr double default_filter_tol = 1e-300;

// Recorded when every particle weight fell below the tolerance at one
// observation; the conditional likelihood is floored instead of failing.
struct FilterDegeneracy {
  std::size_t unit = 0;
  std::size_t time_index = 0;
};

struct UnitFilterResult {
  double loglik = 0.0;
  std::vector<double> cond_loglik;  // per observation time
  std::vector<double> ess;          // effective sample sizes, pre-resampling
  std::size_t n_particles = 0;
  std::vector<FilterDegeneracy> warnings;
};

struct PanelFilterResult {
  std::vector<UnitFilterResult> unit_results;
  double loglik = 0.0;

  std::vector<double> unit_logliks() const;
  std::vector<FilterDegeneracy> warnings() const;
};

// Draws J offspring indices with P(idx = i) proportional to weights[i].
void resample_multinomial(std::span<const double> weights, std::span<std::size_t> indices,
                          RngStream& rng);
// One uniform offset, J equally spaced points through the cumulative weights.
void resample_systematic(std::span<const double> weights, std::span<std::size_t> indices,
                         RngStream& rng);

// Bootstrap particle filter for one unit: initialize J particles with rinit,
// then propagate / weight / resample at every observation time. Weights are
// handled in log space. When every weight at a time point is below `tol`, the
// conditional likelihood is floored at tol, resampling is uniform, and a
// degeneracy warning is recorded.
UnitFilterResult unit_particle_filter(const UnitModel& unit, std::span<const double> params,
                                      std::size_t n_particles, RngStream& rng,
                                      Resampler resampler = Resampler::multinomial,
                                      double tol = default_filter_tol);

// Independent unit filters with per-(seed, replicate, unit) streams; the
// panel log likelihood is the fixed-order sum of the unit log likelihoods, so
// results do not depend on thread count or unit order.
PanelFilterResult panel_particle_filter(const PanelModel& model, const ParamVector& params,
                                        std::size_t n_particles, std::uint64_t seed,
                                        Resampler resampler = Resampler::multinomial,
                                        double tol = default_filter_tol, unsigned threads = 1,
                                        std::uint64_t replicate = 0);

struct MeanEstimate {
  double estimate = 0.0;
  std::optional<double> se;  // engaged when requested and >= 2 replicates
};

// log of the arithmetic mean of exp(values), computed with max subtraction;
// the standard error is a leave-one-out jackknife.
MeanEstimate log_mean_exp(std::span<const double> values, bool with_se = false);

// Column-wise log-mean-exp summed over columns: replicates in rows, units in
// columns. The jackknife leaves out whole replicate rows.
MeanEstimate panel_log_mean_exp(const Matrix& unit_logliks, bool with_se = false);

}  // namespace panelsmc
