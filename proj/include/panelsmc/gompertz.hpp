#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "panelsmc/model.hpp"
#include "panelsmc/simplex.hpp"

namespace panelsmc {

// Parameters of one Gompertz unit. The latent density follows
//   X_{n+1} = k^(1-b) * X_n^b * eps_n,  b = exp(-r),  log eps ~ N(0, sigma^2)
// and observations are lognormal around the latent state:
//   log Y_n ~ N(log X_n, tau^2).
struct GompertzParams {
  double r;      // growth rate
  double sigma;  // process noise sd (of log eps)
  double k;      // carrying capacity
  double tau;    // observation noise sd
  double x0;     // initial density

  void validate() const;  // all strictly positive -> DomainError otherwise
};

// One step of the latent dynamics; x > 0.
double gompertz_transition(double x, const GompertzParams& p, RngStream& rng);

// Log density of Y = y given X = x, including the d(log y)/dy Jacobian so the
// value is a density in y itself, directly comparable with the Kalman
// evaluation below.
double gompertz_dmeasure(double y, double x, const GompertzParams& p);

// Default coefficient values: r = sigma = tau = 0.1, K = X.0 = 1.
NamedValues gompertz_default_params();

// A panel of U Gompertz units with N observations each (times 1..N, t0 = 0),
// shared {r, sigma}, unit-specific {K, tau, X.0}, log transform on all five.
// The panel's data are simulated at `params` with the given seed. `params`
// holds either the five base names (broadcast across units) or a full
// coefficient vector with name[unit] keys.
PanelModel build_panel_gompertz(std::size_t n_units, std::size_t n_obs,
                                const NamedValues& params, std::uint64_t seed);
PanelModel build_panel_gompertz(std::size_t n_units, std::size_t n_obs, std::uint64_t seed);

// A Gompertz panel over explicit observation grids (one per unit, strictly
// increasing), without simulated data; used when attaching data loaded from
// files. `params` must cover the spec induced by `unit_names`.
PanelModel build_panel_gompertz_grid(const std::vector<std::vector<double>>& times_per_unit,
                                     const std::vector<std::string>& unit_names,
                                     const ParamVector& params);

// Filtering distribution of Z = log X at one time.
struct KalmanState {
  double mean = 0.0;
  double var = 0.0;  // never negative
};

struct KalmanLoglik {
  double total = 0.0;
  std::vector<double> per_unit;
};

// Exact log likelihood of the panel's data at `params`, from the Kalman
// filter on Z = log X (an AR(1) with Gaussian noise; the initial state is
// degenerate at log X.0). Includes the same log-y Jacobian as
// gompertz_dmeasure, so particle-filter estimates converge to this value.
KalmanLoglik gompertz_kalman_loglik(const PanelModel& model, const ParamVector& params);
KalmanLoglik gompertz_kalman_loglik(const PanelModel& model);

struct KalmanOptResult {
  ParamVector params;
  double loglik = 0.0;
  bool converged = false;
  std::size_t n_eval = 0;
};

// Derivative-free (Nelder-Mead) maximization of the exact likelihood over the
// listed coefficient names, on the transformed scale. Restarts from the
// incumbent until the value stabilizes. Non-convergence is reported through
// the flag, with the best point found.
KalmanOptResult maximize_kalman_loglik(const PanelModel& model, const ParamVector& init,
                                       std::span<const std::string> free_names,
                                       const SimplexOptions& opts = {});

}  // namespace panelsmc
