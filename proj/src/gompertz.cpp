#include "panelsmc/gompertz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "panelsmc/errors.hpp"
#include "panelsmc/stats.hpp"

namespace panelsmc {

namespace {

// slot order of the per-unit parameter array: shared first, then specific
enum : std::size_t { kR = 0, kSigma = 1, kK = 2, kTau = 3, kX0 = 4 };

const std::vector<std::string> kSharedNames = {"r", "sigma"};
const std::vector<std::string> kSpecificNames = {"K", "tau", "X.0"};

double step_log_x(double log_x, double r, double sigma, double log_k, RngStream& rng) {
  const double b = std::exp(-r);
  double z = (1.0 - b) * log_k + b * log_x;
  if (sigma > 0.0) z += sigma * rng.normal();
  return z;
}

}  // namespace

void GompertzParams::validate() const {
  if (!(r > 0.0 && sigma > 0.0 && k > 0.0 && tau > 0.0 && x0 > 0.0))
    throw DomainError("Gompertz parameters must be strictly positive");
}

double gompertz_transition(double x, const GompertzParams& p, RngStream& rng) {
  return std::exp(step_log_x(std::log(x), p.r, p.sigma, std::log(p.k), rng));
}

double gompertz_dmeasure(double y, double x, const GompertzParams& p) {
  if (!(p.tau > 0.0)) throw DomainError("tau must be positive");
  const double log_y = std::log(y);
  return normal_log_pdf(log_y, std::log(x), p.tau) - log_y;
}

NamedValues gompertz_default_params() {
  return {{"r", 0.1}, {"sigma", 0.1}, {"K", 1.0}, {"tau", 0.1}, {"X.0", 1.0}};
}

namespace {

UnitModel make_gompertz_unit(std::size_t n_obs) {
  UnitModel um;
  um.t0 = 0.0;
  um.times.resize(n_obs);
  for (std::size_t n = 0; n < n_obs; ++n) um.times[n] = static_cast<double>(n + 1);
  um.obs_names = {"Y"};
  um.state_names = {"X"};
  um.data = Matrix(n_obs, 1);

  um.rinit = [](std::span<double> state, double, std::span<const double> p, RngStream&) {
    state[0] = p[kX0];
  };
  um.rprocess = [](std::span<double> state, double, double, std::span<const double> p,
                   RngStream& rng) {
    state[0] = std::exp(step_log_x(std::log(state[0]), p[kR], p[kSigma], std::log(p[kK]), rng));
  };
  um.dmeasure = [](std::span<const double> obs, std::span<const double> state, double,
                   std::span<const double> p) {
    const double log_y = std::log(obs[0]);
    return normal_log_pdf(log_y, std::log(state[0]), p[kTau]) - log_y;
  };
  um.rmeasure = [](std::span<double> obs, std::span<const double> state, double,
                   std::span<const double> p, RngStream& rng) {
    obs[0] = std::exp(std::log(state[0]) + p[kTau] * rng.normal());
  };
  um.partrans = ParamTransform::log_for({"r", "sigma", "K", "tau", "X.0"});
  return um;
}

}  // namespace

namespace {

// the panel without data, coefficients broadcast from base values
PanelModel make_gompertz_panel(std::size_t n_units, std::size_t n_obs, const NamedValues& base) {
  if (n_units < 1 || n_obs < 1) throw DomainError("need U >= 1 and N >= 1");
  for (std::size_t i = 0; i < base.size(); ++i)
    if (!(base.value_at(i) > 0.0))
      throw DomainError("Gompertz parameter '" + base.name_at(i) + "' must be strictly positive");

  NamedValues shared;
  for (const auto& s : kSharedNames) shared.push_back(s, base.get(s));
  SpecificMatrix specific;
  specific.param_names = kSpecificNames;
  for (std::size_t u = 0; u < n_units; ++u)
    specific.unit_names.push_back("unit" + std::to_string(u + 1));
  specific.values = Matrix(kSpecificNames.size(), n_units);
  for (std::size_t b = 0; b < kSpecificNames.size(); ++b)
    for (std::size_t u = 0; u < n_units; ++u)
      specific.values(b, u) = base.get(kSpecificNames[b]);

  std::vector<UnitModel> units;
  units.reserve(n_units);
  for (std::size_t u = 0; u < n_units; ++u) units.push_back(make_gompertz_unit(n_obs));
  return build_panel_model(std::move(units), shared, specific);
}

}  // namespace

PanelModel build_panel_gompertz(std::size_t n_units, std::size_t n_obs, const NamedValues& params,
                                std::uint64_t seed) {
  bool full_vector = false;
  for (const auto& name : params.names())
    if (name.find('[') != std::string::npos) {
      full_vector = true;
      break;
    }
  for (double v : params.values())
    if (!(v > 0.0)) throw DomainError("Gompertz parameters must be strictly positive");

  PanelModel model = make_gompertz_panel(
      n_units, n_obs, full_vector ? gompertz_default_params() : params);
  if (full_vector) model = model.with_coef(conform_to_spec(params, model.spec()));
  return model.with_data(simulate_panel(model, model.coef(), seed));
}

PanelModel build_panel_gompertz(std::size_t n_units, std::size_t n_obs, std::uint64_t seed) {
  return build_panel_gompertz(n_units, n_obs, gompertz_default_params(), seed);
}

PanelModel build_panel_gompertz_grid(const std::vector<std::vector<double>>& times_per_unit,
                                     const std::vector<std::string>& unit_names,
                                     const ParamVector& params) {
  if (times_per_unit.empty() || times_per_unit.size() != unit_names.size())
    throw UnitMismatch("one observation grid per unit is required");
  ParamSpec spec;
  spec.shared_names = kSharedNames;
  spec.specific_names = kSpecificNames;
  spec.unit_names = unit_names;
  spec.validate();
  std::vector<UnitModel> units;
  units.reserve(times_per_unit.size());
  for (const auto& times : times_per_unit) {
    if (times.empty()) throw DomainError("a unit needs at least one observation time");
    UnitModel um = make_gompertz_unit(times.size());
    um.times = times;
    um.t0 = std::min(0.0, times.front() - 1.0);
    units.push_back(std::move(um));
  }
  ParamVector conformed = conform_to_spec(params, spec);
  return {std::move(units), std::move(spec), std::move(conformed)};
}

KalmanLoglik gompertz_kalman_loglik(const PanelModel& model, const ParamVector& params) {
  const auto layout_names = model.unit_param_names();
  const NamedValues layout(layout_names, std::vector<double>(layout_names.size(), 0.0));
  const std::size_t ir = layout.index_of("r"), isigma = layout.index_of("sigma"),
                    ik = layout.index_of("K"), itau = layout.index_of("tau"),
                    ix0 = layout.index_of("X.0");

  KalmanLoglik out;
  out.per_unit.resize(model.n_units());
  for (std::size_t u = 0; u < model.n_units(); ++u) {
    const auto theta = model.unit_params(u, params);
    const double r = theta[ir], sigma = theta[isigma], k = theta[ik], tau = theta[itau],
                 x0 = theta[ix0];
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    if (!(r > 0.0 && k > 0.0 && x0 > 0.0) || sigma < 0.0)
      throw DomainError("invalid Gompertz parameters in unit " + std::to_string(u + 1));

    const double b = std::exp(-r);
    const double a = (1.0 - b) * std::log(k);
    const double q = sigma * sigma;
    const double obs_var = tau * tau;

    const UnitModel& um = model.unit(u);
    // X.0 is a parameter, so the filter starts from a known state
    KalmanState state{std::log(x0), 0.0};
    double ll = 0.0;
    for (std::size_t n = 0; n < um.n_obs(); ++n) {
      const double y = um.data(n, 0);
      if (!(y > 0.0)) throw DomainError("Gompertz data must be positive");
      const double w = std::log(y);
      const double pred_mean = a + b * state.mean;
      const double pred_var = b * b * state.var + q;
      const double s = pred_var + obs_var;
      ll += normal_log_pdf(w, pred_mean, std::sqrt(s)) - w;
      const double gain = pred_var / s;
      state.mean = pred_mean + gain * (w - pred_mean);
      state.var = (1.0 - gain) * pred_var;
    }
    out.per_unit[u] = ll;
    out.total += ll;
  }
  return out;
}

KalmanLoglik gompertz_kalman_loglik(const PanelModel& model) {
  return gompertz_kalman_loglik(model, model.coef());
}

KalmanOptResult maximize_kalman_loglik(const PanelModel& model, const ParamVector& init,
                                       std::span<const std::string> free_names,
                                       const SimplexOptions& opts) {
  KalmanOptResult out;
  out.params = init;
  if (free_names.empty()) {
    out.loglik = gompertz_kalman_loglik(model, init).total;
    out.converged = true;
    return out;
  }
  const ParamTransform* trans = model.transform(0);
  const ParamTransform identity;
  if (!trans) trans = &identity;

  std::vector<std::size_t> free_idx;
  for (const auto& name : free_names) free_idx.push_back(init.index_of(name));

  ParamVector work = init;
  const auto objective = [&](std::span<const double> est) {
    for (std::size_t i = 0; i < free_idx.size(); ++i)
      work.value_at(free_idx[i]) = trans->from_est(work.name_at(free_idx[i]), est[i]);
    return -gompertz_kalman_loglik(model, work).total;
  };

  std::vector<double> est(free_idx.size());
  for (std::size_t i = 0; i < free_idx.size(); ++i)
    est[i] = trans->to_est(init.name_at(free_idx[i]), init.value_at(free_idx[i]));

  // restart from the incumbent until the optimum stops moving
  double best = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int round = 0; round < 6; ++round) {
    SimplexResult r = nelder_mead(objective, est, opts);
    out.n_eval += r.n_eval;
    converged = r.converged;
    est = r.x;
    if (best - r.value < 1e-9) {
      best = std::min(best, r.value);
      break;
    }
    best = r.value;
  }

  for (std::size_t i = 0; i < free_idx.size(); ++i)
    out.params.value_at(free_idx[i]) = trans->from_est(out.params.name_at(free_idx[i]), est[i]);
  out.loglik = -best;
  out.converged = converged;
  return out;
}

}  // namespace panelsmc
