#include "panelsmc/pif.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "panelsmc/errors.hpp"
#include "panelsmc/parallel.hpp"

namespace panelsmc {

RwSd& RwSd::set_shared(const std::string& name, double sd) {
  if (sd < 0.0) throw DomainError("rw_sd must be nonnegative");
  shared_[name] = sd;
  return *this;
}

RwSd& RwSd::set_specific(const std::string& name, double sd) {
  if (sd < 0.0) throw DomainError("rw_sd must be nonnegative");
  specific_[name] = sd;
  return *this;
}

RwSd& RwSd::set_specific(const std::string& name, const std::string& unit, double sd) {
  if (sd < 0.0) throw DomainError("rw_sd must be nonnegative");
  specific_by_unit_[{name, unit}] = sd;
  return *this;
}

double RwSd::shared_sd(const std::string& name, std::size_t) const {
  auto it = shared_.find(name);
  return it == shared_.end() ? 0.0 : it->second;
}

double RwSd::specific_sd(const std::string& name, const std::string& unit, std::size_t) const {
  auto over = specific_by_unit_.find({name, unit});
  if (over != specific_by_unit_.end()) return over->second;
  auto it = specific_.find(name);
  return it == specific_.end() ? 0.0 : it->second;
}

bool RwSd::any_positive() const {
  for (const auto& [k, v] : shared_)
    if (v > 0.0) return true;
  for (const auto& [k, v] : specific_)
    if (v > 0.0) return true;
  for (const auto& [k, v] : specific_by_unit_)
    if (v > 0.0) return true;
  return false;
}

void CoolingSchedule::validate() const {
  if (!(fraction_50 > 0.0 && fraction_50 <= 1.0))
    throw ConfigError("cooling fraction_50 must be in (0, 1]");
}

double PifResult::final_perturbed_loglik() const {
  return traces(traces.rows() - 1, traces.cols() - 1);
}

namespace {

struct PerturbSlot {
  std::size_t column;  // column in the per-unit parameter matrix
  double base_sd;      // rw_sd before cooling
  ScalarTransform::Kind kind;
  const ScalarTransform* transform;  // for custom kinds
};

// v <- h^-1(h(v) + sd * z), specialised for the common kinds
inline double perturb_value(double v, double sd, const PerturbSlot& slot, RngStream& rng) {
  switch (slot.kind) {
    case ScalarTransform::Kind::identity:
      return v + sd * rng.normal();
    case ScalarTransform::Kind::log_scale:
      return std::exp(std::log(v) + sd * rng.normal());
    case ScalarTransform::Kind::custom:
      return slot.transform->apply_from_est(slot.transform->apply_to_est(v) + sd * rng.normal());
  }
  return v;
}

void apply_perturbations(Matrix& params, const std::vector<PerturbSlot>& slots, double cool,
                         RngStream& rng) {
  for (const auto& slot : slots) {
    const double sd = cool * slot.base_sd;
    for (std::size_t j = 0; j < params.rows(); ++j) {
      double& v = params(j, slot.column);
      v = perturb_value(v, sd, slot, rng);
    }
  }
}

// Mean over particles on the estimation scale, mapped back to the natural
// scale. A constant swarm returns its value bit-for-bit (no transform
// round-trip), so parameters with zero rw_sd pass through exactly.
double swarm_mean(std::span<const double> values, const ScalarTransform& t) {
  const double first = values.front();
  bool constant = true;
  for (double v : values)
    if (v != first) {
      constant = false;
      break;
    }
  if (constant) return first;
  double sum = 0.0;
  for (double v : values) sum += t.apply_to_est(v);
  return t.apply_from_est(sum / static_cast<double>(values.size()));
}

}  // namespace

PifResult run_pif(const PanelModel& model, const ParamVector& start, std::size_t n_iterations,
                  std::size_t n_particles, const RwSd& rw_sd, CoolingSchedule cooling,
                  std::uint64_t seed) {
  if (n_iterations < 1) throw ConfigError("need at least one iteration");
  if (n_particles < 2) throw ConfigError("need at least 2 particles");
  cooling.validate();
  if (start.names() != model.spec().full_names())
    throw NameError("start vector does not match the panel's parameter specification");

  const ParamSpec& spec = model.spec();
  const std::size_t n_shared = spec.n_shared();
  const std::size_t n_specific = spec.n_specific();
  const std::size_t n_units = model.n_units();
  const std::size_t j_count = n_particles;

  // every perturbed parameter needs a registered transform on its unit
  for (std::size_t u = 0; u < n_units; ++u) {
    if (model.transform(u)) continue;
    for (const auto& a : spec.shared_names)
      if (rw_sd.shared_sd(a) > 0.0)
        throw ConfigError("shared parameter '" + a + "' is perturbed but unit " +
                          std::to_string(u + 1) + " has no parameter transform");
    for (const auto& b : spec.specific_names)
      if (rw_sd.specific_sd(b, spec.unit_names[u]) > 0.0)
        throw ConfigError("parameter '" + b + "' is perturbed but unit " + std::to_string(u + 1) +
                          " has no parameter transform");
  }

  // swarms on the natural scale
  Matrix shared_swarm(j_count, n_shared);
  for (std::size_t a = 0; a < n_shared; ++a) {
    const double v = start.get(spec.shared_names[a]);
    for (std::size_t j = 0; j < j_count; ++j) shared_swarm(j, a) = v;
  }
  std::vector<Matrix> specific_swarm(n_units);
  for (std::size_t u = 0; u < n_units; ++u) {
    specific_swarm[u] = Matrix(j_count, n_specific);
    for (std::size_t b = 0; b < n_specific; ++b) {
      const double v = start.get(make_param_key(spec.specific_names[b], spec.unit_names[u]));
      for (std::size_t j = 0; j < j_count; ++j) specific_swarm[u](j, b) = v;
    }
  }

  const std::vector<std::string> full_names = spec.full_names();
  PifResult res;
  res.config = {n_iterations, n_particles, rw_sd, cooling};
  res.trace_names = full_names;
  res.trace_names.push_back("loglik");
  res.traces = Matrix(n_iterations + 1, full_names.size() + 1);
  for (std::size_t c = 0; c < full_names.size(); ++c)
    res.traces(0, c) = start.get(full_names[c]);
  res.traces(0, full_names.size()) = std::numeric_limits<double>::quiet_NaN();

  const std::size_t n_param_cols = n_shared + n_specific;
  Matrix params(j_count, n_param_cols);   // per-particle [shared..., specific...]
  Matrix params_scratch(j_count, n_param_cols);
  std::vector<double> logw(j_count), weights(j_count);
  std::vector<std::size_t> indices(j_count);

  for (std::size_t m = 1; m <= n_iterations; ++m) {
    const double cool = cooling.factor(m);
    double iter_loglik = 0.0;

    for (std::size_t u = 0; u < n_units; ++u) {
      const UnitModel& um = model.unit(u);
      const ParamTransform* trans = model.transform(u);
      const ParamTransform identity;
      if (!trans) trans = &identity;

      // perturbation slots with positive sd, in parameter order
      std::vector<PerturbSlot> slots;
      for (std::size_t a = 0; a < n_shared; ++a) {
        const double sd = rw_sd.shared_sd(spec.shared_names[a]);
        if (sd > 0.0) {
          const ScalarTransform& st = trans->scalar_for(spec.shared_names[a]);
          slots.push_back({a, sd, st.kind, &st});
        }
      }
      for (std::size_t b = 0; b < n_specific; ++b) {
        const double sd = rw_sd.specific_sd(spec.specific_names[b], spec.unit_names[u]);
        if (sd > 0.0) {
          const ScalarTransform& st = trans->scalar_for(spec.specific_names[b]);
          slots.push_back({n_shared + b, sd, st.kind, &st});
        }
      }

      RngStream rng(seed, {rng_tag::pif, m, u});

      // assemble the per-unit parameter matrix from the swarms
      for (std::size_t j = 0; j < j_count; ++j) {
        auto row = params.row(j);
        const auto sh = shared_swarm.row(j);
        std::copy(sh.begin(), sh.end(), row.begin());
        const auto sp = specific_swarm[u].row(j);
        std::copy(sp.begin(), sp.end(), row.begin() + static_cast<std::ptrdiff_t>(n_shared));
      }

      const std::size_t n_state = um.n_states();
      Matrix states(j_count, n_state);
      Matrix states_scratch(j_count, n_state);

      // time-0 perturbation, then initialization
      apply_perturbations(params, slots, cool, rng);
      for (std::size_t j = 0; j < j_count; ++j) um.rinit(states.row(j), um.t0, params.row(j), rng);

      double t_prev = um.t0;
      for (std::size_t n = 0; n < um.n_obs(); ++n) {
        const double t = um.times[n];
        const auto obs = um.data.row(n);

        apply_perturbations(params, slots, cool, rng);

        double max_logw = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < j_count; ++j) {
          auto x = states.row(j);
          um.rprocess(x, t_prev, t, params.row(j), rng);
          for (double v : x)
            if (!std::isfinite(v))
              throw FilterError("non-finite state during iterated filtering (unit " +
                                    std::to_string(u + 1) + ", step " + std::to_string(n + 1) + ")",
                                u, n);
          const double lw = um.dmeasure(obs, x, t, params.row(j));
          if (std::isnan(lw))
            throw FilterError("dmeasure returned NaN during iterated filtering (unit " +
                                  std::to_string(u + 1) + ", step " + std::to_string(n + 1) + ")",
                              u, n);
          logw[j] = lw;
          max_logw = std::max(max_logw, lw);
        }

        const double log_tol = std::log(default_filter_tol);
        if (max_logw < log_tol) {
          iter_loglik += log_tol;
          res.warnings.push_back({u, n});
          std::fill(weights.begin(), weights.end(), 1.0);
        } else {
          double sum_w = 0.0;
          for (std::size_t j = 0; j < j_count; ++j) {
            weights[j] = std::exp(logw[j] - max_logw);
            sum_w += weights[j];
          }
          iter_loglik += max_logw + std::log(sum_w / static_cast<double>(j_count));
        }

        // joint resampling of (state, shared, specific)
        resample_multinomial(weights, indices, rng);
        for (std::size_t j = 0; j < j_count; ++j) {
          const auto src_x = states.row(indices[j]);
          std::copy(src_x.begin(), src_x.end(), states_scratch.row(j).begin());
          const auto src_p = params.row(indices[j]);
          std::copy(src_p.begin(), src_p.end(), params_scratch.row(j).begin());
        }
        std::swap(states, states_scratch);
        std::swap(params, params_scratch);
        t_prev = t;
      }

      // the filtered parameters at the last time become the swarms
      for (std::size_t j = 0; j < j_count; ++j) {
        const auto row = params.row(j);
        std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(n_shared),
                  shared_swarm.row(j).begin());
        std::copy(row.begin() + static_cast<std::ptrdiff_t>(n_shared), row.end(),
                  specific_swarm[u].row(j).begin());
      }
      if (m == n_iterations) {
        if (res.final_states.size() != n_units) res.final_states.resize(n_units);
        res.final_states[u] = states;
      }
    }

    // traces: swarm means on the natural scale
    std::size_t col = 0;
    std::vector<double> column(j_count);
    for (std::size_t a = 0; a < n_shared; ++a, ++col) {
      for (std::size_t j = 0; j < j_count; ++j) column[j] = shared_swarm(j, a);
      double mean = 0.0;
      for (double v : column) mean += v;
      res.traces(m, col) = mean / static_cast<double>(j_count);
    }
    for (std::size_t u = 0; u < n_units; ++u)
      for (std::size_t b = 0; b < n_specific; ++b, ++col) {
        double mean = 0.0;
        for (std::size_t j = 0; j < j_count; ++j) mean += specific_swarm[u](j, b);
        res.traces(m, col) = mean / static_cast<double>(j_count);
      }
    res.traces(m, col) = iter_loglik;
  }

  // final swarm and point estimate
  res.swarm.shared_names = spec.shared_names;
  res.swarm.specific_names = spec.specific_names;
  res.swarm.shared = Matrix(n_shared, j_count);
  for (std::size_t a = 0; a < n_shared; ++a)
    for (std::size_t j = 0; j < j_count; ++j) res.swarm.shared(a, j) = shared_swarm(j, a);
  res.swarm.specific.resize(n_units);
  for (std::size_t u = 0; u < n_units; ++u) {
    res.swarm.specific[u] = Matrix(n_specific, j_count);
    for (std::size_t b = 0; b < n_specific; ++b)
      for (std::size_t j = 0; j < j_count; ++j)
        res.swarm.specific[u](b, j) = specific_swarm[u](j, b);
  }

  const ParamTransform* trans0 = model.transform(0);
  const ParamTransform identity;
  std::vector<double> column(j_count);
  for (std::size_t a = 0; a < n_shared; ++a) {
    for (std::size_t j = 0; j < j_count; ++j) column[j] = shared_swarm(j, a);
    const ScalarTransform& st =
        (trans0 ? *trans0 : identity).scalar_for(spec.shared_names[a]);
    res.point_estimate.push_back(spec.shared_names[a], swarm_mean(column, st));
  }
  for (std::size_t u = 0; u < n_units; ++u) {
    const ParamTransform* tu = model.transform(u);
    for (std::size_t b = 0; b < n_specific; ++b) {
      for (std::size_t j = 0; j < j_count; ++j) column[j] = specific_swarm[u](j, b);
      const ScalarTransform& st =
          (tu ? *tu : identity).scalar_for(spec.specific_names[b]);
      res.point_estimate.push_back(make_param_key(spec.specific_names[b], spec.unit_names[u]),
                                   swarm_mean(column, st));
    }
  }
  return res;
}

PifResult refine_unit_blocks(const PanelModel& model, const PifResult& fitted,
                             std::span<const std::string> unit_param_names, std::size_t reps,
                             std::uint64_t seed, std::optional<std::size_t> n_iterations,
                             std::optional<std::size_t> n_particles, std::optional<RwSd> rw_sd,
                             std::optional<CoolingSchedule> cooling, unsigned threads) {
  const ParamSpec& spec = model.spec();
  for (const auto& name : unit_param_names)
    if (!spec.is_specific(name))
      throw NameError("'" + name + "' is not a unit-specific parameter");
  if (reps < 1) throw ConfigError("need at least one replicate");

  const std::size_t m_iter = n_iterations.value_or(fitted.config.n_iterations);
  const std::size_t j_count = n_particles.value_or(fitted.config.n_particles);
  const CoolingSchedule cool = cooling.value_or(fitted.config.cooling);

  PifResult out = fitted;
  std::vector<std::vector<std::pair<std::string, double>>> updates(model.n_units());
  std::vector<std::vector<Matrix>> winner_specific(model.n_units());

  parallel_for(model.n_units(), threads, [&](std::size_t u) {
    const std::size_t idx[] = {u};
    const PanelModel single = model.subset_units(idx).with_coef([&] {
      ParamVector p;
      for (const auto& s : spec.shared_names) p.push_back(s, fitted.point_estimate.get(s));
      for (const auto& b : spec.specific_names) {
        const std::string key = make_param_key(b, spec.unit_names[u]);
        p.push_back(key, fitted.point_estimate.get(key));
      }
      return p;
    }());

    // perturb only the requested unit-specific parameters
    RwSd rw;
    if (rw_sd) {
      rw = *rw_sd;
    } else {
      for (const auto& name : unit_param_names)
        rw.set_specific(name, fitted.config.rw_sd.specific_sd(name, spec.unit_names[u]));
    }

    double best_ll = -std::numeric_limits<double>::infinity();
    PifResult best;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      PifResult r = run_pif(single, single.coef(), m_iter, j_count, rw, cool,
                            derive_seed(seed, {rng_tag::refine, fnv1a64(spec.unit_names[u]), rep}));
      if (r.final_perturbed_loglik() > best_ll) {
        best_ll = r.final_perturbed_loglik();
        best = std::move(r);
      }
    }
    for (const auto& name : unit_param_names)
      updates[u].emplace_back(make_param_key(name, spec.unit_names[u]),
                              best.point_estimate.get(make_param_key(name, spec.unit_names[u])));
    winner_specific[u] = std::move(best.swarm.specific);
  });

  for (std::size_t u = 0; u < model.n_units(); ++u) {
    for (const auto& [key, value] : updates[u]) out.point_estimate.set(key, value);
    // carry the winning unit swarm rows for the refined parameters, when the
    // particle counts line up
    if (out.swarm.specific.size() != model.n_units() || winner_specific[u].empty()) continue;
    const Matrix& won = winner_specific[u].front();
    if (out.swarm.specific[u].cols() != won.cols()) continue;
    for (const auto& name : unit_param_names) {
      const auto b = static_cast<std::size_t>(
          std::find(spec.specific_names.begin(), spec.specific_names.end(), name) -
          spec.specific_names.begin());
      for (std::size_t j = 0; j < won.cols(); ++j) out.swarm.specific[u](b, j) = won(b, j);
    }
  }
  return out;
}

std::vector<TraceRow> pif_traces(const PifResult& result) {
  std::vector<TraceRow> out;
  out.reserve(result.traces.rows() * result.trace_names.size());
  for (std::size_t m = 0; m < result.traces.rows(); ++m)
    for (std::size_t c = 0; c < result.trace_names.size(); ++c)
      out.push_back({m, result.trace_names[c], result.traces(m, c)});
  return out;
}

}  // namespace panelsmc
