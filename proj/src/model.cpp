#include "panelsmc/model.hpp"

#include <algorithm>
#include <cmath>

#include "panelsmc/errors.hpp"

namespace panelsmc {

void UnitModel::validate() const {
  if (times.empty()) throw DomainError("a unit needs at least one observation time");
  for (std::size_t n = 1; n < times.size(); ++n)
    if (!(times[n] > times[n - 1]))
      throw DomainError("observation times must be strictly increasing");
  if (!(t0 <= times.front())) throw DomainError("t0 must not exceed the first observation time");
  if (data.rows() != times.size() || data.cols() != obs_names.size())
    throw ShapeError("data must be " + std::to_string(times.size()) + "x" +
                     std::to_string(obs_names.size()));
  if (state_names.empty()) throw DomainError("a unit needs at least one state variable");
}

PanelModel::PanelModel(std::vector<UnitModel> units, ParamSpec spec, ParamVector params)
    : units_(std::move(units)), spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (units_.size() != spec_.n_units())
    throw UnitMismatch("panel has " + std::to_string(units_.size()) + " units but " +
                       std::to_string(spec_.n_units()) + " unit names");
  for (const auto& u : units_) u.validate();
  if (params_.names() != spec_.full_names())
    throw NameError("parameter vector does not match the panel's parameter specification");
}

const UnitModel& PanelModel::unit(std::size_t u) const {
  if (u >= units_.size()) throw IndexError("unit index " + std::to_string(u) + " out of range");
  return units_[u];
}

PanelModel PanelModel::with_coef(ParamVector params) const {
  return {units_, spec_, std::move(params)};
}

NamedValues PanelModel::shared() const {
  NamedValues out;
  for (const auto& s : spec_.shared_names) out.push_back(s, params_.get(s));
  return out;
}

PanelModel PanelModel::with_shared(const NamedValues& values) const {
  ParamVector params = params_;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!spec_.is_shared(values.name_at(i)))
      throw NameError("'" + values.name_at(i) + "' is not a shared parameter");
    params.set(values.name_at(i), values.value_at(i));
  }
  return with_coef(std::move(params));
}

SpecificMatrix PanelModel::specific() const {
  SpecificMatrix out;
  out.param_names = spec_.specific_names;
  out.unit_names = spec_.unit_names;
  out.values = Matrix(spec_.n_specific(), spec_.n_units());
  for (std::size_t b = 0; b < spec_.n_specific(); ++b)
    for (std::size_t u = 0; u < spec_.n_units(); ++u)
      out.values(b, u) = params_.get(make_param_key(spec_.specific_names[b], spec_.unit_names[u]));
  return out;
}

PanelModel PanelModel::with_specific(const SpecificMatrix& values) const {
  values.validate();
  ParamVector params = params_;
  for (std::size_t b = 0; b < values.param_names.size(); ++b) {
    if (!spec_.is_specific(values.param_names[b]))
      throw NameError("'" + values.param_names[b] + "' is not a unit-specific parameter");
    for (std::size_t u = 0; u < values.unit_names.size(); ++u)
      params.set(make_param_key(values.param_names[b], values.unit_names[u]), values.values(b, u));
  }
  return with_coef(std::move(params));
}

PanelModel PanelModel::with_specific(const std::string& name, std::span<const double> values) const {
  if (values.size() != spec_.n_units())
    throw ShapeError("expected one value per unit (" + std::to_string(spec_.n_units()) + ")");
  if (!spec_.is_specific(name)) throw NameError("'" + name + "' is not a unit-specific parameter");
  ParamVector params = params_;
  for (std::size_t u = 0; u < spec_.n_units(); ++u)
    params.set(make_param_key(name, spec_.unit_names[u]), values[u]);
  return with_coef(std::move(params));
}

ParamList PanelModel::coef_list() const { return {shared(), specific()}; }

PanelModel PanelModel::subset_units(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw IndexError("empty unit selection");
  std::vector<UnitModel> units;
  ParamSpec spec;
  spec.shared_names = spec_.shared_names;
  spec.specific_names = spec_.specific_names;
  for (std::size_t i : indices) {
    if (i >= units_.size()) throw IndexError("unit index " + std::to_string(i) + " out of range");
    units.push_back(units_[i]);
    spec.unit_names.push_back(spec_.unit_names[i]);
  }
  ParamVector params;
  for (const auto& s : spec_.shared_names) params.push_back(s, params_.get(s));
  for (const auto& u : spec.unit_names)
    for (const auto& b : spec_.specific_names) {
      const std::string key = make_param_key(b, u);
      params.push_back(key, params_.get(key));
    }
  return {std::move(units), std::move(spec), std::move(params)};
}

PanelModel PanelModel::subset_units(std::span<const std::string> unit_names) const {
  std::vector<std::size_t> indices;
  for (const auto& name : unit_names) {
    auto it = std::find(spec_.unit_names.begin(), spec_.unit_names.end(), name);
    if (it == spec_.unit_names.end()) throw IndexError("unknown unit '" + name + "'");
    indices.push_back(static_cast<std::size_t>(it - spec_.unit_names.begin()));
  }
  return subset_units(indices);
}

std::vector<std::string> PanelModel::unit_param_names() const {
  std::vector<std::string> out = spec_.shared_names;
  out.insert(out.end(), spec_.specific_names.begin(), spec_.specific_names.end());
  return out;
}

std::vector<double> PanelModel::unit_params(std::size_t u, const ParamVector& params) const {
  if (u >= units_.size()) throw IndexError("unit index " + std::to_string(u) + " out of range");
  std::vector<double> out;
  out.reserve(spec_.n_shared() + spec_.n_specific());
  for (const auto& s : spec_.shared_names) out.push_back(params.get(s));
  for (const auto& b : spec_.specific_names)
    out.push_back(params.get(make_param_key(b, spec_.unit_names[u])));
  return out;
}

const ParamTransform* PanelModel::transform(std::size_t u) const {
  const auto& t = unit(u).partrans;
  return t ? &*t : nullptr;
}

PanelModel PanelModel::with_data(const PanelData& data) const {
  if (data.units.size() != units_.size())
    throw UnitMismatch("data has " + std::to_string(data.units.size()) + " units, model has " +
                       std::to_string(units_.size()));
  std::vector<UnitModel> units = units_;
  for (std::size_t u = 0; u < units.size(); ++u) {
    const Matrix& obs = data.units[u].obs;
    if (obs.rows() != units[u].n_obs() || obs.cols() != units[u].obs_names.size())
      throw ShapeError("simulated data shape does not match unit " + std::to_string(u));
    units[u].data = obs;
  }
  return {std::move(units), spec_, params_};
}

PanelModel build_panel_model(std::vector<UnitModel> units, const NamedValues& shared,
                             const SpecificMatrix& specific) {
  specific.validate();
  ParamSpec spec;
  spec.shared_names = shared.names();
  spec.specific_names = specific.param_names;
  if (!specific.unit_names.empty()) {
    if (specific.unit_names.size() != units.size())
      throw UnitMismatch("specific matrix has " + std::to_string(specific.unit_names.size()) +
                         " columns for " + std::to_string(units.size()) + " units");
    spec.unit_names = specific.unit_names;
  } else {
    if (specific.param_names.empty()) {
      for (std::size_t u = 0; u < units.size(); ++u)
        spec.unit_names.push_back("unit" + std::to_string(u + 1));
    } else {
      throw UnitMismatch("specific matrix with rows needs unit column labels");
    }
  }
  spec.validate();
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (!units[u].rprocess)
      throw MissingComponent("unit " + std::to_string(u + 1) + " has no rprocess");
    if (!units[u].rinit) throw MissingComponent("unit " + std::to_string(u + 1) + " has no rinit");
    if (!units[u].dmeasure)
      throw MissingComponent("unit " + std::to_string(u + 1) + " has no dmeasure");
  }
  SpecificMatrix labeled = specific;
  labeled.unit_names = spec.unit_names;
  if (labeled.param_names.empty()) labeled.values = Matrix(0, spec.unit_names.size());
  ParamVector params = assemble_param_vector(spec, shared, labeled);
  return {std::move(units), std::move(spec), std::move(params)};
}

namespace {

void check_finite(std::span<const double> values, std::size_t unit, double time,
                  const char* what) {
  for (double v : values)
    if (!std::isfinite(v))
      throw SimulationError(std::string(what) + " produced a non-finite value in unit " +
                                std::to_string(unit + 1) + " at time " + std::to_string(time),
                            unit, time);
}

}  // namespace

PanelData simulate_panel(const PanelModel& model, const ParamVector& params, std::uint64_t seed) {
  if (params.names() != model.spec().full_names())
    throw NameError("parameter vector does not match the panel's parameter specification");
  PanelData out;
  out.units.resize(model.n_units());
  for (std::size_t u = 0; u < model.n_units(); ++u) {
    const UnitModel& um = model.unit(u);
    if (!um.rmeasure)
      throw MissingComponent("unit " + std::to_string(u + 1) + " has no rmeasure");
    const std::vector<double> theta = model.unit_params(u, params);
    RngStream rng(seed, {rng_tag::simulate, fnv1a64(model.spec().unit_names[u])});

    const std::size_t n_obs = um.n_obs();
    const std::size_t n_state = um.n_states();
    const std::size_t n_y = um.obs_names.size();
    Matrix states(n_obs + 1, n_state);
    Matrix obs(n_obs, n_y);

    std::vector<double> x(n_state, 0.0);
    um.rinit(x, um.t0, theta, rng);
    check_finite(x, u, um.t0, "rinit");
    std::copy(x.begin(), x.end(), states.row(0).begin());

    double t_prev = um.t0;
    for (std::size_t n = 0; n < n_obs; ++n) {
      um.rprocess(x, t_prev, um.times[n], theta, rng);
      check_finite(x, u, um.times[n], "rprocess");
      std::copy(x.begin(), x.end(), states.row(n + 1).begin());
      um.rmeasure(obs.row(n), x, um.times[n], theta, rng);
      check_finite(obs.row(n), u, um.times[n], "rmeasure");
      t_prev = um.times[n];
    }
    out.units[u].obs = std::move(obs);
    out.units[u].states = std::move(states);
  }
  return out;
}

}  // namespace panelsmc
