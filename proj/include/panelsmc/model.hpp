#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panelsmc/param.hpp"
#include "panelsmc/rng.hpp"

namespace panelsmc {

// Plug-and-play model components. Components receive the unit's parameters
// as a flat array laid out shared names first, then specific names, in the
// order reported by PanelModel::unit_param_names(); a unit-specific value
// "theta[unitK]" arrives in the slot of "theta". States and observations are
// flat arrays matching state_names / obs_names.
using RInitFn = std::function<void(std::span<double> state, double t0,
                                   std::span<const double> params, RngStream&)>;
using RProcessFn = std::function<void(std::span<double> state, double t_from, double t_to,
                                      std::span<const double> params, RngStream&)>;
using DMeasureFn = std::function<double(std::span<const double> obs, std::span<const double> state,
                                        double t, std::span<const double> params)>;
using RMeasureFn = std::function<void(std::span<double> obs, std::span<const double> state,
                                      double t, std::span<const double> params, RngStream&)>;

// Hooks kept for completeness of the component set; every algorithm in this
// library is plug-and-play and none of them evaluates these.
using DProcessFn = std::function<double(std::span<const double> state_to,
                                        std::span<const double> state_from, double t_from,
                                        double t_to, std::span<const double> params)>;
using RPriorFn = std::function<void(std::span<double> params, RngStream&)>;
using DPriorFn = std::function<double(std::span<const double> params)>;

// One panel unit: observation grid, data and model components.
struct UnitModel {
  double t0 = 0.0;
  std::vector<double> times;  // strictly increasing, t0 <= times.front()

  std::vector<std::string> obs_names;
  Matrix data;  // N x |obs_names|

  std::vector<std::string> state_names;

  RProcessFn rprocess;
  DMeasureFn dmeasure;
  RMeasureFn rmeasure;
  RInitFn rinit;
  std::optional<ParamTransform> partrans;
  DProcessFn dprocess;  // unused hooks, see above
  RPriorFn rprior;
  DPriorFn dprior;

  std::size_t n_obs() const { return times.size(); }
  std::size_t n_states() const { return state_names.size(); }

  // Grid / data consistency; throws DomainError or ShapeError.
  void validate() const;
};

// Simulation output: per unit, observations by time plus the latent
// trajectory (row 0 holds the state at t0).
struct PanelData {
  struct Unit {
    Matrix obs;     // N x obs dim
    Matrix states;  // (N+1) x state dim
  };
  std::vector<Unit> units;
};

// An ordered collection of independent unit models with a shared /
// unit-specific parameter structure. Immutable after construction: setters
// return modified copies.
class PanelModel {
 public:
  PanelModel(std::vector<UnitModel> units, ParamSpec spec, ParamVector params);

  std::size_t n_units() const { return units_.size(); }
  const UnitModel& unit(std::size_t u) const;
  const std::vector<UnitModel>& units() const { return units_; }
  const ParamSpec& spec() const { return spec_; }

  const ParamVector& coef() const { return params_; }
  PanelModel with_coef(ParamVector params) const;

  NamedValues shared() const;
  // Updates a subset of shared parameters; unknown name -> NameError.
  PanelModel with_shared(const NamedValues& values) const;

  SpecificMatrix specific() const;
  PanelModel with_specific(const SpecificMatrix& values) const;
  // Replaces one row of the specific matrix (one value per unit).
  PanelModel with_specific(const std::string& name, std::span<const double> values) const;

  ParamList coef_list() const;

  // New model holding the selected units (shared parameters intact, specific
  // matrix restricted and reordered to the selection).
  PanelModel subset_units(std::span<const std::size_t> indices) const;
  PanelModel subset_units(std::span<const std::string> unit_names) const;

  // Names of the parameter slots a unit's components receive.
  std::vector<std::string> unit_param_names() const;
  // Values for those slots for unit u, taken from `params`.
  std::vector<double> unit_params(std::size_t u, const ParamVector& params) const;
  std::vector<double> unit_params(std::size_t u) const { return unit_params(u, params_); }

  // Unit u's transform, or nullptr when none is registered.
  const ParamTransform* transform(std::size_t u) const;

  // Replaces every unit's observations with the simulated ones.
  PanelModel with_data(const PanelData& data) const;

 private:
  std::vector<UnitModel> units_;
  ParamSpec spec_;
  ParamVector params_;
};

// Binds unit models and a parameter specification into a validated panel.
// Unit names come from `specific.unit_names` when present, otherwise
// default to unit1..unitU.
PanelModel build_panel_model(std::vector<UnitModel> units, const NamedValues& shared,
                             const SpecificMatrix& specific);

// Simulates every unit independently: rinit, then rprocess across the
// observation grid, then rmeasure at each time. Unit u's draws are a pure
// function of (seed, u), so they do not depend on other units' parameters or
// on evaluation order. Non-finite output -> SimulationError.
PanelData simulate_panel(const PanelModel& model, const ParamVector& params, std::uint64_t seed);

}  // namespace panelsmc
