#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panelsmc/filter.hpp"
#include "panelsmc/model.hpp"

namespace panelsmc {

// Random-walk perturbation standard deviations, on the estimation scale.
// A zero (or unset) sd fixes that parameter for the whole search, which is
// how profiles pin their focal parameter. One value per specific name
// broadcasts to every unit unless a (name, unit) override is set. The
// time-index argument is part of the interface but the stored intensities
// are constant in n.
class RwSd {
 public:
  RwSd() = default;

  RwSd& set_shared(const std::string& name, double sd);
  RwSd& set_specific(const std::string& name, double sd);
  RwSd& set_specific(const std::string& name, const std::string& unit, double sd);

  double shared_sd(const std::string& name, std::size_t time_index = 0) const;
  double specific_sd(const std::string& name, const std::string& unit,
                     std::size_t time_index = 0) const;

  bool any_positive() const;

 private:
  std::map<std::string, double> shared_;
  std::map<std::string, double> specific_;                                // broadcast
  std::map<std::pair<std::string, std::string>, double> specific_by_unit_;  // overrides
};

// Geometric cooling: the sd multiplier at iteration m is fraction_50^(m/50),
// i.e. perturbations have shrunk by fraction_50 after 50 iterations.
struct CoolingSchedule {
  double fraction_50 = 1.0;

  double factor(std::size_t iteration) const {
    return std::pow(fraction_50, static_cast<double>(iteration) / 50.0);
  }
  void validate() const;
};

// Parameter swarm on the natural scale: shared values are A x J, specific
// values B x J per unit.
struct ParamSwarm {
  std::vector<std::string> shared_names;
  std::vector<std::string> specific_names;
  Matrix shared;                 // A x J
  std::vector<Matrix> specific;  // per unit, B x J

  std::size_t n_particles() const {
    if (!shared_names.empty()) return shared.cols();
    return specific.empty() ? 0 : specific.front().cols();
  }
};

struct PifConfig {
  std::size_t n_iterations = 0;
  std::size_t n_particles = 0;
  RwSd rw_sd;
  CoolingSchedule cooling;
};

struct PifResult {
  ParamSwarm swarm;
  ParamVector point_estimate;
  // (M+1) rows: per-parameter swarm means on the natural scale plus the
  // perturbed-filter log likelihood of each iteration (approximate by
  // construction; row 0 echoes the start with a NaN log likelihood).
  Matrix traces;
  std::vector<std::string> trace_names;  // parameter names then "loglik"
  PifConfig config;
  std::vector<FilterDegeneracy> warnings;
  // diagnostic: particle states after each unit's last resampling of the
  // final iteration (J x state dim per unit); particle j here and in the
  // swarm is the same particle
  std::vector<Matrix> final_states;

  double final_perturbed_loglik() const;
};

// Panel iterated filtering. Each iteration sweeps the units in order,
// perturbing shared and current-unit-specific parameters on the estimation
// scale (sd = cooling factor x rw_sd) before rinit and before every
// propagation, then filtering with the perturbed parameters; resampling
// moves state, shared values and current-unit specific values jointly. The
// shared swarm flows across units within an iteration, while each unit's
// specific swarm is picked up again at that unit in the next iteration.
// The point estimate is the swarm mean on the estimation scale, mapped back.
PifResult run_pif(const PanelModel& model, const ParamVector& start, std::size_t n_iterations,
                  std::size_t n_particles, const RwSd& rw_sd, CoolingSchedule cooling,
                  std::uint64_t seed);

// Per-unit block refinement: for each unit, run `reps` independent
// single-unit searches perturbing only `unit_param_names` (shared parameters
// stay fixed at the fitted values), keep the replicate with the best final
// perturbed log likelihood and write its values back into the panel
// estimate. Iterations, particle count and cooling are recycled from
// `fitted` unless overridden.
PifResult refine_unit_blocks(const PanelModel& model, const PifResult& fitted,
                             std::span<const std::string> unit_param_names, std::size_t reps,
                             std::uint64_t seed, std::optional<std::size_t> n_iterations = {},
                             std::optional<std::size_t> n_particles = {},
                             std::optional<RwSd> rw_sd = {},
                             std::optional<CoolingSchedule> cooling = {}, unsigned threads = 1);

struct TraceRow {
  std::size_t iteration;
  std::string parameter;
  double value;
};

// Long-format view of the traces: (M+1) rows per parameter plus (M+1)
// "loglik" rows.
std::vector<TraceRow> pif_traces(const PifResult& result);

}  // namespace panelsmc
