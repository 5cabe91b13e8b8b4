#include "panelsmc/design.hpp"

#include <algorithm>

#include "panelsmc/errors.hpp"
#include "panelsmc/rng.hpp"

namespace panelsmc {

namespace {

void check_box(const NamedValues& lower, const NamedValues& upper) {
  if (lower.names() != upper.names())
    throw NameError("lower and upper bounds must list the same parameters in the same order");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (lower.value_at(i) > upper.value_at(i))
      throw DomainError("lower bound exceeds upper bound for '" + lower.name_at(i) + "'");
}

bool in_list(std::span<const std::string> names, const std::string& name) {
  return std::find(names.begin(), names.end(), name) != names.end();
}

// one full draw: shared entries in bounds order, then per-unit blocks in
// specific-name order
ParamVector draw_row(const NamedValues& lower, const NamedValues& upper,
                     std::span<const std::string> specific_names,
                     std::span<const std::string> unit_names, RngStream& rng) {
  ParamVector row;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (in_list(specific_names, lower.name_at(i))) continue;
    row.push_back(lower.name_at(i), rng.uniform(lower.value_at(i), upper.value_at(i)));
  }
  for (const auto& unit : unit_names)
    for (const auto& name : specific_names) {
      if (!lower.contains(name)) continue;
      const std::size_t i = lower.index_of(name);
      row.push_back(make_param_key(name, unit),
                    rng.uniform(lower.value_at(i), upper.value_at(i)));
    }
  return row;
}

}  // namespace

DesignTable runif_panel_design(const NamedValues& lower, const NamedValues& upper,
                               std::span<const std::string> specific_names,
                               std::span<const std::string> unit_names, std::size_t nseq,
                               std::uint64_t seed) {
  check_box(lower, upper);
  DesignTable out;
  out.rows.reserve(nseq);
  for (std::size_t i = 0; i < nseq; ++i) {
    RngStream rng(seed, {rng_tag::design, i});
    out.rows.push_back(draw_row(lower, upper, specific_names, unit_names, rng));
  }
  return out;
}

DesignTable profile_design(const std::string& focal, std::span<const double> grid,
                           const NamedValues& lower, const NamedValues& upper,
                           std::span<const std::string> specific_names,
                           std::span<const std::string> unit_names, std::size_t nprof,
                           std::uint64_t seed) {
  check_box(lower, upper);
  if (lower.contains(focal))
    throw DomainError("focal parameter '" + focal + "' must not also have box bounds");
  if (grid.empty()) throw DomainError("profile grid is empty");
  if (nprof < 1) throw DomainError("nprof must be at least 1");

  const bool focal_specific = in_list(specific_names, focal);
  DesignTable out;
  out.focal = focal;
  out.rows.reserve(grid.size() * nprof);
  std::size_t row_index = 0;
  for (const double g : grid) {
    for (std::size_t k = 0; k < nprof; ++k, ++row_index) {
      RngStream rng(seed, {rng_tag::design, row_index});
      ParamVector row;
      if (!focal_specific) row.push_back(focal, g);
      const ParamVector drawn = draw_row(lower, upper, specific_names, unit_names, rng);
      for (std::size_t i = 0; i < drawn.size(); ++i)
        row.push_back(drawn.name_at(i), drawn.value_at(i));
      if (focal_specific)
        for (const auto& unit : unit_names) row.push_back(make_param_key(focal, unit), g);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace panelsmc
