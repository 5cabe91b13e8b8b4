#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panelsmc/param.hpp"

namespace panelsmc {

struct DesignTable {
  std::vector<ParamVector> rows;
  std::optional<std::string> focal;  // set for profile designs
};

// nseq rows of uniform draws from the box [lower, upper], given per base
// name. Shared parameters (names not listed in specific_names) are drawn
// once per row; each (specific name, unit) pair is drawn independently from
// that name's box. Same seed, same table.
DesignTable runif_panel_design(const NamedValues& lower, const NamedValues& upper,
                               std::span<const std::string> specific_names,
                               std::span<const std::string> unit_names, std::size_t nseq,
                               std::uint64_t seed);

// Profile design: the focal parameter sweeps the grid (each value exactly
// nprof times) while the remaining parameters are drawn from the box. The
// focal name must not appear in the box bounds.
DesignTable profile_design(const std::string& focal, std::span<const double> grid,
                           const NamedValues& lower, const NamedValues& upper,
                           std::span<const std::string> specific_names,
                           std::span<const std::string> unit_names, std::size_t nprof,
                           std::uint64_t seed);

}  // namespace panelsmc
